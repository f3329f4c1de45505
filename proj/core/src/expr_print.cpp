#include <charconv>

#include "simflow/expr.hpp"

namespace simflow::expr {

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

namespace {

void print_into(const Node& n, std::string& out) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Number>) {
          if (x.value < 0) {
            out += "(";
            out += format_number(x.value);
            out += ")";
          } else {
            out += format_number(x.value);
          }
        } else if constexpr (std::is_same_v<T, Symbol>) {
          out += x.name;
        } else if constexpr (std::is_same_v<T, Unary>) {
          out += "(-";
          print_into(*x.operand, out);
          out += ")";
        } else if constexpr (std::is_same_v<T, Binary>) {
          out += "(";
          print_into(*x.lhs, out);
          out += " ";
          out += to_string(x.op);
          out += " ";
          print_into(*x.rhs, out);
          out += ")";
        } else if constexpr (std::is_same_v<T, Call>) {
          out += to_string(x.fn);
          out += "(";
          for (std::size_t i = 0; i < x.args.size(); ++i) {
            if (i) out += ", ";
            print_into(*x.args[i], out);
          }
          out += ")";
        } else {
          out += x.name;
          out += "(";
          print_into(*x.arg, out);
          out += ")";
        }
      },
      n.value);
}

void collect(const Node& n, std::set<std::pair<std::string, SymbolKind>>& out) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Symbol>) {
          out.emplace(x.name, x.kind);
        } else if constexpr (std::is_same_v<T, Unary>) {
          collect(*x.operand, out);
        } else if constexpr (std::is_same_v<T, Binary>) {
          collect(*x.lhs, out);
          collect(*x.rhs, out);
        } else if constexpr (std::is_same_v<T, Call>) {
          for (const auto& a : x.args) collect(*a, out);
        } else if constexpr (std::is_same_v<T, Indexed>) {
          out.emplace(x.name, x.kind);
          collect(*x.arg, out);
        }
      },
      n.value);
}

}  // namespace

std::string print(const Node& n) {
  std::string out;
  print_into(n, out);
  return out;
}

std::string print(const Expression& e) { return e.empty() ? std::string() : print(e.root()); }

std::set<std::pair<std::string, SymbolKind>> free_symbols(const Expression& e) {
  std::set<std::pair<std::string, SymbolKind>> out;
  if (!e.empty()) collect(e.root(), out);
  return out;
}

}  // namespace simflow::expr

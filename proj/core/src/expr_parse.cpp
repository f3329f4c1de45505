#include <cctype>
#include <charconv>
#include <cmath>

#include "simflow/expr.hpp"

namespace simflow::expr {

std::string_view to_string(SymbolKind kind) {
  switch (kind) {
    case SymbolKind::field: return "field";
    case SymbolKind::parameter: return "parameter";
    case SymbolKind::coordinate: return "coordinate";
    case SymbolKind::builtin: return "builtin";
    case SymbolKind::local: return "local";
  }
  return "?";
}

std::string_view to_string(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return "+";
    case BinaryOp::sub: return "-";
    case BinaryOp::mul: return "*";
    case BinaryOp::div: return "/";
    case BinaryOp::pow: return "^";
    case BinaryOp::ge: return ">=";
    case BinaryOp::gt: return ">";
    case BinaryOp::le: return "<=";
    case BinaryOp::lt: return "<";
    case BinaryOp::eq: return "==";
    case BinaryOp::ne: return "!=";
    case BinaryOp::logical_and: return "and";
    case BinaryOp::logical_or: return "or";
  }
  return "?";
}

namespace {

struct FunctionEntry {
  std::string_view name;
  Function fn;
  int arity;
};

constexpr FunctionEntry kFunctions[] = {
    {"sin", Function::sin, 1},   {"cos", Function::cos, 1},
    {"exp", Function::exp, 1},   {"sqrt", Function::sqrt, 1},
    {"abs", Function::abs, 1},   {"atan2", Function::atan2, 2},
    {"floor", Function::floor, 1}, {"mod", Function::mod, 2},
};

}  // namespace

std::string_view to_string(Function fn) {
  for (const auto& e : kFunctions) {
    if (e.fn == fn) return e.name;
  }
  return "?";
}

int arity(Function fn) {
  for (const auto& e : kFunctions) {
    if (e.fn == fn) return e.arity;
  }
  return 0;
}

std::optional<Function> find_function(std::string_view name) {
  for (const auto& e : kFunctions) {
    if (e.name == name) return e.fn;
  }
  return std::nullopt;
}

NodePtr make_number(double v) { return std::make_shared<const Node>(Node{Number{v}}); }

NodePtr make_symbol(std::string name, SymbolKind kind) {
  return std::make_shared<const Node>(Node{Symbol{std::move(name), kind}});
}

NodePtr make_unary(UnaryOp op, NodePtr operand) {
  return std::make_shared<const Node>(Node{Unary{op, std::move(operand)}});
}

NodePtr make_binary(BinaryOp op, NodePtr lhs, NodePtr rhs) {
  return std::make_shared<const Node>(Node{Binary{op, std::move(lhs), std::move(rhs)}});
}

NodePtr make_call(Function fn, std::vector<NodePtr> args) {
  return std::make_shared<const Node>(Node{Call{fn, std::move(args)}});
}

NodePtr make_indexed(std::string name, SymbolKind kind, NodePtr arg) {
  return std::make_shared<const Node>(Node{Indexed{std::move(name), kind, std::move(arg)}});
}

bool structurally_equal(const Node& a, const Node& b) {
  if (a.value.index() != b.value.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.value);
        if constexpr (std::is_same_v<T, Number>) {
          // Bitwise, so that 0.0 and -0.0 differ and NaN equals itself.
          return std::signbit(x.value) == std::signbit(y.value) &&
                 (x.value == y.value || (std::isnan(x.value) && std::isnan(y.value)));
        } else if constexpr (std::is_same_v<T, Symbol>) {
          return x.name == y.name && x.kind == y.kind;
        } else if constexpr (std::is_same_v<T, Unary>) {
          return x.op == y.op && structurally_equal(*x.operand, *y.operand);
        } else if constexpr (std::is_same_v<T, Binary>) {
          return x.op == y.op && structurally_equal(*x.lhs, *y.lhs) &&
                 structurally_equal(*x.rhs, *y.rhs);
        } else if constexpr (std::is_same_v<T, Call>) {
          if (x.fn != y.fn || x.args.size() != y.args.size()) return false;
          for (std::size_t i = 0; i < x.args.size(); ++i) {
            if (!structurally_equal(*x.args[i], *y.args[i])) return false;
          }
          return true;
        } else {
          return x.name == y.name && x.kind == y.kind && structurally_equal(*x.arg, *y.arg);
        }
      },
      a.value);
}

void SymbolTable::declare(std::string name, SymbolKind kind, Usage usage) {
  entries_[std::move(name)] = SymbolInfo{kind, usage};
}

std::optional<SymbolInfo> SymbolTable::lookup(std::string_view name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

ParseError::ParseError(Kind kind, std::size_t position, const std::string& message)
    : std::runtime_error(message + " at position " + std::to_string(position)),
      kind_(kind),
      position_(position) {}

namespace {

enum class Tok { number, ident, op, lparen, rparen, comma, end };

struct Token {
  Tok type;
  std::string text;
  double number = 0.0;
  std::size_t pos = 0;
};

bool ident_start(unsigned char c) {
  return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80;
}

bool ident_char(unsigned char c) { return ident_start(c) || std::isdigit(c); }

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      if (i_ >= text_.size()) {
        out.push_back({Tok::end, "", 0.0, i_});
        return out;
      }
      const std::size_t start = i_;
      const unsigned char c = static_cast<unsigned char>(text_[i_]);
      if (std::isdigit(c) || (c == '.' && i_ + 1 < text_.size() &&
                              std::isdigit(static_cast<unsigned char>(text_[i_ + 1])))) {
        out.push_back(lex_number());
      } else if (ident_start(c)) {
        while (i_ < text_.size() && ident_char(static_cast<unsigned char>(text_[i_]))) ++i_;
        std::string word(text_.substr(start, i_ - start));
        if (word == "and" || word == "or") {
          out.push_back({Tok::op, word, 0.0, start});
        } else {
          out.push_back({Tok::ident, word, 0.0, start});
        }
      } else if (c == '(') {
        ++i_;
        out.push_back({Tok::lparen, "(", 0.0, start});
      } else if (c == ')') {
        ++i_;
        out.push_back({Tok::rparen, ")", 0.0, start});
      } else if (c == ',') {
        ++i_;
        out.push_back({Tok::comma, ",", 0.0, start});
      } else {
        out.push_back(lex_operator());
      }
    }
  }

 private:
  void skip_space() {
    while (i_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[i_]))) ++i_;
  }

  Token lex_number() {
    const std::size_t start = i_;
    while (i_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[i_])) || text_[i_] == '.')) ++i_;
    if (i_ < text_.size() && (text_[i_] == 'e' || text_[i_] == 'E')) {
      std::size_t j = i_ + 1;
      if (j < text_.size() && (text_[j] == '+' || text_[j] == '-')) ++j;
      if (j < text_.size() && std::isdigit(static_cast<unsigned char>(text_[j]))) {
        i_ = j;
        while (i_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[i_]))) ++i_;
      }
    }
    const std::string_view lexeme = text_.substr(start, i_ - start);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), value);
    if (ec != std::errc() || ptr != lexeme.data() + lexeme.size()) {
      throw ParseError(ParseError::Kind::syntax, start,
                       "malformed number '" + std::string(lexeme) + "'");
    }
    return {Tok::number, std::string(lexeme), value, start};
  }

  Token lex_operator() {
    const std::size_t start = i_;
    const auto two = text_.substr(i_, 2);
    for (std::string_view op : {">=", "<=", "==", "!=", "&&", "||"}) {
      if (two == op) {
        i_ += 2;
        std::string norm(op);
        if (op == "&&") norm = "and";
        if (op == "||") norm = "or";
        return {Tok::op, norm, 0.0, start};
      }
    }
    const char c = text_[i_];
    switch (c) {
      case '+': case '-': case '*': case '/': case '^': case '>': case '<':
        ++i_;
        return {Tok::op, std::string(1, c), 0.0, start};
      case '=':
        ++i_;
        return {Tok::op, "==", 0.0, start};
      default:
        throw ParseError(ParseError::Kind::syntax, start,
                         std::string("unexpected character '") + c + "'");
    }
  }

  std::string_view text_;
  std::size_t i_ = 0;
};

class Parser {
 public:
  Parser(std::vector<Token> tokens, const SymbolTable& symbols)
      : tokens_(std::move(tokens)), symbols_(symbols) {}

  NodePtr parse() {
    NodePtr n = parse_or();
    if (peek().type != Tok::end) {
      throw ParseError(ParseError::Kind::syntax, peek().pos,
                       "unexpected '" + peek().text + "'");
    }
    return n;
  }

 private:
  const Token& peek() const { return tokens_[k_]; }
  const Token& advance() { return tokens_[k_++]; }

  bool accept_op(std::string_view op) {
    if (peek().type == Tok::op && peek().text == op) {
      ++k_;
      return true;
    }
    return false;
  }

  NodePtr parse_or() {
    NodePtr lhs = parse_and();
    while (accept_op("or")) {
      lhs = make_binary(BinaryOp::logical_or, lhs, parse_and());
    }
    return lhs;
  }

  NodePtr parse_and() {
    NodePtr lhs = parse_comparison();
    while (accept_op("and")) {
      lhs = make_binary(BinaryOp::logical_and, lhs, parse_comparison());
    }
    return lhs;
  }

  NodePtr parse_comparison() {
    NodePtr lhs = parse_additive();
    while (peek().type == Tok::op) {
      const std::string& t = peek().text;
      BinaryOp op;
      if (t == ">=") op = BinaryOp::ge;
      else if (t == ">") op = BinaryOp::gt;
      else if (t == "<=") op = BinaryOp::le;
      else if (t == "<") op = BinaryOp::lt;
      else if (t == "==") op = BinaryOp::eq;
      else if (t == "!=") op = BinaryOp::ne;
      else break;
      ++k_;
      lhs = make_binary(op, lhs, parse_additive());
    }
    return lhs;
  }

  NodePtr parse_additive() {
    NodePtr lhs = parse_multiplicative();
    while (true) {
      if (accept_op("+")) lhs = make_binary(BinaryOp::add, lhs, parse_multiplicative());
      else if (accept_op("-")) lhs = make_binary(BinaryOp::sub, lhs, parse_multiplicative());
      else return lhs;
    }
  }

  NodePtr parse_multiplicative() {
    NodePtr lhs = parse_unary();
    while (true) {
      if (accept_op("*")) lhs = make_binary(BinaryOp::mul, lhs, parse_unary());
      else if (accept_op("/")) lhs = make_binary(BinaryOp::div, lhs, parse_unary());
      else return lhs;
    }
  }

  NodePtr parse_unary() {
    if (accept_op("-")) return make_unary(UnaryOp::neg, parse_unary());
    if (accept_op("+")) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (accept_op("^")) {
      return make_binary(BinaryOp::pow, base, parse_unary());
    }
    return base;
  }

  NodePtr parse_primary() {
    const Token& t = peek();
    switch (t.type) {
      case Tok::number:
        advance();
        return make_number(t.number);
      case Tok::lparen: {
        advance();
        NodePtr inner = parse_or();
        expect(Tok::rparen, "')'");
        return inner;
      }
      case Tok::ident:
        return parse_identifier();
      case Tok::end:
        throw ParseError(ParseError::Kind::syntax, t.pos, "unexpected end of expression");
      default:
        throw ParseError(ParseError::Kind::syntax, t.pos, "unexpected '" + t.text + "'");
    }
  }

  void expect(Tok type, std::string_view what) {
    if (peek().type != type) {
      throw ParseError(ParseError::Kind::syntax, peek().pos,
                       "expected " + std::string(what));
    }
    advance();
  }

  std::vector<NodePtr> parse_arguments() {
    std::vector<NodePtr> args;
    expect(Tok::lparen, "'('");
    if (peek().type == Tok::rparen) {
      advance();
      return args;
    }
    args.push_back(parse_or());
    while (peek().type == Tok::comma) {
      advance();
      args.push_back(parse_or());
    }
    expect(Tok::rparen, "')'");
    return args;
  }

  NodePtr parse_identifier() {
    const Token name = advance();
    const auto info = symbols_.lookup(name.text);
    const bool called = peek().type == Tok::lparen;

    if (called && !info) {
      if (auto fn = find_function(name.text)) {
        auto args = parse_arguments();
        if (static_cast<int>(args.size()) != arity(*fn)) {
          throw ParseError(ParseError::Kind::arity, name.pos,
                           name.text + " expects " + std::to_string(arity(*fn)) +
                               " argument(s), got " + std::to_string(args.size()));
        }
        return make_call(*fn, std::move(args));
      }
    }
    if (!info) {
      throw ParseError(ParseError::Kind::unknown_symbol, name.pos,
                       "unknown symbol '" + name.text + "'");
    }
    if (called) {
      if (info->usage == Usage::bare) {
        throw ParseError(ParseError::Kind::arity, name.pos,
                         "'" + name.text + "' does not take an argument");
      }
      auto args = parse_arguments();
      if (args.size() != 1) {
        throw ParseError(ParseError::Kind::arity, name.pos,
                         "'" + name.text + "' expects 1 argument, got " +
                             std::to_string(args.size()));
      }
      return make_indexed(name.text, info->kind, std::move(args.front()));
    }
    if (info->usage == Usage::indexed) {
      throw ParseError(ParseError::Kind::arity, name.pos,
                       "'" + name.text + "' requires an argument");
    }
    return make_symbol(name.text, info->kind);
  }

  std::vector<Token> tokens_;
  const SymbolTable& symbols_;
  std::size_t k_ = 0;
};

}  // namespace

Expression parse_expression(std::string_view text, const SymbolTable& symbols) {
  Lexer lexer(text);
  auto tokens = lexer.run();
  if (tokens.size() == 1) {
    throw ParseError(ParseError::Kind::syntax, 0, "empty expression");
  }
  Parser parser(std::move(tokens), symbols);
  return Expression(parser.parse());
}

}  // namespace simflow::expr

#include <map>
#include <sstream>

#include "simflow/docmodel.hpp"

namespace simflow::doc {

namespace {

const std::map<std::string, std::string, std::less<>>& greek() {
  static const std::map<std::string, std::string, std::less<>> table = {
      {"alpha", "\\alpha"}, {"beta", "\\beta"},   {"gamma", "\\gamma"}, {"delta", "\\delta"},
      {"epsilon", "\\epsilon"}, {"eta", "\\eta"}, {"theta", "\\theta"}, {"kappa", "\\kappa"},
      {"lambda", "\\lambda"}, {"mu", "\\mu"},     {"nu", "\\nu"},       {"xi", "\\xi"},
      {"pi", "\\pi"},       {"rho", "\\rho"},     {"sigma", "\\sigma"}, {"tau", "\\tau"},
      {"phi", "\\phi"},     {"chi", "\\chi"},     {"psi", "\\psi"},     {"omega", "\\omega"},
      {"Gamma", "\\Gamma"}, {"Delta", "\\Delta"}, {"Theta", "\\Theta"}, {"Phi", "\\Phi"},
      {"Psi", "\\Psi"},     {"Omega", "\\Omega"},
  };
  return table;
}

std::string escape_text(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\textbackslash{}"; break;
      case '_': case '&': case '%': case '#': case '$': case '{': case '}':
        out += '\\';
        out += c;
        break;
      case '~': out += "\\textasciitilde{}"; break;
      case '^': out += "\\textasciicircum{}"; break;
      default: out += c;
    }
  }
  return out;
}

std::string symbol(std::string_view name) {
  if (auto it = greek().find(name); it != greek().end()) return it->second;
  if (!name.empty() && name.front() == '$') return "\\mathtt{" + escape_text(name) + "}";
  // Trailing digits and one underscore become a subscript: v0 -> v_{0}.
  const auto us = name.find('_');
  if (us != std::string_view::npos && us > 0 && us + 1 < name.size()) {
    return symbol(name.substr(0, us)) + "_{\\mathrm{" + escape_text(name.substr(us + 1)) + "}}";
  }
  std::size_t digits = name.size();
  while (digits > 0 && std::isdigit(static_cast<unsigned char>(name[digits - 1]))) --digits;
  if (digits > 0 && digits < name.size()) {
    return symbol(name.substr(0, digits)) + "_{" + std::string(name.substr(digits)) + "}";
  }
  if (name.size() == 1) return std::string(name);
  return "\\mathrm{" + escape_text(name) + "}";
}

int precedence(const expr::Node& n) {
  using expr::BinaryOp;
  if (const auto* b = std::get_if<expr::Binary>(&n.value)) {
    switch (b->op) {
      case BinaryOp::logical_or: return 1;
      case BinaryOp::logical_and: return 2;
      case BinaryOp::ge: case BinaryOp::gt: case BinaryOp::le:
      case BinaryOp::lt: case BinaryOp::eq: case BinaryOp::ne: return 3;
      case BinaryOp::add: case BinaryOp::sub: return 4;
      case BinaryOp::mul: case BinaryOp::div: return 5;
      case BinaryOp::pow: return 7;
    }
  }
  if (std::holds_alternative<expr::Unary>(n.value)) return 6;
  if (const auto* num = std::get_if<expr::Number>(&n.value)) return num->value < 0 ? 6 : 8;
  return 8;
}

std::string latex(const expr::Node& n);

std::string wrap(const expr::Node& n, int min_prec) {
  std::string s = latex(n);
  if (precedence(n) < min_prec) return "\\left(" + s + "\\right)";
  return s;
}

std::string latex(const expr::Node& n) {
  using expr::BinaryOp;
  return std::visit(
      [&](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, expr::Number>) {
          return expr::format_number(x.value);
        } else if constexpr (std::is_same_v<T, expr::Symbol>) {
          return symbol(x.name);
        } else if constexpr (std::is_same_v<T, expr::Unary>) {
          return "-" + wrap(*x.operand, 6);
        } else if constexpr (std::is_same_v<T, expr::Binary>) {
          const int p = precedence(n);
          switch (x.op) {
            case BinaryOp::div:
              return "\\frac{" + latex(*x.lhs) + "}{" + latex(*x.rhs) + "}";
            case BinaryOp::pow:
              return "{" + wrap(*x.lhs, 8) + "}^{" + latex(*x.rhs) + "}";
            case BinaryOp::mul:
              return wrap(*x.lhs, p) + " \\cdot " + wrap(*x.rhs, p + 1);
            default: break;
          }
          static const std::map<BinaryOp, std::string> ops = {
              {BinaryOp::add, " + "},       {BinaryOp::sub, " - "},      {BinaryOp::ge, " \\geq "},
              {BinaryOp::gt, " > "},        {BinaryOp::le, " \\leq "},   {BinaryOp::lt, " < "},
              {BinaryOp::eq, " = "},        {BinaryOp::ne, " \\neq "},   {BinaryOp::logical_and, " \\land "},
              {BinaryOp::logical_or, " \\lor "},
          };
          return wrap(*x.lhs, p) + ops.at(x.op) + wrap(*x.rhs, p + 1);
        } else if constexpr (std::is_same_v<T, expr::Call>) {
          using expr::Function;
          std::vector<std::string> args;
          for (const auto& a : x.args) args.push_back(latex(*a));
          switch (x.fn) {
            case Function::sqrt: return "\\sqrt{" + args[0] + "}";
            case Function::abs: return "\\left|" + args[0] + "\\right|";
            case Function::floor: return "\\left\\lfloor " + args[0] + "\\right\\rfloor";
            case Function::sin: return "\\sin\\left(" + args[0] + "\\right)";
            case Function::cos: return "\\cos\\left(" + args[0] + "\\right)";
            case Function::exp: return "\\exp\\left(" + args[0] + "\\right)";
            case Function::atan2:
            case Function::mod:
              return "\\operatorname{" + std::string(expr::to_string(x.fn)) + "}\\left(" + args[0] + ", " +
                     args[1] + "\\right)";
          }
          return {};
        } else {
          return symbol(x.name) + "\\left(" + latex(*x.arg) + "\\right)";
        }
      },
      n.value);
}

std::string latex(const expr::Expression& e) { return e.empty() ? std::string() : latex(e.root()); }

std::string latex_term(const TermNode& t) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Algebraic>) {
          return latex(x.math.ast);
        } else if constexpr (std::is_same_v<T, Derivative>) {
          const std::string d = "\\partial_{" + symbol(x.axis) + "}";
          const TermNode& in = *x.inner;
          if (std::holds_alternative<Derivative>(in.value)) return d + latex_term(in);
          if (const auto* a = std::get_if<Algebraic>(&in.value)) {
            if (!a->math.ast.empty() && precedence(a->math.ast.root()) >= 8) return d + " " + latex_term(in);
          }
          return d + "\\left(" + latex_term(in) + "\\right)";
        } else if constexpr (std::is_same_v<T, Product>) {
          std::string s;
          for (std::size_t i = 0; i < x.factors.size(); ++i) {
            if (i) s += " \\cdot ";
            const bool sum = std::holds_alternative<Sum>(x.factors[i].value);
            s += sum ? "\\left(" + latex_term(x.factors[i]) + "\\right)" : latex_term(x.factors[i]);
          }
          return s;
        } else {
          std::string s;
          for (std::size_t i = 0; i < x.terms.size(); ++i) {
            if (i) s += " + ";
            s += latex_term(x.terms[i]);
          }
          return s;
        }
      },
      t.value);
}

std::string time_derivative(const std::string& time, const std::string& field) {
  const std::string t = symbol(time);
  const std::string sub = t.size() == 1 ? "_" + t : "_{" + t + "}";
  return "\\partial" + sub + " " + symbol(field);
}

class Writer {
 public:
  std::ostringstream os;

  void preamble(const Head& h, std::string_view kind) {
    os << "\\documentclass{article}\n"
       << "\\usepackage{amsmath}\n"
       << "\\begin{document}\n"
       << "\\section*{" << escape_text(h.name) << "}\n"
       << "\\begin{tabular}{ll}\n"
       << "Kind & " << escape_text(kind) << " \\\\\n"
       << "Id & \\texttt{" << escape_text(h.id) << "} \\\\\n";
    if (!h.author.empty()) os << "Author & " << escape_text(h.author) << " \\\\\n";
    if (!h.version.empty()) os << "Version & " << escape_text(h.version) << " \\\\\n";
    if (!h.date.empty()) os << "Date & " << escape_text(h.date) << " \\\\\n";
    os << "\\end{tabular}\n";
  }

  void end() { os << "\\end{document}\n"; }

  void names(std::string_view title, const std::vector<std::string>& list) {
    if (list.empty()) return;
    os << "\\subsection*{" << title << "}\n$";
    for (std::size_t i = 0; i < list.size(); ++i) os << (i ? ",\\ " : "") << symbol(list[i]);
    os << "$\n";
  }

  void parameters(const std::vector<Parameter>& ps) {
    if (ps.empty()) return;
    os << "\\subsection*{Parameters}\n\\begin{tabular}{lll}\n";
    for (const auto& p : ps) {
      os << "$" << symbol(p.name) << "$ & " << (p.type == ParamType::integer ? "INT" : "REAL") << " & "
         << expr::format_number(p.default_value) << " \\\\\n";
    }
    os << "\\end{tabular}\n";
  }

  void algorithm(const simml::Algorithm& a, int depth = 0) {
    for (const auto& s : a) statement(s, depth);
  }

  void line(int depth, const std::string& text) {
    os << "\\hspace*{" << 2 * depth << "em}" << text << "\\\\\n";
  }

  void statement(const simml::Statement& s, int depth) {
    using namespace simml;
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, Assign>) {
            std::string lhs = symbol(x.target.name);
            if (!x.target.index.empty()) lhs += "\\left(" + latex(x.target.index) + "\\right)";
            line(depth, "$" + lhs + " \\leftarrow " + latex(x.value) + "$");
          } else if constexpr (std::is_same_v<T, IfThenElse>) {
            line(depth, "\\textbf{if} $" + latex(x.condition) + "$ \\textbf{then}");
            algorithm(x.then_branch, depth + 1);
            if (x.else_branch) {
              line(depth, "\\textbf{else}");
              algorithm(*x.else_branch, depth + 1);
            }
            line(depth, "\\textbf{end if}");
          } else if constexpr (std::is_same_v<T, While>) {
            line(depth, "\\textbf{while} $" + latex(x.condition) + "$ \\textbf{do}");
            algorithm(x.body, depth + 1);
            line(depth, "\\textbf{end while}");
          } else if constexpr (std::is_same_v<T, IterateOverEdges>) {
            line(depth, std::string("\\textbf{for each} ") + (x.direction == EdgeDirection::in ? "incoming" : "outgoing") +
                            " edge $\\mathtt{\\$ce}$ \\textbf{do}");
            algorithm(x.body, depth + 1);
            line(depth, "\\textbf{end for}");
          } else if constexpr (std::is_same_v<T, IterateOverInteractions>) {
            line(depth, "\\textbf{for each} neighbour $\\mathtt{\\$na}$ \\textbf{do}");
            algorithm(x.body, depth + 1);
            line(depth, "\\textbf{end for}");
          } else if constexpr (std::is_same_v<T, Sweep>) {
            const char* what = x.kind == SweepKind::vertices ? "vertex" : x.kind == SweepKind::agents ? "agent" : "cell";
            line(depth, std::string("\\textbf{for each} ") + what + " \\textbf{do}");
            algorithm(x.body, depth + 1);
            line(depth, "\\textbf{end for}");
          } else {
            line(depth, "\\texttt{" + escape_text(x.tag) + "}");
          }
        },
        s.value);
  }

  void rules(const std::vector<Rule>& gather, const std::vector<Rule>& update, const std::vector<std::string>& order) {
    std::map<std::string, const Rule*> by_name;
    for (const auto& r : gather) by_name[r.name] = &r;
    for (const auto& r : update) by_name[r.name] = &r;
    os << "\\subsection*{Rules}\n\\begin{enumerate}\n";
    for (const auto& name : order) {
      const Rule* r = by_name.at(name);
      os << "\\item \\textbf{" << escape_text(r->name) << "} ("
         << (r->kind == RuleKind::gather ? "gather" : "update") << ", writes $" << symbol(r->property) << "$)\\\\\n";
      algorithm(r->algorithm, 1);
    }
    os << "\\end{enumerate}\n";
  }

  void finalization(const MathText& m) {
    os << "\\subsection*{Finalization}\n$" << latex(m.ast) << "$\n";
  }

  void render(const GenericPdeModel& m) {
    preamble(m.head, "generic PDE model");
    names("Spatial coordinates", m.coordinates.spatial);
    names("Fields", m.fields);
    names("Parameters", m.parameters);
    os << "\\subsection*{Evolution equations}\n\\begin{align*}\n";
    for (std::size_t i = 0; i < m.evolution.size(); ++i) {
      const auto& fe = m.evolution[i];
      std::string rhs;
      for (const auto& op : fe.operators) {
        for (const auto& t : op.terms) {
          if (!rhs.empty()) rhs += " + ";
          rhs += latex_term(t);
        }
      }
      if (rhs.empty()) rhs = "0";
      os << time_derivative(m.coordinates.time, fe.field) << " &= " << rhs << (i + 1 < m.evolution.size() ? " \\\\\n" : "\n");
    }
    os << "\\end{align*}\n";
    end();
  }

  void render(const GenericPdeProblem& p) {
    preamble(p.head, "generic PDE problem");
    os << "Model: \\texttt{" << escape_text(p.model) << "}\n";
    names("Fields", p.fields);
    parameters(p.parameters);
    os << "\\subsection*{Region " << escape_text(p.region.name) << "}\n$";
    for (std::size_t i = 0; i < p.region.domain.size(); ++i) {
      const auto& d = p.region.domain[i];
      os << (i ? " \\times " : "") << "[" << expr::format_number(d.min) << ", " << expr::format_number(d.max) << "]_{"
         << symbol(d.axis) << "}";
    }
    os << "$\n\\subsection*{Initial condition}\n";
    algorithm(p.region.initial_condition);
    os << "\\subsection*{Boundaries}\n\\begin{enumerate}\n";
    for (const auto& name : p.boundary_precedence) {
      for (const auto& b : p.boundaries) {
        if (b.name == name) {
          os << "\\item " << escape_text(b.name) << ": " << escape_text(b.type) << " (axis " << escape_text(b.axis)
             << ", side " << escape_text(b.side) << ")\n";
        }
      }
    }
    os << "\\end{enumerate}\n";
    finalization(p.finalization);
    end();
  }

  void render(const DiscretizationPolicy& p) {
    preamble(p.head, "discretization policy");
    os << "\\subsection*{Operators}\n\\begin{tabular}{lll}\n";
    for (const auto& o : p.operators) {
      os << escape_text(o.operator_name) << " & " << escape_text(o.schema) << " & accuracy " << o.accuracy << " \\\\\n";
    }
    os << "\\end{tabular}\n\\subsection*{Time integration}\n" << escape_text(p.time.schema)
       << ", $\\sigma = " << expr::format_number(p.time.dissipation) << "$, $r = " << p.time.dissipation_order << "$\n";
    end();
  }

  void render(const DiscretizedProblem& d) {
    preamble(d.head, "discretized problem");
    os << "Problem: \\texttt{" << escape_text(d.problem.head.id) << "}, halo width " << d.kernel.halo << "\n"
       << "\\subsection*{Discrete equations}\n\\begin{verbatim}\n";
    for (const auto& e : d.equations) os << e << "\n";
    os << "\\end{verbatim}\n";
    end();
  }

  void render(const AbmGraphModel& m) {
    preamble(m.head, "agent-based model on a graph");
    names("Vertex properties", m.vertex_properties);
    names("Parameters", m.parameters);
    rules(m.gather_rules, m.update_rules, m.execution_order);
    end();
  }

  void render(const AbmSpatialModel& m) {
    preamble(m.head, "spatial agent-based model");
    names("Coordinates", m.coordinates);
    names("Agent properties", m.agent_properties);
    names("Parameters", m.parameters);
    rules(m.gather_rules, m.update_rules, m.execution_order);
    end();
  }

  void render(const AbmGraphProblem& p) {
    preamble(p.head, "agent-based problem on a graph");
    os << "Model: \\texttt{" << escape_text(p.model) << "}\n";
    parameters(p.parameters);
    os << "\\subsection*{Graph}\n";
    if (p.graph.from_file) {
      os << "Loaded from \\texttt{" << escape_text(p.graph.path) << "}\n";
    } else {
      const char* dist = p.graph.distribution == Distribution::random       ? "random"
                         : p.graph.distribution == Distribution::scale_free ? "scale-free"
                                                                            : "circular";
      os << (p.graph.directed ? "Directed " : "Undirected ") << dist << " graph, " << p.graph.vertices << " vertices";
      if (p.graph.distribution == Distribution::random) os << ", " << p.graph.edges << " edges";
      os << "\n";
    }
    os << "\\subsection*{Initial condition}\n";
    algorithm(p.initial_condition);
    finalization(p.finalization);
    end();
  }

  void render(const AbmSpatialProblem& p) {
    preamble(p.head, "spatial agent-based problem");
    os << "Model: \\texttt{" << escape_text(p.model) << "}\n";
    parameters(p.parameters);
    os << "\\subsection*{Agents}\n" << p.agents << " agents, interaction radius $" << expr::format_number(p.radius)
       << "$\n\\subsection*{Initial condition}\n";
    algorithm(p.initial_condition);
    finalization(p.finalization);
    end();
  }
};

}  // namespace

std::string export_latex(const Document& doc, const DocumentStore* store) {
  auto diags = validate(doc, store);
  if (has_errors(diags)) throw DocumentError(head_of(doc).id, std::move(diags));
  Writer w;
  std::visit([&](const auto& d) { w.render(d); }, doc);
  return w.os.str();
}

}  // namespace simflow::doc

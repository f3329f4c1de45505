#include <array>
#include <cmath>

#include "simflow/expr.hpp"
#include "simflow/rng.hpp"

namespace simflow::expr {

EvalError::EvalError(const std::string& message, std::string subexpression)
    : std::runtime_error(message + " in '" + subexpression + "'"),
      subexpression_(std::move(subexpression)) {}

void EvalEnvironment::bind(std::string name, double value) { bindings_[std::move(name)] = value; }

void EvalEnvironment::unbind(std::string_view name) {
  auto it = bindings_.find(name);
  if (it != bindings_.end()) bindings_.erase(it);
}

std::optional<double> EvalEnvironment::lookup(std::string_view name) const {
  auto it = bindings_.find(name);
  if (it == bindings_.end()) return std::nullopt;
  return it->second;
}

namespace {

double truth(bool b) { return b ? 1.0 : 0.0; }

}  // namespace

double apply_binary(BinaryOp op, double a, double b, const Node& where) {
  switch (op) {
    case BinaryOp::add: return a + b;
    case BinaryOp::sub: return a - b;
    case BinaryOp::mul: return a * b;
    case BinaryOp::div:
      if (b == 0.0) throw EvalError("division by zero", print(where));
      return a / b;
    case BinaryOp::pow: {
      const double r = std::pow(a, b);
      if (std::isnan(r) && !std::isnan(a) && !std::isnan(b)) {
        throw EvalError("domain error in power", print(where));
      }
      return r;
    }
    case BinaryOp::ge: return truth(a >= b);
    case BinaryOp::gt: return truth(a > b);
    case BinaryOp::le: return truth(a <= b);
    case BinaryOp::lt: return truth(a < b);
    case BinaryOp::eq: return truth(a == b);
    case BinaryOp::ne: return truth(a != b);
    case BinaryOp::logical_and: return truth(a != 0.0 && b != 0.0);
    case BinaryOp::logical_or: return truth(a != 0.0 || b != 0.0);
  }
  return 0.0;
}

double apply_function(Function fn, std::span<const double> x, const Node& where) {
  switch (fn) {
    case Function::sin: return std::sin(x[0]);
    case Function::cos: return std::cos(x[0]);
    case Function::exp: return std::exp(x[0]);
    case Function::sqrt:
      if (x[0] < 0.0) throw EvalError("square root of negative value", print(where));
      return std::sqrt(x[0]);
    case Function::abs: return std::fabs(x[0]);
    case Function::atan2: return std::atan2(x[0], x[1]);
    case Function::floor: return std::floor(x[0]);
    case Function::mod: {
      if (x[1] == 0.0) throw EvalError("modulo by zero", print(where));
      double r = std::fmod(x[0], x[1]);
      if (r != 0.0 && ((r < 0.0) != (x[1] < 0.0))) r += x[1];
      return r;
    }
  }
  return 0.0;
}

namespace {

std::optional<double> random_builtin(std::string_view name, KeyedRng* rng) {
  if (rng == nullptr) return std::nullopt;
  if (name == "$rnd_uniform") return rng->uniform();
  if (name == "$rnd_int_1") return static_cast<double>(rng->below(2));
  return std::nullopt;
}

double eval_node(const Node& n, EvalEnvironment& env) {
  return std::visit(
      [&](const auto& x) -> double {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Number>) {
          return x.value;
        } else if constexpr (std::is_same_v<T, Symbol>) {
          if (auto v = env.lookup(x.name)) return *v;
          if (env.resolver()) {
            if (auto v = env.resolver()(x.name, std::nullopt)) return *v;
          }
          if (auto v = random_builtin(x.name, env.rng())) return *v;
          throw EvalError("unbound symbol '" + x.name + "'", x.name);
        } else if constexpr (std::is_same_v<T, Unary>) {
          return -eval_node(*x.operand, env);
        } else if constexpr (std::is_same_v<T, Binary>) {
          const double lhs = eval_node(*x.lhs, env);
          if (x.op == BinaryOp::logical_and) {
            if (lhs == 0.0) return 0.0;
            return truth(eval_node(*x.rhs, env) != 0.0);
          }
          if (x.op == BinaryOp::logical_or) {
            if (lhs != 0.0) return 1.0;
            return truth(eval_node(*x.rhs, env) != 0.0);
          }
          const double rhs = eval_node(*x.rhs, env);
          return apply_binary(x.op, lhs, rhs, n);
        } else if constexpr (std::is_same_v<T, Call>) {
          std::array<double, 2> args{};
          for (std::size_t i = 0; i < x.args.size(); ++i) args[i] = eval_node(*x.args[i], env);
          return apply_function(x.fn, std::span<const double>(args.data(), x.args.size()), n);
        } else {
          const double arg = eval_node(*x.arg, env);
          if (env.resolver()) {
            if (auto v = env.resolver()(x.name, arg)) return *v;
          }
          throw EvalError("unbound symbol '" + x.name + "'", print(n));
        }
      },
      n.value);
}

}  // namespace

double evaluate(const Expression& e, EvalEnvironment& env) {
  if (e.empty()) throw EvalError("empty expression", "");
  return eval_node(e.root(), env);
}

Compiled::Compiled(const Expression& e, const SlotResolver& resolve) : source_(e) {
  if (e.empty()) throw EvalError("empty expression", "");
  emit(e.root(), resolve, 0);

  int depth = 0;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::constant:
      case Op::load:
        ++depth;
        break;
      case Op::binary:
      case Op::jump_if_false:
      case Op::jump_if_true:
        --depth;
        break;
      case Op::call:
        depth -= arity(static_cast<Function>(in.sub)) - 1;
        break;
      default:
        break;
    }
    max_depth_ = std::max(max_depth_, depth);
  }
}

void Compiled::emit(const Node& n, const SlotResolver& resolve, int depth) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Number>) {
          code_.push_back({Op::constant, 0, 0, x.value, &n});
        } else if constexpr (std::is_same_v<T, Symbol>) {
          code_.push_back({Op::load, 0, resolve(x.name, x.kind, false), 0.0, &n});
        } else if constexpr (std::is_same_v<T, Unary>) {
          emit(*x.operand, resolve, depth);
          code_.push_back({Op::neg, 0, 0, 0.0, &n});
        } else if constexpr (std::is_same_v<T, Binary>) {
          emit(*x.lhs, resolve, depth);
          if (x.op == BinaryOp::logical_and || x.op == BinaryOp::logical_or) {
            const std::size_t jump = code_.size();
            code_.push_back({x.op == BinaryOp::logical_and ? Op::jump_if_false : Op::jump_if_true,
                             0, 0, 0.0, &n});
            emit(*x.rhs, resolve, depth);
            code_.push_back({Op::to_bool, 0, 0, 0.0, &n});
            code_[jump].arg = static_cast<std::int32_t>(code_.size());
          } else {
            emit(*x.rhs, resolve, depth + 1);
            code_.push_back({Op::binary, static_cast<std::uint8_t>(x.op), 0, 0.0, &n});
          }
        } else if constexpr (std::is_same_v<T, Call>) {
          int d = depth;
          for (const auto& a : x.args) emit(*a, resolve, d++);
          code_.push_back({Op::call, static_cast<std::uint8_t>(x.fn), 0, 0.0, &n});
        } else {
          emit(*x.arg, resolve, depth);
          code_.push_back({Op::load_indexed, 0, resolve(x.name, x.kind, true), 0.0, &n});
        }
      },
      n.value);
}

double Compiled::run(Machine& m) const {
  std::array<double, 32> small;
  std::vector<double> large;
  small[0] = 0.0;
  double* stack = small.data();
  if (max_depth_ > static_cast<int>(small.size())) {
    large.resize(static_cast<std::size_t>(max_depth_));
    stack = large.data();
  }
  int sp = 0;
  const std::size_t n = code_.size();
  for (std::size_t pc = 0; pc < n; ++pc) {
    const Instr& in = code_[pc];
    switch (in.op) {
      case Op::constant:
        stack[sp++] = in.value;
        break;
      case Op::load:
        stack[sp++] = m.load(in.arg);
        break;
      case Op::load_indexed:
        stack[sp - 1] = m.load_indexed(in.arg, stack[sp - 1]);
        break;
      case Op::neg:
        stack[sp - 1] = -stack[sp - 1];
        break;
      case Op::binary:
        --sp;
        stack[sp - 1] = apply_binary(static_cast<BinaryOp>(in.sub), stack[sp - 1], stack[sp], *in.node);
        break;
      case Op::call: {
        const int k = arity(static_cast<Function>(in.sub));
        sp -= k;
        stack[sp] = apply_function(static_cast<Function>(in.sub),
                                   std::span<const double>(stack + sp, static_cast<std::size_t>(k)),
                                   *in.node);
        ++sp;
        break;
      }
      case Op::jump_if_false:
        if (stack[sp - 1] == 0.0) {
          stack[sp - 1] = 0.0;
          pc = static_cast<std::size_t>(in.arg) - 1;
        } else {
          --sp;
        }
        break;
      case Op::jump_if_true:
        if (stack[sp - 1] != 0.0) {
          stack[sp - 1] = 1.0;
          pc = static_cast<std::size_t>(in.arg) - 1;
        } else {
          --sp;
        }
        break;
      case Op::to_bool:
        stack[sp - 1] = truth(stack[sp - 1] != 0.0);
        break;
    }
  }
  return stack[0];
}

}  // namespace simflow::expr

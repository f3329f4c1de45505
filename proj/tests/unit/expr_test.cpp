#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "simflow/expr.hpp"
#include "simflow/rng.hpp"

using namespace simflow::expr;

namespace {

SymbolTable wave_table() {
  SymbolTable t;
  t.declare("K", SymbolKind::field);
  t.declare("phi", SymbolKind::field);
  t.declare("a", SymbolKind::parameter);
  t.declare("b", SymbolKind::parameter);
  t.declare("x", SymbolKind::coordinate);
  t.declare("y", SymbolKind::coordinate);
  t.declare("t", SymbolKind::coordinate);
  t.declare("t_end", SymbolKind::parameter);
  return t;
}

SymbolTable voter_table() {
  SymbolTable t;
  t.declare("acc", SymbolKind::field, Usage::indexed);
  t.declare("state", SymbolKind::field, Usage::indexed);
  t.declare("$cv", SymbolKind::builtin);
  t.declare("$ce", SymbolKind::builtin);
  t.declare("$lnoe_in", SymbolKind::builtin, Usage::indexed);
  t.declare("$es", SymbolKind::builtin, Usage::indexed);
  t.declare("$rnd_uniform", SymbolKind::builtin);
  return t;
}

const Binary& bin(const Node& n) { return std::get<Binary>(n.value); }

double eval_with(const std::string& text, std::map<std::string, double> values) {
  SymbolTable t;
  for (const auto& [k, v] : values) t.declare(k, SymbolKind::parameter);
  EvalEnvironment env;
  for (const auto& [k, v] : values) env.bind(k, v);
  return evaluate(parse_expression(text, t), env);
}

}  // namespace

TEST(ExprParse, SingleField) {
  auto e = parse_expression("K", wave_table());
  const auto& s = std::get<Symbol>(e.root().value);
  EXPECT_EQ(s.name, "K");
  EXPECT_EQ(s.kind, SymbolKind::field);
}

TEST(ExprParse, GaussianShape) {
  auto e = parse_expression("a*exp(-(x^2+y^2)/b)", wave_table());
  const auto& top = bin(e.root());
  EXPECT_EQ(top.op, BinaryOp::mul);
  EXPECT_EQ(std::get<Symbol>(top.lhs->value).name, "a");
  const auto& call = std::get<Call>(top.rhs->value);
  EXPECT_EQ(call.fn, Function::exp);
  ASSERT_EQ(call.args.size(), 1u);
  // -(x^2+y^2)/b: unary minus binds tighter than division
  const auto& div = bin(*call.args[0]);
  EXPECT_EQ(div.op, BinaryOp::div);
  EXPECT_TRUE(std::holds_alternative<Unary>(div.lhs->value));
  EXPECT_EQ(std::get<Symbol>(div.rhs->value).name, "b");
}

TEST(ExprParse, VoterIndexedForms) {
  auto e = parse_expression("acc($cv)/$lnoe_in($cv) - $rnd_uniform", voter_table());
  const auto& top = bin(e.root());
  EXPECT_EQ(top.op, BinaryOp::sub);
  const auto& q = bin(*top.lhs);
  EXPECT_EQ(q.op, BinaryOp::div);
  const auto& acc = std::get<Indexed>(q.lhs->value);
  EXPECT_EQ(acc.name, "acc");
  EXPECT_EQ(std::get<Symbol>(acc.arg->value).name, "$cv");
  EXPECT_EQ(std::get<Indexed>(q.rhs->value).name, "$lnoe_in");
  EXPECT_EQ(std::get<Symbol>(top.rhs->value).name, "$rnd_uniform");
}

TEST(ExprParse, NestedIndex) {
  auto e = parse_expression("acc($cv) + acc($es($ce))", voter_table());
  const auto& outer = std::get<Indexed>(bin(e.root()).rhs->value);
  EXPECT_EQ(std::get<Indexed>(outer.arg->value).name, "$es");
}

TEST(ExprParse, Errors) {
  auto t = wave_table();
  try {
    parse_expression("a + z", t);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::unknown_symbol);
    EXPECT_NE(std::string(e.what()).find('z'), std::string::npos);
  }
  try {
    parse_expression("a + * b", t);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::syntax);
    EXPECT_EQ(e.position(), 4u);
  }
  try {
    parse_expression("atan2(a)", t);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::arity);
  }
  EXPECT_THROW(parse_expression("", t), ParseError);
  EXPECT_THROW(parse_expression("(a + b", t), ParseError);
}

TEST(ExprParse, WhitespaceInsensitive) {
  auto t = wave_table();
  EXPECT_EQ(parse_expression("a*exp(-(x^2+y^2)/b)", t), parse_expression("  a * exp ( - ( x ^ 2 + y^2 ) / b ) ", t));
}

TEST(ExprEval, Precedence) {
  EXPECT_EQ(eval_with("2+3*4", {}), 14.0);
  EXPECT_EQ(eval_with("-x^2", {{"x", 2.0}}), -4.0);
  EXPECT_EQ(eval_with("2^3^2", {}), 512.0);
  EXPECT_EQ(eval_with("1 < 2 and 3 > 4 or 1", {}), 1.0);
  EXPECT_EQ(eval_with("10 - 4 - 3", {}), 3.0);
}

TEST(ExprEval, Examples) {
  auto t = wave_table();
  EvalEnvironment env;
  env.bind("a", 1.0);
  env.bind("b", 1.0);
  env.bind("x", 0.0);
  env.bind("y", 0.0);
  EXPECT_EQ(evaluate(parse_expression("a*exp(-(x^2+y^2)/b)", t), env), 1.0);

  env.bind("t", 1.0);
  env.bind("t_end", 1.0);
  EXPECT_EQ(evaluate(parse_expression("t>=t_end", t), env), 1.0);
  EXPECT_EQ(eval_with("atan2(0, 1)", {}), 0.0);
}

TEST(ExprEval, GaussianMatchesDirectFormula) {
  auto e = parse_expression("a*exp(-(x^2+y^2)/b)", wave_table());
  EvalEnvironment env;
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < 100; ++i) {
    double x = u(gen), y = u(gen);
    env.bind("a", 1.0);
    env.bind("b", 0.1);
    env.bind("x", x);
    env.bind("y", y);
    EXPECT_EQ(evaluate(e, env), 1.0 * std::exp(-(x * x + y * y) / 0.1));
  }
}

TEST(ExprEval, Faults) {
  auto t = wave_table();
  EvalEnvironment env;
  EXPECT_THROW(evaluate(parse_expression("a", t), env), EvalError);
  env.bind("a", 1.0);
  env.bind("b", 0.0);
  try {
    evaluate(parse_expression("x + a / b", t), env);
    FAIL();
  } catch (const EvalError&) {
  }
  env.bind("x", 0.0);
  try {
    evaluate(parse_expression("x + a / b", t), env);
    FAIL();
  } catch (const EvalError& e) {
    EXPECT_EQ(e.subexpression(), "(a / b)");
  }
  env.bind("a", -1.0);
  EXPECT_THROW(evaluate(parse_expression("sqrt(a)", t), env), EvalError);
}

TEST(ExprEval, FunctionsAndLogic) {
  EXPECT_EQ(eval_with("floor(2.7) + mod(7, 3) + abs(-2)", {}), 5.0);
  EXPECT_EQ(eval_with("1 = 1", {}), 1.0);
  EXPECT_EQ(eval_with("1 != 1", {}), 0.0);
  EXPECT_EQ(eval_with("0 and 1", {}), 0.0);
  EXPECT_EQ(eval_with("sin(0) + cos(0) + sqrt(4)", {}), 3.0);
}

TEST(ExprEval, ResolverSuppliesIndexedValues) {
  auto e = parse_expression("acc($cv)/$lnoe_in($cv)", voter_table());
  EvalEnvironment env;
  env.bind("$cv", 3.0);
  env.set_resolver([](std::string_view name, std::optional<double> arg) -> std::optional<double> {
    if (!arg || *arg != 3.0) return std::nullopt;
    if (name == "acc") return 2.0;
    if (name == "$lnoe_in") return 4.0;
    return std::nullopt;
  });
  EXPECT_EQ(evaluate(e, env), 0.5);
}

TEST(ExprEval, SeededDeterminism) {
  SymbolTable t;
  t.declare("$rnd_uniform", SymbolKind::builtin);
  auto e = parse_expression("$rnd_uniform * 3 + $rnd_uniform", t);
  auto draw = [&] {
    simflow::KeyedRng rng({42, 7});
    EvalEnvironment env;
    env.set_rng(&rng);
    std::vector<double> out;
    for (int i = 0; i < 10; ++i) out.push_back(evaluate(e, env));
    return out;
  };
  EXPECT_EQ(draw(), draw());
}

TEST(ExprSymbols, FreeSymbols) {
  auto t = wave_table();
  using Set = std::set<std::pair<std::string, SymbolKind>>;
  EXPECT_EQ(free_symbols(parse_expression("K", t)), (Set{{"K", SymbolKind::field}}));
  EXPECT_EQ(free_symbols(parse_expression("a*exp(-(x^2+y^2)/b)", t)),
            (Set{{"a", SymbolKind::parameter},
                 {"b", SymbolKind::parameter},
                 {"x", SymbolKind::coordinate},
                 {"y", SymbolKind::coordinate}}));
  EXPECT_TRUE(free_symbols(Expression(make_number(3.5))).empty());
}

namespace {

// Random trees over the wave symbols. Literals are non-negative because the
// parser reads a leading minus as negation.
class TreeGen {
 public:
  explicit TreeGen(std::uint64_t seed) : gen_(seed) {}

  NodePtr make(int depth) {
    int pick = depth <= 0 ? pick_below(2) : pick_below(6);
    switch (pick) {
      case 0: {
        static const double lits[] = {0.0, 1.0, 2.5, 0.1, 1e-7, 3.0e12, 0.30000000000000004};
        return make_number(lits[pick_below(7)]);
      }
      case 1: {
        static const char* names[] = {"K", "phi", "a", "b", "x", "y"};
        static const SymbolKind kinds[] = {SymbolKind::field,     SymbolKind::field,      SymbolKind::parameter,
                                           SymbolKind::parameter, SymbolKind::coordinate, SymbolKind::coordinate};
        int i = pick_below(6);
        return make_symbol(names[i], kinds[i]);
      }
      case 2:
        return make_unary(UnaryOp::neg, make(depth - 1));
      case 3:
      case 4: {
        auto op = static_cast<BinaryOp>(pick_below(13));
        return make_binary(op, make(depth - 1), make(depth - 1));
      }
      default: {
        auto fn = static_cast<Function>(pick_below(8));
        std::vector<NodePtr> args;
        for (int i = 0; i < arity(fn); ++i) args.push_back(make(depth - 1));
        return make_call(fn, std::move(args));
      }
    }
  }

 private:
  int pick_below(int n) { return std::uniform_int_distribution<int>(0, n - 1)(gen_); }
  std::mt19937_64 gen_;
};

}  // namespace

TEST(ExprProperty, PrintParseRoundTrip) {
  auto t = wave_table();
  TreeGen gen(2024);
  for (int i = 0; i < 2000; ++i) {
    Expression e(gen.make(1 + i % 6));
    auto text = print(e);
    auto back = parse_expression(text, t);
    ASSERT_EQ(back, e) << text;
    ASSERT_EQ(print(back), text);
  }
}

TEST(ExprProperty, CompiledMatchesTreeWalk) {
  auto t = wave_table();
  TreeGen gen(99);
  std::map<std::string, double> vals{{"K", 0.7}, {"phi", -1.25}, {"a", 2.0}, {"b", 0.1}, {"x", 0.3}, {"y", -0.45}};
  std::vector<std::string> names;
  for (const auto& [k, v] : vals) names.push_back(k);

  struct VecMachine : Machine {
    std::vector<double> slots;
    double load(int s) override { return slots[static_cast<std::size_t>(s)]; }
    double load_indexed(int, double) override { return 0.0; }
  } m;
  for (const auto& n : names) m.slots.push_back(vals[n]);
  SlotResolver resolve = [&](const std::string& name, SymbolKind, bool) {
    return static_cast<int>(std::find(names.begin(), names.end(), name) - names.begin());
  };

  EvalEnvironment env;
  for (const auto& [k, v] : vals) env.bind(k, v);
  int compared = 0;
  for (int i = 0; i < 2000; ++i) {
    Expression e(gen.make(1 + i % 5));
    double walked = 0.0;
    bool walked_ok = true;
    try {
      walked = evaluate(e, env);
    } catch (const EvalError&) {
      walked_ok = false;
    }
    Compiled c(e, resolve);
    if (!walked_ok) {
      EXPECT_THROW(c.run(m), EvalError) << print(e);
      continue;
    }
    double ran = c.run(m);
    if (std::isnan(walked)) {
      EXPECT_TRUE(std::isnan(ran));
    } else {
      EXPECT_EQ(std::memcmp(&walked, &ran, sizeof ran), 0) << print(e);
    }
    ++compared;
  }
  EXPECT_GT(compared, 500);
}

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "simflow/docmodel.hpp"

namespace fs = std::filesystem;
using namespace simflow;
using nlohmann::json;

namespace {

const fs::path kDocs = SIMFLOW_DOCS_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

std::vector<doc::Diagnostic> errors_of(const std::vector<doc::Diagnostic>& all) {
  std::vector<doc::Diagnostic> out;
  for (const auto& d : all)
    if (d.severity == doc::Severity::error) out.push_back(d);
  return out;
}

const std::vector<fs::path> kShipped = {
    "models/wave.json",      "problems/wave_problem.json",    "policies/wave_policy.json",
    "models/voter.json",     "problems/voter_problem.json",   "models/flocking.json",
    "problems/flocking_problem.json",
};

}  // namespace

TEST(DocLoad, WaveModel) {
  auto d = doc::load_document(kDocs / "models/wave.json");
  const auto& m = std::get<doc::GenericPdeModel>(d);
  EXPECT_EQ(m.fields, (std::vector<std::string>{"phi", "K"}));
  EXPECT_EQ(m.coordinates.spatial, (std::vector<std::string>{"x", "y"}));
  ASSERT_EQ(m.evolution.size(), 2u);
}

TEST(DocLoad, EmptyFileIsFormatError) {
  EXPECT_THROW(doc::parse_document("", "empty.json"), doc::DocumentError);
  EXPECT_THROW(doc::parse_document("{\"kind\": \"nonsense\"}"), doc::DocumentError);
}

TEST(DocLoad, ParseErrorsAggregateWithLocators) {
  auto j = load_json(kDocs / "models/voter.json");
  j["rules"]["update"][0]["algorithm"][0] = "acc($cv) = 0 +";
  j["rules"]["update"][1]["algorithm"][0] = "tmp = undefined_thing";
  try {
    doc::parse_document(j.dump());
    FAIL();
  } catch (const doc::DocumentError& e) {
    ASSERT_GE(e.diagnostics().size(), 2u);
    for (const auto& d : e.diagnostics()) EXPECT_EQ(d.locator.rfind("/rules/update/", 0), 0u) << d.locator;
  }
}

TEST(DocLoad, UnknownKeysAreRejected) {
  auto j = load_json(kDocs / "models/wave.json");
  j["evolution"][0]["operators"][0]["terms"][0]["axs"] = "x";
  j["head"]["colour"] = "red";
  try {
    doc::parse_document(j.dump());
    FAIL();
  } catch (const doc::DocumentError& e) {
    std::set<std::string> where;
    for (const auto& d : e.diagnostics()) where.insert(d.locator);
    EXPECT_EQ(where, (std::set<std::string>{"/head/colour", "/evolution/0/operators/0/terms/0/axs"}));
  }
  auto s = load_json(kDocs / "models/flocking.json");
  s["rules"]["gather"][0]["algorithm"][3]["extra"] = 1;
  EXPECT_THROW(doc::parse_document(s.dump()), doc::DocumentError);
}

TEST(DocLoad, VoterProblemReferencesModel) {
  auto d = doc::load_document(kDocs / "problems/voter_problem.json");
  const auto& p = std::get<doc::AbmGraphProblem>(d);
  EXPECT_EQ(p.model, "voter");
  EXPECT_EQ(p.graph.vertices, 500);
  EXPECT_EQ(p.graph.edges, 1000);
}

TEST(DocValidate, ShippedDocumentsAreClean) {
  doc::DocumentStore store(kDocs);
  for (const auto& rel : kShipped) {
    auto d = doc::load_document(kDocs / rel);
    auto diags = doc::validate(d, &store);
    EXPECT_TRUE(errors_of(diags).empty()) << rel << ": " << (diags.empty() ? "" : doc::format(diags[0]));
  }
}

TEST(DocValidate, UndeclaredDerivativeAxis) {
  auto j = load_json(kDocs / "models/wave.json");
  j["evolution"][1]["operators"][0]["terms"][0]["derivative"]["axis"] = "z";
  auto diags = errors_of(doc::validate(doc::parse_document(j.dump())));
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_NE(diags[0].message.find("'z'"), std::string::npos);
  EXPECT_EQ(diags[0].locator, "/evolution/1/operators/0/terms/0/axis");
}

TEST(DocValidate, NeighbourAccessInUpdateRule) {
  auto j = load_json(kDocs / "models/voter.json");
  j["rules"]["update"][0]["algorithm"][0] = "acc($cv) = state($es($ce))";
  auto diags = errors_of(doc::validate(doc::parse_document(j.dump())));
  ASSERT_FALSE(diags.empty());
  bool found = false;
  for (const auto& d : diags) found |= d.message == "neighbor context in update rule";
  EXPECT_TRUE(found);
}

TEST(DocValidate, ReferentialIntegrity) {
  doc::DocumentStore store(kDocs);
  auto j = load_json(kDocs / "problems/wave_problem.json");
  j["model"] = "no_such_model";
  EXPECT_FALSE(errors_of(doc::validate(doc::parse_document(j.dump()), &store)).empty());
  j["model"] = "voter";  // wrong family
  auto diags = errors_of(doc::validate(doc::parse_document(j.dump()), &store));
  ASSERT_FALSE(diags.empty());
  EXPECT_NE(diags[0].message.find("expected"), std::string::npos);
  // without a store a reference can never be confirmed
  EXPECT_FALSE(errors_of(doc::validate(doc::load_document(kDocs / "problems/wave_problem.json"))).empty());
}

TEST(DocValidate, ProblemInvariants) {
  doc::DocumentStore store(kDocs);
  auto base = load_json(kDocs / "problems/wave_problem.json");

  auto j = base;
  j["region"]["domain"][0]["max"] = -0.5;
  EXPECT_FALSE(errors_of(doc::validate(doc::parse_document(j.dump()), &store)).empty());

  j = base;
  j["region"]["initial_condition"] = json::array({"K = 0"});
  auto diags = errors_of(doc::validate(doc::parse_document(j.dump()), &store));
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_NE(diags[0].message.find("phi"), std::string::npos);
}

TEST(DocValidate, UnsupportedTagIsReported) {
  auto j = load_json(kDocs / "models/voter.json");
  j["rules"]["update"][0]["algorithm"].push_back(json{{"flux", "whatever"}});
  auto diags = errors_of(doc::validate(doc::parse_document(j.dump())));
  ASSERT_FALSE(diags.empty());
  EXPECT_NE(diags[0].message.find("flux"), std::string::npos);
}

TEST(DocSerialize, CanonicalRoundTripIsByteStable) {
  for (const auto& rel : kShipped) {
    auto d = doc::load_document(kDocs / rel);
    auto once = doc::to_json_text(d);
    auto twice = doc::to_json_text(doc::parse_document(once));
    EXPECT_EQ(once, twice) << rel;
    // shipped files are stored canonically
    EXPECT_EQ(once, slurp(kDocs / rel)) << rel;
  }
}

TEST(DocSerialize, SaveLoadIdentity) {
  auto dir = fs::temp_directory_path() / "simflow_doc_test";
  fs::create_directories(dir);
  auto d = doc::load_document(kDocs / "models/flocking.json");
  doc::save_document(d, dir / "f.json");
  EXPECT_EQ(doc::to_json_text(doc::load_document(dir / "f.json")), doc::to_json_text(d));
  fs::remove_all(dir);
}

TEST(DocLatex, WaveModel) {
  auto tex = doc::export_latex(doc::load_document(kDocs / "models/wave.json"));
  EXPECT_NE(tex.find("\\partial_t \\phi &= K"), std::string::npos);
  EXPECT_NE(tex.find("\\partial_{x}\\partial_{x} \\phi"), std::string::npos);
  EXPECT_EQ(tex, doc::export_latex(doc::load_document(kDocs / "models/wave.json")));
}

TEST(DocLatex, MinimalModel) {
  auto j = load_json(kDocs / "models/wave.json");
  j["fields"] = json::array({"u"});
  j["evolution"] = json::array({json{{"field", "u"}, {"operators", json::array()}}});
  auto tex = doc::export_latex(doc::parse_document(j.dump()));
  EXPECT_NE(tex.find("\\begin{document}"), std::string::npos);
  EXPECT_NE(tex.find("\\end{document}"), std::string::npos);
  EXPECT_NE(tex.find("\\partial_t u &= 0"), std::string::npos);
}

TEST(DocLatex, VoterRulesInExecutionOrder) {
  auto tex = doc::export_latex(doc::load_document(kDocs / "models/voter.json"));
  auto a = tex.find("Acc update 1");
  auto b = tex.find("Acc gather 1");
  auto c = tex.find("State update 1");
  ASSERT_NE(a, std::string::npos);
  ASSERT_NE(b, std::string::npos);
  ASSERT_NE(c, std::string::npos);
  EXPECT_LT(a, b);
  EXPECT_LT(b, c);
}

TEST(DocLatex, InvalidDocumentRefused) {
  auto j = load_json(kDocs / "models/wave.json");
  j["fields"] = json::array();
  EXPECT_THROW(doc::export_latex(doc::parse_document(j.dump())), doc::DocumentError);
}

namespace {

// Invariants of a model, checked directly on the typed document.
void collect_axes(const doc::TermNode& t, std::set<std::string>& axes, std::vector<expr::Expression>& leaves) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, doc::Algebraic>) {
          leaves.push_back(x.math.ast);
        } else if constexpr (std::is_same_v<T, doc::Derivative>) {
          axes.insert(x.axis);
          collect_axes(*x.inner, axes, leaves);
        } else if constexpr (std::is_same_v<T, doc::Product>) {
          for (const auto& f : x.factors) collect_axes(f, axes, leaves);
        } else {
          for (const auto& f : x.terms) collect_axes(f, axes, leaves);
        }
      },
      t.value);
}

::testing::AssertionResult pde_model_invariants(const doc::GenericPdeModel& m) {
  if (m.coordinates.spatial.empty()) return ::testing::AssertionFailure() << "no spatial coordinate";
  if (m.fields.empty()) return ::testing::AssertionFailure() << "no field";
  std::set<std::string> fields(m.fields.begin(), m.fields.end());
  std::set<std::string> coords(m.coordinates.spatial.begin(), m.coordinates.spatial.end());
  std::set<std::string> params(m.parameters.begin(), m.parameters.end());
  std::map<std::string, int> entries;
  for (const auto& e : m.evolution) {
    if (!fields.count(e.field)) return ::testing::AssertionFailure() << "undeclared evolved field " << e.field;
    ++entries[e.field];
    for (const auto& op : e.operators)
      for (const auto& t : op.terms) {
        std::set<std::string> axes;
        std::vector<expr::Expression> leaves;
        collect_axes(t, axes, leaves);
        for (const auto& a : axes)
          if (!coords.count(a)) return ::testing::AssertionFailure() << "undeclared axis " << a;
        for (const auto& leaf : leaves)
          for (const auto& [name, kind] : expr::free_symbols(leaf))
            if (!fields.count(name) && !coords.count(name) && !params.count(name) && name != m.coordinates.time &&
                name != "pi")
              return ::testing::AssertionFailure() << "undeclared symbol " << name;
      }
  }
  for (const auto& f : m.fields)
    if (entries[f] != 1) return ::testing::AssertionFailure() << f << " has " << entries[f] << " evolution entries";
  return ::testing::AssertionSuccess();
}

::testing::AssertionResult graph_model_invariants(const doc::AbmGraphModel& m) {
  std::set<std::string> names;
  for (const auto& r : m.gather_rules) names.insert(r.name);
  for (const auto& r : m.update_rules) {
    names.insert(r.name);
    if (simml::check_locality(r.algorithm) != simml::Locality::update_safe)
      return ::testing::AssertionFailure() << "update rule " << r.name << " reads neighbours";
  }
  if (names.empty()) return ::testing::AssertionFailure() << "no rules";
  for (const auto& n : m.execution_order)
    if (!names.count(n)) return ::testing::AssertionFailure() << "execution order names unknown rule " << n;
  return ::testing::AssertionSuccess();
}

class Mutator {
 public:
  explicit Mutator(std::uint64_t seed) : gen_(seed) {}

  void mutate(json& j) {
    std::vector<json*> nodes;
    collect(j, nodes);
    json* target = nodes[pick(nodes.size())];
    static const std::vector<std::string> pool = {"x", "y", "z", "phi", "K", "q", "", "default",
                                                  "acc", "state", "Acc gather 1", "tmp + 1", "phi * K"};
    switch (pick(4)) {
      case 0:
        if (target->is_object() && !target->empty()) {
          auto it = target->begin();
          std::advance(it, static_cast<long>(pick(target->size())));
          target->erase(it.key());
        }
        break;
      case 1:
        if (target->is_string()) *target = pool[pick(pool.size())];
        break;
      case 2:
        if (target->is_array() && !target->empty()) target->push_back((*target)[pick(target->size())]);
        break;
      default:
        if (target->is_array() && !target->empty()) target->erase(pick(target->size()));
        break;
    }
  }

 private:
  void collect(json& j, std::vector<json*>& out) {
    out.push_back(&j);
    if (j.is_object() || j.is_array())
      for (auto& c : j) collect(c, out);
  }
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(gen_); }
  std::mt19937_64 gen_;
};

template <typename Doc, typename Check>
void fuzz(const fs::path& file, Check check, int rounds, int& accepted) {
  auto base = load_json(file);
  Mutator mut(static_cast<std::uint64_t>(rounds) * 31 + file.string().size());
  for (int i = 0; i < rounds; ++i) {
    auto j = base;
    for (int k = 0; k < 1 + i % 3; ++k) mut.mutate(j);
    doc::Document d;
    try {
      d = doc::parse_document(j.dump());
    } catch (const doc::DocumentError&) {
      continue;
    }
    if (doc::has_errors(doc::validate(d))) continue;
    ++accepted;
    ASSERT_TRUE(std::holds_alternative<Doc>(d));
    ASSERT_TRUE(check(std::get<Doc>(d))) << j.dump();
  }
}

}  // namespace

TEST(DocProperty, ValidatedModelsSatisfyInvariants) {
  int accepted = 0;
  fuzz<doc::GenericPdeModel>(kDocs / "models/wave.json", pde_model_invariants, 3000, accepted);
  fuzz<doc::AbmGraphModel>(kDocs / "models/voter.json", graph_model_invariants, 3000, accepted);
  // the mutator must also produce documents that get through
  EXPECT_GT(accepted, 100);
}

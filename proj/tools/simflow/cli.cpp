#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "simflow/abm_graph.hpp"
#include "simflow/abm_spatial.hpp"
#include "simflow/discretize.hpp"
#include "simflow/docmodel.hpp"
#include "simflow/parallel.hpp"
#include "simflow/pde_runtime.hpp"

namespace simflow::cli {

namespace fs = std::filesystem;

namespace {

/// Carries an exit code out of a command.
struct Exit {
  int code;
};

struct Options {
  bool json = false;
  std::string docs;
  std::string input;
  std::string policy;
  std::string params;
  std::string out;
  int workers = 0;
  std::vector<std::string> sets;
  // graph-gen
  std::string distribution = "random";
  std::int64_t vertices = 0;
  std::int64_t edges = 0;
  std::int64_t attachment = 2;
  std::int64_t min_in_degree = 0;
  bool undirected = false;
  std::uint64_t seed = 0;
};

class Session {
 public:
  Session(Options& o, std::ostream& out, std::ostream& err) : o_(o), out_(out), err_(err) {}

  int validate() {
    const doc::Document d = load(o_.input);
    auto store = store_for(o_.input);
    const auto diags = doc::validate(d, &store);
    report(diags);
    if (doc::has_errors(diags)) return invalid;
    if (!o_.json) out_ << "ok: " << o_.input << " (" << doc::kind_name(d) << ")\n";
    return ok;
  }

  int discretize() {
    auto store = store_for(o_.input);
    const auto result = discretized(load(o_.input), store);
    emit(doc::to_json_text(result));
    return ok;
  }

  int run() {
    const doc::Document d = load(o_.input);
    auto store = store_for(o_.input);
    ParamFile params = o_.params.empty() ? ParamFile::parse("", "<none>") : ParamFile::load(o_.params);
    for (const auto& s : o_.sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected key=value, got '" + s + "'");
      params.set(trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    }
    const int workers = o_.workers > 0 ? o_.workers : 0;

    if (std::holds_alternative<doc::AbmGraphProblem>(d)) {
      check(d, store);
      const auto& problem = std::get<doc::AbmGraphProblem>(d);
      const auto model = resolve<doc::AbmGraphModel>(store, problem.model, "model");
      auto config = graph::configure(problem, params);
      if (!o_.out.empty()) config.output_dir = o_.out;
      if (workers > 0 || !params.has("workers")) config.workers = pick_workers(workers);
      config.base_dir = fs::path(o_.input).parent_path();
      out_ << graph::to_json(graph::run_graph_problem(problem, model, config)) << "\n";
      return ok;
    }
    if (std::holds_alternative<doc::AbmSpatialProblem>(d)) {
      check(d, store);
      const auto& problem = std::get<doc::AbmSpatialProblem>(d);
      const auto model = resolve<doc::AbmSpatialModel>(store, problem.model, "model");
      auto config = spatial::configure(problem, params);
      if (!o_.out.empty()) config.output_dir = o_.out;
      if (workers > 0 || !params.has("workers")) config.workers = pick_workers(workers);
      const auto report = spatial::run_spatial_problem(problem, model, config);
      for (const auto& w : report.warnings) err_ << "warning: " << w << "\n";
      out_ << spatial::to_json(report) << "\n";
      return ok;
    }
    const doc::DiscretizedProblem dp = discretized(d, store);
    auto config = pde::configure(dp.problem, params);
    if (!o_.out.empty()) config.output_dir = o_.out;
    if (workers > 0 || !params.has("workers")) config.workers = pick_workers(workers);
    const auto report = pde::run(dp.problem, dp.kernel, config);
    for (const auto& w : report.warnings) err_ << "warning: " << w << "\n";
    out_ << pde::to_json(report) << "\n";
    return ok;
  }

  int export_latex() {
    const doc::Document d = load(o_.input);
    auto store = store_for(o_.input);
    check(d, store);
    emit(doc::export_latex(d, &store));
    return ok;
  }

  int canonicalize() {
    emit(doc::to_json_text(load(o_.input)));
    return ok;
  }

  int graph_gen() {
    doc::GraphSpec spec;
    if (!o_.input.empty()) {
      const doc::Document d = load(o_.input);
      if (!std::holds_alternative<doc::AbmGraphProblem>(d)) {
        throw doc::DocumentError(o_.input, {{doc::Severity::error, "/kind", "graph-gen needs an abm_graph_problem"}});
      }
      spec = std::get<doc::AbmGraphProblem>(d).graph;
      if (o_.vertices > 0) spec.vertices = o_.vertices;
      if (o_.edges > 0) spec.edges = o_.edges;
    } else {
      if (o_.distribution == "random") spec.distribution = doc::Distribution::random;
      else if (o_.distribution == "scale_free" || o_.distribution == "scale-free") spec.distribution = doc::Distribution::scale_free;
      else if (o_.distribution == "circular") spec.distribution = doc::Distribution::circular;
      else throw CLI::ValidationError("--distribution", "must be random, scale_free or circular");
      spec.vertices = o_.vertices;
      spec.edges = o_.edges;
      spec.attachment = o_.attachment;
      spec.min_in_degree = o_.min_in_degree;
      spec.directed = !o_.undirected;
    }
    emit(graph::edge_list(graph::generate_graph(spec, o_.seed)));
    return ok;
  }

 private:
  static std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
  }

  static int pick_workers(int requested) { return requested > 0 ? requested : WorkerPool::hardware(); }

  doc::Document load(const std::string& path) { return doc::load_document(path); }

  doc::DocumentStore store_for(const std::string& input) {
    fs::path root;
    if (!o_.docs.empty()) {
      root = o_.docs;
    } else if (const char* env = std::getenv("SIMFLOW_DOCS"); env != nullptr && *env != '\0') {
      root = env;
    } else {
      const fs::path parent = fs::absolute(input).parent_path();
      const std::string name = parent.filename().string();
      if (name == "models" || name == "problems" || name == "policies" || name == "discretized") {
        root = parent.parent_path();
      } else {
        root = parent;
      }
    }
    return doc::DocumentStore(root);
  }

  /// A policy given as a path is loaded and registered; otherwise it is an id.
  std::string policy_id(doc::DocumentStore& store) {
    if (o_.policy.empty()) return {};
    if (fs::is_regular_file(o_.policy)) {
      doc::Document p = load(o_.policy);
      std::string id = doc::head_of(p).id;
      store.add(std::move(p));
      return id;
    }
    return o_.policy;
  }

  template <typename T>
  T resolve(const doc::DocumentStore& store, const std::string& id, const std::string& what) {
    auto found = store.find(id);
    if (!found) {
      throw doc::DocumentError(o_.input, {{doc::Severity::error, "/" + what, what + " '" + id + "' not found"}});
    }
    if (!std::holds_alternative<T>(*found)) {
      throw doc::DocumentError(o_.input, {{doc::Severity::error, "/" + what, "'" + id + "' is a " +
                                                                    std::string(doc::kind_name(*found))}});
    }
    return std::get<T>(*found);
  }

  void check(const doc::Document& d, const doc::DocumentStore& store) {
    const auto diags = doc::validate(d, &store);
    if (doc::has_errors(diags)) throw doc::DocumentError(doc::head_of(d).id, diags);
    report(diags);
  }

  doc::DiscretizedProblem discretized(const doc::Document& d, doc::DocumentStore& store) {
    if (const auto* dp = std::get_if<doc::DiscretizedProblem>(&d)) {
      check(d, store);
      return *dp;
    }
    const auto* problem = std::get_if<doc::GenericPdeProblem>(&d);
    if (problem == nullptr) {
      throw doc::DocumentError(o_.input, {{doc::Severity::error, "/kind",
                                           "expected a generic_pde_problem or discretized_problem, got " +
                                               std::string(doc::kind_name(d))}});
    }
    const std::string pid = policy_id(store);
    if (pid.empty()) {
      throw doc::DocumentError(o_.input, {{doc::Severity::error, "/", "a continuous problem needs --policy"}});
    }
    check(d, store);
    const auto policy = resolve<doc::DiscretizationPolicy>(store, pid, "policy");
    check(doc::Document{policy}, store);
    const auto model = resolve<doc::GenericPdeModel>(store, problem->model, "model");
    return disc::discretize(*problem, model, policy);
  }

  void report(const std::vector<doc::Diagnostic>& diags) {
    if (o_.json) {
      out_ << diagnostics_json(diags).dump(2) << "\n";
      return;
    }
    for (const auto& d : diags) err_ << doc::format(d) << "\n";
  }

  void emit(const std::string& text) {
    if (o_.out.empty()) {
      out_ << text;
      return;
    }
    const fs::path p = o_.out;
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("cannot write " + o_.out);
  }

 public:
  static nlohmann::json diagnostics_json(const std::vector<doc::Diagnostic>& diags) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& d : diags) {
      arr.push_back({{"severity", d.severity == doc::Severity::error ? "error" : "warning"},
                     {"locator", d.locator},
                     {"message", d.message}});
    }
    return arr;
  }

 private:
  Options& o_;
  std::ostream& out_;
  std::ostream& err_;
};

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Document-driven simulation pipeline", "simflow"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  auto common = [&](CLI::App* sub) {
    sub->add_flag("--json", o.json, "Machine-readable diagnostics");
    sub->add_option("--docs", o.docs, "Documents directory (default: $SIMFLOW_DOCS)");
  };

  int code = ok;
  std::function<int(Session&)> action;

  auto* validate = app.add_subcommand("validate", "Check a document and its references");
  common(validate);
  validate->add_option("document", o.input, "Document path")->required();
  validate->callback([&] { action = &Session::validate; });

  auto* discretize = app.add_subcommand("discretize", "Lower a PDE problem with a discretization policy");
  common(discretize);
  discretize->add_option("problem", o.input, "Problem path")->required();
  discretize->add_option("--policy", o.policy, "Policy path or id")->required();
  discretize->add_option("--out", o.out, "Output path (default: stdout)");
  discretize->callback([&] { action = &Session::discretize; });

  auto* run = app.add_subcommand("run", "Run a discretized PDE problem or an agent-based problem");
  common(run);
  run->add_option("document", o.input, "Discretized problem, PDE problem (with --policy) or ABM problem")->required();
  run->add_option("--policy", o.policy, "Policy path or id for continuous PDE problems");
  run->add_option("--params", o.params, "problem.input parameter file");
  run->add_option("--out", o.out, "Output directory");
  run->add_option("--workers", o.workers, "Worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
  run->add_option("--set", o.sets, "Parameter override key=value (repeatable)");
  run->callback([&] { action = &Session::run; });

  auto* latex = app.add_subcommand("export-latex", "Render a document as LaTeX");
  common(latex);
  latex->add_option("document", o.input, "Document path")->required();
  latex->add_option("--out", o.out, "Output path (default: stdout)");
  latex->callback([&] { action = &Session::export_latex; });

  auto* gen = app.add_subcommand("graph-gen", "Generate an edge list");
  common(gen);
  gen->add_option("problem", o.input, "Graph problem whose graph spec is used");
  gen->add_option("--distribution", o.distribution, "random | scale_free | circular");
  gen->add_option("--vertices", o.vertices, "Vertex count");
  gen->add_option("--edges", o.edges, "Edge count (random)");
  gen->add_option("--attachment", o.attachment, "Edges per new vertex (scale_free)");
  gen->add_option("--min-in-degree", o.min_in_degree, "Seed this many in-edges per vertex (random)");
  gen->add_flag("--undirected", o.undirected, "Undirected graph");
  gen->add_option("--seed", o.seed, "Generator seed");
  gen->add_option("--out", o.out, "Output path (default: stdout)");
  gen->callback([&] { action = &Session::graph_gen; });

  auto* canon = app.add_subcommand("canonicalize", "Re-emit a document in canonical JSON");
  common(canon);
  canon->add_option("document", o.input, "Document path")->required();
  canon->add_option("--out", o.out, "Output path (default: stdout)");
  canon->callback([&] { action = &Session::canonicalize; });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return usage;
  }

  Session session(o, out, err);
  auto fail = [&](int c, const std::string& message, const std::vector<doc::Diagnostic>& diags = {}) {
    if (o.json) {
      nlohmann::json j{{"error", message}};
      if (!diags.empty()) j["diagnostics"] = Session::diagnostics_json(diags);
      out << j.dump(2) << "\n";
    } else {
      err << "error: " << message << "\n";
      for (const auto& d : diags) err << doc::format(d) << "\n";
    }
    return c;
  };
  try {
    code = action(session);
  } catch (const doc::DocumentError& e) {
    if (o.json && !e.diagnostics().empty()) {
      out << Session::diagnostics_json(e.diagnostics()).dump(2) << "\n";
      return invalid;
    }
    return fail(invalid, e.source() + ": invalid document", e.diagnostics());
  } catch (const ParamError& e) {
    return fail(invalid, e.what());
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return usage;
  } catch (const std::exception& e) {
    return fail(fault, e.what());
  }
  return code;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return main(args, out, err);
}

}  // namespace simflow::cli

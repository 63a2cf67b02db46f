// fvbench: paired SA-vs-FV experiments on synthetic landscapes and QAOA Max-Cut.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fvopt/bench.hpp"
#include "fvopt/config.hpp"
#include "fvopt/error.hpp"

namespace {

using namespace fvopt;

struct Options {
  std::string config_path;
  std::string out_dir = "fvbench-out";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replications;
  std::optional<double> exploration_rate;
  std::optional<double> alpha;
  std::optional<std::size_t> particles;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> shots;
  std::optional<std::size_t> functions;
  std::optional<std::size_t> threads;
  std::string landscape_in;
  std::string landscape_out;
  std::string graph_in;
  std::string graph_out;
  std::optional<std::uint64_t> graph_seed;
  bool emit_plot_data = false;
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config_error:
    case ErrorKind::invalid_params: return 2;
    case ErrorKind::ansatz_infeasible: return 3;
    case ErrorKind::io_error: return 4;
    default: return 1;
  }
}

BenchConfig resolve(const Options& o, ObjectiveKind kind) {
  BenchConfig cfg;
  if (!o.config_path.empty()) cfg = load_config(o.config_path);
  auto& e = cfg.experiment;
  if (e.kind != kind) {
    e.kind = kind;
    if (kind == ObjectiveKind::qaoa) e.ansatz_rule = AnsatzRule::uniform;
  }
  auto& h = cfg.hitting;
  if (o.seed) e.master_seed = h.seed = *o.seed;
  if (o.replications) e.replications = *o.replications;
  if (o.exploration_rate) e.fv.exploration_rate = h.fv.exploration_rate = *o.exploration_rate;
  if (o.alpha) e.fv.alpha = h.fv.alpha = *o.alpha;
  if (o.particles) e.fv.particles = h.fv.particles = *o.particles;
  if (o.steps) {
    e.fv.iterations = *o.steps;
    h.step_cap = *o.steps;
  }
  if (o.shots) e.qaoa.shots = *o.shots;
  if (o.functions) e.synthetic.functions = e.qaoa.graphs = *o.functions;
  if (o.threads) e.threads = h.threads = *o.threads;
  try {
    e.validate();
  } catch (const Error& err) {
    throw Error(ErrorKind::config_error, err.what());
  }
  return cfg;
}

std::string indexed_path(const std::string& path, std::size_t id, std::size_t total) {
  if (total == 1) return path;
  std::filesystem::path p(path);
  return (p.parent_path() / (p.stem().string() + "_" + std::to_string(id) + p.extension().string()))
      .string();
}

void print_summary(const std::vector<RunRecord>& records) {
  const auto summary = summarize(records);
  std::printf("%-10s %12s %12s %10s\n", "function", "median SA", "median FV", "advantage");
  for (const auto& f : summary) {
    std::printf("%-10zu %12.5g %12.5g %10.4f\n", f.function_id, f.sa.median, f.fv.median, f.advantage);
  }
  const auto stats = advantage_stats(summary);
  std::printf("mean advantage %.4f, positive on %zu/%zu functions\n", stats.mean, stats.positive,
              stats.functions);
}

int run_experiment(const Options& o, ObjectiveKind kind) {
  const BenchConfig cfg = resolve(o, kind);
  const auto& spec = cfg.experiment;

  std::vector<BenchFunction> functions;
  if (kind == ObjectiveKind::synthetic && !o.landscape_in.empty()) {
    functions.push_back(make_synthetic_function(
        0, std::make_shared<const Landscape>(load_landscape(o.landscape_in))));
  } else if (kind == ObjectiveKind::qaoa && !o.graph_in.empty()) {
    auto problem = std::make_shared<const QaoaProblem>(load_graph(o.graph_in), spec.qaoa.layers);
    functions.push_back(make_qaoa_function(0, std::move(problem), spec.qaoa));
  } else if (kind == ObjectiveKind::qaoa && o.graph_seed) {
    for (std::size_t f = 0; f < spec.qaoa.graphs; ++f) {
      Stream rng(function_seed(*o.graph_seed, f));
      auto problem = std::make_shared<const QaoaProblem>(random_graph(spec.qaoa.qubits, rng),
                                                         spec.qaoa.layers);
      functions.push_back(make_qaoa_function(f, std::move(problem), spec.qaoa));
    }
  } else {
    functions = build_bench(spec);
  }

  if (!o.landscape_out.empty()) {
    for (const auto& f : functions) {
      if (f.landscape) save_landscape(indexed_path(o.landscape_out, f.id, functions.size()), *f.landscape);
    }
  }
  if (!o.graph_out.empty()) {
    for (const auto& f : functions) {
      if (f.problem) save_graph(indexed_path(o.graph_out, f.id, functions.size()), f.problem->graph());
    }
  }

  const auto records = run_bench(spec, functions);
  export_records(o.out_dir, records);
  if (o.emit_plot_data) {
    const std::filesystem::path dir(o.out_dir);
    for (const auto& f : functions) {
      const std::string name = "function_" + std::to_string(f.id);
      if (f.landscape) save_landscape((dir / (name + ".fvland.json")).string(), *f.landscape);
      if (f.problem) save_graph((dir / (name + ".fvgraph.json")).string(), f.problem->graph());
    }
    std::ofstream out(dir / "config.json");
    out << dump_config(cfg) << '\n';
    if (!out) throw Error(ErrorKind::io_error, "cannot write config.json");
  }
  print_summary(records);
  std::printf("wrote %zu records to %s\n", records.size(), o.out_dir.c_str());
  return 0;
}

int run_hitting(const Options& o) {
  const BenchConfig cfg = resolve(o, ObjectiveKind::synthetic);
  const auto table = hitting_time_study(cfg.hitting);
  std::error_code ec;
  std::filesystem::create_directories(o.out_dir, ec);
  if (ec) throw Error(ErrorKind::io_error, "cannot create " + o.out_dir);
  std::ofstream out(std::filesystem::path(o.out_dir) / "hitting.csv");
  if (!out) throw Error(ErrorKind::io_error, "cannot write hitting.csv");
  write_hitting_csv(out, table);
  write_hitting_csv(std::cout, table);
  std::printf("slope of delta vs barren fraction: %.4g\n", table.slope_vs_fraction);
  std::printf("delta nondecreasing in fraction (within 95%% CI): %s\n", table.nondecreasing ? "yes" : "no");
  std::printf("zero-fraction CI covers 0: %s\n", table.zero_cell_covers_zero ? "yes" : "no");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Paired simulated-annealing vs Fleming-Viot benchmark"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON experiment configuration");
    sub->add_option("--out-dir", o.out_dir, "Output directory");
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--replications", o.replications, "Replications per function");
    sub->add_option("--exploration-rate", o.exploration_rate, "Probability of reinitialization");
    sub->add_option("--alpha", o.alpha, "Relative gradient threshold");
    sub->add_option("--particles", o.particles, "Particles per run");
    sub->add_option("--steps", o.steps, "Iterations per particle (step cap for hitting)");
    sub->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  };

  auto* synth = app.add_subcommand("synth", "Synthetic barren-plateau landscapes");
  add_common(synth);
  synth->add_option("--functions", o.functions, "Number of synthesized functions");
  synth->add_option("--landscape-in", o.landscape_in, "Run on a saved landscape");
  synth->add_option("--landscape-out", o.landscape_out, "Save synthesized landscapes");
  synth->add_flag("--emit-plot-data", o.emit_plot_data, "Also write landscapes and config");

  auto* qaoa = app.add_subcommand("qaoa", "QAOA Max-Cut on random complete graphs");
  add_common(qaoa);
  qaoa->add_option("--functions", o.functions, "Number of graphs");
  qaoa->add_option("--shots", o.shots, "Shots per circuit estimate (0 = exact)");
  qaoa->add_option("--graph-in", o.graph_in, "Run on a saved graph");
  qaoa->add_option("--graph-out", o.graph_out, "Save generated graphs");
  qaoa->add_option("--graph-seed", o.graph_seed, "Seed for graph generation");
  qaoa->add_flag("--emit-plot-data", o.emit_plot_data, "Also write graphs and config");

  auto* hitting = app.add_subcommand("hitting", "Hitting-time scaling study");
  add_common(hitting);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) return run_experiment(o, ObjectiveKind::synthetic);
    if (qaoa->parsed()) return run_experiment(o, ObjectiveKind::qaoa);
    return run_hitting(o);
  } catch (const Error& e) {
    std::cerr << "fvbench: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "fvbench: " << e.what() << '\n';
    return 1;
  }
}

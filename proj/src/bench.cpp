#include "fvopt/bench.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fvopt/error.hpp"
#include "fvopt/parallel.hpp"

namespace fvopt {

const char* to_string(Method m) noexcept { return m == Method::sa ? "SA" : "FV"; }

void ExperimentSpec::validate() const {
  if (replications < 1) throw Error(ErrorKind::config_error, "replications must be >= 1");
  try {
    fv.validate();
    sa.validate();
    if (kind == ObjectiveKind::synthetic) {
      synthetic.synthesis.validate(synthetic.grid);
      if (synthetic.functions < 1) throw Error(ErrorKind::invalid_params, "need >= 1 function");
    } else {
      if (qaoa.qubits < 2 || qaoa.qubits > kMaxOracleNodes || qaoa.layers < 1 || qaoa.graphs < 1) {
        throw Error(ErrorKind::invalid_params, "qaoa needs 2..24 qubits, >= 1 layer and graph");
      }
      if (ansatz_rule == AnsatzRule::barren_grid) {
        throw Error(ErrorKind::invalid_params, "barren-grid ansatz rule needs a synthetic objective");
      }
    }
  } catch (const Error& e) {
    throw Error(ErrorKind::config_error, e.what());
  }
  if (!(ansatz_min_distance >= 0.0)) {
    throw Error(ErrorKind::config_error, "ansatz min distance must be >= 0");
  }
}

double relative_error(double found, double fstar, double fworst, Sense) {
  if (fstar == fworst) throw Error(ErrorKind::degenerate_range, "fstar equals fworst");
  return std::abs(found - fstar) / std::abs(fworst - fstar);
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::invalid_params, "median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double advantage(std::span<const double> sa_errors, std::span<const double> fv_errors) {
  return median({sa_errors.begin(), sa_errors.end()}) - median({fv_errors.begin(), fv_errors.end()});
}

std::uint64_t function_seed(std::uint64_t master_seed, std::size_t function_id) {
  return derive_seed(master_seed, 1, function_id);
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t function_id,
                               std::size_t replication) {
  return derive_seed(master_seed, 2 + function_id, replication);
}

BenchFunction make_synthetic_function(std::size_t id, std::shared_ptr<const Landscape> landscape) {
  BenchFunction f;
  f.id = id;
  f.fstar = landscape->global_min_val();
  f.fworst = landscape->max_value();
  f.sense = Sense::minimize;
  f.objective = synthetic_objective(landscape);
  f.landscape = std::move(landscape);
  return f;
}

BenchFunction make_qaoa_function(std::size_t id, std::shared_ptr<const QaoaProblem> problem,
                                 const QaoaBenchConfig& cfg) {
  BenchFunction f;
  f.id = id;
  f.fstar = max_cut_oracle(problem->graph()).value;
  f.fworst = cfg.worst_value;
  f.sense = Sense::maximize;
  f.objective = std::make_shared<QaoaObjective>(problem, cfg.shots, cfg.fd_step_fraction);
  f.problem = std::move(problem);
  return f;
}

std::vector<Point> barren_ansatz_pool(const Landscape& l, double min_distance) {
  std::vector<Point> pool;
  const auto& g = l.grid();
  const auto m = l.global_min_pos();
  for (std::size_t i = 0; i < g.points_per_dim; ++i) {
    for (std::size_t j = 0; j < g.points_per_dim; ++j) {
      if (!l.is_barren(i, j)) continue;
      const auto p = g.point(i, j);
      if (std::hypot(p[0] - m[0], p[1] - m[1]) > min_distance) pool.push_back({p[0], p[1]});
    }
  }
  return pool;
}

std::vector<BenchFunction> build_bench(const ExperimentSpec& spec) {
  spec.validate();
  std::vector<BenchFunction> out;
  if (spec.kind == ObjectiveKind::synthetic) {
    for (std::size_t f = 0; f < spec.synthetic.functions; ++f) {
      const std::uint64_t seed = function_seed(spec.master_seed, f);
      std::shared_ptr<const Landscape> chosen;
      for (std::uint64_t redraw = 0; redraw < 64 && !chosen; ++redraw) {
        SynthesisParams params = spec.synthetic.synthesis;
        params.rng_seed = redraw == 0 ? seed : derive_seed(seed, 7, redraw);
        auto l = std::make_shared<const Landscape>(synthesize(spec.synthetic.grid, params));
        if (spec.ansatz_rule != AnsatzRule::barren_grid ||
            !barren_ansatz_pool(*l, spec.ansatz_min_distance).empty()) {
          chosen = std::move(l);
        }
      }
      if (!chosen) {
        throw Error(ErrorKind::ansatz_infeasible, "no landscape admitted a barren ansatz");
      }
      out.push_back(make_synthetic_function(f, std::move(chosen)));
    }
  } else {
    for (std::size_t f = 0; f < spec.qaoa.graphs; ++f) {
      Stream rng(function_seed(spec.master_seed, f));
      auto problem = std::make_shared<const QaoaProblem>(random_graph(spec.qaoa.qubits, rng),
                                                         spec.qaoa.layers);
      out.push_back(make_qaoa_function(f, std::move(problem), spec.qaoa));
    }
  }
  return out;
}

std::vector<Point> draw_ansatze(const ExperimentSpec& spec, const BenchFunction& f, Stream& rng) {
  const std::size_t n = spec.fv.particles;
  std::vector<Point> out;
  out.reserve(n);
  if (spec.ansatz_rule == AnsatzRule::barren_grid) {
    if (!f.landscape) {
      throw Error(ErrorKind::config_error, "barren-grid ansatz rule needs a landscape");
    }
    const auto pool = barren_ansatz_pool(*f.landscape, spec.ansatz_min_distance);
    if (pool.empty()) {
      throw Error(ErrorKind::ansatz_infeasible,
                  "no barren grid point lies beyond the minimum distance from the optimum");
    }
    for (std::size_t j = 0; j < n; ++j) out.push_back(pool[rng.below(pool.size())]);
  } else {
    const auto& box = f.objective->domain();
    for (std::size_t j = 0; j < n; ++j) {
      Point x(box.dim());
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(box.lo[i], box.hi[i]);
      out.push_back(std::move(x));
    }
  }
  return out;
}

namespace {

RunRecord to_record(const BenchFunction& f, Method method, std::size_t replication,
                    std::uint64_t seed, FvOutcome&& o) {
  RunRecord r;
  r.function_id = f.id;
  r.method = method;
  r.replication = replication;
  r.best_value = f.sense == Sense::maximize ? -o.best_value : o.best_value;
  r.relative_error = relative_error(r.best_value, f.fstar, f.fworst, f.sense);
  r.eval_count = o.eval_count;
  r.absorptions = o.absorptions;
  r.reinitializations = o.reinitializations;
  r.reactivations = o.reactivations;
  r.seed = seed;
  r.events = std::move(o.events);
  r.particle_best = std::move(o.particle_best);
  if (f.sense == Sense::maximize) {
    for (auto& v : r.particle_best) v = -v;
  }
  return r;
}

std::array<RunRecord, 2> run_replication(const ExperimentSpec& spec, const BenchFunction& f,
                                         std::size_t replication) {
  const std::uint64_t seed = replication_seed(spec.master_seed, f.id, replication);
  Stream ansatz_rng = Stream(seed).split(std::uint64_t{1} << 32);
  const auto ansatze = draw_ansatze(spec, f, ansatz_rng);

  FvConfig fv = spec.fv;
  fv.seed = seed;
  FvConfig sa = fv;
  sa.alpha = 0.0;

  return {to_record(f, Method::sa, replication, seed, fv_run(sa, *f.objective, ansatze, spec.sa)),
          to_record(f, Method::fv, replication, seed, fv_run(fv, *f.objective, ansatze, spec.sa))};
}

}  // namespace

std::vector<RunRecord> run_paired_experiment(const ExperimentSpec& spec, const BenchFunction& f) {
  spec.validate();
  std::vector<RunRecord> out;
  for (std::size_t r = 0; r < spec.replications; ++r) {
    for (auto& rec : run_replication(spec, f, r)) out.push_back(std::move(rec));
  }
  return out;
}

std::vector<RunRecord> run_bench(const ExperimentSpec& spec, std::span<const BenchFunction> functions) {
  spec.validate();
  const std::size_t reps = spec.replications;
  std::vector<std::array<RunRecord, 2>> slots(functions.size() * reps);
  parallel_for(slots.size(), spec.threads, [&](std::size_t i) {
    slots[i] = run_replication(spec, functions[i / reps], i % reps);
  });
  std::vector<RunRecord> out;
  out.reserve(2 * slots.size());
  for (auto& pair : slots) {
    for (auto& rec : pair) out.push_back(std::move(rec));
  }
  return out;
}

namespace {

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

MethodSummary describe(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return {v.front(), quantile(v, 0.25), median(v), quantile(v, 0.75), v.back()};
}

}  // namespace

std::vector<FunctionSummary> summarize(std::span<const RunRecord> records) {
  std::vector<std::size_t> ids;
  for (const auto& r : records) ids.push_back(r.function_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  std::vector<FunctionSummary> out;
  for (std::size_t id : ids) {
    std::vector<double> sa, fv;
    for (const auto& r : records) {
      if (r.function_id != id) continue;
      (r.method == Method::sa ? sa : fv).push_back(r.relative_error);
    }
    if (sa.empty() || fv.empty()) {
      throw Error(ErrorKind::invalid_params, "function lacks records for one of the methods");
    }
    out.push_back({id, describe(sa), describe(fv), advantage(sa, fv)});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.advantage > b.advantage;
  });
  return out;
}

AdvantageStats advantage_stats(std::span<const FunctionSummary> summary) {
  AdvantageStats s;
  s.functions = summary.size();
  for (const auto& f : summary) {
    s.mean += f.advantage;
    if (f.advantage > 0.0) ++s.positive;
  }
  if (!summary.empty()) s.mean /= static_cast<double>(summary.size());
  return s;
}

}  // namespace fvopt

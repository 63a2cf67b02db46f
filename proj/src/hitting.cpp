#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "fvopt/bench.hpp"
#include "fvopt/error.hpp"
#include "fvopt/parallel.hpp"

namespace fvopt {

namespace {

std::optional<std::size_t> first_hit(FvSwarm& swarm, double threshold, std::size_t cap) {
  for (std::size_t s = 1; s <= cap; ++s) {
    swarm.advance();
    if (swarm.best_value() <= threshold) return s;
  }
  return std::nullopt;
}

std::uint64_t cell_key(double fraction, std::size_t count) {
  return static_cast<std::uint64_t>(std::llround(fraction * 1e6)) * 1000 + count;
}

}  // namespace

HittingTrial hitting_trial(const HittingConfig& cfg, const Landscape& landscape,
                           std::uint64_t trial_seed) {
  const auto objective = synthetic_objective(std::shared_ptr<const Landscape>(&landscape, [](auto*) {}));
  const double fstar = landscape.global_min_val();
  const double threshold = fstar + cfg.tolerance * (landscape.max_value() - fstar);

  Stream ansatz_rng = Stream(trial_seed).split(std::uint64_t{1} << 32);
  const auto& box = objective->domain();
  std::vector<Point> ansatze;
  for (std::size_t j = 0; j < cfg.fv.particles; ++j) {
    ansatze.push_back({ansatz_rng.uniform(box.lo[0], box.hi[0]), ansatz_rng.uniform(box.lo[1], box.hi[1])});
  }

  FvConfig fv = cfg.fv;
  fv.seed = trial_seed;
  FvConfig sa = fv;
  sa.alpha = 0.0;

  HittingTrial out;
  {
    FvSwarm swarm(sa, *objective, ansatze, cfg.sa);
    out.sa = first_hit(swarm, threshold, cfg.step_cap);
  }
  {
    FvSwarm swarm(fv, *objective, ansatze, cfg.sa);
    out.fv = first_hit(swarm, threshold, cfg.step_cap);
  }
  return out;
}

HittingCell hitting_cell(const HittingConfig& cfg, double fraction, std::size_t count) {
  if (cfg.trials < 2) throw Error(ErrorKind::invalid_params, "hitting study needs >= 2 trials");
  std::vector<HittingTrial> trials(cfg.trials);
  const std::uint64_t key = cell_key(fraction, count);
  parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
    SynthesisParams params = cfg.synthesis;
    params.rng_seed = derive_seed(cfg.seed, key, 2 * t);
    const Landscape l = synthesize_separated(cfg.grid, params, fraction, count);
    trials[t] = hitting_trial(cfg, l, derive_seed(cfg.seed, key, 2 * t + 1));
  });

  HittingCell cell;
  cell.fraction = fraction;
  cell.count = count;
  cell.trials = cfg.trials;
  const auto cap = static_cast<double>(cfg.step_cap);
  std::vector<double> diffs;
  double sum_sa = 0.0, sum_fv = 0.0;
  for (const auto& t : trials) {
    if (!t.sa) ++cell.capped_sa;
    if (!t.fv) ++cell.capped_fv;
    // Capped runs count as hitting at the cap (right-censored).
    const double sa = t.sa ? static_cast<double>(*t.sa) : cap;
    const double fv = t.fv ? static_cast<double>(*t.fv) : cap;
    sum_sa += sa;
    sum_fv += fv;
    diffs.push_back(sa - fv);
  }
  const auto n = static_cast<double>(diffs.size());
  cell.mean_sa = sum_sa / n;
  cell.mean_fv = sum_fv / n;
  cell.undefined = cell.capped_sa == cfg.trials && cell.capped_fv == cfg.trials;
  if (cell.undefined) {
    cell.delta = std::numeric_limits<double>::quiet_NaN();
    cell.ci_half = std::numeric_limits<double>::quiet_NaN();
    return cell;
  }
  double mean = 0.0;
  for (double d : diffs) mean += d;
  mean /= n;
  double var = 0.0;
  for (double d : diffs) var += (d - mean) * (d - mean);
  var /= (n - 1.0);
  cell.delta = mean;
  cell.ci_half = 1.96 * std::sqrt(var / n);
  return cell;
}

HittingTable hitting_time_study(const HittingConfig& cfg) {
  HittingTable table;
  for (double f : cfg.fractions) table.fraction_sweep.push_back(hitting_cell(cfg, f, cfg.fixed_count));
  for (std::size_t b : cfg.counts) table.count_sweep.push_back(hitting_cell(cfg, cfg.fixed_fraction, b));

  // Least-squares slope of delta against the barren fraction.
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (const auto& c : table.fraction_sweep) {
    if (c.undefined) continue;
    sx += c.fraction;
    sy += c.delta;
    sxx += c.fraction * c.fraction;
    sxy += c.fraction * c.delta;
    n += 1;
  }
  const double denom = n * sxx - sx * sx;
  table.slope_vs_fraction = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;

  table.nondecreasing = true;
  const HittingCell* prev = nullptr;
  for (const auto& c : table.fraction_sweep) {
    if (c.fraction == 0.0) {
      table.zero_cell_covers_zero = !c.undefined && std::abs(c.delta) <= c.ci_half;
      continue;
    }
    if (c.undefined) {
      table.nondecreasing = false;
      continue;
    }
    if (prev && c.delta + c.ci_half < prev->delta - prev->ci_half) table.nondecreasing = false;
    prev = &c;
  }
  return table;
}

void write_hitting_csv(std::ostream& out, const HittingTable& table) {
  out << "sweep,barren_fraction,plateau_count,trials,mean_sa,mean_fv,delta,ci_half,capped_sa,"
         "capped_fv,undefined\n";
  char buf[256];
  auto row = [&](const char* sweep, const HittingCell& c) {
    std::snprintf(buf, sizeof buf, "%s,%.17g,%zu,%zu,%.17g,%.17g,%.17g,%.17g,%zu,%zu,%d\n", sweep,
                  c.fraction, c.count, c.trials, c.mean_sa, c.mean_fv, c.delta, c.ci_half,
                  c.capped_sa, c.capped_fv, c.undefined ? 1 : 0);
    out << buf;
  };
  for (const auto& c : table.fraction_sweep) row("fraction", c);
  for (const auto& c : table.count_sweep) row("count", c);
}

}  // namespace fvopt

#pragma once

// Paired SA-vs-FV experiments, metrics and export.
//
// The SA baseline is the FV controller with alpha forced to 0, started from the same ansatze
// with the same particle streams, so the two methods differ only in the kill-and-regenerate
// rule. Seeds: master -> function (derive_seed(master, 1, f)) -> replication
// (derive_seed(master, 2 + f, r)); particle j of a run uses Stream(replication_seed).split(j)
// and ansatze come from Stream(replication_seed).split(1 << 32).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fvopt/annealer.hpp"
#include "fvopt/fv.hpp"
#include "fvopt/landscape.hpp"
#include "fvopt/objective.hpp"
#include "fvopt/qaoa.hpp"

namespace fvopt {

enum class ObjectiveKind { synthetic, qaoa };
enum class AnsatzRule { barren_grid, uniform };
enum class Method { sa, fv };
enum class Sense { minimize, maximize };

const char* to_string(Method m) noexcept;

struct SyntheticBenchConfig {
  GridSpec grid;
  SynthesisParams synthesis;
  std::size_t functions = 10;

  friend bool operator==(const SyntheticBenchConfig&, const SyntheticBenchConfig&) = default;
};

struct QaoaBenchConfig {
  std::size_t qubits = 8;
  std::size_t layers = 1;
  std::size_t shots = 512;
  std::size_t graphs = 10;
  double fd_step_fraction = 0.01;
  /// Cut value used as the worst possible estimate of the maximum.
  double worst_value = 0.0;

  friend bool operator==(const QaoaBenchConfig&, const QaoaBenchConfig&) = default;
};

struct ExperimentSpec {
  ObjectiveKind kind = ObjectiveKind::synthetic;
  SyntheticBenchConfig synthetic;
  QaoaBenchConfig qaoa;
  FvConfig fv;
  SaParams sa;
  std::size_t replications = 10;
  AnsatzRule ansatz_rule = AnsatzRule::barren_grid;
  double ansatz_min_distance = 0.6;
  std::uint64_t master_seed = 0;
  /// Worker threads; 0 uses the hardware concurrency.
  std::size_t threads = 0;

  void validate() const;

  friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

/// One objective of a bench with the normalizers for its relative error.
struct BenchFunction {
  std::size_t id = 0;
  std::shared_ptr<const Objective> objective;
  std::shared_ptr<const Landscape> landscape;  // synthetic only
  std::shared_ptr<const QaoaProblem> problem;  // qaoa only
  double fstar = 0.0;
  double fworst = 0.0;
  Sense sense = Sense::minimize;
};

struct RunRecord {
  std::size_t function_id = 0;
  Method method = Method::sa;
  std::size_t replication = 0;
  double best_value = 0.0;
  double relative_error = 0.0;
  std::uint64_t eval_count = 0;
  std::size_t absorptions = 0;
  std::size_t reinitializations = 0;
  std::size_t reactivations = 0;
  std::uint64_t seed = 0;
  std::vector<FvEvent> events;
  std::vector<double> particle_best;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// |found - fstar| / |fworst - fstar|. Throws DegenerateRange when fstar == fworst.
double relative_error(double found, double fstar, double fworst, Sense sense);

/// Median; even lengths average the two central order statistics.
double median(std::vector<double> values);

/// median(sa_errors) - median(fv_errors).
double advantage(std::span<const double> sa_errors, std::span<const double> fv_errors);

std::uint64_t function_seed(std::uint64_t master_seed, std::size_t function_id);
std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t function_id,
                               std::size_t replication);

BenchFunction make_synthetic_function(std::size_t id, std::shared_ptr<const Landscape> landscape);
BenchFunction make_qaoa_function(std::size_t id, std::shared_ptr<const QaoaProblem> problem,
                                 const QaoaBenchConfig& cfg);

/// Builds spec.synthetic.functions landscapes (or spec.qaoa.graphs graphs) from the master
/// seed. Synthetic landscapes whose ansatz rule admits no grid point are redrawn from the next
/// derived seed.
std::vector<BenchFunction> build_bench(const ExperimentSpec& spec);

/// Grid points eligible as ansatze: barren and farther than min_distance from the minimum.
std::vector<Point> barren_ansatz_pool(const Landscape& landscape, double min_distance);

/// N ansatze drawn with replacement per the spec's rule. Throws AnsatzInfeasible.
std::vector<Point> draw_ansatze(const ExperimentSpec& spec, const BenchFunction& f, Stream& rng);

/// SA and FV records for every replication of one function (SA first within a replication).
std::vector<RunRecord> run_paired_experiment(const ExperimentSpec& spec, const BenchFunction& f);

/// All functions, replications spread across worker threads; output order is
/// (function, replication, method) regardless of scheduling.
std::vector<RunRecord> run_bench(const ExperimentSpec& spec, std::span<const BenchFunction> functions);

struct MethodSummary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

struct FunctionSummary {
  std::size_t function_id = 0;
  MethodSummary sa;
  MethodSummary fv;
  double advantage = 0.0;
};

/// Per-function quartiles and advantage, sorted by decreasing advantage (ties by id).
std::vector<FunctionSummary> summarize(std::span<const RunRecord> records);

/// Mean advantage and count of functions with positive advantage.
struct AdvantageStats {
  double mean = 0.0;
  std::size_t positive = 0;
  std::size_t functions = 0;
};
AdvantageStats advantage_stats(std::span<const FunctionSummary> summary);

inline constexpr const char* kCsvHeader =
    "function_id,method,replication,best_value,relative_error,eval_count,absorptions,"
    "reinitializations,reactivations,seed";

void write_csv(std::ostream& out, std::span<const RunRecord> records);
/// Reads the CSV columns back (events and per-particle values are not part of the CSV).
std::vector<RunRecord> parse_csv(std::istream& in);
void write_summary_json(std::ostream& out, std::span<const FunctionSummary> summary);

/// Writes records.csv, summary.json and events.csv into `dir` (created if missing).
void export_records(const std::string& dir, std::span<const RunRecord> records);

// ---------------------------------------------------------------------------------------
// Hitting-time study

struct HittingConfig {
  GridSpec grid{{0.0, 0.0}, {1.0, 1.0}, 40};
  SynthesisParams synthesis;  // width and fraction are overridden per cell
  std::vector<double> fractions{0.0, 0.2, 0.4, 0.6};
  std::size_t fixed_count = 1;
  std::vector<std::size_t> counts{1, 2, 4};
  double fixed_fraction = 0.3;
  std::size_t trials = 50;
  FvConfig fv;  // iterations unused; particles, burn-in, window, alpha, epsilon used
  SaParams sa;
  double tolerance = 0.05;   // band as a fraction of (fworst - fstar)
  std::size_t step_cap = 5000;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
};

struct HittingCell {
  double fraction = 0.0;
  std::size_t count = 0;
  std::size_t trials = 0;
  double mean_sa = 0.0;
  double mean_fv = 0.0;
  double delta = 0.0;    // mean of (SA hit - FV hit)
  double ci_half = 0.0;  // 95% normal half-width
  std::size_t capped_sa = 0;
  std::size_t capped_fv = 0;
  bool undefined = false;  // every trial capped in both methods
};

struct HittingTable {
  std::vector<HittingCell> fraction_sweep;  // fixed count
  std::vector<HittingCell> count_sweep;     // fixed fraction
  double slope_vs_fraction = 0.0;           // least squares over the fraction sweep
  bool nondecreasing = false;               // over fractions > 0, within CIs
  bool zero_cell_covers_zero = false;
};

/// Sweeps at which any particle's best value first lies within the tolerance band; nullopt
/// when the cap is reached first.
struct HittingTrial {
  std::optional<std::size_t> sa;
  std::optional<std::size_t> fv;
};
HittingTrial hitting_trial(const HittingConfig& cfg, const Landscape& landscape,
                           std::uint64_t trial_seed);

HittingCell hitting_cell(const HittingConfig& cfg, double fraction, std::size_t count);
HittingTable hitting_time_study(const HittingConfig& cfg);

void write_hitting_csv(std::ostream& out, const HittingTable& table);

}  // namespace fvopt

#pragma once

// Fleming-Viot style controller over a population of annealing particles.
//
// After B burn-in sweeps fix ref_gradient = alpha * (mean gradient norm over all burn-in
// steps), every sweep steps each particle once and then kills those whose windowed mean
// gradient norm fell below ref_gradient. A killed particle is reinitialized uniformly in the
// domain with probability epsilon, otherwise it is placed on a surviving particle
// (reactivation), copying that particle's gradient window and initial learning rate.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "fvopt/annealer.hpp"
#include "fvopt/objective.hpp"

namespace fvopt {

/// What a reactivated particle inherits as its learning-rate restart value.
enum class ReactivationRate {
  source_initial,  // the source's eta0
  source_current,  // the source's current eta_k
};

struct FvConfig {
  std::size_t iterations = 50;  // T
  std::size_t particles = 10;   // N
  std::size_t burn_in = 5;      // B
  std::size_t window = 5;       // W
  double alpha = 1.0;
  double exploration_rate = 0.5;
  std::uint64_t seed = 0;
  ReactivationRate reactivation_rate = ReactivationRate::source_initial;

  void validate() const;

  friend bool operator==(const FvConfig&, const FvConfig&) = default;
};

enum class EventKind {
  absorbed,
  reinitialized,
  reactivated,
  /// Drew reactivation but no particle survived the sweep; reinitialized instead.
  fallback_reinitialized,
};

const char* to_string(EventKind kind) noexcept;

struct FvEvent {
  std::size_t iteration = 0;
  std::size_t particle = 0;
  EventKind kind = EventKind::absorbed;
  std::optional<std::size_t> source;
  double ref_gradient = 0.0;
  double window_mean = 0.0;

  friend bool operator==(const FvEvent&, const FvEvent&) = default;
};

/// Outcome of one controller run.
struct FvOutcome {
  double best_value = 0.0;
  Point best_position;
  std::vector<double> particle_best;
  std::vector<FvEvent> events;
  double ref_gradient = 0.0;
  std::uint64_t eval_count = 0;         // optimizer steps only
  std::uint64_t calibration_evals = 0;  // eta0 probes
  std::uint64_t steps = 0;
  std::size_t absorptions = 0;
  std::size_t reinitializations = 0;
  std::size_t reactivations = 0;

  friend bool operator==(const FvOutcome&, const FvOutcome&) = default;
};

/// Reinitialize uniformly in the domain: clears history, resets the local clock and
/// recalibrates eta0 at the new position. Randomness comes from p.rng.
void reinitialize(Particle& p, const Objective& obj, const SaParams& sa);

/// Moves p onto a source drawn uniformly from `alive` using p.rng, copies its gradient window
/// and learning rate, resets the local clock. Returns the index into `alive` that was chosen.
/// Throws NoAliveSource when `alive` is empty.
std::size_t reactivate(Particle& p, std::span<const Particle* const> alive, const SaParams& sa,
                       ReactivationRate rate = ReactivationRate::source_initial);

/// Population state. Particle streams derive from cfg.seed only, so two swarms with the same
/// seed and ansatze draw identical noise.
class FvSwarm {
 public:
  FvSwarm(const FvConfig& cfg, const Objective& obj, std::span<const Point> ansatze,
          const SaParams& sa);

  /// Runs all B burn-in sweeps and sets ref_gradient.
  void burn_in();
  /// One sweep: burn-in sweep while burn-in is incomplete, otherwise step + absorption check.
  void advance();
  /// One post-burn-in iteration: step every particle, then absorb and regenerate.
  void iterate();
  /// Absorption/regeneration sweep against a consistent pre-sweep snapshot.
  void check_absorption_and_regenerate();

  bool burn_in_done() const { return ref_gradient_.has_value(); }
  std::optional<double> ref_gradient() const { return ref_gradient_; }
  std::size_t iteration() const { return iteration_; }
  std::size_t sweeps() const { return sweeps_; }
  const std::vector<Particle>& particles() const { return particles_; }
  const std::vector<FvEvent>& events() const { return events_; }
  double best_value() const;

  FvOutcome outcome() const;

 private:
  void step_all(std::vector<double>* norms);

  FvConfig cfg_;
  const Objective& obj_;
  SaParams sa_;
  std::vector<Particle> particles_;
  std::optional<double> ref_gradient_;
  std::size_t iteration_ = 0;
  std::size_t sweeps_ = 0;
  double burn_in_sum_ = 0.0;
  std::size_t burn_in_count_ = 0;
  std::vector<FvEvent> events_;
};

/// Burn-in followed by cfg.iterations controller iterations.
FvOutcome fv_run(const FvConfig& cfg, const Objective& obj, std::span<const Point> ansatze,
                 const SaParams& sa);

/// Header `iter,particle,event,source,ref_gradient,window_mean`, one line per event.
void write_event_log(std::ostream& out, std::span<const FvEvent> events);

}  // namespace fvopt

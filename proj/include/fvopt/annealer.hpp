#pragma once

// Simulated-annealing particle dynamics:
//   x <- clip(x - eta_k g + sqrt(eta_k) * temperature * n),   n ~ N(0, I)
// with eta_k = eta0 / (1 + k)^p and g a (possibly noisy) gradient estimate.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "fvopt/objective.hpp"
#include "fvopt/rng.hpp"

namespace fvopt {

struct SaParams {
  double temperature = 0.1;
  double lr_decay_power = 1.0;
  double lr_target_step_fraction = 0.05;
  double grad_floor = 1e-8;
  /// Probe ball radius for eta0 calibration, as a fraction of the domain diagonal.
  double probe_radius_fraction = 0.01;
  std::size_t probe_count = 5;

  void validate() const;

  friend bool operator==(const SaParams&, const SaParams&) = default;
};

double learning_rate(double eta0, std::size_t step_index, double decay_power);

/// Fixed-capacity FIFO of the most recent gradient norms.
class GradientWindow {
 public:
  explicit GradientWindow(std::size_t capacity = 1);

  void push(double norm);
  void clear() { values_.clear(); head_ = 0; }
  /// Replace contents with the last `capacity()` entries of `other`, oldest first.
  void assign_from(const GradientWindow& other);

  std::size_t size() const { return values_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return values_.empty(); }
  /// Oldest first.
  std::vector<double> entries() const;
  /// +infinity when empty.
  double mean() const;

  friend bool operator==(const GradientWindow& a, const GradientWindow& b) {
    return a.capacity_ == b.capacity_ && a.entries() == b.entries();
  }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // index of the oldest entry once full
  std::vector<double> values_;
};

enum class ParticleStatus { alive, absorbed };

struct BestSeen {
  Point position;
  double value = std::numeric_limits<double>::infinity();

  friend bool operator==(const BestSeen&, const BestSeen&) = default;
};

struct Particle {
  Point position;
  std::size_t step_index = 0;
  double eta0 = 0.0;
  GradientWindow history;
  BestSeen best;
  ParticleStatus status = ParticleStatus::alive;
  Stream rng;

  /// Evaluations charged by optimizer steps (gradient plus the best-value evaluation).
  std::uint64_t step_evals = 0;
  /// Evaluations charged by eta0 calibration probes.
  std::uint64_t calibration_evals = 0;
  std::uint64_t steps_taken = 0;

  double current_learning_rate(const SaParams& sa) const {
    return learning_rate(eta0, step_index, sa.lr_decay_power);
  }

  friend bool operator==(const Particle&, const Particle&) = default;
};

/// eta0 = target_fraction * diagonal / (median probe gradient norm + grad_floor), probes drawn
/// uniformly in a ball of radius probe_radius_fraction * diagonal around x0 (then clipped).
/// Adds the probe cost to `evals` when given.
double calibrate_eta0(const Objective& obj, std::span<const double> x0, const SaParams& params,
                      Stream& rng, std::uint64_t* evals = nullptr);

/// New particle at `ansatz` with a calibrated eta0.
Particle make_particle(const Objective& obj, std::span<const double> ansatz, const SaParams& params,
                       std::size_t window, Stream rng);

/// One annealing step; returns the L2 norm of the gradient estimate it used.
double sa_step(Particle& p, const Objective& obj, const SaParams& params);

/// Mean of the recorded gradient norms; +infinity with no history.
double windowed_grad_norm(const Particle& p);

}  // namespace fvopt

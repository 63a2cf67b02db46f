#include "fvopt/fv.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <ostream>

#include "fvopt/error.hpp"

namespace fvopt {

void FvConfig::validate() const {
  if (particles < 2) throw Error(ErrorKind::invalid_params, "FV needs at least 2 particles");
  if (burn_in < 1 || window < 1) {
    throw Error(ErrorKind::invalid_params, "burn-in and window must be >= 1");
  }
  if (!(alpha >= 0.0)) throw Error(ErrorKind::invalid_params, "alpha must be >= 0");
  if (!(exploration_rate >= 0.0 && exploration_rate <= 1.0)) {
    throw Error(ErrorKind::invalid_params, "exploration rate must lie in [0, 1]");
  }
}

const char* to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::absorbed: return "absorbed";
    case EventKind::reinitialized: return "reinitialized";
    case EventKind::reactivated: return "reactivated";
    case EventKind::fallback_reinitialized: return "fallback_reinitialized";
  }
  return "unknown";
}

void reinitialize(Particle& p, const Objective& obj, const SaParams& sa) {
  const auto& box = obj.domain();
  for (std::size_t i = 0; i < p.position.size(); ++i) {
    p.position[i] = p.rng.uniform(box.lo[i], box.hi[i]);
  }
  p.history.clear();
  p.step_index = 0;
  p.eta0 = calibrate_eta0(obj, p.position, sa, p.rng, &p.calibration_evals);
  p.status = ParticleStatus::alive;
}

std::size_t reactivate(Particle& p, std::span<const Particle* const> alive, const SaParams& sa,
                       ReactivationRate rate) {
  if (alive.empty()) throw Error(ErrorKind::no_alive_source, "no surviving particle to copy");
  const std::size_t pick = p.rng.below(alive.size());
  const Particle& src = *alive[pick];
  p.position = src.position;
  p.history.assign_from(src.history);
  p.eta0 = rate == ReactivationRate::source_initial ? src.eta0 : src.current_learning_rate(sa);
  p.step_index = 0;
  p.status = ParticleStatus::alive;
  return pick;
}

FvSwarm::FvSwarm(const FvConfig& cfg, const Objective& obj, std::span<const Point> ansatze,
                 const SaParams& sa)
    : cfg_(cfg), obj_(obj), sa_(sa) {
  cfg_.validate();
  sa_.validate();
  if (ansatze.size() != cfg_.particles) {
    throw Error(ErrorKind::invalid_params, "need exactly one ansatz per particle");
  }
  const Stream root(cfg_.seed);
  particles_.reserve(cfg_.particles);
  for (std::size_t j = 0; j < cfg_.particles; ++j) {
    particles_.push_back(make_particle(obj_, ansatze[j], sa_, cfg_.window, root.split(j)));
  }
}

void FvSwarm::step_all(std::vector<double>* norms) {
  for (auto& p : particles_) {
    const double n = sa_step(p, obj_, sa_);
    if (norms) norms->push_back(n);
  }
  ++sweeps_;
}

void FvSwarm::burn_in() {
  while (!burn_in_done()) advance();
}

void FvSwarm::advance() {
  if (burn_in_done()) {
    iterate();
    return;
  }
  std::vector<double> norms;
  step_all(&norms);
  for (double n : norms) burn_in_sum_ += n;
  burn_in_count_ += norms.size();
  if (sweeps_ == cfg_.burn_in) {
    ref_gradient_ = cfg_.alpha * (burn_in_sum_ / static_cast<double>(burn_in_count_));
  }
}

void FvSwarm::iterate() {
  if (!burn_in_done()) throw Error(ErrorKind::invalid_params, "iterate() called before burn-in");
  ++iteration_;
  step_all(nullptr);
  check_absorption_and_regenerate();
}

void FvSwarm::check_absorption_and_regenerate() {
  const double ref = *ref_gradient_;
  std::vector<double> window_mean(particles_.size());
  for (std::size_t j = 0; j < particles_.size(); ++j) {
    window_mean[j] = windowed_grad_norm(particles_[j]);
    particles_[j].status = window_mean[j] < ref ? ParticleStatus::absorbed : ParticleStatus::alive;
  }
  // Survivors are never modified during the sweep, so they form a consistent snapshot.
  std::vector<std::size_t> alive_index;
  std::vector<const Particle*> alive;
  for (std::size_t j = 0; j < particles_.size(); ++j) {
    if (particles_[j].status == ParticleStatus::alive) {
      alive_index.push_back(j);
      alive.push_back(&particles_[j]);
    }
  }

  for (std::size_t j = 0; j < particles_.size(); ++j) {
    Particle& p = particles_[j];
    if (p.status != ParticleStatus::absorbed) continue;
    events_.push_back({iteration_, j, EventKind::absorbed, std::nullopt, ref, window_mean[j]});
    const double rnd = p.rng.uniform();
    if (rnd < cfg_.exploration_rate) {
      reinitialize(p, obj_, sa_);
      events_.push_back({iteration_, j, EventKind::reinitialized, std::nullopt, ref, window_mean[j]});
    } else if (alive.empty()) {
      reinitialize(p, obj_, sa_);
      events_.push_back(
          {iteration_, j, EventKind::fallback_reinitialized, std::nullopt, ref, window_mean[j]});
    } else {
      const std::size_t pick = reactivate(p, alive, sa_, cfg_.reactivation_rate);
      events_.push_back({iteration_, j, EventKind::reactivated, alive_index[pick], ref, window_mean[j]});
    }
  }
}

double FvSwarm::best_value() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : particles_) best = std::min(best, p.best.value);
  return best;
}

FvOutcome FvSwarm::outcome() const {
  FvOutcome out;
  out.best_value = std::numeric_limits<double>::infinity();
  for (const auto& p : particles_) {
    out.particle_best.push_back(p.best.value);
    if (p.best.value < out.best_value) {
      out.best_value = p.best.value;
      out.best_position = p.best.position;
    }
    out.eval_count += p.step_evals;
    out.calibration_evals += p.calibration_evals;
    out.steps += p.steps_taken;
  }
  out.events = events_;
  out.ref_gradient = ref_gradient_.value_or(0.0);
  for (const auto& e : events_) {
    switch (e.kind) {
      case EventKind::absorbed: ++out.absorptions; break;
      case EventKind::reinitialized:
      case EventKind::fallback_reinitialized: ++out.reinitializations; break;
      case EventKind::reactivated: ++out.reactivations; break;
    }
  }
  return out;
}

FvOutcome fv_run(const FvConfig& cfg, const Objective& obj, std::span<const Point> ansatze,
                 const SaParams& sa) {
  FvSwarm swarm(cfg, obj, ansatze, sa);
  swarm.burn_in();
  for (std::size_t t = 0; t < cfg.iterations; ++t) swarm.iterate();
  return swarm.outcome();
}

void write_event_log(std::ostream& out, std::span<const FvEvent> events) {
  out << "iter,particle,event,source,ref_gradient,window_mean\n";
  char buf[64];
  for (const auto& e : events) {
    out << e.iteration << ',' << e.particle << ',' << to_string(e.kind) << ',';
    if (e.source) out << *e.source;
    std::snprintf(buf, sizeof buf, ",%.17g", e.ref_gradient);
    out << buf;
    std::snprintf(buf, sizeof buf, ",%.17g\n", e.window_mean);
    out << buf;
  }
}

}  // namespace fvopt

#include "fvopt/annealer.hpp"

#include <algorithm>
#include <cmath>

#include "fvopt/error.hpp"

namespace fvopt {

void SaParams::validate() const {
  if (!(temperature >= 0.0)) throw Error(ErrorKind::invalid_params, "temperature must be >= 0");
  if (!(lr_decay_power > 0.5)) throw Error(ErrorKind::invalid_params, "lr_decay_power must be > 0.5");
  if (!(lr_target_step_fraction > 0.0) || !(grad_floor > 0.0) || !(probe_radius_fraction > 0.0)) {
    throw Error(ErrorKind::invalid_params, "step fraction, grad_floor and probe radius must be > 0");
  }
  if (probe_count < 1) throw Error(ErrorKind::invalid_params, "probe_count must be >= 1");
}

double learning_rate(double eta0, std::size_t step_index, double decay_power) {
  return eta0 / std::pow(1.0 + static_cast<double>(step_index), decay_power);
}

GradientWindow::GradientWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ < 1) throw Error(ErrorKind::invalid_params, "window size must be >= 1");
  values_.reserve(capacity_);
}

void GradientWindow::push(double norm) {
  if (values_.size() < capacity_) {
    values_.push_back(norm);
    return;
  }
  values_[head_] = norm;
  head_ = (head_ + 1) % capacity_;
}

std::vector<double> GradientWindow::entries() const {
  std::vector<double> out;
  out.reserve(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) out.push_back(values_[(head_ + i) % values_.size()]);
  return out;
}

void GradientWindow::assign_from(const GradientWindow& other) {
  clear();
  for (double v : other.entries()) push(v);
}

double GradientWindow::mean() const {
  if (values_.empty()) return std::numeric_limits<double>::infinity();
  double s = 0.0;
  for (double v : entries()) s += v;
  return s / static_cast<double>(values_.size());
}

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

double calibrate_eta0(const Objective& obj, std::span<const double> x0, const SaParams& params,
                      Stream& rng, std::uint64_t* evals) {
  const auto& box = obj.domain();
  const std::size_t d = obj.dim();
  const double diagonal = box.diagonal();
  const double radius = params.probe_radius_fraction * diagonal;

  std::vector<double> norms;
  norms.reserve(params.probe_count);
  Point dir(d);
  for (std::size_t k = 0; k < params.probe_count; ++k) {
    for (auto& c : dir) c = rng.gaussian();
    const double len = norm2(dir);
    const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    Point probe(x0.begin(), x0.end());
    if (len > 0.0) {
      for (std::size_t i = 0; i < d; ++i) probe[i] += r * dir[i] / len;
    }
    probe = clip(probe, box);
    norms.push_back(norm2(obj.estimate_gradient(probe, rng)));
    if (evals) *evals += obj.gradient_cost();
  }
  std::sort(norms.begin(), norms.end());
  const std::size_t m = norms.size();
  const double median = m % 2 ? norms[m / 2] : 0.5 * (norms[m / 2 - 1] + norms[m / 2]);
  return params.lr_target_step_fraction * diagonal / (median + params.grad_floor);
}

Particle make_particle(const Objective& obj, std::span<const double> ansatz, const SaParams& params,
                       std::size_t window, Stream rng) {
  if (!obj.domain().contains(ansatz)) {
    throw Error(ErrorKind::out_of_domain, "ansatz outside the domain");
  }
  Particle p;
  p.position.assign(ansatz.begin(), ansatz.end());
  p.history = GradientWindow(window);
  p.rng = rng;
  p.eta0 = calibrate_eta0(obj, p.position, params, p.rng, &p.calibration_evals);
  p.best.position = p.position;
  return p;
}

double sa_step(Particle& p, const Objective& obj, const SaParams& params) {
  const Point g = obj.estimate_gradient(p.position, p.rng);
  const double eta = p.current_learning_rate(params);
  const double noise_scale = std::sqrt(eta) * params.temperature;
  Point next(p.position.size());
  for (std::size_t i = 0; i < next.size(); ++i) {
    next[i] = p.position[i] - eta * g[i] + noise_scale * p.rng.gaussian();
  }
  p.position = clip(next, obj.domain());
  ++p.step_index;
  ++p.steps_taken;

  const double gnorm = norm2(g);
  p.history.push(gnorm);

  const double value = obj.evaluate(p.position, p.rng);
  p.step_evals += obj.gradient_cost() + 1;
  if (value < p.best.value) {
    p.best.value = value;
    p.best.position = p.position;
  }
  return gnorm;
}

double windowed_grad_norm(const Particle& p) { return p.history.mean(); }

}  // namespace fvopt

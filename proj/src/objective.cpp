#include "fvopt/objective.hpp"

#include <algorithm>
#include <cmath>

#include "fvopt/error.hpp"
#include "fvopt/landscape.hpp"
#include "fvopt/qaoa.hpp"

namespace fvopt {

void DomainBox::validate() const {
  if (lo.empty() || lo.size() != hi.size()) {
    throw Error(ErrorKind::invalid_params, "domain box needs matching nonempty bounds");
  }
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(lo[i] < hi[i])) throw Error(ErrorKind::invalid_params, "domain box lo must be < hi");
  }
}

bool DomainBox::contains(std::span<const double> x) const {
  if (x.size() != lo.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
  }
  return true;
}

double DomainBox::diagonal() const {
  double s = 0.0;
  for (std::size_t i = 0; i < lo.size(); ++i) s += (hi[i] - lo[i]) * (hi[i] - lo[i]);
  return std::sqrt(s);
}

Point clip(std::span<const double> x, const DomainBox& box) {
  Point out(x.begin(), x.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(std::max(out[i], box.lo[i]), box.hi[i]);
  return out;
}

Objective::Objective(DomainBox domain) : domain_(std::move(domain)) { domain_.validate(); }

void Objective::check(std::span<const double> x) const {
  if (!domain_.contains(x)) throw Error(ErrorKind::out_of_domain, "objective queried outside its domain");
}

double Objective::evaluate(std::span<const double> x, Stream& rng) const {
  check(x);
  charge(1);
  return do_evaluate(x, rng);
}

Point Objective::estimate_gradient(std::span<const double> x, Stream& rng) const {
  check(x);
  charge(gradient_cost());
  return do_gradient(x, rng);
}

// ---------------------------------------------------------------------------------------

namespace {

DomainBox box_of(const Landscape& l) {
  const auto& g = l.grid();
  return {{g.domain_lo[0], g.domain_lo[1]}, {g.domain_hi[0], g.domain_hi[1]}};
}

}  // namespace

SyntheticObjective::SyntheticObjective(std::shared_ptr<const Landscape> landscape)
    : Objective(box_of(*landscape)), landscape_(std::move(landscape)) {}

double SyntheticObjective::do_evaluate(std::span<const double> x, Stream&) const {
  return landscape_->eval({x[0], x[1]});
}

Point SyntheticObjective::do_gradient(std::span<const double> x, Stream&) const {
  const auto g = landscape_->grad({x[0], x[1]});
  return {g[0], g[1]};
}

// ---------------------------------------------------------------------------------------

QaoaObjective::QaoaObjective(std::shared_ptr<const QaoaProblem> problem, std::size_t shots,
                             double step_fraction)
    : Objective(problem->domain()),
      problem_(std::move(problem)),
      shots_(shots),
      step_fraction_(step_fraction) {
  if (!(step_fraction_ > 0.0 && step_fraction_ < 0.5)) {
    throw Error(ErrorKind::invalid_params, "finite-difference step fraction must be in (0, 0.5)");
  }
}

double QaoaObjective::measure(std::span<const double> x, Stream& rng) const {
  const std::size_t l = problem_->layers();
  const auto beta = x.subspan(0, l);
  const auto gamma = x.subspan(l, l);
  const double c = shots_ == 0 ? expectation_exact(*problem_, beta, gamma)
                               : expectation_shots(*problem_, beta, gamma, shots_, rng);
  return -c;
}

double QaoaObjective::do_evaluate(std::span<const double> x, Stream& rng) const {
  return measure(x, rng);
}

Point QaoaObjective::do_gradient(std::span<const double> x, Stream& rng) const {
  const auto& box = domain();
  Point g(x.size(), 0.0);
  Point probe(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double h = step_fraction_ * (box.hi[i] - box.lo[i]);
    const double up = std::min(x[i] + h, box.hi[i]);
    const double down = std::max(x[i] - h, box.lo[i]);
    probe[i] = up;
    const double f_up = measure(probe, rng);
    probe[i] = down;
    const double f_down = measure(probe, rng);
    probe[i] = x[i];
    g[i] = (f_up - f_down) / (up - down);
  }
  return g;
}

std::unique_ptr<SyntheticObjective> synthetic_objective(std::shared_ptr<const Landscape> landscape) {
  return std::make_unique<SyntheticObjective>(std::move(landscape));
}

std::unique_ptr<QaoaObjective> qaoa_objective(std::shared_ptr<const QaoaProblem> problem,
                                              std::size_t shots) {
  return std::make_unique<QaoaObjective>(std::move(problem), shots);
}

}  // namespace fvopt

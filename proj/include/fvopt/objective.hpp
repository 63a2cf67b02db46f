#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "fvopt/rng.hpp"

namespace fvopt {

using Point = std::vector<double>;

class Landscape;
class QaoaProblem;

struct DomainBox {
  Point lo;
  Point hi;

  void validate() const;
  std::size_t dim() const { return lo.size(); }
  bool contains(std::span<const double> x) const;
  double diagonal() const;

  friend bool operator==(const DomainBox&, const DomainBox&) = default;
};

/// Componentwise clamp into the box.
Point clip(std::span<const double> x, const DomainBox& box);

/// Bounded-domain objective seen by the optimizer. Lower is better.
///
/// Evaluation accounting: evaluate() adds 1 to eval_count(); estimate_gradient() adds
/// gradient_cost(). Both reject points outside domain() with OutOfDomain.
class Objective {
 public:
  explicit Objective(DomainBox domain);
  virtual ~Objective() = default;

  Objective(const Objective&) = delete;
  Objective& operator=(const Objective&) = delete;

  std::size_t dim() const { return domain_.dim(); }
  const DomainBox& domain() const { return domain_; }

  double evaluate(std::span<const double> x, Stream& rng) const;
  Point estimate_gradient(std::span<const double> x, Stream& rng) const;

  /// Evaluations charged per gradient estimate.
  virtual std::uint64_t gradient_cost() const = 0;

  std::uint64_t eval_count() const { return evals_.load(std::memory_order_relaxed); }

 protected:
  virtual double do_evaluate(std::span<const double> x, Stream& rng) const = 0;
  virtual Point do_gradient(std::span<const double> x, Stream& rng) const = 0;

  void charge(std::uint64_t n) const { evals_.fetch_add(n, std::memory_order_relaxed); }

 private:
  void check(std::span<const double> x) const;

  DomainBox domain_;
  mutable std::atomic<std::uint64_t> evals_{0};
};

/// Spline landscape; exact analytic gradient that costs no extra evaluation.
class SyntheticObjective final : public Objective {
 public:
  explicit SyntheticObjective(std::shared_ptr<const Landscape> landscape);

  std::uint64_t gradient_cost() const override { return 0; }
  const Landscape& landscape() const { return *landscape_; }

 private:
  double do_evaluate(std::span<const double> x, Stream& rng) const override;
  Point do_gradient(std::span<const double> x, Stream& rng) const override;

  std::shared_ptr<const Landscape> landscape_;
};

/// Negated Max-Cut expectation of a QAOA circuit, x = (beta_1..beta_L, gamma_1..gamma_L).
///
/// shots == 0 selects the exact expectation. Gradients are central differences with step
/// step_fraction * (hi - lo) per coordinate; every stencil point is measured with fresh
/// shots. Near the box edge the stencil is clipped and the divisor uses the clipped span.
class QaoaObjective final : public Objective {
 public:
  QaoaObjective(std::shared_ptr<const QaoaProblem> problem, std::size_t shots,
                double step_fraction = 0.01);

  std::uint64_t gradient_cost() const override { return 2 * dim(); }
  std::size_t shots() const { return shots_; }
  const QaoaProblem& problem() const { return *problem_; }

 private:
  double do_evaluate(std::span<const double> x, Stream& rng) const override;
  Point do_gradient(std::span<const double> x, Stream& rng) const override;
  double measure(std::span<const double> x, Stream& rng) const;

  std::shared_ptr<const QaoaProblem> problem_;
  std::size_t shots_;
  double step_fraction_;
};

std::unique_ptr<SyntheticObjective> synthetic_objective(std::shared_ptr<const Landscape> landscape);
std::unique_ptr<QaoaObjective> qaoa_objective(std::shared_ptr<const QaoaProblem> problem,
                                              std::size_t shots);

}  // namespace fvopt

#pragma once

// Statevector QAOA for weighted Max-Cut.
//
// Basis index z encodes qubit q as bit q (little endian). The cost is the cut weight
// C(z) = sum_{i<j} w_ij [z_i != z_j], so the uniform superposition has <C> = sum(w) / 2.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fvopt/objective.hpp"
#include "fvopt/rng.hpp"

namespace fvopt {

struct WeightedGraph {
  std::size_t n = 0;
  std::vector<double> weights;  // n x n, symmetric, zero diagonal

  double weight(std::size_t i, std::size_t j) const { return weights[i * n + j]; }
  double total_weight() const;
  void validate() const;

  friend bool operator==(const WeightedGraph&, const WeightedGraph&) = default;
};

/// Complete graph with every weight drawn Uniform[0, 1].
WeightedGraph random_graph(std::size_t n, Stream& rng);

double cut_value(const WeightedGraph& g, std::uint64_t z);

struct MaxCut {
  double value = 0.0;
  std::uint64_t assignment = 0;
  std::size_t n = 0;

  /// Bitstring with qubit n-1 first.
  std::string bits() const;
};

inline constexpr std::size_t kMaxOracleNodes = 24;

/// Exhaustive search; ties go to the lowest assignment. Throws TooLarge for n > 24.
MaxCut max_cut_oracle(const WeightedGraph& g);

using StateVector = std::vector<std::complex<double>>;

class QaoaProblem {
 public:
  QaoaProblem(WeightedGraph graph, std::size_t layers);

  const WeightedGraph& graph() const { return graph_; }
  std::size_t layers() const { return layers_; }
  std::size_t qubits() const { return graph_.n; }

  /// beta in [0, pi], gamma in [0, 2 pi]; coordinates ordered betas first.
  DomainBox domain() const;

  /// C(z) for every basis state.
  const std::vector<double>& cut_table() const { return cut_table_; }

 private:
  WeightedGraph graph_;
  std::size_t layers_;
  std::vector<double> cut_table_;
};

StateVector qaoa_state(const QaoaProblem& p, std::span<const double> beta,
                       std::span<const double> gamma);

/// Diagonal problem unitary exp(-i gamma C).
void apply_phase(const QaoaProblem& p, double gamma, StateVector& state);

/// Mixer exp(-i beta sum_q X_q).
void apply_mixer(double beta, StateVector& state);

double expectation_exact(const QaoaProblem& p, std::span<const double> beta,
                         std::span<const double> gamma);

/// Mean cut value over `shots` sampled bitstrings (inverse CDF over |a_z|^2).
double expectation_shots(const QaoaProblem& p, std::span<const double> beta,
                         std::span<const double> gamma, std::size_t shots, Stream& rng);

/// Sampled cut values, exposed for standard-error estimates.
std::vector<double> sample_cuts(const QaoaProblem& p, std::span<const double> beta,
                                std::span<const double> gamma, std::size_t shots, Stream& rng);

void save_graph(std::ostream& out, const WeightedGraph& g);
WeightedGraph load_graph(std::istream& in);
void save_graph(const std::string& path, const WeightedGraph& g);
WeightedGraph load_graph(const std::string& path);

}  // namespace fvopt

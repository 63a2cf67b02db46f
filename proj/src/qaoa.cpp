#include "fvopt/qaoa.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "fvopt/error.hpp"

namespace fvopt {

double WeightedGraph::total_weight() const {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) s += weight(i, j);
  }
  return s;
}

void WeightedGraph::validate() const {
  if (n < 2) throw Error(ErrorKind::invalid_params, "graph needs at least 2 nodes");
  if (weights.size() != n * n) throw Error(ErrorKind::invalid_params, "weight matrix size");
  for (std::size_t i = 0; i < n; ++i) {
    if (weight(i, i) != 0.0) throw Error(ErrorKind::invalid_params, "nonzero diagonal weight");
    for (std::size_t j = i + 1; j < n; ++j) {
      if (weight(i, j) != weight(j, i)) {
        throw Error(ErrorKind::invalid_params, "weight matrix is not symmetric");
      }
      if (!(weight(i, j) >= 0.0)) throw Error(ErrorKind::invalid_params, "negative weight");
    }
  }
}

WeightedGraph random_graph(std::size_t n, Stream& rng) {
  if (n < 2) throw Error(ErrorKind::invalid_params, "graph needs at least 2 nodes");
  WeightedGraph g{n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = rng.uniform();
      g.weights[i * n + j] = w;
      g.weights[j * n + i] = w;
    }
  }
  return g;
}

double cut_value(const WeightedGraph& g, std::uint64_t z) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) {
    const bool zi = (z >> i) & 1U;
    for (std::size_t j = i + 1; j < g.n; ++j) {
      if (zi != static_cast<bool>((z >> j) & 1U)) s += g.weight(i, j);
    }
  }
  return s;
}

std::string MaxCut::bits() const {
  std::string s(n, '0');
  for (std::size_t q = 0; q < n; ++q) {
    if ((assignment >> q) & 1U) s[n - 1 - q] = '1';
  }
  return s;
}

MaxCut max_cut_oracle(const WeightedGraph& g) {
  g.validate();
  if (g.n > kMaxOracleNodes) throw Error(ErrorKind::too_large, "max-cut oracle limited to 24 nodes");
  MaxCut best{-1.0, 0, g.n};
  const std::uint64_t count = std::uint64_t{1} << g.n;
  for (std::uint64_t z = 0; z < count; ++z) {
    const double v = cut_value(g, z);
    if (v > best.value) {
      best.value = v;
      best.assignment = z;
    }
  }
  return best;
}

QaoaProblem::QaoaProblem(WeightedGraph graph, std::size_t layers)
    : graph_(std::move(graph)), layers_(layers) {
  graph_.validate();
  if (layers_ < 1) throw Error(ErrorKind::invalid_params, "QAOA needs at least one layer");
  if (graph_.n > kMaxOracleNodes) throw Error(ErrorKind::too_large, "too many qubits");
  const std::uint64_t count = std::uint64_t{1} << graph_.n;
  cut_table_.resize(count);
  for (std::uint64_t z = 0; z < count; ++z) cut_table_[z] = cut_value(graph_, z);
}

DomainBox QaoaProblem::domain() const {
  DomainBox box;
  box.lo.assign(2 * layers_, 0.0);
  box.hi.assign(2 * layers_, 0.0);
  for (std::size_t l = 0; l < layers_; ++l) {
    box.hi[l] = std::numbers::pi;
    box.hi[layers_ + l] = 2.0 * std::numbers::pi;
  }
  return box;
}

void apply_phase(const QaoaProblem& p, double gamma, StateVector& state) {
  const auto& table = p.cut_table();
  for (std::size_t z = 0; z < state.size(); ++z) {
    const double phi = -gamma * table[z];
    state[z] *= std::complex<double>(std::cos(phi), std::sin(phi));
  }
}

void apply_mixer(double beta, StateVector& state) {
  const double c = std::cos(beta);
  const std::complex<double> ms(0.0, -std::sin(beta));
  for (std::size_t bit = 1; bit < state.size(); bit <<= 1) {
    for (std::size_t z = 0; z < state.size(); ++z) {
      if (z & bit) continue;
      const auto a0 = state[z];
      const auto a1 = state[z | bit];
      state[z] = c * a0 + ms * a1;
      state[z | bit] = c * a1 + ms * a0;
    }
  }
}

namespace {

void check_params(const QaoaProblem& p, std::span<const double> beta,
                  std::span<const double> gamma) {
  if (beta.size() != p.layers() || gamma.size() != p.layers()) {
    throw Error(ErrorKind::invalid_params, "need one beta and one gamma per layer");
  }
  for (double b : beta) {
    if (!(b >= 0.0 && b <= std::numbers::pi)) {
      throw Error(ErrorKind::out_of_domain, "beta outside [0, pi]");
    }
  }
  for (double g : gamma) {
    if (!(g >= 0.0 && g <= 2.0 * std::numbers::pi)) {
      throw Error(ErrorKind::out_of_domain, "gamma outside [0, 2 pi]");
    }
  }
}

}  // namespace

StateVector qaoa_state(const QaoaProblem& p, std::span<const double> beta,
                       std::span<const double> gamma) {
  check_params(p, beta, gamma);
  const std::size_t dim = std::size_t{1} << p.qubits();
  StateVector state(dim, std::complex<double>(1.0 / std::sqrt(static_cast<double>(dim)), 0.0));
  for (std::size_t l = 0; l < p.layers(); ++l) {
    apply_phase(p, gamma[l], state);
    apply_mixer(beta[l], state);
  }
  return state;
}

double expectation_exact(const QaoaProblem& p, std::span<const double> beta,
                         std::span<const double> gamma) {
  const auto state = qaoa_state(p, beta, gamma);
  const auto& table = p.cut_table();
  double e = 0.0;
  for (std::size_t z = 0; z < state.size(); ++z) e += std::norm(state[z]) * table[z];
  return e;
}

std::vector<double> sample_cuts(const QaoaProblem& p, std::span<const double> beta,
                                std::span<const double> gamma, std::size_t shots, Stream& rng) {
  if (shots == 0) throw Error(ErrorKind::invalid_params, "shots must be >= 1");
  const auto state = qaoa_state(p, beta, gamma);
  std::vector<double> cdf(state.size());
  double acc = 0.0;
  for (std::size_t z = 0; z < state.size(); ++z) {
    acc += std::norm(state[z]);
    cdf[z] = acc;
  }
  const auto& table = p.cut_table();
  std::vector<double> out;
  out.reserve(shots);
  for (std::size_t s = 0; s < shots; ++s) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    out.push_back(table[static_cast<std::size_t>(it - cdf.begin())]);
  }
  return out;
}

double expectation_shots(const QaoaProblem& p, std::span<const double> beta,
                         std::span<const double> gamma, std::size_t shots, Stream& rng) {
  const auto cuts = sample_cuts(p, beta, gamma, shots, rng);
  return std::accumulate(cuts.begin(), cuts.end(), 0.0) / static_cast<double>(shots);
}

// ---------------------------------------------------------------------------------------

namespace {
constexpr const char* kGraphVersion = "fvgraph/1";
}

void save_graph(std::ostream& out, const WeightedGraph& g) {
  g.validate();
  nlohmann::ordered_json j;
  j["version"] = kGraphVersion;
  j["n"] = g.n;
  std::vector<double> upper;
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t k = i + 1; k < g.n; ++k) upper.push_back(g.weight(i, k));
  }
  j["upper_weights"] = upper;
  out << j.dump() << '\n';
  if (!out) throw Error(ErrorKind::io_error, "failed writing graph");
}

WeightedGraph load_graph(std::istream& in) {
  try {
    nlohmann::json j;
    in >> j;
    if (j.at("version").get<std::string>() != kGraphVersion) {
      throw Error(ErrorKind::io_error, "unsupported graph version");
    }
    WeightedGraph g;
    g.n = j.at("n").get<std::size_t>();
    const auto upper = j.at("upper_weights").get<std::vector<double>>();
    if (g.n < 2 || upper.size() != g.n * (g.n - 1) / 2) {
      throw Error(ErrorKind::io_error, "upper_weights length does not match n");
    }
    g.weights.assign(g.n * g.n, 0.0);
    std::size_t c = 0;
    for (std::size_t i = 0; i < g.n; ++i) {
      for (std::size_t k = i + 1; k < g.n; ++k) {
        g.weights[i * g.n + k] = upper[c];
        g.weights[k * g.n + i] = upper[c];
        ++c;
      }
    }
    g.validate();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::io_error, std::string("malformed graph file: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::io_error) throw;
    throw Error(ErrorKind::io_error, e.what());
  }
}

void save_graph(const std::string& path, const WeightedGraph& g) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io_error, "cannot open " + path);
  save_graph(out, g);
}

WeightedGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io_error, "cannot open " + path);
  return load_graph(in);
}

}  // namespace fvopt

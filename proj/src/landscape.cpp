#include "fvopt/landscape.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "fvopt/error.hpp"

namespace fvopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kMaxSynthesisAttempts = 64;

}  // namespace

void GridSpec::validate() const {
  for (std::size_t a = 0; a < 2; ++a) {
    if (!(domain_lo[a] < domain_hi[a])) {
      throw Error(ErrorKind::invalid_params, "grid domain_lo must be below domain_hi");
    }
  }
  if (points_per_dim < 4) {
    throw Error(ErrorKind::invalid_params, "grid needs at least 4 points per dimension");
  }
}

void SynthesisParams::validate(const GridSpec& grid) const {
  grid.validate();
  if (!(nominal_barren_fraction >= 0.0 && nominal_barren_fraction <= 1.0)) {
    throw Error(ErrorKind::invalid_params, "nominal_barren_fraction must lie in [0, 1]");
  }
  if (plateau_width < 1 || border_margin < 1) {
    throw Error(ErrorKind::invalid_params, "plateau_width and border_margin must be >= 1");
  }
  if (plateau_width + 2 * border_margin >= grid.points_per_dim) {
    throw Error(ErrorKind::invalid_params, "plateau does not fit inside the border margins");
  }
  if (!(smoothing >= 0.0) || !(minimum_scale > 0.0) || !std::isfinite(border_value)) {
    throw Error(ErrorKind::invalid_params, "smoothing >= 0 and minimum_scale > 0 required");
  }
  const double inner = static_cast<double>(grid.points_per_dim - 2 * border_margin);
  const double reachable = inner * inner / static_cast<double>(grid.point_count());
  if (nominal_barren_fraction > reachable) {
    throw Error(ErrorKind::invalid_params,
                "nominal_barren_fraction exceeds the share of points inside the margins");
  }
}

// ---------------------------------------------------------------------------------------
// Basis

CubicBasis::CubicBasis(double lo, double hi, std::size_t points)
    : lo_(lo), hi_(hi), spacing_((hi - lo) / static_cast<double>(points - 1)), points_(points) {}

CubicBasis::Local CubicBasis::at(double x) const {
  const double u = (x - lo_) / spacing_;
  const double cell = std::clamp(std::floor(u), 0.0, static_cast<double>(points_ - 2));
  const double t = u - cell;
  const double s = 1.0 - t;
  const double t2 = t * t;
  const double t3 = t2 * t;

  Local out;
  out.first = static_cast<std::size_t>(cell);
  out.value = {s * s * s / 6.0, (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
               (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0, t3 / 6.0};
  const double inv_h = 1.0 / spacing_;
  out.slope = {-0.5 * s * s * inv_h, (1.5 * t2 - 2.0 * t) * inv_h,
               (-1.5 * t2 + t + 0.5) * inv_h, 0.5 * t2 * inv_h};
  return out;
}

// ---------------------------------------------------------------------------------------
// Fitting

std::vector<double> fit_smoothing_spline(std::span<const SplineSample> samples, double smoothing,
                                         const GridSpec& grid) {
  grid.validate();
  if (samples.size() < 16) {
    throw Error(ErrorKind::invalid_params, "spline fit needs at least 16 samples");
  }
  if (!(smoothing >= 0.0)) throw Error(ErrorKind::invalid_params, "smoothing must be >= 0");

  const CubicBasis bx(grid.domain_lo[0], grid.domain_hi[0], grid.points_per_dim);
  const CubicBasis by(grid.domain_lo[1], grid.domain_hi[1], grid.points_per_dim);
  const auto k = static_cast<Eigen::Index>(bx.size());
  const Eigen::Index unknowns = k * k;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(samples.size() * 256 + static_cast<std::size_t>(unknowns) * 10);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(unknowns);

  std::array<Eigen::Index, 16> idx{};
  std::array<double, 16> w{};
  for (const auto& s : samples) {
    if (s.x < grid.domain_lo[0] || s.x > grid.domain_hi[0] || s.y < grid.domain_lo[1] ||
        s.y > grid.domain_hi[1]) {
      throw Error(ErrorKind::out_of_domain, "spline sample outside the grid domain");
    }
    const auto lx = bx.at(s.x);
    const auto ly = by.at(s.y);
    for (std::size_t a = 0; a < 4; ++a) {
      for (std::size_t b = 0; b < 4; ++b) {
        idx[a * 4 + b] = static_cast<Eigen::Index>(lx.first + a) * k +
                         static_cast<Eigen::Index>(ly.first + b);
        w[a * 4 + b] = lx.value[a] * ly.value[b];
      }
    }
    for (std::size_t p = 0; p < 16; ++p) {
      rhs[idx[p]] += w[p] * s.z;
      for (std::size_t q = 0; q < 16; ++q) triplets.emplace_back(idx[p], idx[q], w[p] * w[q]);
    }
  }

  if (smoothing > 0.0) {
    // D2' D2 for second differences along one axis: pentadiagonal K x K.
    Eigen::MatrixXd dd = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index r = 0; r + 2 < k; ++r) {
      const double row[3] = {1.0, -2.0, 1.0};
      for (int p = 0; p < 3; ++p) {
        for (int q = 0; q < 3; ++q) dd(r + p, r + q) += row[p] * row[q];
      }
    }
    for (Eigen::Index a = 0; a < k; ++a) {
      for (Eigen::Index a2 = std::max<Eigen::Index>(0, a - 2); a2 <= std::min(k - 1, a + 2); ++a2) {
        const double v = smoothing * dd(a, a2);
        if (v == 0.0) continue;
        for (Eigen::Index b = 0; b < k; ++b) {
          triplets.emplace_back(a * k + b, a2 * k + b, v);  // along x
          triplets.emplace_back(b * k + a, b * k + a2, v);  // along y
        }
      }
    }
  }

  Eigen::SparseMatrix<double> normal(unknowns, unknowns);
  normal.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  solver.compute(normal);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::singular_system, "normal equations could not be factorized");
  }
  const Eigen::VectorXd d = solver.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  if (!(dmax > 0.0) || d.minCoeff() <= 1e-10 * dmax) {
    throw Error(ErrorKind::singular_system,
                "normal equations are rank deficient for this sample layout");
  }
  const Eigen::VectorXd c = solver.solve(rhs);
  if (solver.info() != Eigen::Success || !c.allFinite()) {
    throw Error(ErrorKind::singular_system, "spline solve failed");
  }
  return {c.data(), c.data() + c.size()};
}

// ---------------------------------------------------------------------------------------
// Landscape

Landscape::Landscape(GridSpec grid, SynthesisParams params, std::vector<double> coeffs,
                     std::vector<Plateau> plateaus)
    : grid_(grid), params_(params), coeffs_(std::move(coeffs)), plateaus_(std::move(plateaus)) {
  grid_.validate();
  const std::size_t k = grid_.points_per_dim + 2;
  if (coeffs_.size() != k * k) {
    throw Error(ErrorKind::invalid_params, "coefficient array does not match the grid");
  }
  const std::size_t n = grid_.points_per_dim;
  barren_.assign(n * n, 0);
  for (const auto& p : plateaus_) {
    if (p.row_hi >= n || p.col_hi >= n || p.row_lo > p.row_hi || p.col_lo > p.col_hi) {
      throw Error(ErrorKind::invalid_params, "plateau rectangle outside the grid");
    }
    for (std::size_t i = p.row_lo; i <= p.row_hi; ++i) {
      for (std::size_t j = p.col_lo; j <= p.col_hi; ++j) barren_[i * n + j] = 1;
    }
  }

  grid_values_.resize(n * n);
  global_min_val_ = std::numeric_limits<double>::infinity();
  max_value_ = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = eval(grid_.point(i, j));
      grid_values_[i * n + j] = v;
      if (v < global_min_val_) {
        global_min_val_ = v;
        global_min_index_ = {i, j};
      }
      max_value_ = std::max(max_value_, v);
    }
  }
  global_min_pos_ = grid_.point(global_min_index_[0], global_min_index_[1]);
}

void Landscape::check_domain(Point2 x) const {
  for (std::size_t a = 0; a < 2; ++a) {
    if (!(x[a] >= grid_.domain_lo[a] && x[a] <= grid_.domain_hi[a])) {
      throw Error(ErrorKind::out_of_domain, "landscape evaluated outside its domain");
    }
  }
}

double Landscape::eval(Point2 x) const {
  check_domain(x);
  const CubicBasis bx(grid_.domain_lo[0], grid_.domain_hi[0], grid_.points_per_dim);
  const CubicBasis by(grid_.domain_lo[1], grid_.domain_hi[1], grid_.points_per_dim);
  const auto lx = bx.at(x[0]);
  const auto ly = by.at(x[1]);
  const std::size_t k = bx.size();
  double acc = 0.0;
  for (std::size_t a = 0; a < 4; ++a) {
    const double* row = &coeffs_[(lx.first + a) * k + ly.first];
    double inner = 0.0;
    for (std::size_t b = 0; b < 4; ++b) inner += ly.value[b] * row[b];
    acc += lx.value[a] * inner;
  }
  return acc;
}

Point2 Landscape::grad(Point2 x) const {
  check_domain(x);
  const CubicBasis bx(grid_.domain_lo[0], grid_.domain_hi[0], grid_.points_per_dim);
  const CubicBasis by(grid_.domain_lo[1], grid_.domain_hi[1], grid_.points_per_dim);
  const auto lx = bx.at(x[0]);
  const auto ly = by.at(x[1]);
  const std::size_t k = bx.size();
  Point2 g{0.0, 0.0};
  for (std::size_t a = 0; a < 4; ++a) {
    const double* row = &coeffs_[(lx.first + a) * k + ly.first];
    double along_y = 0.0;
    double slope_y = 0.0;
    for (std::size_t b = 0; b < 4; ++b) {
      along_y += ly.value[b] * row[b];
      slope_y += ly.slope[b] * row[b];
    }
    g[0] += lx.slope[a] * along_y;
    g[1] += lx.value[a] * slope_y;
  }
  return g;
}

std::size_t Landscape::barren_count() const {
  return static_cast<std::size_t>(std::count(barren_.begin(), barren_.end(), 1));
}

double Landscape::barren_fraction() const {
  return static_cast<double>(barren_count()) / static_cast<double>(grid_.point_count());
}

std::size_t Landscape::area_count() const {
  std::set<std::size_t> ids;
  for (const auto& p : plateaus_) ids.insert(p.area);
  return ids.size();
}

bool operator==(const Landscape& a, const Landscape& b) {
  return a.grid_ == b.grid_ && a.params_ == b.params_ && a.coeffs_ == b.coeffs_ &&
         a.plateaus_ == b.plateaus_ && a.grid_values_ == b.grid_values_ &&
         a.global_min_pos_ == b.global_min_pos_ && a.global_min_val_ == b.global_min_val_ &&
         a.accepted_seed_ == b.accepted_seed_;
}

// ---------------------------------------------------------------------------------------
// Synthesis steps

std::size_t SynthesisState::area_count() const {
  std::set<std::size_t> ids;
  for (const auto& p : plateaus) ids.insert(p.area);
  return ids.size();
}

bool SynthesisState::in_margin(std::size_t i, std::size_t j) const {
  const std::size_t n = grid.points_per_dim;
  const std::size_t m = params.border_margin;
  return i < m || j < m || i >= n - m || j >= n - m;
}

SynthesisState begin_synthesis(const GridSpec& grid, const SynthesisParams& params) {
  params.validate(grid);
  SynthesisState s;
  s.grid = grid;
  s.params = params;
  const std::size_t n = grid.points_per_dim;
  s.value.assign(n * n, kNaN);
  s.area.assign(n * n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (s.in_margin(i, j)) s.value[i * n + j] = params.border_value;
    }
  }
  return s;
}

void add_plateau(SynthesisState& state, std::size_t row_lo, std::size_t col_lo, double value) {
  const std::size_t n = state.grid.points_per_dim;
  const std::size_t w = state.params.plateau_width;
  if (row_lo + w > n || col_lo + w > n) {
    throw Error(ErrorKind::invalid_params, "plateau square leaves the grid");
  }
  Plateau p{row_lo, row_lo + w - 1, col_lo, col_lo + w - 1, value, 0};

  std::set<long> touched;
  for (std::size_t i = p.row_lo; i <= p.row_hi; ++i) {
    for (std::size_t j = p.col_lo; j <= p.col_hi; ++j) {
      if (state.area[i * n + j] >= 0) touched.insert(state.area[i * n + j]);
    }
  }
  long id = 0;
  if (touched.empty()) {
    for (const auto& q : state.plateaus) id = std::max(id, static_cast<long>(q.area) + 1);
  } else {
    id = *touched.begin();
    for (auto& cell : state.area) {
      if (cell >= 0 && touched.count(cell)) cell = id;
    }
    for (auto& q : state.plateaus) {
      if (touched.count(static_cast<long>(q.area))) q.area = static_cast<std::size_t>(id);
    }
  }
  p.area = static_cast<std::size_t>(id);

  for (std::size_t i = p.row_lo; i <= p.row_hi; ++i) {
    for (std::size_t j = p.col_lo; j <= p.col_hi; ++j) {
      const std::size_t c = i * n + j;
      if (state.area[c] < 0) {
        state.value[c] = value;
        ++state.barren_points;
      }
      state.area[c] = id;
    }
  }
  state.plateaus.push_back(p);
}

void place_plateau(SynthesisState& state, Stream& rng) {
  const std::size_t n = state.grid.points_per_dim;
  const std::size_t w = state.params.plateau_width;
  const std::size_t m = state.params.border_margin;
  // Corners such that the whole square lies in [m, n - m).
  const std::size_t choices = n - 2 * m - w + 1;
  const std::size_t row_lo = m + rng.below(choices);
  const std::size_t col_lo = m + rng.below(choices);
  const double value = rng.uniform();
  add_plateau(state, row_lo, col_lo, value);
}

void place_minimum(SynthesisState& state, Stream& rng) {
  const std::size_t n = state.grid.points_per_dim;
  std::vector<std::size_t> free_points;
  std::vector<std::size_t> interior;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (state.in_margin(i, j)) continue;
      interior.push_back(i * n + j);
      if (state.area[i * n + j] < 0) free_points.push_back(i * n + j);
    }
  }
  const auto& pool = free_points.empty() ? interior : free_points;
  const std::size_t c = pool[rng.below(pool.size())];
  const double v = rng.lognormal(state.params.minimum_scale);
  state.value[c] = -v;
  state.minimum_index = {c / n, c % n};
  state.minimum_value = -v;
}

Landscape fit_landscape(const SynthesisState& state) {
  const std::size_t n = state.grid.points_per_dim;
  std::vector<SplineSample> samples;
  samples.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double z = state.value[i * n + j];
      if (std::isnan(z)) continue;
      const Point2 p = state.grid.point(i, j);
      samples.push_back({p[0], p[1], z});
    }
  }
  auto coeffs = fit_smoothing_spline(samples, state.params.smoothing, state.grid);
  return Landscape(state.grid, state.params, std::move(coeffs), state.plateaus);
}

namespace {

bool on_border(const Landscape& l) {
  const auto [i, j] = l.global_min_index();
  const std::size_t last = l.grid().points_per_dim - 1;
  return i == 0 || j == 0 || i == last || j == last;
}

template <typename PlacePlateaus>
Landscape synthesize_with(const GridSpec& grid, const SynthesisParams& params,
                          PlacePlateaus&& place) {
  params.validate(grid);
  for (int attempt = 0; attempt < kMaxSynthesisAttempts; ++attempt) {
    const std::uint64_t seed = params.rng_seed + static_cast<std::uint64_t>(attempt);
    Stream rng(seed);
    SynthesisState state = begin_synthesis(grid, params);
    place(state, rng);
    place_minimum(state, rng);
    Landscape l = fit_landscape(state);
    if (!on_border(l)) {
      l.set_accepted_seed(seed);
      return l;
    }
  }
  throw Error(ErrorKind::non_convergent,
              "fitted global minimum stayed on the border after 64 attempts");
}

}  // namespace

Landscape synthesize(const GridSpec& grid, const SynthesisParams& params) {
  return synthesize_with(grid, params, [](SynthesisState& state, Stream& rng) {
    while (state.barren_fraction() < state.params.nominal_barren_fraction) {
      place_plateau(state, rng);
    }
  });
}

Landscape synthesize_separated(const GridSpec& grid, const SynthesisParams& base, double fraction,
                               std::size_t count) {
  if (!(fraction >= 0.0 && fraction < 1.0)) {
    throw Error(ErrorKind::invalid_params, "plateau fraction must lie in [0, 1)");
  }
  SynthesisParams params = base;
  params.nominal_barren_fraction = 0.0;
  if (fraction > 0.0) {
    if (count == 0) throw Error(ErrorKind::invalid_params, "plateau count must be >= 1");
    const double area = fraction * static_cast<double>(grid.point_count()) /
                        static_cast<double>(count);
    params.plateau_width = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(area))));
  }
  params.validate(grid);

  return synthesize_with(grid, params, [fraction, count](SynthesisState& state, Stream& rng) {
    if (fraction == 0.0) return;
    const std::size_t n = state.grid.points_per_dim;
    const std::size_t w = state.params.plateau_width;
    const std::size_t m = state.params.border_margin;
    const std::size_t choices = n - 2 * m - w + 1;
    // Rejection sampling of corners with at least one free grid line between squares.
    for (int restart = 0; restart < 1000; ++restart) {
      std::vector<std::array<std::size_t, 2>> corners;
      for (int tries = 0; tries < 10000 && corners.size() < count; ++tries) {
        const std::array<std::size_t, 2> c{m + rng.below(choices), m + rng.below(choices)};
        const bool clear = std::all_of(corners.begin(), corners.end(), [&](const auto& o) {
          const bool apart_rows = c[0] > o[0] + w || o[0] > c[0] + w;
          const bool apart_cols = c[1] > o[1] + w || o[1] > c[1] + w;
          return apart_rows || apart_cols;
        });
        if (clear) corners.push_back(c);
      }
      if (corners.size() == count) {
        for (const auto& c : corners) add_plateau(state, c[0], c[1], rng.uniform());
        return;
      }
    }
    throw Error(ErrorKind::invalid_params, "separated plateaus do not fit inside the margins");
  });
}

// ---------------------------------------------------------------------------------------
// Serialization

namespace {

constexpr const char* kLandscapeVersion = "fvland/1";

}  // namespace

void save_landscape(std::ostream& out, const Landscape& l) {
  nlohmann::ordered_json j;
  j["version"] = kLandscapeVersion;
  const auto& g = l.grid();
  j["grid"] = {{"domain_lo", g.domain_lo},
               {"domain_hi", g.domain_hi},
               {"points_per_dim", g.points_per_dim}};
  const auto& p = l.params();
  j["params"] = {{"nominal_barren_fraction", p.nominal_barren_fraction},
                 {"plateau_width", p.plateau_width},
                 {"border_margin", p.border_margin},
                 {"smoothing", p.smoothing},
                 {"border_value", p.border_value},
                 {"minimum_scale", p.minimum_scale},
                 {"rng_seed", p.rng_seed}};
  j["accepted_seed"] = l.accepted_seed();
  j["coeffs"] = l.coeffs();
  auto plateaus = nlohmann::ordered_json::array();
  for (const auto& q : l.plateaus()) {
    plateaus.push_back({{"rows", {q.row_lo, q.row_hi}},
                        {"cols", {q.col_lo, q.col_hi}},
                        {"value", q.value},
                        {"area", q.area}});
  }
  j["plateaus"] = std::move(plateaus);
  j["global_min"] = {{"pos", l.global_min_pos()}, {"val", l.global_min_val()}};
  out << j.dump() << '\n';
  if (!out) throw Error(ErrorKind::io_error, "failed writing landscape");
}

Landscape load_landscape(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("version").get<std::string>() != kLandscapeVersion) {
      throw Error(ErrorKind::io_error, "unsupported landscape version");
    }
    GridSpec g;
    g.domain_lo = j.at("grid").at("domain_lo").get<Point2>();
    g.domain_hi = j.at("grid").at("domain_hi").get<Point2>();
    g.points_per_dim = j.at("grid").at("points_per_dim").get<std::size_t>();
    const auto& jp = j.at("params");
    SynthesisParams p;
    p.nominal_barren_fraction = jp.at("nominal_barren_fraction").get<double>();
    p.plateau_width = jp.at("plateau_width").get<std::size_t>();
    p.border_margin = jp.at("border_margin").get<std::size_t>();
    p.smoothing = jp.at("smoothing").get<double>();
    p.border_value = jp.at("border_value").get<double>();
    p.minimum_scale = jp.at("minimum_scale").get<double>();
    p.rng_seed = jp.at("rng_seed").get<std::uint64_t>();
    std::vector<Plateau> plateaus;
    for (const auto& q : j.at("plateaus")) {
      Plateau r;
      r.row_lo = q.at("rows").at(0).get<std::size_t>();
      r.row_hi = q.at("rows").at(1).get<std::size_t>();
      r.col_lo = q.at("cols").at(0).get<std::size_t>();
      r.col_hi = q.at("cols").at(1).get<std::size_t>();
      r.value = q.at("value").get<double>();
      r.area = q.at("area").get<std::size_t>();
      plateaus.push_back(r);
    }
    Landscape l(g, p, j.at("coeffs").get<std::vector<double>>(), std::move(plateaus));
    l.set_accepted_seed(j.value("accepted_seed", p.rng_seed));
    const auto pos = j.at("global_min").at("pos").get<Point2>();
    const double val = j.at("global_min").at("val").get<double>();
    if (pos != l.global_min_pos() || val != l.global_min_val()) {
      throw Error(ErrorKind::io_error, "stored global minimum does not match the coefficients");
    }
    return l;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::io_error, std::string("malformed landscape file: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::io_error) throw;
    throw Error(ErrorKind::io_error, e.what());
  }
}

void save_landscape(const std::string& path, const Landscape& l) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io_error, "cannot open " + path);
  save_landscape(out, l);
}

Landscape load_landscape(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io_error, "cannot open " + path);
  return load_landscape(in);
}

}  // namespace fvopt

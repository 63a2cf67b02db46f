#pragma once

// Synthetic 2D test functions with a controlled share of barren plateaus.
//
// A landscape is built on a square grid: border-margin points get a high constant value,
// square plateaus with constant values are dropped until the requested fraction of grid
// points is covered, one interior point receives a negative lognormal value (the intended
// global minimum), and a penalized tensor-product cubic B-spline is fitted through all of
// those assigned points. The fitted spline is the landscape.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fvopt/rng.hpp"

namespace fvopt {

using Point2 = std::array<double, 2>;

struct GridSpec {
  Point2 domain_lo{0.0, 0.0};
  Point2 domain_hi{1.0, 1.0};
  std::size_t points_per_dim = 100;

  void validate() const;
  double spacing(std::size_t axis) const {
    return (domain_hi[axis] - domain_lo[axis]) / static_cast<double>(points_per_dim - 1);
  }
  double coord(std::size_t axis, std::size_t index) const {
    if (index + 1 == points_per_dim) return domain_hi[axis];
    return domain_lo[axis] + static_cast<double>(index) * spacing(axis);
  }
  Point2 point(std::size_t i, std::size_t j) const { return {coord(0, i), coord(1, j)}; }
  std::size_t point_count() const { return points_per_dim * points_per_dim; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct SynthesisParams {
  double nominal_barren_fraction = 0.7;
  std::size_t plateau_width = 10;
  std::size_t border_margin = 2;
  double smoothing = 1.0;
  double border_value = 2.0;
  double minimum_scale = 1.0;
  std::uint64_t rng_seed = 0;

  void validate(const GridSpec& grid) const;

  friend bool operator==(const SynthesisParams&, const SynthesisParams&) = default;
};

/// Uniform cubic B-spline basis with knots on the grid lines of one axis. There are
/// points + 2 basis functions; basis s is centered on grid line s - 1.
class CubicBasis {
 public:
  struct Local {
    std::size_t first = 0;  // index of the first of four nonzero basis functions
    std::array<double, 4> value{};
    std::array<double, 4> slope{};
  };

  CubicBasis(double lo, double hi, std::size_t points);

  std::size_t size() const { return points_ + 2; }
  Local at(double x) const;

 private:
  double lo_;
  double hi_;
  double spacing_;
  std::size_t points_;
};

/// One placed square of grid points, inclusive bounds. `area` identifies the merged barren
/// area it belongs to.
struct Plateau {
  std::size_t row_lo = 0;
  std::size_t row_hi = 0;
  std::size_t col_lo = 0;
  std::size_t col_hi = 0;
  double value = 0.0;
  std::size_t area = 0;

  bool contains(std::size_t i, std::size_t j) const {
    return i >= row_lo && i <= row_hi && j >= col_lo && j <= col_hi;
  }
  friend bool operator==(const Plateau&, const Plateau&) = default;
};

struct SplineSample {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Penalized least squares over the tensor-product basis:
///   minimize sum (z - S(x, y))^2 + smoothing * sum (second differences of coefficients)^2
/// with the difference penalty applied along both axes. Coefficients are row-major with the
/// x basis index major. Throws SingularSystem when the normal equations are rank deficient.
std::vector<double> fit_smoothing_spline(std::span<const SplineSample> samples, double smoothing,
                                         const GridSpec& grid);

class Landscape {
 public:
  Landscape() = default;

  /// Assemble from fitted coefficients; computes grid values, the barren mask and the
  /// global minimum.
  Landscape(GridSpec grid, SynthesisParams params, std::vector<double> coeffs,
            std::vector<Plateau> plateaus);

  double eval(Point2 x) const;
  Point2 grad(Point2 x) const;

  const GridSpec& grid() const { return grid_; }
  const SynthesisParams& params() const { return params_; }
  const std::vector<double>& coeffs() const { return coeffs_; }
  const std::vector<Plateau>& plateaus() const { return plateaus_; }
  const std::vector<double>& grid_values() const { return grid_values_; }
  double grid_value(std::size_t i, std::size_t j) const {
    return grid_values_[i * grid_.points_per_dim + j];
  }
  bool is_barren(std::size_t i, std::size_t j) const {
    return barren_[i * grid_.points_per_dim + j] != 0;
  }
  std::size_t barren_count() const;
  double barren_fraction() const;
  std::size_t area_count() const;

  Point2 global_min_pos() const { return global_min_pos_; }
  double global_min_val() const { return global_min_val_; }
  std::array<std::size_t, 2> global_min_index() const { return global_min_index_; }
  double max_value() const { return max_value_; }

  /// Seed that produced this landscape after border-minimum retries.
  std::uint64_t accepted_seed() const { return accepted_seed_; }
  void set_accepted_seed(std::uint64_t seed) { accepted_seed_ = seed; }

  friend bool operator==(const Landscape& a, const Landscape& b);

 private:
  void check_domain(Point2 x) const;

  GridSpec grid_;
  SynthesisParams params_;
  std::vector<double> coeffs_;
  std::vector<Plateau> plateaus_;
  std::vector<unsigned char> barren_;
  std::vector<double> grid_values_;
  Point2 global_min_pos_{};
  std::array<std::size_t, 2> global_min_index_{};
  double global_min_val_ = 0.0;
  double max_value_ = 0.0;
  std::uint64_t accepted_seed_ = 0;
};

/// Grid-point assignments made before the spline fit.
struct SynthesisState {
  GridSpec grid;
  SynthesisParams params;
  std::vector<double> value;           // assigned value per grid point (NaN when unassigned)
  std::vector<long> area;              // barren area per grid point, -1 outside plateaus
  std::vector<Plateau> plateaus;
  std::size_t barren_points = 0;
  std::array<std::size_t, 2> minimum_index{};
  double minimum_value = 0.0;

  double barren_fraction() const {
    return static_cast<double>(barren_points) / static_cast<double>(grid.point_count());
  }
  std::size_t area_count() const;
  bool in_margin(std::size_t i, std::size_t j) const;
};

/// Fresh state with border-margin points set to params.border_value.
SynthesisState begin_synthesis(const GridSpec& grid, const SynthesisParams& params);

/// Adds a square with its lower corner at (row_lo, col_lo). Points already inside a plateau
/// keep their value; every area the square touches is merged into one.
void add_plateau(SynthesisState& state, std::size_t row_lo, std::size_t col_lo, double value);

/// Samples a plateau corner so the square stays clear of the border margin and adds it with
/// a Uniform[0, 1] value.
void place_plateau(SynthesisState& state, Stream& rng);

/// Puts the negative lognormal draw on a random interior point, preferring points outside
/// the plateaus.
void place_minimum(SynthesisState& state, Stream& rng);

/// Fits the spline through every assigned point.
Landscape fit_landscape(const SynthesisState& state);

/// Full synthesis with the border-minimum rejection loop (seed, seed + 1, ...).
Landscape synthesize(const GridSpec& grid, const SynthesisParams& params);

/// Variant used by the hitting-time study: `count` equal, mutually separated squares that
/// cover `fraction` of the grid points. fraction == 0 places no plateau.
Landscape synthesize_separated(const GridSpec& grid, const SynthesisParams& params,
                               double fraction, std::size_t count);

void save_landscape(std::ostream& out, const Landscape& landscape);
Landscape load_landscape(std::istream& in);
void save_landscape(const std::string& path, const Landscape& landscape);
Landscape load_landscape(const std::string& path);

}  // namespace fvopt

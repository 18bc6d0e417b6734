#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace mzbw {

/// Rejected input: bad shapes, out-of-range parameters, malformed files.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical breakdown (NaN/Inf, unresolved time step, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PhysicalParams {
  double hbar = 1.0;
  double mass = 1.0;
  double charge = 0.0;

  void validate() const {
    if (!(hbar > 0.0) || !std::isfinite(hbar)) throw InvalidInput("hbar must be positive and finite");
    if (!(mass > 0.0) || !std::isfinite(mass)) throw InvalidInput("mass must be positive and finite");
    if (!std::isfinite(charge)) throw InvalidInput("charge must be finite");
  }
};

/// Uniform periodic lattice in 1-3 dimensions.
///
/// Axis k covers [-L_k/2, L_k/2) with N_k points; coordinate i is -L_k/2 + i*h_k.
/// Storage is row-major with axis 0 slowest. Unused axes have one point, so
/// index arithmetic is identical for every dimensionality.
class Grid {
 public:
  Grid() = default;

  Grid(std::size_t dims, std::array<std::size_t, 3> points, std::array<double, 3> extent)
      : dims_(dims), points_(points), extent_(extent) {
    if (dims < 1 || dims > 3) throw InvalidInput("grid dimension must be 1, 2 or 3");
    for (std::size_t k = 0; k < 3; ++k) {
      if (k >= dims) {
        points_[k] = 1;
        extent_[k] = 1.0;
      } else {
        if (points_[k] < 2) throw InvalidInput("grid axis " + std::to_string(k) + " needs at least 2 points");
        if (points_[k] % 2 != 0) throw InvalidInput("grid axis " + std::to_string(k) + " must have an even point count");
        if (!(extent_[k] > 0.0) || !std::isfinite(extent_[k]))
          throw InvalidInput("grid axis " + std::to_string(k) + " needs a positive extent");
      }
      spacing_[k] = extent_[k] / static_cast<double>(points_[k]);
    }
  }

  static Grid line(std::size_t n, double length) { return Grid(1, {n, 1, 1}, {length, 1.0, 1.0}); }
  static Grid plane(std::size_t nx, std::size_t ny, double lx, double ly) { return Grid(2, {nx, ny, 1}, {lx, ly, 1.0}); }
  static Grid box(std::size_t nx, std::size_t ny, std::size_t nz, double lx, double ly, double lz) {
    return Grid(3, {nx, ny, nz}, {lx, ly, lz});
  }

  std::size_t dims() const { return dims_; }
  std::size_t points(std::size_t axis) const { return points_[axis]; }
  double extent(std::size_t axis) const { return extent_[axis]; }
  double spacing(std::size_t axis) const { return spacing_[axis]; }
  const std::array<std::size_t, 3>& points() const { return points_; }
  const std::array<double, 3>& extents() const { return extent_; }

  std::size_t size() const { return points_[0] * points_[1] * points_[2]; }

  double cell_volume() const {
    double v = 1.0;
    for (std::size_t k = 0; k < dims_; ++k) v *= spacing_[k];
    return v;
  }

  double coordinate(std::size_t axis, std::size_t i) const {
    if (axis >= dims_) return 0.0;
    return -0.5 * extent_[axis] + static_cast<double>(i) * spacing_[axis];
  }

  std::size_t index(std::size_t i, std::size_t j = 0, std::size_t k = 0) const {
    return (i * points_[1] + j) * points_[2] + k;
  }

  std::array<std::size_t, 3> unravel(std::size_t flat) const {
    const std::size_t k = flat % points_[2];
    const std::size_t rest = flat / points_[2];
    return {rest / points_[1], rest % points_[1], k};
  }

  /// Physical position of a flat index; unused axes report 0.
  std::array<double, 3> position(std::size_t flat) const {
    const auto ijk = unravel(flat);
    return {coordinate(0, ijk[0]), coordinate(1, ijk[1]), coordinate(2, ijk[2])};
  }

  /// Angular wavenumber of FFT bin `i` along `axis`; the Nyquist bin reports -pi/h.
  double wavenumber(std::size_t axis, std::size_t i) const {
    const std::size_t n = points_[axis];
    const double base = 2.0 * M_PI / extent_[axis];
    const auto signed_i = i < n / 2 ? static_cast<double>(i) : static_cast<double>(i) - static_cast<double>(n);
    return base * signed_i;
  }

  bool operator==(const Grid& other) const {
    return dims_ == other.dims_ && points_ == other.points_ && extent_ == other.extent_;
  }

 private:
  std::size_t dims_ = 1;
  std::array<std::size_t, 3> points_{2, 1, 1};
  std::array<double, 3> extent_{1.0, 1.0, 1.0};
  std::array<double, 3> spacing_{0.5, 1.0, 1.0};
};

}  // namespace mzbw

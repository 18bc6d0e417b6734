#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "mzbw/grid.hpp"

namespace mzbw {

using complex = std::complex<double>;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double& operator[](std::size_t k) { return k == 0 ? x : (k == 1 ? y : z); }
  double operator[](std::size_t k) const { return k == 0 ? x : (k == 1 ? y : z); }

  Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

  friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
  friend Vec3 operator*(Vec3 a, double s) { return a *= s; }
  friend Vec3 operator*(double s, Vec3 a) { return a *= s; }
  friend Vec3 operator/(Vec3 a, double s) { return Vec3{a.x / s, a.y / s, a.z / s}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm2(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(norm2(a)); }

/// Two-component Pauli spinor (spin-up, spin-down).
using Spinor = std::array<complex, 2>;

inline bool is_finite(double v) { return std::isfinite(v); }
inline bool is_finite(const complex& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }
inline bool is_finite(const Vec3& v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }
inline bool is_finite(const Spinor& v) { return is_finite(v[0]) && is_finite(v[1]); }

/// Values of type T sampled on every point of a Grid.
template <typename T>
class Field {
 public:
  using value_type = T;

  Field() = default;
  explicit Field(Grid grid, T fill = T{}) : grid_(std::move(grid)), values_(grid_.size(), fill) {}
  Field(Grid grid, std::vector<T> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw InvalidInput("field value count does not match grid size");
  }

  /// Samples `f(position)` at every grid point.
  template <typename F>
  static Field sample(const Grid& grid, F&& f) {
    Field out(grid);
    for (std::size_t n = 0; n < grid.size(); ++n) {
      const auto p = grid.position(n);
      out.values_[n] = f(p[0], p[1], p[2]);
    }
    return out;
  }

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  T& operator[](std::size_t n) { return values_[n]; }
  const T& operator[](std::size_t n) const { return values_[n]; }

  std::vector<T>& values() { return values_; }
  const std::vector<T>& values() const { return values_; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](const T& v) { return is_finite(v); });
  }

  /// Throws NumericalError naming `what` if any value is NaN or infinite.
  void require_finite(const std::string& what) const {
    for (std::size_t n = 0; n < values_.size(); ++n) {
      if (!is_finite(values_[n])) throw NumericalError(what + ": non-finite value at point " + std::to_string(n));
    }
  }

  bool operator==(const Field&) const = default;

 private:
  Grid grid_;
  std::vector<T> values_;
};

using RealField = Field<double>;
using ComplexField = Field<complex>;
using VectorField = Field<Vec3>;
using SpinorField = Field<Spinor>;

/// Points where the density is too small for hydrodynamic quantities.
/// `masked[n]` is true where rho <= threshold.
struct NodeMask {
  std::vector<bool> masked;
  double threshold = 0.0;

  bool operator[](std::size_t n) const { return masked[n]; }
  std::size_t count() const { return static_cast<std::size_t>(std::count(masked.begin(), masked.end(), true)); }
  double fraction() const { return masked.empty() ? 0.0 : static_cast<double>(count()) / static_cast<double>(masked.size()); }
};

/// Relative node threshold: rho <= 1e-12 * max(rho).
inline constexpr double kNodeRelativeThreshold = 1e-12;

inline double max_value(const RealField& f) {
  double m = -INFINITY;
  for (double v : f) m = std::max(m, v);
  return m;
}

inline double max_abs(const RealField& f) {
  double m = 0.0;
  for (double v : f) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs(const VectorField& f) {
  double m = 0.0;
  for (const auto& v : f) m = std::max({m, std::abs(v.x), std::abs(v.y), std::abs(v.z)});
  return m;
}

inline NodeMask node_mask(const RealField& rho, double relative = kNodeRelativeThreshold) {
  NodeMask mask;
  mask.threshold = relative * max_value(rho);
  mask.masked.resize(rho.size());
  for (std::size_t n = 0; n < rho.size(); ++n) mask.masked[n] = !(rho[n] > mask.threshold);
  return mask;
}

/// Sum times cell volume, accumulated in storage order so results are reproducible.
inline double integrate(const RealField& f) {
  double sum = 0.0;
  for (double v : f) sum += v;
  return sum * f.grid().cell_volume();
}

template <typename T, typename F>
auto map(const Field<T>& f, F&& op) {
  using R = std::decay_t<decltype(op(f[0]))>;
  Field<R> out(f.grid());
  for (std::size_t n = 0; n < f.size(); ++n) out[n] = op(f[n]);
  return out;
}

template <typename A, typename B, typename F>
auto zip(const Field<A>& a, const Field<B>& b, F&& op) {
  if (!(a.grid() == b.grid())) throw InvalidInput("fields live on different grids");
  using R = std::decay_t<decltype(op(a[0], b[0]))>;
  Field<R> out(a.grid());
  for (std::size_t n = 0; n < a.size(); ++n) out[n] = op(a[n], b[n]);
  return out;
}

inline RealField density(const ComplexField& psi) {
  return map(psi, [](const complex& v) { return std::norm(v); });
}

inline RealField density(const SpinorField& psi) {
  return map(psi, [](const Spinor& v) { return std::norm(v[0]) + std::norm(v[1]); });
}

inline RealField real_part(const ComplexField& f) { return map(f, [](const complex& v) { return v.real(); }); }
inline RealField imag_part(const ComplexField& f) { return map(f, [](const complex& v) { return v.imag(); }); }

inline VectorField cross(const VectorField& a, const VectorField& b) {
  return zip(a, b, [](const Vec3& u, const Vec3& v) { return cross(u, v); });
}

inline RealField dot(const VectorField& a, const VectorField& b) {
  return zip(a, b, [](const Vec3& u, const Vec3& v) { return dot(u, v); });
}

inline VectorField scale(const VectorField& v, const RealField& s) {
  return zip(v, s, [](const Vec3& u, double c) { return u * c; });
}

/// Component `axis` of a vector field as a scalar field.
inline RealField component(const VectorField& v, std::size_t axis) {
  return map(v, [axis](const Vec3& u) { return u[axis]; });
}

}  // namespace mzbw

#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>

#include "mzbw/fft.hpp"
#include "mzbw/fields.hpp"

namespace mzbw {

/// Discrete differential operator family.
enum class Backend {
  spectral,  ///< Fourier pseudo-spectral; exact for resolved periodic fields.
  fd2,       ///< Second-order central differences on the periodic lattice.
};

inline std::string_view to_string(Backend b) { return b == Backend::spectral ? "spectral" : "fd2"; }

inline std::optional<Backend> parse_backend(std::string_view s) {
  if (s == "spectral") return Backend::spectral;
  if (s == "fd2") return Backend::fd2;
  return std::nullopt;
}

namespace detail {

template <typename T>
inline constexpr bool is_scalar_value = std::is_same_v<T, double> || std::is_same_v<T, complex>;

template <typename T>
T from_complex(const complex& v) {
  if constexpr (std::is_same_v<T, double>) {
    return v.real();
  } else {
    return v;
  }
}

/// Forward transform, multiply bin-wise by `symbol(kx, ky, kz, nyquist)`, transform back.
/// `nyquist[a]` is true on the Nyquist bin of axis a.
template <typename T, typename Symbol>
Field<T> spectral_multiply(const Field<T>& f, Symbol&& symbol) {
  const Grid& g = f.grid();
  Fft fft(g);
  auto buf = fft.data();
  for (std::size_t n = 0; n < f.size(); ++n) buf[n] = complex(f[n]);
  fft.forward();
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto ijk = g.unravel(n);
    std::array<double, 3> k{};
    std::array<bool, 3> nyq{};
    for (std::size_t a = 0; a < g.dims(); ++a) {
      k[a] = g.wavenumber(a, ijk[a]);
      nyq[a] = ijk[a] == g.points(a) / 2;
    }
    buf[n] *= symbol(k, nyq);
  }
  fft.backward();
  Field<T> out(g);
  for (std::size_t n = 0; n < f.size(); ++n) out[n] = from_complex<T>(buf[n]);
  return out;
}

template <typename T>
Field<T> fd2_partial(const Field<T>& f, std::size_t axis) {
  const Grid& g = f.grid();
  const std::size_t n_axis = g.points(axis);
  const std::size_t stride = axis == 0 ? g.points(1) * g.points(2) : (axis == 1 ? g.points(2) : 1);
  const double inv = 1.0 / (2.0 * g.spacing(axis));
  Field<T> out(g);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const std::size_t i = g.unravel(n)[axis];
    const std::size_t up = i + 1 == n_axis ? n + stride - n_axis * stride : n + stride;
    const std::size_t down = i == 0 ? n + (n_axis - 1) * stride : n - stride;
    out[n] = (f[up] - f[down]) * inv;
  }
  return out;
}

template <typename T>
Field<T> fd2_second(const Field<T>& f, std::size_t axis) {
  const Grid& g = f.grid();
  const std::size_t n_axis = g.points(axis);
  const std::size_t stride = axis == 0 ? g.points(1) * g.points(2) : (axis == 1 ? g.points(2) : 1);
  const double inv = 1.0 / (g.spacing(axis) * g.spacing(axis));
  Field<T> out(g);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const std::size_t i = g.unravel(n)[axis];
    const std::size_t up = i + 1 == n_axis ? n + stride - n_axis * stride : n + stride;
    const std::size_t down = i == 0 ? n + (n_axis - 1) * stride : n - stride;
    out[n] = (f[up] - 2.0 * f[n] + f[down]) * inv;
  }
  return out;
}

template <typename T>
void require_operand(const Field<T>& f, const char* op) {
  f.require_finite(std::string(op) + " input");
}

}  // namespace detail

/// d f / d x_axis. Axes beyond the grid dimension give zero.
template <typename T>
Field<T> partial(const Field<T>& f, std::size_t axis, Backend backend = Backend::spectral) {
  static_assert(detail::is_scalar_value<T>);
  detail::require_operand(f, "partial derivative");
  if (axis >= f.grid().dims()) return Field<T>(f.grid());
  if (backend == Backend::fd2) return detail::fd2_partial(f, axis);
  // The Nyquist mode has no odd derivative on a periodic lattice; drop it.
  return detail::spectral_multiply(f, [axis](const std::array<double, 3>& k, const std::array<bool, 3>& nyq) {
    return nyq[axis] ? complex(0.0) : complex(0.0, k[axis]);
  });
}

/// Gradient of a real field. Components beyond the grid dimension are zero.
inline VectorField gradient(const RealField& f, Backend backend = Backend::spectral) {
  VectorField out(f.grid());
  for (std::size_t a = 0; a < f.grid().dims(); ++a) {
    const RealField d = partial(f, a, backend);
    for (std::size_t n = 0; n < f.size(); ++n) out[n][a] = d[n];
  }
  return out;
}

/// Per-axis partial derivatives of a complex field.
inline std::array<ComplexField, 3> gradient(const ComplexField& f, Backend backend = Backend::spectral) {
  return {partial(f, 0, backend), partial(f, 1, backend), partial(f, 2, backend)};
}

template <typename T>
Field<T> laplacian(const Field<T>& f, Backend backend = Backend::spectral) {
  static_assert(detail::is_scalar_value<T>);
  detail::require_operand(f, "laplacian");
  const Grid& g = f.grid();
  if (backend == Backend::fd2) {
    Field<T> out(g);
    for (std::size_t a = 0; a < g.dims(); ++a) {
      const Field<T> d2 = detail::fd2_second(f, a);
      for (std::size_t n = 0; n < f.size(); ++n) out[n] += d2[n];
    }
    return out;
  }
  return detail::spectral_multiply(f, [](const std::array<double, 3>& k, const std::array<bool, 3>&) {
    return complex(-(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]));
  });
}

inline RealField divergence(const VectorField& v, Backend backend = Backend::spectral) {
  v.require_finite("divergence input");
  RealField out(v.grid());
  for (std::size_t a = 0; a < v.grid().dims(); ++a) {
    const RealField d = partial(component(v, a), a, backend);
    for (std::size_t n = 0; n < v.size(); ++n) out[n] += d[n];
  }
  return out;
}

inline VectorField curl(const VectorField& v, Backend backend = Backend::spectral) {
  v.require_finite("curl input");
  const std::size_t dims = v.grid().dims();
  // d[a][b] = d v_b / d x_a
  std::array<std::array<std::optional<RealField>, 3>, 3> d;
  auto get = [&](std::size_t a, std::size_t b) -> const RealField* {
    if (a >= dims) return nullptr;
    if (!d[a][b]) d[a][b] = partial(component(v, b), a, backend);
    return &*d[a][b];
  };
  VectorField out(v.grid());
  auto accumulate = [&](std::size_t target, std::size_t a, std::size_t b, double sign) {
    if (const RealField* p = get(a, b)) {
      for (std::size_t n = 0; n < v.size(); ++n) out[n][target] += sign * (*p)[n];
    }
  };
  accumulate(0, 1, 2, 1.0);
  accumulate(0, 2, 1, -1.0);
  accumulate(1, 2, 0, 1.0);
  accumulate(1, 0, 2, -1.0);
  accumulate(2, 0, 1, 1.0);
  accumulate(2, 1, 0, -1.0);
  return out;
}

}  // namespace mzbw

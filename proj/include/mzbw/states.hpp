#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "mzbw/fields.hpp"

namespace mzbw::states {

inline double domain_volume(const Grid& g) {
  double v = 1.0;
  for (std::size_t a = 0; a < g.dims(); ++a) v *= g.extent(a);
  return v;
}

inline ComplexField normalized(ComplexField psi) {
  const double n = integrate(density(psi));
  if (!(n > 0.0)) throw InvalidInput("cannot normalize an all-zero wavefunction");
  const double s = 1.0 / std::sqrt(n);
  for (auto& v : psi) v *= s;
  return psi;
}

/// e^{i k.x} / sqrt(V) with k_a = 2 pi mode_a / L_a, so the wave is periodic on the grid.
inline ComplexField plane_wave(const Grid& g, std::array<int, 3> mode) {
  std::array<double, 3> k{};
  for (std::size_t a = 0; a < g.dims(); ++a) k[a] = 2.0 * M_PI * mode[a] / g.extent(a);
  const double amp = 1.0 / std::sqrt(domain_volume(g));
  return ComplexField::sample(g, [&](double x, double y, double z) {
    return std::polar(amp, k[0] * x + k[1] * y + k[2] * z);
  });
}

/// Wavenumber vector of `plane_wave(g, mode)`.
inline Vec3 plane_wave_k(const Grid& g, std::array<int, 3> mode) {
  Vec3 k;
  for (std::size_t a = 0; a < g.dims(); ++a) k[a] = 2.0 * M_PI * mode[a] / g.extent(a);
  return k;
}

/// Product Gaussian whose density has standard deviation `sigma` on every
/// active axis, carrying mean momentum `boost`.
inline ComplexField gaussian(const Grid& g, Vec3 center, double sigma, Vec3 boost, const PhysicalParams& params) {
  if (!(sigma > 0.0)) throw InvalidInput("gaussian sigma must be positive");
  const double norm_1d = std::pow(2.0 * M_PI * sigma * sigma, -0.25);
  const std::size_t dims = g.dims();
  return ComplexField::sample(g, [&](double x, double y, double z) {
    const std::array<double, 3> r{x, y, z};
    double amp = 1.0;
    double phase = 0.0;
    for (std::size_t a = 0; a < dims; ++a) {
      const double d = r[a] - center[a];
      amp *= norm_1d * std::exp(-d * d / (4.0 * sigma * sigma));
      phase += boost[a] * r[a] / params.hbar;
    }
    return std::polar(amp, phase);
  });
}

/// Ground state of U = m omega^2 |x|^2 / 2; energy dims * hbar omega / 2.
inline ComplexField harmonic_ground(const Grid& g, double omega, const PhysicalParams& params) {
  if (!(omega > 0.0)) throw InvalidInput("harmonic omega must be positive");
  const double a = params.mass * omega / params.hbar;
  const double norm_1d = std::pow(a / M_PI, 0.25);
  const std::size_t dims = g.dims();
  return ComplexField::sample(g, [&](double x, double y, double z) {
    const std::array<double, 3> r{x, y, z};
    double amp = 1.0;
    for (std::size_t k = 0; k < dims; ++k) amp *= norm_1d * std::exp(-0.5 * a * r[k] * r[k]);
    return complex(amp, 0.0);
  });
}

inline RealField harmonic_potential(const Grid& g, double omega, const PhysicalParams& params) {
  const double c = 0.5 * params.mass * omega * omega;
  return RealField::sample(g, [&](double x, double y, double z) { return c * (x * x + y * y + z * z); });
}

/// Band-limited random state without nodes: a unit offset plus random Fourier
/// modes |n_a| <= max_mode whose coefficient moduli sum to `amplitude` < 1.
inline ComplexField random_smooth(const Grid& g, std::uint64_t seed, int max_mode = 3, double amplitude = 0.5) {
  if (!(amplitude >= 0.0 && amplitude < 1.0)) throw InvalidInput("random_smooth amplitude must lie in [0, 1)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int ny = g.dims() > 1 ? max_mode : 0;
  const int nz = g.dims() > 2 ? max_mode : 0;
  std::vector<std::pair<Vec3, complex>> modes;
  double total = 0.0;
  for (int i = -max_mode; i <= max_mode; ++i) {
    for (int j = -ny; j <= ny; ++j) {
      for (int l = -nz; l <= nz; ++l) {
        if (i == 0 && j == 0 && l == 0) continue;
        const complex c(u(rng), u(rng));
        modes.emplace_back(plane_wave_k(g, {i, j, l}), c);
        total += std::abs(c);
      }
    }
  }
  ComplexField psi(g, complex(1.0, 0.0));
  for (const auto& [k, c] : modes) {
    const complex cs = total > 0.0 ? c * (amplitude / total) : complex{};
    for (std::size_t n = 0; n < g.size(); ++n) {
      const auto p = g.position(n);
      psi[n] += cs * std::polar(1.0, k.x * p[0] + k.y * p[1] + k.z * p[2]);
    }
  }
  return normalized(std::move(psi));
}

/// Bloch spinor (cos(theta/2), e^{i phi} sin(theta/2)).
inline Spinor bloch_spinor(double theta, double phi) {
  return {complex(std::cos(0.5 * theta), 0.0), std::polar(std::sin(0.5 * theta), phi)};
}

inline Spinor spin_up() { return {complex(1.0, 0.0), complex(0.0, 0.0)}; }

/// psi(x) * chi for a constant spinor chi.
inline SpinorField with_spinor(const ComplexField& psi, const Spinor& chi) {
  return map(psi, [&](const complex& v) { return Spinor{v * chi[0], v * chi[1]}; });
}

}  // namespace mzbw::states

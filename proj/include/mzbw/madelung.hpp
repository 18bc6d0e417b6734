#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "mzbw/fields.hpp"
#include "mzbw/operators.hpp"

namespace mzbw {

/// rho = |psi|^2, phase = hbar arg(psi), momentum p = grad(phase) evaluated
/// through the current, p = hbar Im(psi* grad psi) / rho. Momentum is zero on
/// masked points.
struct MadelungFields {
  RealField rho;
  RealField phase;
  VectorField momentum;
  NodeMask mask;
  double norm = 0.0;
  std::vector<std::string> warnings;
};

/// Quantum potential -(hbar^2/2m) lap(sqrt rho)/sqrt rho (`q`) together with
/// the density form (hbar^2/4m)[(grad rho/rho)^2/2 - lap rho/rho] (`q_density_form`).
/// Both are zero on masked points.
struct QuantumPotentialField {
  RealField q;
  RealField q_density_form;
  NodeMask mask;
};

/// Three consecutive states of one evolution, `dt` apart.
struct SnapshotTriple {
  ComplexField before;
  ComplexField at;
  ComplexField after;
  double dt = 0.0;
};

/// A residual evaluated on unmasked points (zero elsewhere).
struct ResidualField {
  RealField values;
  NodeMask mask;
};

/// Largest |f| over points where rho > relative * max(rho).
inline double sup_on_region(const RealField& f, const RealField& rho, double relative) {
  const double cut = relative * max_value(rho);
  double m = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) {
    if (rho[n] > cut) m = std::max(m, std::abs(f[n]));
  }
  return m;
}

inline double sup_on_region(const VectorField& f, const RealField& rho, double relative) {
  const double cut = relative * max_value(rho);
  double m = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) {
    if (rho[n] > cut) m = std::max(m, norm(f[n]));
  }
  return m;
}

/// hbar Im(psi* grad psi), i.e. rho times the momentum field.
///
/// Real and imaginary parts are differentiated separately so that the result
/// is bit-identical under psi -> -psi and psi -> i psi.
inline VectorField momentum_density(const ComplexField& psi, const PhysicalParams& params,
                                    Backend backend = Backend::spectral) {
  const RealField re = real_part(psi);
  const RealField im = imag_part(psi);
  const VectorField g_re = gradient(re, backend);
  const VectorField g_im = gradient(im, backend);
  VectorField out(psi.grid());
  for (std::size_t n = 0; n < psi.size(); ++n) {
    out[n] = (g_im[n] * re[n] - g_re[n] * im[n]) * params.hbar;
  }
  return out;
}

inline MadelungFields decompose(const ComplexField& psi, const PhysicalParams& params,
                                Backend backend = Backend::spectral) {
  params.validate();
  psi.require_finite("decompose");
  MadelungFields out;
  out.rho = density(psi);
  if (max_value(out.rho) <= 0.0) throw InvalidInput("decompose: wavefunction is identically zero");
  out.norm = integrate(out.rho);
  if (std::abs(out.norm - 1.0) > 1e-6) {
    out.warnings.push_back("wavefunction norm is " + std::to_string(out.norm) + ", not 1");
  }
  out.mask = node_mask(out.rho);
  out.phase = map(psi, [&](const complex& v) { return params.hbar * std::arg(v); });
  out.momentum = momentum_density(psi, params, backend);
  for (std::size_t n = 0; n < psi.size(); ++n) {
    out.momentum[n] = out.mask[n] ? Vec3{} : out.momentum[n] / out.rho[n];
  }
  return out;
}

namespace detail {

inline void require_density(const RealField& rho, const char* op) {
  rho.require_finite(op);
  for (std::size_t n = 0; n < rho.size(); ++n) {
    if (rho[n] < 0.0) throw InvalidInput(std::string(op) + ": negative density at point " + std::to_string(n));
  }
  if (max_value(rho) <= 0.0) throw InvalidInput(std::string(op) + ": density is identically zero");
}

}  // namespace detail

/// The bracket (grad rho/rho)^2/2 - lap rho/rho, evaluated as -2 lap(sqrt rho)/sqrt rho.
/// Zero on masked points.
inline RealField quantum_bracket(const RealField& rho, const NodeMask& mask, Backend backend = Backend::spectral) {
  const RealField amp = map(rho, [](double r) { return std::sqrt(r); });
  const RealField lap = laplacian(amp, backend);
  RealField out(rho.grid());
  for (std::size_t n = 0; n < rho.size(); ++n) out[n] = mask[n] ? 0.0 : -2.0 * lap[n] / amp[n];
  return out;
}

/// hbar^2 / 4m, the coefficient multiplying the quantum bracket.
inline double quantum_coefficient(const PhysicalParams& params) { return (params.hbar * params.hbar / 4.0) / params.mass; }

inline QuantumPotentialField quantum_potential(const RealField& rho, const PhysicalParams& params,
                                               Backend backend = Backend::spectral) {
  params.validate();
  detail::require_density(rho, "quantum_potential");
  QuantumPotentialField out;
  out.mask = node_mask(rho);
  const RealField bracket = quantum_bracket(rho, out.mask, backend);
  const double c = quantum_coefficient(params);
  out.q = map(bracket, [c](double b) { return c * b; });

  const VectorField g = gradient(rho, backend);
  const RealField lap = laplacian(rho, backend);
  out.q_density_form = RealField(rho.grid());
  for (std::size_t n = 0; n < rho.size(); ++n) {
    if (out.mask[n]) continue;
    const double inv = 1.0 / rho[n];
    out.q_density_form[n] = c * (0.5 * norm2(g[n]) * inv * inv - lap[n] * inv);
  }
  return out;
}

/// (hbar^2 / 8m) (grad rho / rho)^2, the kinetic energy per particle of the
/// internal motion. Zero on masked points.
inline RealField internal_kinetic_density(const RealField& rho, const PhysicalParams& params,
                                          Backend backend = Backend::spectral) {
  params.validate();
  detail::require_density(rho, "internal_kinetic_density");
  const NodeMask mask = node_mask(rho);
  const VectorField g = gradient(rho, backend);
  const double c = (params.hbar * params.hbar / 8.0) / params.mass;
  RealField out(rho.grid());
  for (std::size_t n = 0; n < rho.size(); ++n) {
    if (!mask[n]) out[n] = c * norm2(g[n]) / (rho[n] * rho[n]);
  }
  return out;
}

/// |V| = (hbar/2) |grad rho| / (m rho). Zero on masked points.
inline RealField zbw_speed(const RealField& rho, const PhysicalParams& params, Backend backend = Backend::spectral) {
  params.validate();
  detail::require_density(rho, "zbw_speed");
  const NodeMask mask = node_mask(rho);
  const VectorField g = gradient(rho, backend);
  RealField out(rho.grid());
  for (std::size_t n = 0; n < rho.size(); ++n) {
    if (!mask[n]) out[n] = 0.5 * params.hbar * norm(g[n]) / (params.mass * rho[n]);
  }
  return out;
}

/// Central-difference d(phase)/dt at the middle snapshot, using the wrapped
/// phase increments between neighbours. Masked points give zero.
///
/// Throws NumericalError where an increment reaches pi or the two increments
/// differ by pi or more: the phase cannot be followed and dt is too large.
inline RealField phase_rate(const SnapshotTriple& s, const NodeMask& mask, const PhysicalParams& params) {
  if (!(s.dt > 0.0)) throw InvalidInput("snapshot spacing must be positive");
  if (!(s.before.grid() == s.at.grid()) || !(s.after.grid() == s.at.grid()))
    throw InvalidInput("snapshots live on different grids");
  constexpr double limit = std::numbers::pi * (1.0 - 1e-9);
  RealField out(s.at.grid());
  for (std::size_t n = 0; n < out.size(); ++n) {
    if (mask[n]) continue;
    const double up = std::arg(s.after[n] * std::conj(s.at[n]));
    const double down = std::arg(s.at[n] * std::conj(s.before[n]));
    if (std::abs(up) >= limit || std::abs(down) >= limit || std::abs(up - down) >= std::numbers::pi) {
      throw NumericalError("phase jump of pi or more between snapshots at point " + std::to_string(n) +
                           "; reduce the snapshot spacing");
    }
    out[n] = params.hbar * (up + down) / (2.0 * s.dt);
  }
  return out;
}

inline void require_triple(const SnapshotTriple& s, const char* op) {
  s.before.require_finite(std::string(op) + " (t - dt)");
  s.at.require_finite(std::string(op) + " (t)");
  s.after.require_finite(std::string(op) + " (t + dt)");
}

/// d(phi)/dt + p^2/2m + bracket_coefficient * bracket + U on unmasked points.
/// With bracket_coefficient = hbar^2/4m this is the Hamilton-Jacobi residual.
inline ResidualField hamilton_jacobi_residual_with(const SnapshotTriple& s, const RealField& potential,
                                                   double bracket_coefficient, const PhysicalParams& params,
                                                   Backend backend) {
  params.validate();
  require_triple(s, "hj_residual");
  potential.require_finite("hj_residual potential");
  if (!(potential.grid() == s.at.grid())) throw InvalidInput("potential lives on a different grid");
  const MadelungFields m = decompose(s.at, params, backend);
  const RealField rate = phase_rate(s, m.mask, params);
  const RealField bracket = quantum_bracket(m.rho, m.mask, backend);
  ResidualField out{RealField(s.at.grid()), m.mask};
  for (std::size_t n = 0; n < out.values.size(); ++n) {
    if (m.mask[n]) continue;
    out.values[n] = rate[n] + norm2(m.momentum[n]) / (2.0 * params.mass) + bracket_coefficient * bracket[n] + potential[n];
  }
  return out;
}

inline ResidualField hj_residual(const SnapshotTriple& s, const RealField& potential, const PhysicalParams& params,
                                 Backend backend = Backend::spectral) {
  return hamilton_jacobi_residual_with(s, potential, quantum_coefficient(params), params, backend);
}

/// (rho(t+dt) - rho(t-dt)) / 2dt + div(rho p / m). Defined everywhere; the
/// mask marks nodes of rho(t) for reporting.
inline ResidualField continuity_residual(const SnapshotTriple& s, const PhysicalParams& params,
                                         Backend backend = Backend::spectral) {
  params.validate();
  require_triple(s, "continuity_residual");
  if (!(s.dt > 0.0)) throw InvalidInput("snapshot spacing must be positive");
  const RealField rho_before = density(s.before);
  const RealField rho_after = density(s.after);
  const RealField div = divergence(momentum_density(s.at, params, backend), backend);
  ResidualField out{RealField(s.at.grid()), node_mask(density(s.at))};
  for (std::size_t n = 0; n < out.values.size(); ++n) {
    out.values[n] = (rho_after[n] - rho_before[n]) / (2.0 * s.dt) + div[n] / params.mass;
  }
  return out;
}

/// The on-shell Lagrangian density in hydrodynamic variables, in two forms:
/// `density_form` with (hbar^2/8m)(grad rho/rho)^2 and `koenig_form` with m V^2/2.
struct LagrangianDensity {
  RealField density_form;
  RealField koenig_form;
  NodeMask mask;
};

inline LagrangianDensity lagrangian_density(const SnapshotTriple& s, const RealField& potential,
                                            const PhysicalParams& params, Backend backend = Backend::spectral) {
  params.validate();
  require_triple(s, "lagrangian_density");
  const MadelungFields m = decompose(s.at, params, backend);
  const RealField rate = phase_rate(s, m.mask, params);
  const RealField internal = internal_kinetic_density(m.rho, params, backend);
  const RealField speed = zbw_speed(m.rho, params, backend);
  LagrangianDensity out{RealField(s.at.grid()), RealField(s.at.grid()), m.mask};
  for (std::size_t n = 0; n < m.rho.size(); ++n) {
    if (m.mask[n]) continue;
    const double common = rate[n] + norm2(m.momentum[n]) / (2.0 * params.mass) + potential[n];
    out.density_form[n] = -(common + internal[n]) * m.rho[n];
    out.koenig_form[n] = -(common + 0.5 * params.mass * speed[n] * speed[n]) * m.rho[n];
  }
  return out;
}

}  // namespace mzbw

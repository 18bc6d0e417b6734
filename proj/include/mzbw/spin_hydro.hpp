#pragma once

#include <cmath>
#include <optional>

#include "mzbw/fields.hpp"
#include "mzbw/madelung.hpp"
#include "mzbw/operators.hpp"

namespace mzbw {

/// Local spin s = psi^dag S psi / rho with S = (hbar/2) sigma, stored next to rho.
/// s is zero on masked points.
struct SpinVectorField {
  VectorField s;
  RealField rho;
  NodeMask mask;

  /// rho * s, formed on demand.
  VectorField weighted() const { return scale(s, rho); }
};

/// psi^dag S psi at one point.
inline Vec3 spin_bilinear(const Spinor& v, double hbar) {
  const complex ud = std::conj(v[0]) * v[1];
  return Vec3{2.0 * ud.real(), 2.0 * ud.imag(), std::norm(v[0]) - std::norm(v[1])} * (0.5 * hbar);
}

/// Field of psi^dag S psi (equal to rho s without the division).
inline VectorField spin_bilinear(const SpinorField& psi, const PhysicalParams& params) {
  return map(psi, [&](const Spinor& v) { return spin_bilinear(v, params.hbar); });
}

inline SpinVectorField spin_density(const SpinorField& psi, const PhysicalParams& params) {
  params.validate();
  psi.require_finite("spin_density");
  SpinVectorField out;
  out.rho = density(psi);
  out.mask = node_mask(out.rho);
  out.s = VectorField(psi.grid());
  for (std::size_t n = 0; n < psi.size(); ++n) {
    if (!out.mask[n]) out.s[n] = spin_bilinear(psi[n], params.hbar) / out.rho[n];
  }
  return out;
}

/// Spin of a constant spinor, chi^dag S chi / chi^dag chi.
inline Vec3 spin_of(const Spinor& chi, const PhysicalParams& params) {
  const double r = std::norm(chi[0]) + std::norm(chi[1]);
  if (!(r > 0.0)) throw InvalidInput("spinor is zero");
  return spin_bilinear(chi, params.hbar) / r;
}

/// hbar Im(psi^dag grad psi) summed over both spinor components.
inline VectorField momentum_density(const SpinorField& psi, const PhysicalParams& params,
                                    Backend backend = Backend::spectral) {
  VectorField out(psi.grid());
  for (std::size_t c = 0; c < 2; ++c) {
    const ComplexField comp = map(psi, [c](const Spinor& v) { return v[c]; });
    const VectorField part = momentum_density(comp, params, backend);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] += part[n];
  }
  return out;
}

/// Pauli current split into its three terms:
/// convective (hbar/m) Im(psi^dag grad psi), diamagnetic -(e A/m) rho,
/// and spin (1/m) curl(psi^dag S psi).
struct PauliCurrent {
  VectorField convective;
  VectorField diamagnetic;
  VectorField spin;
  VectorField total;
};

inline PauliCurrent pauli_current(const SpinorField& psi, const VectorField& vector_potential,
                                  const PhysicalParams& params, Backend backend = Backend::spectral) {
  params.validate();
  psi.require_finite("pauli_current");
  vector_potential.require_finite("pauli_current vector potential");
  if (!(vector_potential.grid() == psi.grid())) throw InvalidInput("vector potential lives on a different grid");
  const RealField rho = density(psi);
  const double inv_m = 1.0 / params.mass;
  PauliCurrent j;
  j.convective = momentum_density(psi, params, backend);
  j.spin = curl(spin_bilinear(psi, params), backend);
  j.diamagnetic = VectorField(psi.grid());
  j.total = VectorField(psi.grid());
  for (std::size_t n = 0; n < psi.size(); ++n) {
    j.convective[n] *= inv_m;
    j.spin[n] *= inv_m;
    j.diamagnetic[n] = vector_potential[n] * (-params.charge * rho[n] * inv_m);
    j.total[n] = j.convective[n] + j.diamagnetic[n] + j.spin[n];
  }
  return j;
}

/// v = w + V with drift w = (p - eA)/m and internal velocity V = curl(rho s)/(m rho).
/// When s is uniform on the unmasked region, `zbw_uniform_spin` also holds
/// V = grad(rho) x s / (m rho). All fields are zero on masked points.
struct VelocityDecomposition {
  VectorField drift;
  VectorField zbw;
  VectorField total;
  std::optional<VectorField> zbw_uniform_spin;
  std::optional<Vec3> uniform_spin;
  NodeMask mask;
};

/// grad(rho) x s / (m rho) for a constant spin vector s; zero on masked points.
inline VectorField zbw_velocity_uniform_spin(const RealField& rho, const Vec3& s, const PhysicalParams& params,
                                             Backend backend = Backend::spectral) {
  const NodeMask mask = node_mask(rho);
  const VectorField g = gradient(rho, backend);
  VectorField out(rho.grid());
  for (std::size_t n = 0; n < rho.size(); ++n) {
    if (!mask[n]) out[n] = cross(g[n], s) / (params.mass * rho[n]);
  }
  return out;
}

/// Returns the common spin vector if every unmasked point carries the same s
/// within `tolerance * hbar`.
inline std::optional<Vec3> uniform_spin(const SpinVectorField& s, double hbar, double tolerance = 1e-12) {
  std::optional<Vec3> first;
  for (std::size_t n = 0; n < s.s.size(); ++n) {
    if (s.mask[n]) continue;
    if (!first) {
      first = s.s[n];
    } else if (norm(s.s[n] - *first) > tolerance * hbar) {
      return std::nullopt;
    }
  }
  return first;
}

inline VelocityDecomposition velocity_decomposition(const SpinorField& psi, const VectorField& vector_potential,
                                                    const PhysicalParams& params, Backend backend = Backend::spectral) {
  params.validate();
  psi.require_finite("velocity_decomposition");
  vector_potential.require_finite("velocity_decomposition vector potential");
  const SpinVectorField spin = spin_density(psi, params);
  const VectorField momentum = momentum_density(psi, params, backend);
  const VectorField rotor = curl(spin_bilinear(psi, params), backend);
  VelocityDecomposition out;
  out.mask = spin.mask;
  out.drift = VectorField(psi.grid());
  out.zbw = VectorField(psi.grid());
  out.total = VectorField(psi.grid());
  const double m = params.mass;
  for (std::size_t n = 0; n < psi.size(); ++n) {
    if (out.mask[n]) continue;
    const double rho = spin.rho[n];
    out.drift[n] = (momentum[n] / rho - vector_potential[n] * params.charge) / m;
    out.zbw[n] = rotor[n] / (m * rho);
    out.total[n] = out.drift[n] + out.zbw[n];
  }
  out.uniform_spin = uniform_spin(spin, params.hbar);
  if (out.uniform_spin) out.zbw_uniform_spin = zbw_velocity_uniform_spin(spin.rho, *out.uniform_spin, params, backend);
  return out;
}

/// Residuals of div(rho s) = 0 and grad(rho) . s = 0, with norms.
struct HestenesResidual {
  RealField divergence;
  RealField projection;
  double divergence_max = 0.0;
  double projection_max = 0.0;
  /// sqrt( int rho r^2 / int rho ) for each residual r.
  double divergence_weighted_l2 = 0.0;
  double projection_weighted_l2 = 0.0;
};

inline HestenesResidual hestenes_residual(const RealField& rho, const SpinVectorField& s,
                                          Backend backend = Backend::spectral) {
  detail::require_density(rho, "hestenes_residual");
  s.s.require_finite("hestenes_residual spin");
  HestenesResidual out;
  out.divergence = divergence(scale(s.s, rho), backend);
  out.projection = dot(gradient(rho, backend), s.s);
  out.divergence_max = max_abs(out.divergence);
  out.projection_max = max_abs(out.projection);
  const double mass = integrate(rho);
  auto weighted = [&](const RealField& r) {
    return std::sqrt(integrate(zip(rho, r, [](double w, double v) { return w * v * v; })) / mass);
  };
  out.divergence_weighted_l2 = weighted(out.divergence);
  out.projection_weighted_l2 = weighted(out.projection);
  return out;
}

/// V^2 from the spin field in two forms:
/// `cross_form` = [(grad rho)^2 s^2 - (grad rho . s)^2] / (m rho)^2 (always valid),
/// `reduced_form` = s^2 (grad rho)^2 / (m rho)^2, set only where
/// |grad rho . s| <= tolerance * |grad rho| |s| (`reduced_valid`).
struct ZbwSquare {
  RealField cross_form;
  RealField reduced_form;
  std::vector<bool> reduced_valid;
  /// Largest |cos| between grad rho and s over unmasked points.
  double violation = 0.0;
};

inline ZbwSquare vsq_from_spin(const RealField& rho, const SpinVectorField& s, const PhysicalParams& params,
                               double tolerance = 1e-10, Backend backend = Backend::spectral) {
  params.validate();
  detail::require_density(rho, "vsq_from_spin");
  const NodeMask mask = node_mask(rho);
  const VectorField g = gradient(rho, backend);
  ZbwSquare out{RealField(rho.grid()), RealField(rho.grid()), std::vector<bool>(rho.size(), false), 0.0};
  for (std::size_t n = 0; n < rho.size(); ++n) {
    if (mask[n]) continue;
    const double mr = params.mass * rho[n];
    const double g2 = norm2(g[n]);
    const double s2 = norm2(s.s[n]);
    const double gs = dot(g[n], s.s[n]);
    out.cross_form[n] = (g2 * s2 - gs * gs) / (mr * mr);
    const double scale = std::sqrt(g2 * s2);
    const double cosine = scale > 0.0 ? std::abs(gs) / scale : 0.0;
    out.violation = std::max(out.violation, cosine);
    if (cosine <= tolerance) {
      out.reduced_valid[n] = true;
      out.reduced_form[n] = s2 * g2 / (mr * mr);
    }
  }
  return out;
}

/// Energies of a stationary-style budget: translational int rho p^2/2m,
/// internal int rho (hbar^2/8m)(grad rho/rho)^2, potential int rho U.
/// `internal_from_zbw` is int rho m V^2/2 with V = grad(rho) x s/(m rho).
struct EnergyBudget {
  double translational = 0.0;
  double internal = 0.0;
  double potential = 0.0;
  double total = 0.0;
  double internal_from_zbw = 0.0;
};

/// Kinetic split for psi = psi_scalar * chi with a constant spinor chi.
inline EnergyBudget koenig_energy(const ComplexField& psi, const Spinor& chi, const RealField& potential,
                                  const PhysicalParams& params, Backend backend = Backend::spectral) {
  params.validate();
  potential.require_finite("koenig_energy potential");
  const MadelungFields m = decompose(psi, params, backend);
  const RealField internal = internal_kinetic_density(m.rho, params, backend);
  const VectorField zbw = zbw_velocity_uniform_spin(m.rho, spin_of(chi, params), params, backend);
  const double half_m = 0.5 * params.mass;
  EnergyBudget e;
  e.translational = integrate(zip(m.rho, m.momentum, [&](double r, const Vec3& p) { return r * norm2(p) / (2.0 * params.mass); }));
  e.internal = integrate(zip(m.rho, internal, [](double r, double k) { return r * k; }));
  e.potential = integrate(zip(m.rho, potential, [](double r, double u) { return r * u; }));
  e.internal_from_zbw = integrate(zip(m.rho, zbw, [&](double r, const Vec3& v) { return r * half_m * norm2(v); }));
  e.total = e.translational + e.internal + e.potential;
  return e;
}

namespace detail {

inline RealField stationary_defect(const ComplexField& psi, double coefficient, double energy, Backend backend) {
  psi.require_finite("stationary residual");
  const ComplexField lap = laplacian(psi, backend);
  RealField out(psi.grid());
  for (std::size_t n = 0; n < psi.size(); ++n) out[n] = std::abs(-coefficient * lap[n] - energy * psi[n]);
  return out;
}

}  // namespace detail

/// |-(hbar^2/2m) lap psi - E psi| pointwise.
inline RealField free_stationary_residual(const ComplexField& psi, double energy, const PhysicalParams& params,
                                          Backend backend = Backend::spectral) {
  params.validate();
  return detail::stationary_defect(psi, (0.5 * params.hbar * params.hbar) / params.mass, energy, backend);
}

/// |-(2 s^2/m) lap psi - E psi| pointwise: the free stationary equation with
/// 2|s| in place of hbar.
inline RealField spin_schrodinger_residual(const ComplexField& psi, double energy, double spin_magnitude,
                                           const PhysicalParams& params, Backend backend = Backend::spectral) {
  params.validate();
  if (!(spin_magnitude > 0.0)) throw InvalidInput("spin magnitude must be positive");
  return detail::stationary_defect(psi, (2.0 * spin_magnitude * spin_magnitude) / params.mass, energy, backend);
}

inline RealField spin_schrodinger_residual(const ComplexField& psi, double energy, const PhysicalParams& params,
                                           Backend backend = Backend::spectral) {
  return spin_schrodinger_residual(psi, energy, 0.5 * params.hbar, params, backend);
}

/// Hamilton-Jacobi residual with s^2/m in place of hbar^2/4m.
inline ResidualField spin_hj_residual(const SnapshotTriple& s, const RealField& potential, double spin_magnitude,
                                      const PhysicalParams& params, Backend backend = Backend::spectral) {
  if (!(spin_magnitude > 0.0)) throw InvalidInput("spin magnitude must be positive");
  return hamilton_jacobi_residual_with(s, potential, (spin_magnitude * spin_magnitude) / params.mass, params, backend);
}

}  // namespace mzbw

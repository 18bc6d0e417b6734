#pragma once

// Identity battery behind `mzbw verify`.
//
// Every identity has one entry in the tolerance table. Identities that hold
// exactly in the discrete algebra ("round-off" entries) use the same bound on
// both backends. Identities that compare discrete derivatives with the
// continuum ("discretization" entries) use the spectral bound on the spectral
// backend and fd2_coefficient * h^2 on the fd2 backend, where h is the largest
// spacing of the grid the identity ran on.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mzbw/madelung.hpp"
#include "mzbw/spin_hydro.hpp"
#include "mzbw/states.hpp"

namespace mzbw::verify {

inline constexpr const char* kToleranceTableVersion = "1";

/// Points with rho above this fraction of max(rho) form the region on which
/// residuals and relative errors are measured.
inline constexpr double kResolvedRegion = 1e-6;

struct Tolerance {
  const char* id;
  const char* description;
  double spectral;
  bool discretization;
  double fd2_coefficient;  ///< fd2 bound = coefficient * h^2 (discretization entries only)

  double bound(Backend backend, double h) const {
    if (backend == Backend::fd2 && discretization) return fd2_coefficient * h * h;
    return spectral;
  }
};

inline const std::vector<Tolerance>& tolerance_table() {
  static const std::vector<Tolerance> table = {
      {"quantum-potential-forms", "sqrt-density and density forms of the quantum potential, relative to max|Q|", 1e-8, true, 40.0},
      {"quantum-potential-gaussian", "Q of a unit Gaussian vs (1 - x^2/2)/4 on |x| < 5", 1e-8, true, 2.0},
      {"internal-kinetic-zbw", "(hbar^2/8m)(grad rho/rho)^2 vs m|V|^2/2, relative", 1e-12, false, 0.0},
      {"zbw-speed", "|curl(rho s)/(m rho)| vs (hbar/2)|grad rho|/(m rho), relative", 1e-10, false, 0.0},
      {"zbw-uniform-spin", "curl(rho s)/(m rho) vs grad rho x s/(m rho) for uniform s, relative", 1e-10, false, 0.0},
      {"pauli-current", "rho (drift + zbw) vs Pauli current, max abs", 1e-8, false, 0.0},
      {"rotor-divergence", "max |div(rho V)| for uniform s", 1e-10, false, 0.0},
      {"cross-square", "(a x b)^2 vs a^2 b^2 - (a.b)^2 on random fields, relative", 1e-12, false, 0.0},
      {"vsq-reduction", "cross and reduced V^2 forms where grad rho . s = 0, relative", 1e-12, false, 0.0},
      {"hestenes-planar", "max |div(rho s)| and |grad rho . s| for planar states", 1e-12, false, 0.0},
      {"hestenes-violation-3d", "grad rho . s of a 3D Gaussian vs -(hbar/2) z rho, relative (must be detected)", 1e-8, true, 2.0},
      {"spin-hj-substitution", "spin Hamilton-Jacobi residual at |s| = hbar/2 vs Hamilton-Jacobi residual", 1e-14, false, 0.0},
      {"spin-schrodinger-plane-wave", "-(2s^2/m) lap psi - E psi with E = 2 s^2 k^2/m, max abs", 1e-10, true, 2.0},
      {"koenig-split", "harmonic ground budget vs (0, 1/4, 1/4, 1/2)", 1e-8, true, 2.0},
      {"koenig-internal-zbw", "int rho (hbar^2/8m)(grad rho/rho)^2 vs int rho m V^2/2, relative", 1e-10, false, 0.0},
      {"madelung-hj-stationary", "Hamilton-Jacobi residual of a stationary state on the resolved region", 1e-6, true, 8.0},
      {"continuity-stationary", "continuity residual of stationary and plane-wave states", 1e-10, false, 0.0},
      {"lagrangian-forms", "density and Koenig forms of the Lagrangian density, relative", 1e-12, false, 0.0},
  };
  return table;
}

inline const Tolerance& tolerance(const std::string& id) {
  for (const auto& t : tolerance_table()) {
    if (id == t.id) return t;
  }
  throw InvalidInput("unknown identity " + id);
}

struct IdentityResult {
  std::string id;
  std::string state;
  std::size_t points = 0;  ///< grid points per axis
  double spacing = 0.0;
  double error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct Options {
  Backend backend = Backend::spectral;
  /// Resolution multiplier applied to every battery grid.
  std::size_t refinement = 1;
  /// Test hook: flip the sign of Q in the two-forms comparison only.
  bool flip_quantum_potential_sign = false;
  /// Unit charge so the diamagnetic term of the current is exercised.
  PhysicalParams params{1.0, 1.0, 1.0};
};

struct Report {
  Backend backend = Backend::spectral;
  std::vector<IdentityResult> results;

  bool all_pass() const {
    for (const auto& r : results) {
      if (!r.pass) return false;
    }
    return !results.empty();
  }

  std::vector<std::string> failing_ids() const {
    std::vector<std::string> out;
    for (const auto& r : results) {
      if (!r.pass && std::find(out.begin(), out.end(), r.id) == out.end()) out.push_back(r.id);
    }
    return out;
  }
};

namespace detail {

struct ScalarState {
  std::string name;
  ComplexField psi;
  RealField potential;
  std::optional<double> energy;  ///< set for stationary states
  Vec3 k;                        ///< plane-wave wavenumber, zero otherwise
};

inline double max_spacing(const Grid& g) {
  double h = 0.0;
  for (std::size_t a = 0; a < g.dims(); ++a) h = std::max(h, g.spacing(a));
  return h;
}

inline std::vector<ScalarState> scalar_battery(const Options& o) {
  const PhysicalParams& p = o.params;
  const std::size_t r = o.refinement;
  std::vector<ScalarState> out;
  {
    const Grid g = Grid::line(64 * r, 2.0 * M_PI);
    const auto k = states::plane_wave_k(g, {1, 0, 0});
    out.push_back({"plane-wave-1d", states::plane_wave(g, {1, 0, 0}), RealField(g),
                   p.hbar * p.hbar * norm2(k) / (2.0 * p.mass), k});
  }
  {
    const Grid g = Grid::line(256 * r, 40.0);
    out.push_back({"gaussian-1d", states::gaussian(g, {}, 1.0, {}, p), RealField(g), std::nullopt, {}});
  }
  {
    const Grid g = Grid::line(256 * r, 40.0);
    out.push_back({"boosted-gaussian-1d", states::gaussian(g, {}, 1.0, {1.0, 0.0, 0.0}, p), RealField(g), std::nullopt, {}});
  }
  {
    const Grid g = Grid::line(256 * r, 40.0);
    const double omega = 1.0;
    out.push_back({"harmonic-ground-1d", states::harmonic_ground(g, omega, p), states::harmonic_potential(g, omega, p),
                   0.5 * p.hbar * omega, {}});
  }
  {
    const Grid g = Grid::plane(64 * r, 64 * r, 20.0, 20.0);
    out.push_back({"gaussian-2d", states::gaussian(g, {}, 1.0, {}, p), RealField(g), std::nullopt, {}});
  }
  {
    const Grid g = Grid::plane(64 * r, 64 * r, 2.0 * M_PI, 2.0 * M_PI);
    out.push_back({"random-smooth-2d", states::random_smooth(g, 20240611), RealField(g), std::nullopt, {}});
  }
  return out;
}

/// psi(t - dt), psi(t), psi(t + dt) of a stationary state with energy E.
inline SnapshotTriple stationary_triple(const ComplexField& psi, double energy, double dt, const PhysicalParams& p) {
  auto at_time = [&](double t) {
    const complex f = std::polar(1.0, -energy * t / p.hbar);
    return map(psi, [f](const complex& v) { return v * f; });
  };
  return {at_time(-dt), psi, at_time(dt), dt};
}

/// max |a - b| over `use` points divided by max(1, max |b|): relative for
/// O(1) and larger references, absolute when the reference is round-off.
inline double relative_gap(const RealField& a, const RealField& b, const std::function<bool(std::size_t)>& use) {
  double gap = 0.0, scale = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (!use(n)) continue;
    gap = std::max(gap, std::abs(a[n] - b[n]));
    scale = std::max(scale, std::abs(b[n]));
  }
  return gap / std::max(1.0, scale);
}

inline double relative_gap(const VectorField& a, const VectorField& b, const std::function<bool(std::size_t)>& use) {
  double gap = 0.0, scale = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (!use(n)) continue;
    gap = std::max(gap, norm(a[n] - b[n]));
    scale = std::max(scale, norm(b[n]));
  }
  return gap / std::max(1.0, scale);
}

}  // namespace detail

/// Runs every identity on the built-in state battery.
inline Report run_battery(const Options& o) {
  o.params.validate();
  if (o.refinement == 0) throw InvalidInput("refinement must be at least 1");
  const PhysicalParams& p = o.params;
  const Backend be = o.backend;
  Report report;
  report.backend = be;

  auto record = [&](const std::string& id, const std::string& state, const Grid& g, double error) {
    const Tolerance& t = tolerance(id);
    IdentityResult r;
    r.id = id;
    r.state = state;
    r.points = g.points(0);
    r.spacing = detail::max_spacing(g);
    r.error = error;
    r.tolerance = t.bound(be, r.spacing);
    r.pass = std::isfinite(error) && error <= r.tolerance;
    report.results.push_back(r);
  };

  const auto battery = detail::scalar_battery(o);
  const Spinor up = states::spin_up();
  const Spinor tilted = states::bloch_spinor(M_PI / 3.0, 0.4);

  for (const auto& st : battery) {
    const Grid& g = st.psi.grid();
    const RealField rho = density(st.psi);
    const double cut = kResolvedRegion * max_value(rho);
    auto resolved = [&](std::size_t n) { return rho[n] > cut; };

    // Quantum potential, two closed forms.
    {
      const QuantumPotentialField q = quantum_potential(rho, p, be);
      RealField compared = q.q;
      if (o.flip_quantum_potential_sign) {
        for (auto& v : compared) v = -v;
      }
      record("quantum-potential-forms", st.name, g, detail::relative_gap(q.q_density_form, compared, resolved));
      if (st.name == "gaussian-1d") {
        double err = 0.0;
        for (std::size_t n = 0; n < g.size(); ++n) {
          const double x = g.position(n)[0];
          if (std::abs(x) < 5.0) err = std::max(err, std::abs(q.q[n] - (1.0 - 0.5 * x * x) / 4.0));
        }
        record("quantum-potential-gaussian", st.name, g, err);
      }
    }

    // Internal kinetic energy per particle vs m|V|^2/2.
    {
      const NodeMask mask = node_mask(rho);
      const RealField internal = internal_kinetic_density(rho, p, be);
      const RealField speed = zbw_speed(rho, p, be);
      const RealField from_speed = map(speed, [&](double v) { return 0.5 * p.mass * v * v; });
      record("internal-kinetic-zbw", st.name, g,
             detail::relative_gap(from_speed, internal, [&](std::size_t n) { return !mask[n]; }));
    }

    // Spin analysis on psi * chi for a planar (spin-up) and a tilted spinor.
    for (const auto& [chi, label, planar] : {std::tuple{up, "up", true}, std::tuple{tilted, "tilted", false}}) {
      const std::string name = st.name + "/" + label;
      const SpinorField spinor = states::with_spinor(st.psi, chi);
      VectorField a(g);
      if (st.name == "boosted-gaussian-1d") {
        for (auto& v : a) v = Vec3{0.3, 0.0, 0.0};
      }
      const VelocityDecomposition vd = velocity_decomposition(spinor, a, p, be);
      const PauliCurrent j = pauli_current(spinor, a, p, be);
      const SpinVectorField s = spin_density(spinor, p);
      const RealField& rho_s = s.rho;
      auto unmasked = [&](std::size_t n) { return !vd.mask[n]; };

      record("pauli-current", name, g, max_abs(zip(scale(vd.total, rho_s), j.total, [](const Vec3& x, const Vec3& y) {
               return x - y;
             })));
      record("zbw-uniform-spin", name, g,
             vd.zbw_uniform_spin ? detail::relative_gap(vd.zbw, *vd.zbw_uniform_spin, resolved) : INFINITY);
      record("rotor-divergence", name, g, max_abs(divergence(scale(vd.zbw, rho_s), be)));

      if (planar) {
        const RealField speed = zbw_speed(rho_s, p, be);
        const RealField zbw_norm = map(vd.zbw, [](const Vec3& v) { return norm(v); });
        record("zbw-speed", name, g, detail::relative_gap(zbw_norm, speed, unmasked));

        const HestenesResidual hr = hestenes_residual(rho_s, s, be);
        record("hestenes-planar", name, g, std::max(hr.divergence_max, hr.projection_max));

        const ZbwSquare v2 = vsq_from_spin(rho_s, s, p, 1e-10, be);
        bool all_valid = true;
        for (std::size_t n = 0; n < g.size(); ++n) all_valid = all_valid && (vd.mask[n] || v2.reduced_valid[n]);
        record("vsq-reduction", name, g,
               all_valid ? detail::relative_gap(v2.reduced_form, v2.cross_form, unmasked) : INFINITY);
      }
    }

    // Energy split, stationary residuals and the spin-rewritten equations.
    if (st.energy) {
      const SnapshotTriple tr = detail::stationary_triple(st.psi, *st.energy, 1e-3, p);
      const ResidualField hj = hj_residual(tr, st.potential, p, be);
      const ResidualField shj = spin_hj_residual(tr, st.potential, 0.5 * p.hbar, p, be);
      record("spin-hj-substitution", st.name, g,
             max_abs(zip(hj.values, shj.values, [](double x, double y) { return x - y; })));
      const ResidualField cont = continuity_residual(tr, p, be);
      record("continuity-stationary", st.name, g, sup_on_region(cont.values, rho, kResolvedRegion));
      const LagrangianDensity lag = lagrangian_density(tr, st.potential, p, be);
      record("lagrangian-forms", st.name, g,
             detail::relative_gap(lag.koenig_form, lag.density_form, [&](std::size_t n) { return !lag.mask[n]; }));

      if (st.name == "harmonic-ground-1d") {
        record("madelung-hj-stationary", st.name, g, sup_on_region(hj.values, rho, kResolvedRegion));
        const EnergyBudget e = koenig_energy(st.psi, up, st.potential, p, be);
        const double err = std::max({std::abs(e.translational), std::abs(e.internal - 0.25), std::abs(e.potential - 0.25),
                                     std::abs(e.total - 0.5)});
        record("koenig-split", st.name, g, err);
        record("koenig-internal-zbw", st.name, g, std::abs(e.internal - e.internal_from_zbw) / e.internal);
      }
      if (st.name == "plane-wave-1d") {
        const double s_mag = 0.5 * p.hbar;
        const double energy = 2.0 * s_mag * s_mag * norm2(st.k) / p.mass;
        record("spin-schrodinger-plane-wave", st.name, g, max_abs(spin_schrodinger_residual(st.psi, energy, s_mag, p, be)));
      }
    }
  }

  // Pointwise cross-square identity on random vector fields.
  {
    const Grid g = Grid::line(256 * o.refinement, 1.0);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double err = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
      const Vec3 a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)};
      const double lhs = norm2(cross(a, b));
      const double rhs = norm2(a) * norm2(b) - dot(a, b) * dot(a, b);
      err = std::max(err, std::abs(lhs - rhs) / (norm2(a) * norm2(b)));
    }
    record("cross-square", "random-vectors", g, err);
  }

  // A 3D Gaussian with s along z violates grad rho . s = 0; the residual must
  // be detected and match -(hbar/2) z rho.
  {
    const std::size_t n = 40 * o.refinement;
    const Grid g = Grid::box(n, n, n, 16.0, 16.0, 16.0);
    const ComplexField psi = states::gaussian(g, {}, 1.0, {}, p);
    const SpinVectorField s = spin_density(states::with_spinor(psi, up), p);
    const HestenesResidual hr = hestenes_residual(s.rho, s, be);
    double gap = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double expected = -0.5 * p.hbar * g.position(i)[2] * s.rho[i];
      gap = std::max(gap, std::abs(hr.projection[i] - expected));
      scale = std::max(scale, std::abs(expected));
    }
    const bool detected = hr.projection_max > 0.5 * scale;
    record("hestenes-violation-3d", "gaussian-3d/up", g, detected ? gap / scale : INFINITY);
  }

  return report;
}

}  // namespace mzbw::verify

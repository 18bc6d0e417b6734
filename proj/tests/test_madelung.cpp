#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mzbw/madelung.hpp"
#include "mzbw/states.hpp"

namespace {

using namespace mzbw;
constexpr double kPi = std::numbers::pi;
const PhysicalParams kUnit{};

// Grid with x = 1 and x = 2 on grid points.
Grid gaussian_grid() { return Grid::line(320, 40.0); }

std::size_t index_of(const Grid& g, double x) { return static_cast<std::size_t>(std::llround((x + 0.5 * g.extent(0)) / g.spacing(0))); }

RealField unit_gaussian_density(const Grid& g) {
  return RealField::sample(g, [](double x, double, double) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); });
}

SnapshotTriple exact_triple(const ComplexField& psi, double energy, double dt) {
  auto at = [&](double t) { return map(psi, [&](const complex& v) { return v * std::polar(1.0, -energy * t); }); };
  return {at(-dt), psi, at(dt), dt};
}

TEST(Decompose, PlaneWave) {
  const double L = 2.0 * kPi;
  const Grid g = Grid::line(64, L);
  const MadelungFields m = decompose(states::plane_wave(g, {1, 0, 0}), kUnit);
  EXPECT_TRUE(m.warnings.empty());
  for (std::size_t n = 0; n < g.size(); ++n) {
    EXPECT_NEAR(m.rho[n], 1.0 / L, 1e-15);
    EXPECT_NEAR(m.momentum[n].x, 1.0, 1e-12);
  }
}

TEST(Decompose, RealGaussianHasNoMomentumOrPhase) {
  const Grid g = Grid::line(256, 40.0);
  const MadelungFields m = decompose(states::gaussian(g, {}, 1.0, {}, kUnit), kUnit);
  EXPECT_EQ(max_abs(m.momentum), 0.0);
  EXPECT_EQ(max_abs(m.phase), 0.0);
  EXPECT_NEAR(m.norm, 1.0, 1e-10);
}

TEST(Decompose, BoostedGaussian) {
  const Grid g = Grid::line(256, 40.0);
  const ComplexField psi = ComplexField::sample(g, [](double x, double, double) {
    return std::polar(std::pow(2.0 * kPi, -0.25) * std::exp(-x * x / 4.0), x);
  });
  const MadelungFields m = decompose(psi, kUnit);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double x = g.coordinate(0, n);
    EXPECT_NEAR(m.rho[n], std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi), 1e-15);
    if (m.rho[n] > 1e-6 * max_value(m.rho)) {
      EXPECT_NEAR(m.momentum[n].x, 1.0, 1e-8) << "x = " << x;
    }
  }
}

TEST(Decompose, MomentumMatchesUnwrappedPhaseGradient) {
  // S = x + 0.3 sin(x) + 0.1 sin(2x), so p = 1 + 0.3 cos(x) + 0.2 cos(2x).
  const Grid g = Grid::line(128, 2.0 * kPi);
  const ComplexField psi = ComplexField::sample(g, [](double x, double, double) {
    return std::polar(1.0 + 0.2 * std::cos(x), x + 0.3 * std::sin(x) + 0.1 * std::sin(2.0 * x));
  });
  const MadelungFields m = decompose(states::normalized(psi), kUnit);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double x = g.coordinate(0, n);
    EXPECT_NEAR(m.momentum[n].x, 1.0 + 0.3 * std::cos(x) + 0.2 * std::cos(2.0 * x), 1e-8);
  }
}

TEST(Decompose, RejectsZeroAndWarnsOnNorm) {
  const Grid g = Grid::line(16, 1.0);
  EXPECT_THROW(decompose(ComplexField(g), kUnit), InvalidInput);
  const MadelungFields m = decompose(ComplexField(g, complex(2.0, 0.0)), kUnit);
  EXPECT_EQ(m.warnings.size(), 1u);
}

TEST(Decompose, GlobalPhaseRotation) {
  const Grid g = Grid::plane(32, 32, 2.0 * kPi, 2.0 * kPi);
  const ComplexField psi = states::random_smooth(g, 99);
  const MadelungFields ref = decompose(psi, kUnit);
  for (complex f : {complex(-1, 0), complex(0, 1), complex(0, -1)}) {
    const MadelungFields m = decompose(map(psi, [f](const complex& v) { return f * v; }), kUnit);
    EXPECT_EQ(m.rho, ref.rho);
    EXPECT_EQ(m.momentum, ref.momentum);
  }
  const double alpha = 0.37;
  const MadelungFields m = decompose(map(psi, [&](const complex& v) { return v * std::polar(1.0, alpha); }), kUnit);
  for (std::size_t n = 0; n < g.size(); ++n) {
    EXPECT_NEAR(m.rho[n], ref.rho[n], 1e-15);
    EXPECT_NEAR(norm(m.momentum[n] - ref.momentum[n]), 0.0, 1e-12);
    const double shift = std::remainder(m.phase[n] - ref.phase[n] - alpha, 2.0 * kPi);
    EXPECT_NEAR(shift, 0.0, 1e-12);
  }
}

TEST(QuantumPotential, GaussianOracle) {
  const Grid g = gaussian_grid();
  const QuantumPotentialField q = quantum_potential(unit_gaussian_density(g), kUnit);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double x = g.coordinate(0, n);
    if (std::abs(x) < 5.0) {
      EXPECT_NEAR(q.q[n], (1.0 - 0.5 * x * x) / 4.0, 1e-8);
    }
  }
  EXPECT_NEAR(q.q[index_of(g, 0.0)], 0.25, 1e-10);
  EXPECT_NEAR(q.q[index_of(g, 2.0)], -0.25, 1e-10);
}

TEST(QuantumPotential, HarmonicGroundPlusPotentialIsEnergy) {
  const Grid g = Grid::line(256, 40.0);
  const RealField rho = density(states::harmonic_ground(g, 1.0, kUnit));
  const QuantumPotentialField q = quantum_potential(rho, kUnit);
  const RealField u = states::harmonic_potential(g, 1.0, kUnit);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double x = g.coordinate(0, n);
    if (std::abs(x) < 4.0) {
      EXPECT_NEAR(q.q[n], 0.5 * (1.0 - x * x), 1e-8);
      EXPECT_NEAR(q.q[n] + u[n], 0.5, 1e-8);
    }
  }
}

TEST(QuantumPotential, ConstantDensityAndPlaneWave) {
  const Grid g = Grid::plane(16, 16, 3.0, 3.0);
  const QuantumPotentialField q = quantum_potential(RealField(g, 1.0 / 9.0), kUnit);
  EXPECT_LT(max_abs(q.q), 1e-12);
  EXPECT_LT(max_abs(q.q_density_form), 1e-12);
  const Grid line = Grid::line(64, 2.0 * kPi);
  const RealField rho = density(states::plane_wave(line, {3, 0, 0}));
  EXPECT_LT(max_abs(quantum_potential(rho, kUnit).q), 1e-12);
  EXPECT_LT(max_abs(zbw_speed(rho, kUnit)), 1e-12);
}

TEST(QuantumPotential, TwoFormsAgree) {
  for (const ComplexField& psi :
       {states::gaussian(Grid::line(256, 40.0), {0.5, 0, 0}, 1.2, {}, kUnit),
        states::random_smooth(Grid::plane(64, 64, 2.0 * kPi, 2.0 * kPi), 5),
        states::gaussian(Grid::plane(64, 64, 20.0, 20.0), {}, 1.0, {0.3, -0.2, 0}, kUnit)}) {
    const RealField rho = density(psi);
    const QuantumPotentialField q = quantum_potential(rho, kUnit);
    const double cut = 1e-6 * max_value(rho);
    double gap = 0.0, scale = 0.0;
    for (std::size_t n = 0; n < rho.size(); ++n) {
      if (rho[n] <= cut) continue;
      gap = std::max(gap, std::abs(q.q[n] - q.q_density_form[n]));
      scale = std::max(scale, std::abs(q.q[n]));
    }
    EXPECT_LE(gap, 1e-8 * std::max(1.0, scale));
  }
}

TEST(QuantumPotential, MasksNodesAndRejectsNegativeDensity) {
  const Grid g = Grid::line(64, 2.0 * kPi);
  const RealField rho = RealField::sample(g, [](double x, double, double) { return std::pow(std::sin(x), 2); });
  const QuantumPotentialField q = quantum_potential(rho, kUnit);
  EXPECT_GT(q.mask.count(), 0u);
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (q.mask[n]) {
      EXPECT_EQ(q.q[n], 0.0);
    }
    EXPECT_TRUE(std::isfinite(q.q[n]));
  }
  RealField bad(g, 1.0);
  bad[4] = -1e-3;
  EXPECT_THROW(quantum_potential(bad, kUnit), InvalidInput);
}

TEST(InternalKinetic, GaussianValuesAndSpeedConsistency) {
  const Grid g = gaussian_grid();
  const RealField rho = unit_gaussian_density(g);
  const RealField k = internal_kinetic_density(rho, kUnit);
  const RealField v = zbw_speed(rho, kUnit);
  EXPECT_NEAR(k[index_of(g, 1.0)], 0.125, 1e-10);
  EXPECT_NEAR(v[index_of(g, 1.0)], 0.5, 1e-10);
  EXPECT_NEAR(v[index_of(g, 2.0)], 1.0, 1e-10);
  for (std::size_t n = 0; n < g.size(); ++n) {
    EXPECT_GE(k[n], 0.0);
    EXPECT_LE(std::abs(k[n] - 0.5 * v[n] * v[n]), 1e-12 * std::max(1.0, k[n]));
  }
  EXPECT_LT(max_abs(internal_kinetic_density(RealField(g, 0.025), kUnit)), 1e-12);
  EXPECT_LT(max_abs(zbw_speed(RealField(g, 0.025), kUnit)), 1e-12);
}

TEST(Residuals, HarmonicGroundState) {
  const Grid g = Grid::line(256, 40.0);
  const ComplexField psi = states::harmonic_ground(g, 1.0, kUnit);
  const RealField u = states::harmonic_potential(g, 1.0, kUnit);
  const SnapshotTriple s = exact_triple(psi, 0.5, 1e-3);
  const RealField rho = density(psi);
  EXPECT_LT(sup_on_region(hj_residual(s, u, kUnit).values, rho, 1e-6), 1e-6);
  EXPECT_LT(max_abs(continuity_residual(s, kUnit).values), 1e-10);
}

TEST(Residuals, PlaneWave) {
  const Grid g = Grid::line(64, 2.0 * kPi);
  const ComplexField psi = states::plane_wave(g, {2, 0, 0});
  const SnapshotTriple s = exact_triple(psi, 2.0, 1e-3);
  EXPECT_LT(max_abs(hj_residual(s, RealField(g), kUnit).values), 1e-10);
  EXPECT_LT(max_abs(continuity_residual(s, kUnit).values), 1e-12);
}

TEST(Residuals, RejectPhaseJumps) {
  const Grid g = Grid::line(64, 2.0 * kPi);
  const ComplexField psi = states::plane_wave(g, {2, 0, 0});
  // E dt = pi / 2 per snapshot is fine; E dt = pi is not.
  EXPECT_NO_THROW(hj_residual(exact_triple(psi, 2.0, 0.25 * kPi), RealField(g), kUnit));
  EXPECT_THROW(hj_residual(exact_triple(psi, 2.0, 0.5 * kPi), RealField(g), kUnit), NumericalError);
  SnapshotTriple s = exact_triple(psi, 2.0, 1e-3);
  s.dt = 0.0;
  EXPECT_THROW(hj_residual(s, RealField(g), kUnit), InvalidInput);
}

TEST(Lagrangian, PlaneWaveVanishes) {
  const Grid g = Grid::line(64, 2.0 * kPi);
  const ComplexField psi = states::plane_wave(g, {1, 0, 0});
  const LagrangianDensity lag = lagrangian_density(exact_triple(psi, 0.5, 1e-3), RealField(g), kUnit);
  EXPECT_LT(max_abs(lag.density_form), 1e-10);
  EXPECT_LT(max_abs(lag.koenig_form), 1e-10);
}

TEST(Lagrangian, GroundStateOnShellValue) {
  // On shell the density equals -(hbar^2/4m) lap(rho) = (1/2 - x^2) rho for
  // the oscillator ground state; its integral vanishes.
  const Grid g = Grid::line(256, 40.0);
  const ComplexField psi = states::harmonic_ground(g, 1.0, kUnit);
  const LagrangianDensity lag = lagrangian_density(exact_triple(psi, 0.5, 1e-3), states::harmonic_potential(g, 1.0, kUnit), kUnit);
  const RealField rho = density(psi);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double x = g.coordinate(0, n);
    EXPECT_NEAR(lag.density_form[n], (0.5 - x * x) * rho[n], 1e-7);
  }
  EXPECT_NEAR(integrate(lag.density_form), 0.0, 1e-7);
}

TEST(Lagrangian, TwoFormsAgreeOnRandomStates) {
  const Grid g = Grid::plane(32, 32, 2.0 * kPi, 2.0 * kPi);
  const ComplexField psi = states::random_smooth(g, 3);
  SnapshotTriple s{psi, psi, psi, 1e-3};
  const LagrangianDensity lag = lagrangian_density(s, RealField(g), kUnit);
  for (std::size_t n = 0; n < g.size(); ++n) {
    EXPECT_LE(std::abs(lag.density_form[n] - lag.koenig_form[n]), 1e-12 * std::max(1.0, std::abs(lag.density_form[n])));
  }
}

}  // namespace

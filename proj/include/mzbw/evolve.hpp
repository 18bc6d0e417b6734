#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "mzbw/fft.hpp"
#include "mzbw/fields.hpp"
#include "mzbw/madelung.hpp"

namespace mzbw {

struct EvolutionConfig {
  double dt = 1e-3;
  std::size_t steps = 1;
  std::size_t snapshot_stride = 1;
  RealField potential;  ///< static external potential U
  PhysicalParams params;

  double total_time() const { return dt * static_cast<double>(steps); }

  void validate(const Grid& grid) const {
    params.validate();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("evolution dt must be positive");
    if (steps == 0) throw InvalidInput("evolution needs at least one step");
    if (snapshot_stride == 0) throw InvalidInput("snapshot stride must be positive");
    if (steps % snapshot_stride != 0) throw InvalidInput("snapshot stride must divide the step count");
    if (!(potential.grid() == grid)) throw InvalidInput("potential lives on a different grid");
    potential.require_finite("evolution potential");
  }
};

struct Observables {
  double norm = 0.0;
  double energy = 0.0;  ///< <H> / <psi|psi>
  Vec3 mean;
  Vec3 width;  ///< per-axis standard deviation of rho
};

/// Norm, energy, mean position and width. Kinetic energy is evaluated in
/// Fourier space with the same wavenumbers as the spectral Laplacian.
inline Observables observables(const ComplexField& psi, const RealField& potential, const PhysicalParams& params) {
  params.validate();
  psi.require_finite("observables");
  const Grid& g = psi.grid();
  const RealField rho = density(psi);
  Observables o;
  o.norm = integrate(rho);
  if (!(o.norm > 0.0)) throw InvalidInput("observables: wavefunction is identically zero");

  Fft fft(g);
  auto buf = fft.data();
  for (std::size_t n = 0; n < psi.size(); ++n) buf[n] = psi[n];
  fft.forward();
  double kinetic_sum = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto ijk = g.unravel(n);
    double k2 = 0.0;
    for (std::size_t a = 0; a < g.dims(); ++a) {
      const double k = g.wavenumber(a, ijk[a]);
      k2 += k * k;
    }
    kinetic_sum += k2 * std::norm(buf[n]);
  }
  // Parseval: sum_n |f_n|^2 = sum_k |F_k|^2 / N
  const double kinetic = (0.5 * params.hbar * params.hbar / params.mass) * kinetic_sum / static_cast<double>(g.size()) *
                         g.cell_volume();
  const double pot = integrate(zip(rho, potential, [](double r, double u) { return r * u; }));
  o.energy = (kinetic + pot) / o.norm;

  for (std::size_t a = 0; a < g.dims(); ++a) {
    RealField first(g), second(g);
    for (std::size_t n = 0; n < g.size(); ++n) {
      const double x = g.position(n)[a];
      first[n] = rho[n] * x;
      second[n] = rho[n] * x * x;
    }
    o.mean[a] = integrate(first) / o.norm;
    o.width[a] = std::sqrt(std::max(0.0, integrate(second) / o.norm - o.mean[a] * o.mean[a]));
  }
  return o;
}

struct SnapshotSeries {
  std::vector<double> times;
  std::vector<ComplexField> states;
  std::vector<double> norms;
  std::vector<double> energies;
  std::vector<std::string> warnings;

  /// Snapshots k-1, k, k+1 as a triple; requires 1 <= k < size - 1.
  SnapshotTriple triple(std::size_t k) const {
    if (k == 0 || k + 1 >= states.size()) throw InvalidInput("triple index out of range");
    return {states[k - 1], states[k], states[k + 1], times[k] - times[k - 1]};
  }
};

/// Second-order symmetric split-step propagation: half potential kick,
/// exact kinetic step in Fourier space, half potential kick.
class SplitStepPropagator {
 public:
  SplitStepPropagator(const Grid& grid, const EvolutionConfig& cfg)
      : grid_(grid), fft_(grid), kinetic_(grid.size()), kick_(grid.size()) {
    cfg.validate(grid);
    const double hbar = cfg.params.hbar;
    max_kinetic_phase_ = 0.0;
    for (std::size_t n = 0; n < grid.size(); ++n) {
      const auto ijk = grid.unravel(n);
      double k2 = 0.0;
      for (std::size_t a = 0; a < grid.dims(); ++a) {
        const double k = grid.wavenumber(a, ijk[a]);
        k2 += k * k;
      }
      const double phase = hbar * k2 * cfg.dt / (2.0 * cfg.params.mass);
      max_kinetic_phase_ = std::max(max_kinetic_phase_, phase);
      kinetic_[n] = std::polar(1.0, -phase);
      kick_[n] = std::polar(1.0, -0.5 * cfg.potential[n] * cfg.dt / hbar);
    }
  }

  /// Largest per-step kinetic phase hbar k^2 dt / 2m over the grid.
  double max_kinetic_phase() const { return max_kinetic_phase_; }

  void step(ComplexField& psi) {
    auto buf = fft_.data();
    for (std::size_t n = 0; n < psi.size(); ++n) buf[n] = psi[n] * kick_[n];
    fft_.forward();
    for (std::size_t n = 0; n < psi.size(); ++n) buf[n] *= kinetic_[n];
    fft_.backward();
    for (std::size_t n = 0; n < psi.size(); ++n) psi[n] = buf[n] * kick_[n];
  }

 private:
  Grid grid_;
  Fft fft_;
  std::vector<complex> kinetic_;
  std::vector<complex> kick_;
  double max_kinetic_phase_ = 0.0;
};

/// Receives, for every snapshot after the first, the states one step before,
/// at and one step after it (spacing dt) for residual evaluation.
using TripleHook = std::function<void(std::size_t snapshot, const SnapshotTriple&)>;

inline SnapshotSeries propagate(const ComplexField& psi0, const EvolutionConfig& cfg, const TripleHook& hook = {}) {
  psi0.require_finite("propagate initial state");
  SplitStepPropagator stepper(psi0.grid(), cfg);
  SnapshotSeries series;
  if (stepper.max_kinetic_phase() > std::numbers::pi) {
    series.warnings.push_back("unresolved kinetic phase: max hbar k^2 dt / 2m = " +
                              std::to_string(stepper.max_kinetic_phase()) + " > pi");
  }
  const double n0 = integrate(density(psi0));
  if (std::abs(n0 - 1.0) > 1e-6) series.warnings.push_back("initial state norm is " + std::to_string(n0) + ", not 1");

  auto record = [&](const ComplexField& psi, std::size_t step) {
    const Observables o = observables(psi, cfg.potential, cfg.params);
    series.times.push_back(cfg.dt * static_cast<double>(step));
    series.states.push_back(psi);
    series.norms.push_back(o.norm);
    series.energies.push_back(o.energy);
  };

  ComplexField psi = psi0;
  ComplexField previous;
  record(psi, 0);
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    if (hook) previous = psi;
    stepper.step(psi);
    if (step % cfg.snapshot_stride == 0) {
      psi.require_finite("propagate at step " + std::to_string(step));
      record(psi, step);
      if (hook) {
        ComplexField next = psi;
        stepper.step(next);
        hook(series.states.size() - 1, SnapshotTriple{previous, psi, std::move(next), cfg.dt});
      }
    }
  }
  return series;
}

}  // namespace mzbw

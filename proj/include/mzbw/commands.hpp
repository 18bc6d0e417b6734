#pragma once

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mzbw/config.hpp"
#include "mzbw/evolve.hpp"
#include "mzbw/field_io.hpp"
#include "mzbw/madelung.hpp"
#include "mzbw/spin_hydro.hpp"
#include "mzbw/trajectories.hpp"
#include "mzbw/verify.hpp"

namespace mzbw {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;
inline constexpr int kExitVerification = 3;

/// Settings that come from the command line rather than the config file.
struct CommandOptions {
  std::filesystem::path out;
  std::optional<Backend> backend;  ///< overrides the config's backend
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
};

namespace detail {

inline Backend pick_backend(const RunConfig& c, const CommandOptions& o) {
  if (o.backend) return *o.backend;
  return c.backend.value_or(Backend::spectral);
}

inline void prepare_out(const std::filesystem::path& dir) {
  if (dir.empty()) throw InvalidInput("no output directory given");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw InvalidInput("cannot create output directory " + dir.string());
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw InvalidInput("failed writing " + path.string());
}

inline json to_json(const Vec3& v, std::size_t dims) {
  json a = json::array();
  for (std::size_t i = 0; i < dims; ++i) a.push_back(v[i]);
  return a;
}

inline json grid_json(const Grid& g) {
  json points = json::array(), extent = json::array();
  for (std::size_t a = 0; a < g.dims(); ++a) {
    points.push_back(g.points(a));
    extent.push_back(g.extent(a));
  }
  return {{"points", points}, {"extent", extent}};
}

/// Largest |rho * total - j| over the grid.
inline double current_mismatch(const RealField& rho, const VectorField& total, const VectorField& j) {
  double m = 0.0;
  for (std::size_t n = 0; n < rho.size(); ++n) {
    const Vec3 d = rho[n] * total[n] - j[n];
    m = std::max({m, std::abs(d.x), std::abs(d.y), std::abs(d.z)});
  }
  return m;
}

inline EvolutionConfig evolution_config(const RunConfig& c, const EvolutionSpec& e) {
  EvolutionConfig cfg;
  cfg.dt = e.dt;
  cfg.steps = e.steps;
  cfg.snapshot_stride = e.stride;
  cfg.potential = build_potential(c);
  cfg.params = c.params;
  return cfg;
}

}  // namespace detail

/// rho, phase, momentum and Q fields plus summary.json.
inline int cmd_decompose(const RunConfig& c, const CommandOptions& o) {
  const Backend backend = detail::pick_backend(c, o);
  const ComplexField psi = build_state(c);
  const RealField potential = build_potential(c);
  const MadelungFields m = decompose(psi, c.params, backend);
  const QuantumPotentialField q = quantum_potential(m.rho, c.params, backend);
  const EnergyBudget budget = koenig_energy(psi, states::spin_up(), potential, c.params, backend);
  const Observables obs = observables(psi, potential, c.params);
  for (const auto* f : {&m.rho, &m.phase, &q.q}) f->require_finite("decompose output");
  m.momentum.require_finite("decompose momentum");

  detail::prepare_out(o.out);
  write_field(o.out / "rho.bin", m.rho);
  write_field(o.out / "phase.bin", m.phase);
  write_field(o.out / "momentum.bin", m.momentum);
  write_field(o.out / "q.bin", q.q);

  const double quantum = integrate(zip(m.rho, q.q, [](double r, double v) { return r * v; }));
  json summary = {
      {"command", "decompose"},
      {"backend", to_string(backend)},
      {"grid", detail::grid_json(psi.grid())},
      {"norm", m.norm},
      {"masked_fraction", m.mask.fraction()},
      {"max_abs_q", max_abs(q.q)},
      {"energies",
       {{"translational", budget.translational},
        {"internal", budget.internal},
        {"potential", budget.potential},
        {"total", budget.total},
        {"quantum_potential", quantum},
        {"hamiltonian", obs.energy}}},
      {"warnings", m.warnings},
      {"files", {"rho.bin", "phase.bin", "momentum.bin", "q.bin"}},
  };
  detail::write_json(o.out / "summary.json", summary);
  return kExitOk;
}

/// Spin, current and velocity fields plus summary.json. Returns the
/// verification exit code when the planar spin constraints are violated.
inline int cmd_spin(const RunConfig& c, const CommandOptions& o) {
  const Backend backend = detail::pick_backend(c, o);
  const ComplexField scalar = build_state(c);
  const SpinorField psi = states::with_spinor(scalar, build_spinor(c));
  const VectorField a = build_vector_potential(c);
  const SpinVectorField s = spin_density(psi, c.params);
  const PauliCurrent j = pauli_current(psi, a, c.params, backend);
  const VelocityDecomposition v = velocity_decomposition(psi, a, c.params, backend);
  const HestenesResidual h = hestenes_residual(s.rho, s, backend);
  for (const auto* f : {&s.s, &j.total, &v.drift, &v.zbw, &v.total}) f->require_finite("spin output");

  detail::prepare_out(o.out);
  write_field(o.out / "s.bin", s.s);
  write_field(o.out / "j.bin", j.total);
  write_field(o.out / "j_convective.bin", j.convective);
  write_field(o.out / "j_diamagnetic.bin", j.diamagnetic);
  write_field(o.out / "j_spin.bin", j.spin);
  write_field(o.out / "drift.bin", v.drift);
  write_field(o.out / "zbw.bin", v.zbw);
  write_field(o.out / "total.bin", v.total);

  const double tol = verify::tolerance("hestenes-planar").spectral;
  const bool satisfied = h.divergence_max < tol && h.projection_max < tol;
  json summary = {
      {"command", "spin"},
      {"backend", to_string(backend)},
      {"grid", detail::grid_json(scalar.grid())},
      {"spinor", {{"theta", c.spinor.theta}, {"phi", c.spinor.phi}}},
      {"masked_fraction", s.mask.fraction()},
      {"hestenes",
       {{"divergence_max", h.divergence_max},
        {"projection_max", h.projection_max},
        {"divergence_weighted_l2", h.divergence_weighted_l2},
        {"projection_weighted_l2", h.projection_weighted_l2},
        {"tolerance", tol},
        {"satisfied", satisfied}}},
      {"max_abs_rho_total_minus_j", detail::current_mismatch(s.rho, v.total, j.total)},
      {"files",
       {"s.bin", "j.bin", "j_convective.bin", "j_diamagnetic.bin", "j_spin.bin", "drift.bin", "zbw.bin", "total.bin"}},
  };
  if (v.uniform_spin) summary["uniform_spin"] = detail::to_json(*v.uniform_spin, 3);
  detail::write_json(o.out / "summary.json", summary);
  return satisfied ? kExitOk : kExitVerification;
}

/// Snapshot files psi_<step>.bin plus manifest.json.
inline int cmd_evolve(const RunConfig& c, const CommandOptions& o) {
  if (!c.evolution) throw InvalidInput("config: missing 'evolution' block");
  const EvolutionSpec& spec = *c.evolution;
  const Backend backend = detail::pick_backend(c, o);
  const ComplexField psi0 = build_state(c);
  const EvolutionConfig cfg = detail::evolution_config(c, spec);
  cfg.validate(psi0.grid());

  json hj = json::array(), continuity = json::array();
  TripleHook hook;
  if (spec.residuals) {
    hj.push_back(nullptr);
    continuity.push_back(nullptr);
    hook = [&](std::size_t, const SnapshotTriple& t) {
      const RealField rho = density(t.at);
      hj.push_back(sup_on_region(hj_residual(t, cfg.potential, c.params, backend).values, rho, verify::kResolvedRegion));
      continuity.push_back(sup_on_region(continuity_residual(t, c.params, backend).values, rho, verify::kResolvedRegion));
    };
  }
  const SnapshotSeries series = propagate(psi0, cfg, hook);

  const std::filesystem::path dir = o.out / "snapshots";
  detail::prepare_out(dir);
  json files = json::array(), widths = json::array(), means = json::array();
  for (std::size_t k = 0; k < series.states.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "psi_%06zu.bin", k * spec.stride);
    write_field(dir / name, series.states[k]);
    files.push_back(std::string("snapshots/") + name);
    const Observables ob = observables(series.states[k], cfg.potential, c.params);
    widths.push_back(detail::to_json(ob.width, psi0.grid().dims()));
    means.push_back(detail::to_json(ob.mean, psi0.grid().dims()));
  }
  json manifest = {
      {"command", "evolve"},
      {"backend", to_string(backend)},
      {"grid", detail::grid_json(psi0.grid())},
      {"dt", spec.dt},
      {"steps", spec.steps},
      {"stride", spec.stride},
      {"times", series.times},
      {"norms", series.norms},
      {"energies", series.energies},
      {"widths", widths},
      {"means", means},
      {"files", files},
      {"warnings", series.warnings},
      {"config", c.source},
  };
  if (spec.residuals) {
    manifest["residuals"] = {{"region", verify::kResolvedRegion}, {"hamilton_jacobi", hj}, {"continuity", continuity}};
  }
  detail::write_json(o.out / "manifest.json", manifest);
  return kExitOk;
}

/// trajectories.csv plus manifest.json. Transport uses the evolved state when
/// the config has an evolution block, otherwise the static initial state.
inline int cmd_trajectories(const RunConfig& c, const CommandOptions& o) {
  if (!c.trajectories) throw InvalidInput("config: missing 'trajectories' block");
  const TrajectorySpec& spec = *c.trajectories;
  const Backend backend = detail::pick_backend(c, o);
  const std::uint64_t seed = o.seed.value_or(spec.seed);
  const ComplexField psi0 = build_state(c);
  const Vec3 spin = spin_of(build_spinor(c), c.params);

  std::vector<VelocityMode> modes;
  if (spec.modes != TrajectoryModes::total) modes.push_back(VelocityMode::drift);
  if (spec.modes != TrajectoryModes::drift) modes.push_back(VelocityMode::total);

  std::optional<SnapshotSeries> series;
  if (c.evolution) {
    const EvolutionConfig cfg = detail::evolution_config(c, *c.evolution);
    cfg.validate(psi0.grid());
    if (spec.duration > cfg.total_time() * (1.0 + 1e-12))
      throw InvalidInput("config: 'trajectories.duration' exceeds the evolved time span");
    series = propagate(psi0, cfg);
  }

  const std::vector<Vec3> seeds = sample_initial(density(psi0), spec.count, seed);
  AdvectOptions opt;
  opt.t_end = spec.duration;
  opt.dt = spec.dt;
  opt.record_stride = spec.record_stride;
  opt.threads = o.threads;

  std::vector<TrajectorySet> sets;
  for (VelocityMode mode : modes) {
    const VelocityHistory field = series ? velocity_history(*series, mode, spin, c.params, backend)
                                         : static_velocity(psi0, mode, spin, c.params, backend);
    sets.push_back(advect(seeds, field, mode, opt, seed));
  }

  detail::prepare_out(o.out);
  {
    std::ofstream csv(o.out / "trajectories.csv", std::ios::trunc);
    if (!csv) throw InvalidInput("cannot open trajectories.csv for writing");
    csv << "particle,t,x,y,z,mode,frozen\n";
    char line[256];
    for (const auto& set : sets) {
      const std::string mode(to_string(set.mode));
      for (std::size_t p = 0; p < set.paths.size(); ++p) {
        for (std::size_t k = 0; k < set.times.size(); ++k) {
          const Vec3& x = set.paths[p][k];
          std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,%.17g,%s,%d\n", p, set.times[k], x.x, x.y, x.z,
                        mode.c_str(), set.frozen[p] ? 1 : 0);
          csv << line;
        }
      }
    }
    if (!csv) throw InvalidInput("failed writing trajectories.csv");
  }

  json frozen = json::object();
  for (const auto& set : sets) frozen[std::string(to_string(set.mode))] = set.frozen_count();
  json manifest = {
      {"command", "trajectories"},
      {"backend", to_string(backend)},
      {"grid", detail::grid_json(psi0.grid())},
      {"seed", seed},
      {"count", spec.count},
      {"dt", spec.dt},
      {"duration", spec.duration},
      {"record_stride", spec.record_stride},
      {"velocity_source", series ? "evolved" : "static"},
      {"spin", detail::to_json(spin, 3)},
      {"frozen", frozen},
      {"files", {"trajectories.csv"}},
      {"config", c.source},
  };
  // Equivariance needs the true density at the final time: an evolved
  // snapshot at that time, or the initial state when it is stationary.
  std::optional<RealField> rho_end;
  if (series) {
    for (std::size_t k = 0; k < series->times.size(); ++k) {
      if (std::abs(series->times[k] - spec.duration) <= 1e-9 * spec.duration) rho_end = density(series->states[k]);
    }
  } else if (std::holds_alternative<HarmonicGroundSpec>(*c.state) && std::holds_alternative<HarmonicPotentialSpec>(c.potential)) {
    rho_end = density(psi0);
  }
  if (rho_end && sets.front().mode == VelocityMode::drift) {
    const EquivarianceResult e = equivariance_check(sets.front(), *rho_end);
    manifest["equivariance"] = {{"statistic", e.statistic}, {"critical_1pct", e.critical}, {"used", e.used}, {"pass", e.pass}};
  } else {
    manifest["equivariance"] = nullptr;
  }
  detail::write_json(o.out / "manifest.json", manifest);
  return kExitOk;
}

/// Identity battery report. Fails with the verification exit code when any
/// identity misses its tolerance.
inline int cmd_verify(const RunConfig& c, const CommandOptions& o) {
  const Backend backend = detail::pick_backend(c, o);
  const std::vector<std::size_t> levels =
      c.verify.refinements.value_or(backend == Backend::fd2 ? std::vector<std::size_t>{1, 2, 4} : std::vector<std::size_t>{1});

  json table = json::array();
  for (const auto& t : verify::tolerance_table()) {
    table.push_back({{"id", t.id},
                     {"description", t.description},
                     {"spectral", t.spectral},
                     {"fd2_coefficient", t.discretization ? json(t.fd2_coefficient) : json(nullptr)}});
  }
  json runs = json::array();
  std::vector<std::string> failing;
  for (std::size_t level : levels) {
    verify::Options opt;
    opt.backend = backend;
    opt.refinement = level;
    opt.flip_quantum_potential_sign = c.verify.inject_fault;
    const verify::Report report = verify::run_battery(opt);
    json results = json::array();
    for (const auto& r : report.results) {
      results.push_back({{"id", r.id},
                         {"state", r.state},
                         {"points", r.points},
                         {"spacing", r.spacing},
                         {"max_abs_error", std::isfinite(r.error) ? json(r.error) : json("inf")},
                         {"tolerance", r.tolerance},
                         {"pass", r.pass}});
    }
    const auto ids = report.failing_ids();
    for (const auto& id : ids) {
      if (std::find(failing.begin(), failing.end(), id) == failing.end()) failing.push_back(id);
    }
    runs.push_back({{"refinement", level}, {"pass", report.all_pass()}, {"failing_ids", ids}, {"results", results}});
  }
  json report = {
      {"command", "verify"},
      {"tolerance_table_version", verify::kToleranceTableVersion},
      {"tolerance_table", table},
      {"backend", to_string(backend)},
      {"inject_fault", c.verify.inject_fault},
      {"runs", runs},
      {"pass", failing.empty()},
      {"failing_ids", failing},
  };
  detail::prepare_out(o.out);
  detail::write_json(o.out / "report.json", report);
  return failing.empty() ? kExitOk : kExitVerification;
}

}  // namespace mzbw

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string_view>
#include <thread>
#include <vector>

#include "mzbw/evolve.hpp"
#include "mzbw/fields.hpp"
#include "mzbw/madelung.hpp"
#include "mzbw/spin_hydro.hpp"

namespace mzbw {

/// Which velocity field particles follow: drift w = p/m (centre of mass) or
/// total v = w + V including the internal motion of a constant spin.
enum class VelocityMode { drift, total };

inline std::string_view to_string(VelocityMode m) { return m == VelocityMode::drift ? "drift" : "total"; }

/// Periodic multilinear interpolation of a grid field at an arbitrary point.
template <typename T>
T interpolate(const Field<T>& f, const Vec3& pos) {
  const Grid& g = f.grid();
  std::array<std::size_t, 3> lo{0, 0, 0}, hi{0, 0, 0};
  std::array<double, 3> frac{0.0, 0.0, 0.0};
  for (std::size_t a = 0; a < g.dims(); ++a) {
    const double s = (pos[a] + 0.5 * g.extent(a)) / g.spacing(a);
    const double fl = std::floor(s);
    frac[a] = s - fl;
    const auto n = static_cast<long long>(g.points(a));
    long long i = static_cast<long long>(fl) % n;
    if (i < 0) i += n;
    lo[a] = static_cast<std::size_t>(i);
    hi[a] = static_cast<std::size_t>((i + 1) % n);
  }
  T acc{};
  for (int corner = 0; corner < 8; ++corner) {
    double w = 1.0;
    std::array<std::size_t, 3> idx{};
    bool used = true;
    for (std::size_t a = 0; a < 3; ++a) {
      const bool up = (corner >> a) & 1;
      if (a >= g.dims()) {
        if (up) used = false;
        continue;
      }
      idx[a] = up ? hi[a] : lo[a];
      w *= up ? frac[a] : 1.0 - frac[a];
    }
    if (!used) continue;
    acc += f[g.index(idx[0], idx[1], idx[2])] * w;
  }
  return acc;
}

/// Velocity and density fields on a sequence of times, linearly interpolated
/// in time and multilinearly in space. A single entry is a static field.
class VelocityHistory {
 public:
  void push(double t, VectorField velocity, RealField rho) {
    if (!times_.empty() && !(t > times_.back())) throw InvalidInput("velocity history times must increase");
    thresholds_.push_back(kNodeRelativeThreshold * max_value(rho));
    times_.push_back(t);
    velocity_.push_back(std::move(velocity));
    rho_.push_back(std::move(rho));
  }

  bool empty() const { return times_.empty(); }
  const std::vector<double>& times() const { return times_; }
  const Grid& grid() const { return velocity_.front().grid(); }

  Vec3 velocity(const Vec3& pos, double t) const {
    const auto [k, w] = locate(t);
    const Vec3 a = interpolate(velocity_[k], pos);
    if (w == 0.0) return a;
    return a * (1.0 - w) + interpolate(velocity_[k + 1], pos) * w;
  }

  /// True when rho at (pos, t) is at or below the node threshold.
  bool in_node(const Vec3& pos, double t) const {
    const auto [k, w] = locate(t);
    double rho = interpolate(rho_[k], pos);
    double cut = thresholds_[k];
    if (w != 0.0) {
      rho = rho * (1.0 - w) + interpolate(rho_[k + 1], pos) * w;
      cut = cut * (1.0 - w) + thresholds_[k + 1] * w;
    }
    return !(rho > cut);
  }

 private:
  std::pair<std::size_t, double> locate(double t) const {
    if (times_.size() == 1 || t <= times_.front()) return {0, 0.0};
    if (t >= times_.back()) return {times_.size() - 1, 0.0};
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const auto k = static_cast<std::size_t>(it - times_.begin()) - 1;
    return {k, (t - times_[k]) / (times_[k + 1] - times_[k])};
  }

  std::vector<double> times_;
  std::vector<VectorField> velocity_;
  std::vector<RealField> rho_;
  std::vector<double> thresholds_;
};

/// Drift p/m, plus grad(rho) x s/(m rho) in total mode, for one state.
inline VectorField bohmian_velocity(const ComplexField& psi, VelocityMode mode, const std::optional<Vec3>& spin,
                                    const PhysicalParams& params, Backend backend = Backend::spectral) {
  if (mode == VelocityMode::total && !spin) throw InvalidInput("total-mode transport needs a spin vector");
  const MadelungFields m = decompose(psi, params, backend);
  VectorField v = map(m.momentum, [&](const Vec3& p) { return p / params.mass; });
  if (mode == VelocityMode::total) {
    const VectorField zbw = zbw_velocity_uniform_spin(m.rho, *spin, params, backend);
    for (std::size_t n = 0; n < v.size(); ++n) v[n] += zbw[n];
  }
  return v;
}

inline VelocityHistory velocity_history(const SnapshotSeries& series, VelocityMode mode,
                                        const std::optional<Vec3>& spin, const PhysicalParams& params,
                                        Backend backend = Backend::spectral) {
  VelocityHistory h;
  for (std::size_t k = 0; k < series.states.size(); ++k) {
    h.push(series.times[k], bohmian_velocity(series.states[k], mode, spin, params, backend), density(series.states[k]));
  }
  return h;
}

/// Time-independent transport through the velocity field of a single state.
inline VelocityHistory static_velocity(const ComplexField& psi, VelocityMode mode, const std::optional<Vec3>& spin,
                                       const PhysicalParams& params, Backend backend = Backend::spectral) {
  VelocityHistory h;
  h.push(0.0, bohmian_velocity(psi, mode, spin, params, backend), density(psi));
  return h;
}

/// Positions distributed as rho0: inverse CDF over cells in 1D (uniform
/// within a cell), rejection against max(rho0) with multilinear rho0 in 2D/3D.
/// Deterministic for a given seed.
inline std::vector<Vec3> sample_initial(const RealField& rho0, std::size_t count, std::uint64_t seed) {
  detail::require_density(rho0, "sample_initial");
  const Grid& g = rho0.grid();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec3> out;
  out.reserve(count);
  if (g.dims() == 1) {
    std::vector<double> cdf(rho0.size());
    double acc = 0.0;
    for (std::size_t n = 0; n < rho0.size(); ++n) cdf[n] = (acc += rho0[n]);
    const double h = g.spacing(0);
    for (std::size_t i = 0; i < count; ++i) {
      const double u = unit(rng) * acc;
      auto n = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      n = std::min(n, rho0.size() - 1);
      const double below = n == 0 ? 0.0 : cdf[n - 1];
      const double frac = rho0[n] > 0.0 ? (u - below) / rho0[n] : 0.5;
      out.push_back({g.coordinate(0, n) - 0.5 * h + frac * h, 0.0, 0.0});
    }
    return out;
  }
  const double top = max_value(rho0);
  while (out.size() < count) {
    Vec3 p;
    for (std::size_t a = 0; a < g.dims(); ++a) p[a] = (unit(rng) - 0.5) * g.extent(a);
    if (unit(rng) * top < interpolate(rho0, p)) out.push_back(p);
  }
  return out;
}

struct TrajectorySet {
  VelocityMode mode = VelocityMode::drift;
  std::uint64_t seed = 0;
  std::vector<Vec3> seeds;
  std::vector<double> times;
  /// paths[particle][time index]; frozen particles repeat their last position.
  std::vector<std::vector<Vec3>> paths;
  std::vector<bool> frozen;

  std::size_t frozen_count() const { return static_cast<std::size_t>(std::count(frozen.begin(), frozen.end(), true)); }

  std::vector<Vec3> final_positions() const {
    std::vector<Vec3> out;
    out.reserve(paths.size());
    for (const auto& p : paths) out.push_back(p.back());
    return out;
  }
};

struct AdvectOptions {
  double t_start = 0.0;
  double t_end = 1.0;
  double dt = 1e-2;
  std::size_t record_stride = 1;
  std::size_t threads = 1;  ///< speed only; results do not depend on it
};

/// Classical fourth-order Runge-Kutta transport of every seed through `field`.
/// A particle whose stage position falls into a node is frozen at its last
/// accepted position and flagged.
inline TrajectorySet advect(const std::vector<Vec3>& seeds, const VelocityHistory& field, VelocityMode mode,
                            const AdvectOptions& opt, std::uint64_t seed = 0) {
  if (field.empty()) throw InvalidInput("advect: empty velocity history");
  if (!(opt.dt > 0.0)) throw InvalidInput("advect: dt must be positive");
  if (!(opt.t_end > opt.t_start)) throw InvalidInput("advect: t_end must exceed t_start");
  if (opt.record_stride == 0) throw InvalidInput("advect: record stride must be positive");
  const auto steps = static_cast<std::size_t>(std::llround((opt.t_end - opt.t_start) / opt.dt));
  if (steps == 0) throw InvalidInput("advect: interval shorter than one step");
  const double h = (opt.t_end - opt.t_start) / static_cast<double>(steps);

  TrajectorySet out;
  out.mode = mode;
  out.seed = seed;
  out.seeds = seeds;
  for (std::size_t s = 0; s <= steps; s += opt.record_stride) out.times.push_back(opt.t_start + h * static_cast<double>(s));
  if ((steps % opt.record_stride) != 0) out.times.push_back(opt.t_end);
  out.paths.assign(seeds.size(), {});
  out.frozen.assign(seeds.size(), false);
  std::vector<char> frozen(seeds.size(), 0);

  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      auto& path = out.paths[p];
      path.reserve(out.times.size());
      Vec3 x = seeds[p];
      bool stuck = field.in_node(x, opt.t_start);
      path.push_back(x);
      for (std::size_t s = 1; s <= steps; ++s) {
        if (!stuck) {
          const double t = opt.t_start + h * static_cast<double>(s - 1);
          const Vec3 k1 = field.velocity(x, t);
          const Vec3 x2 = x + k1 * (0.5 * h);
          const Vec3 k2 = field.velocity(x2, t + 0.5 * h);
          const Vec3 x3 = x + k2 * (0.5 * h);
          const Vec3 k3 = field.velocity(x3, t + 0.5 * h);
          const Vec3 x4 = x + k3 * h;
          const Vec3 k4 = field.velocity(x4, t + h);
          const Vec3 next = x + (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
          if (field.in_node(x2, t + 0.5 * h) || field.in_node(x3, t + 0.5 * h) || field.in_node(x4, t + h) ||
              field.in_node(next, t + h) || !is_finite(next)) {
            stuck = true;
          } else {
            x = next;
          }
        }
        if (s % opt.record_stride == 0 || s == steps) path.push_back(x);
      }
      frozen[p] = stuck ? 1 : 0;
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(opt.threads, seeds.size()));
  if (workers == 1) {
    run(0, seeds.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (seeds.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t b = w * chunk, e = std::min(seeds.size(), b + chunk);
      if (b < e) pool.emplace_back(run, b, e);
    }
    for (auto& t : pool) t.join();
  }
  for (std::size_t p = 0; p < seeds.size(); ++p) out.frozen[p] = frozen[p] != 0;
  return out;
}

/// X = x - xi: displacement of each total-mode path from its paired drift-mode
/// path (same seeds, same times).
inline std::vector<std::vector<Vec3>> internal_displacement(const TrajectorySet& total, const TrajectorySet& drift) {
  if (total.paths.size() != drift.paths.size() || total.times != drift.times)
    throw InvalidInput("trajectory sets are not paired");
  std::vector<std::vector<Vec3>> out(total.paths.size());
  for (std::size_t p = 0; p < total.paths.size(); ++p) {
    out[p].resize(total.times.size());
    for (std::size_t k = 0; k < total.times.size(); ++k) out[p][k] = total.paths[p][k] - drift.paths[p][k];
  }
  return out;
}

/// Kolmogorov-Smirnov distance between samples and a continuous CDF.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw InvalidInput("ks_statistic: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

/// Asymptotic two-sided KS critical value at the 1% level.
inline double ks_critical_1pct(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }

struct EquivarianceResult {
  double statistic = 0.0;  ///< largest per-axis KS distance
  double critical = 0.0;   ///< 1% critical value for the particles used
  bool pass = false;
  std::size_t used = 0;    ///< particles not frozen
};

/// CDF along `axis` of the marginal of rho, with rho uniform inside each cell;
/// `x` is taken modulo the period.
inline std::function<double(double)> marginal_cdf(const RealField& rho, std::size_t axis) {
  const Grid& g = rho.grid();
  const std::size_t n_axis = g.points(axis);
  std::vector<double> mass(n_axis, 0.0);
  for (std::size_t n = 0; n < rho.size(); ++n) mass[g.unravel(n)[axis]] += rho[n];
  std::vector<double> cdf(n_axis + 1, 0.0);
  for (std::size_t i = 0; i < n_axis; ++i) cdf[i + 1] = cdf[i] + mass[i];
  const double total = cdf.back();
  const double h = g.spacing(axis);
  const double origin = g.coordinate(axis, 0) - 0.5 * h;
  const double period = g.extent(axis);
  return [=](double x) {
    double s = std::fmod(x - origin, period);
    if (s < 0.0) s += period;
    const double c = s / h;
    const auto i = std::min(static_cast<std::size_t>(c), n_axis - 1);
    return (cdf[i] + (c - static_cast<double>(i)) * mass[i]) / total;
  };
}

/// Compares non-frozen endpoints with rho_t through per-axis KS tests on the
/// marginals, with positions wrapped into the periodic cell.
inline EquivarianceResult equivariance_check(const TrajectorySet& set, const RealField& rho_t) {
  detail::require_density(rho_t, "equivariance_check");
  const Grid& g = rho_t.grid();
  EquivarianceResult r;
  for (std::size_t a = 0; a < g.dims(); ++a) {
    const double origin = g.coordinate(a, 0) - 0.5 * g.spacing(a);
    std::vector<double> xs;
    for (std::size_t p = 0; p < set.paths.size(); ++p) {
      if (set.frozen[p]) continue;
      double s = std::fmod(set.paths[p].back()[a] - origin, g.extent(a));
      if (s < 0.0) s += g.extent(a);
      xs.push_back(origin + s);
    }
    r.used = xs.size();
    r.statistic = std::max(r.statistic, ks_statistic(std::move(xs), marginal_cdf(rho_t, a)));
  }
  r.critical = ks_critical_1pct(r.used);
  r.pass = r.statistic < r.critical;
  return r;
}

}  // namespace mzbw

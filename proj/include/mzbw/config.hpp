#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mzbw/field_io.hpp"
#include "mzbw/fields.hpp"
#include "mzbw/grid.hpp"
#include "mzbw/operators.hpp"
#include "mzbw/states.hpp"

namespace mzbw {

using json = nlohmann::json;

struct PlaneWaveSpec {
  std::array<int, 3> mode{};  ///< integer wave numbers per axis, derived from k
};
struct GaussianSpec {
  Vec3 center;
  double sigma = 1.0;
  Vec3 boost;
};
struct HarmonicGroundSpec {
  double omega = 1.0;
};
struct FileSpec {
  std::filesystem::path path;
};

using StateSpec = std::variant<PlaneWaveSpec, GaussianSpec, HarmonicGroundSpec, FileSpec>;

struct NoPotential {};
struct HarmonicPotentialSpec {
  double omega = 1.0;
};
using PotentialSpec = std::variant<NoPotential, HarmonicPotentialSpec, FileSpec>;

struct ConstantVectorPotential {
  Vec3 value;
};
using VectorPotentialSpec = std::variant<std::monostate, ConstantVectorPotential, FileSpec>;

struct SpinorSpec {
  double theta = 0.0;
  double phi = 0.0;
};

struct EvolutionSpec {
  double dt = 1e-3;
  std::size_t steps = 1;
  std::size_t stride = 1;
  bool residuals = false;
};

enum class TrajectoryModes { drift, total, both };

struct TrajectorySpec {
  std::size_t count = 100;
  TrajectoryModes modes = TrajectoryModes::drift;
  double dt = 1e-2;
  double duration = 1.0;
  std::size_t record_stride = 1;
  std::uint64_t seed = 0;
};

struct VerifySpec {
  std::optional<std::vector<std::size_t>> refinements;  ///< default: [1] spectral, [1, 2, 4] fd2
  bool inject_fault = false;
};

/// A parsed, range-checked run description. Blocks a command needs but the
/// file omits are reported when the command asks for them.
struct RunConfig {
  std::filesystem::path base_dir;
  json source;  ///< the document as read, echoed into manifests
  std::optional<Grid> grid;
  PhysicalParams params;
  std::optional<StateSpec> state;
  SpinorSpec spinor;
  PotentialSpec potential = NoPotential{};
  VectorPotentialSpec vector_potential;
  std::optional<Backend> backend;
  std::optional<EvolutionSpec> evolution;
  std::optional<TrajectorySpec> trajectories;
  VerifySpec verify;

  const Grid& require_grid() const {
    if (!grid) throw InvalidInput("config: missing 'grid' block");
    return *grid;
  }
  const StateSpec& require_state() const {
    if (!state) throw InvalidInput("config: missing 'state' block");
    return *state;
  }
};

namespace detail {

inline constexpr std::size_t kMaxAxisPoints = std::size_t{1} << 14;
inline constexpr std::size_t kMaxGridPoints = std::size_t{1} << 24;

/// Object reader that records consumed keys so leftovers can be rejected.
class Block {
 public:
  Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InvalidInput("config: '" + path_ + "' must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw InvalidInput("config: missing key '" + name(key) + "'");
    return j_.at(key);
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) throw InvalidInput("config: '" + name(key) + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw InvalidInput("config: '" + name(key) + "' must be finite");
    return d;
  }

  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  double positive(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const double d = (fallback && !has(key)) ? *fallback : number(key);
    if (!(d > 0.0)) throw InvalidInput("config: '" + name(key) + "' must be positive");
    return d;
  }

  double in_range(const std::string& key, double lo, double hi, double fallback) {
    const double d = number(key, fallback);
    if (d < lo || d > hi)
      throw InvalidInput("config: '" + name(key) + "' must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return d;
  }

  std::uint64_t integer(const std::string& key, std::uint64_t lo, std::uint64_t hi) {
    const json& v = at(key);
    if (!v.is_number_integer()) throw InvalidInput("config: '" + name(key) + "' must be an integer");
    if (v.is_number_unsigned() || v.get<std::int64_t>() >= 0) {
      const auto u = v.get<std::uint64_t>();
      if (u >= lo && u <= hi) return u;
    }
    throw InvalidInput("config: '" + name(key) + "' must be an integer in [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]");
  }

  std::uint64_t integer(const std::string& key, std::uint64_t lo, std::uint64_t hi, std::uint64_t fallback) {
    return has(key) ? integer(key, lo, hi) : fallback;
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = at(key);
    if (!v.is_boolean()) throw InvalidInput("config: '" + name(key) + "' must be true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) throw InvalidInput("config: '" + name(key) + "' must be a string");
    return v.get<std::string>();
  }

  /// Numeric array with exactly `length` finite entries.
  std::vector<double> numbers(const std::string& key, std::size_t length) {
    const json& v = at(key);
    if (!v.is_array() || v.size() != length)
      throw InvalidInput("config: '" + name(key) + "' must be an array of " + std::to_string(length) + " numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number() || !std::isfinite(e.get<double>()))
        throw InvalidInput("config: '" + name(key) + "' must contain finite numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  Vec3 vec(const std::string& key, std::size_t dims, Vec3 fallback = {}) {
    if (!has(key)) return fallback;
    const auto v = numbers(key, dims);
    Vec3 out;
    for (std::size_t a = 0; a < dims; ++a) out[a] = v[a];
    return out;
  }

  Block child(const std::string& key) { return Block(at(key), name(key)); }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.contains(item.key())) throw InvalidInput("config: unknown key '" + name(item.key()) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline std::filesystem::path existing_file(Block& b, const std::string& key, const std::filesystem::path& base) {
  std::filesystem::path p = b.string(key);
  if (p.is_relative()) p = base / p;
  if (!std::filesystem::is_regular_file(p)) throw InvalidInput("config: '" + b.name(key) + "' file not found: " + p.string());
  return p;
}

inline Grid parse_grid(Block b) {
  const json& pts = b.at("points");
  if (!pts.is_array() || pts.empty() || pts.size() > 3)
    throw InvalidInput("config: 'grid.points' must be an array of 1 to 3 integers");
  const std::size_t dims = pts.size();
  std::array<std::size_t, 3> points{1, 1, 1};
  std::size_t total = 1;
  for (std::size_t a = 0; a < dims; ++a) {
    if (!pts[a].is_number_unsigned() && !(pts[a].is_number_integer() && pts[a].get<std::int64_t>() > 0))
      throw InvalidInput("config: 'grid.points' must contain positive integers");
    points[a] = pts[a].get<std::size_t>();
    if (points[a] < 2 || points[a] > kMaxAxisPoints || points[a] % 2 != 0)
      throw InvalidInput("config: 'grid.points' entries must be even and in [2, " + std::to_string(kMaxAxisPoints) + "]");
    total *= points[a];
  }
  if (total > kMaxGridPoints) throw InvalidInput("config: grid has more than 2^24 points");
  const auto ext = b.numbers("extent", dims);
  std::array<double, 3> extent{1.0, 1.0, 1.0};
  for (std::size_t a = 0; a < dims; ++a) {
    if (!(ext[a] > 0.0)) throw InvalidInput("config: 'grid.extent' entries must be positive");
    extent[a] = ext[a];
  }
  b.finish();
  return Grid(dims, points, extent);
}

inline PhysicalParams parse_params(Block b) {
  PhysicalParams p;
  p.hbar = b.positive("hbar", 1.0);
  p.mass = b.positive("mass", 1.0);
  p.charge = b.number("charge", 0.0);
  b.finish();
  return p;
}

inline StateSpec parse_state(Block b, const Grid& g, const std::filesystem::path& base) {
  const std::string family = b.string("family");
  StateSpec out;
  if (family == "plane-wave") {
    const auto k = b.numbers("k", g.dims());
    PlaneWaveSpec s;
    for (std::size_t a = 0; a < g.dims(); ++a) {
      const double m = k[a] * g.extent(a) / (2.0 * std::numbers::pi);
      const double r = std::round(m);
      if (std::abs(m - r) > 1e-9 * std::max(1.0, std::abs(m)))
        throw InvalidInput("config: 'state.k' must be a multiple of 2 pi / extent on every axis");
      if (std::abs(r) >= static_cast<double>(g.points(a) / 2))
        throw InvalidInput("config: 'state.k' exceeds the grid's Nyquist wave number");
      s.mode[a] = static_cast<int>(r);
    }
    out = s;
  } else if (family == "gaussian") {
    GaussianSpec s;
    s.center = b.vec("center", g.dims());
    s.sigma = b.positive("sigma");
    s.boost = b.vec("boost", g.dims());
    out = s;
  } else if (family == "harmonic-ground") {
    out = HarmonicGroundSpec{b.positive("omega")};
  } else if (family == "file") {
    out = FileSpec{existing_file(b, "path", base)};
  } else {
    throw InvalidInput("config: unknown state family '" + family + "'");
  }
  b.finish();
  return out;
}

inline PotentialSpec parse_potential(Block b, const std::filesystem::path& base) {
  const std::string kind = b.string("kind");
  PotentialSpec out;
  if (kind == "none") {
    out = NoPotential{};
  } else if (kind == "harmonic") {
    out = HarmonicPotentialSpec{b.positive("omega")};
  } else if (kind == "file") {
    out = FileSpec{existing_file(b, "path", base)};
  } else {
    throw InvalidInput("config: unknown potential kind '" + kind + "'");
  }
  b.finish();
  return out;
}

inline VectorPotentialSpec parse_vector_potential(Block b, const std::filesystem::path& base) {
  const std::string kind = b.string("kind");
  VectorPotentialSpec out;
  if (kind == "none") {
    out = std::monostate{};
  } else if (kind == "constant") {
    const auto v = b.numbers("value", 3);
    out = ConstantVectorPotential{Vec3{v[0], v[1], v[2]}};
  } else if (kind == "file") {
    out = FileSpec{existing_file(b, "path", base)};
  } else {
    throw InvalidInput("config: unknown vector potential kind '" + kind + "'");
  }
  b.finish();
  return out;
}

inline EvolutionSpec parse_evolution(Block b) {
  EvolutionSpec e;
  e.dt = b.positive("dt");
  e.steps = b.integer("steps", 1, 10'000'000);
  e.stride = b.integer("stride", 1, e.steps, e.steps);
  if (e.steps % e.stride != 0) throw InvalidInput("config: 'evolution.stride' must divide 'evolution.steps'");
  e.residuals = b.boolean("residuals", false);
  b.finish();
  return e;
}

inline TrajectorySpec parse_trajectories(Block b) {
  TrajectorySpec t;
  t.count = b.integer("count", 1, 1'000'000);
  const std::string mode = b.has("mode") ? b.string("mode") : "drift";
  if (mode == "drift") {
    t.modes = TrajectoryModes::drift;
  } else if (mode == "total") {
    t.modes = TrajectoryModes::total;
  } else if (mode == "both") {
    t.modes = TrajectoryModes::both;
  } else {
    throw InvalidInput("config: 'trajectories.mode' must be drift, total or both");
  }
  t.dt = b.positive("dt");
  t.duration = b.positive("duration");
  // The integrator rounds duration / dt to whole steps and shrinks dt to fit.
  const double steps = std::round(t.duration / t.dt);
  if (steps < 1.0) throw InvalidInput("config: 'trajectories.duration' is shorter than one step");
  if (steps > 1e7) throw InvalidInput("config: trajectories need more than 1e7 steps");
  t.record_stride = b.integer("record_stride", 1, 10'000'000, 1);
  t.seed = b.integer("seed", 0, UINT64_MAX, 0);
  b.finish();
  return t;
}

inline VerifySpec parse_verify(Block b) {
  VerifySpec v;
  if (b.has("refinements")) {
    const json& r = b.at("refinements");
    if (!r.is_array() || r.empty()) throw InvalidInput("config: 'verify.refinements' must be a non-empty array");
    std::vector<std::size_t> levels;
    for (const auto& e : r) {
      if (!e.is_number_integer() || e.get<std::int64_t>() < 1 || e.get<std::int64_t>() > 8)
        throw InvalidInput("config: 'verify.refinements' entries must be integers in [1, 8]");
      levels.push_back(e.get<std::size_t>());
    }
    v.refinements = levels;
  }
  v.inject_fault = b.boolean("inject_fault", false);
  b.finish();
  return v;
}

}  // namespace detail

/// Parses and validates a config document. `base_dir` anchors relative paths.
inline RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  detail::Block root(doc, "");
  RunConfig c;
  c.base_dir = base_dir;
  c.source = doc;
  if (root.has("grid")) c.grid = detail::parse_grid(root.child("grid"));
  if (root.has("params")) c.params = detail::parse_params(root.child("params"));
  auto needs_grid = [&](const char* block) -> const Grid& {
    if (!c.grid) throw InvalidInput(std::string("config: '") + block + "' needs a 'grid' block");
    return *c.grid;
  };
  if (root.has("state")) c.state = detail::parse_state(root.child("state"), needs_grid("state"), base_dir);
  if (root.has("spinor")) {
    detail::Block b = root.child("spinor");
    c.spinor.theta = b.in_range("theta", 0.0, std::numbers::pi, 0.0);
    c.spinor.phi = b.in_range("phi", 0.0, 2.0 * std::numbers::pi, 0.0);
    b.finish();
  }
  if (root.has("potential")) {
    needs_grid("potential");
    c.potential = detail::parse_potential(root.child("potential"), base_dir);
  }
  if (root.has("vector_potential")) {
    needs_grid("vector_potential");
    c.vector_potential = detail::parse_vector_potential(root.child("vector_potential"), base_dir);
  }
  if (root.has("backend")) {
    const std::string name = root.string("backend");
    c.backend = parse_backend(name);
    if (!c.backend) throw InvalidInput("config: 'backend' must be spectral or fd2");
  }
  if (root.has("evolution")) c.evolution = detail::parse_evolution(root.child("evolution"));
  if (root.has("trajectories")) c.trajectories = detail::parse_trajectories(root.child("trajectories"));
  if (root.has("verify")) c.verify = detail::parse_verify(root.child("verify"));
  root.finish();
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput("config " + path.string() + ": " + e.what());
  }
  return parse_config(doc, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
}

/// The scalar initial state described by the config, on the config grid.
inline ComplexField build_state(const RunConfig& c) {
  const Grid& g = c.require_grid();
  return std::visit(
      [&](const auto& s) -> ComplexField {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, PlaneWaveSpec>) {
          return states::plane_wave(g, s.mode);
        } else if constexpr (std::is_same_v<S, GaussianSpec>) {
          return states::gaussian(g, s.center, s.sigma, s.boost, c.params);
        } else if constexpr (std::is_same_v<S, HarmonicGroundSpec>) {
          return states::harmonic_ground(g, s.omega, c.params);
        } else {
          ComplexField f = read_field<complex>(s.path);
          if (!(f.grid() == g)) throw InvalidInput("state file grid does not match the config grid");
          return f;
        }
      },
      c.require_state());
}

inline RealField build_potential(const RunConfig& c) {
  const Grid& g = c.require_grid();
  return std::visit(
      [&](const auto& s) -> RealField {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, NoPotential>) {
          return RealField(g);
        } else if constexpr (std::is_same_v<S, HarmonicPotentialSpec>) {
          return states::harmonic_potential(g, s.omega, c.params);
        } else {
          RealField f = read_field<double>(s.path);
          if (!(f.grid() == g)) throw InvalidInput("potential file grid does not match the config grid");
          return f;
        }
      },
      c.potential);
}

inline VectorField build_vector_potential(const RunConfig& c) {
  const Grid& g = c.require_grid();
  return std::visit(
      [&](const auto& s) -> VectorField {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, std::monostate>) {
          return VectorField(g);
        } else if constexpr (std::is_same_v<S, ConstantVectorPotential>) {
          return VectorField(g, s.value);
        } else {
          VectorField f = read_field<Vec3>(s.path);
          if (!(f.grid() == g)) throw InvalidInput("vector potential file grid does not match the config grid");
          return f;
        }
      },
      c.vector_potential);
}

inline Spinor build_spinor(const RunConfig& c) { return states::bloch_spinor(c.spinor.theta, c.spinor.phi); }

}  // namespace mzbw

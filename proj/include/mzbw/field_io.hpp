#pragma once

// Field binary format (all integers and floats little-endian):
//
//   offset  size  content
//   0       5     magic "MZBW1"
//   5       1     field kind: 0 real, 1 complex, 2 vector (3 reals), 3 spinor (2 complex)
//   6       1     grid dimension (1-3)
//   7       1     component count per point: 1 real, 1 complex, 3 vector, 2 spinor
//   8       24    points per axis, 3 x uint64 (unused axes = 1)
//   32      24    extent per axis, 3 x float64 (unused axes = 1.0)
//   56      ...   samples as float64 in row-major order (axis 0 slowest);
//                 per point the components in order, complex values as (re, im)

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <type_traits>
#include <vector>

#include "mzbw/fields.hpp"

namespace mzbw {

enum class FieldKind : std::uint8_t { real = 0, complex = 1, vector = 2, spinor = 3 };

inline constexpr char kFieldMagic[5] = {'M', 'Z', 'B', 'W', '1'};
inline constexpr std::size_t kFieldHeaderBytes = 56;

template <typename T>
struct FieldTraits;

template <>
struct FieldTraits<double> {
  static constexpr FieldKind kind = FieldKind::real;
  static constexpr std::uint8_t components = 1;
  static constexpr std::size_t doubles = 1;
  static void put(const double& v, double* out) { out[0] = v; }
  static double get(const double* in) { return in[0]; }
};

template <>
struct FieldTraits<complex> {
  static constexpr FieldKind kind = FieldKind::complex;
  static constexpr std::uint8_t components = 1;
  static constexpr std::size_t doubles = 2;
  static void put(const complex& v, double* out) { out[0] = v.real(); out[1] = v.imag(); }
  static complex get(const double* in) { return {in[0], in[1]}; }
};

template <>
struct FieldTraits<Vec3> {
  static constexpr FieldKind kind = FieldKind::vector;
  static constexpr std::uint8_t components = 3;
  static constexpr std::size_t doubles = 3;
  static void put(const Vec3& v, double* out) { out[0] = v.x; out[1] = v.y; out[2] = v.z; }
  static Vec3 get(const double* in) { return {in[0], in[1], in[2]}; }
};

template <>
struct FieldTraits<Spinor> {
  static constexpr FieldKind kind = FieldKind::spinor;
  static constexpr std::uint8_t components = 2;
  static constexpr std::size_t doubles = 4;
  static void put(const Spinor& v, double* out) {
    out[0] = v[0].real(); out[1] = v[0].imag(); out[2] = v[1].real(); out[3] = v[1].imag();
  }
  static Spinor get(const double* in) { return {complex(in[0], in[1]), complex(in[2], in[3])}; }
};

namespace detail {

inline void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>((v >> (8 * b)) & 0xFFu));
}

inline std::uint64_t get_u64(const unsigned char* in) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | in[b];
  return v;
}

inline void put_f64(std::vector<unsigned char>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }
inline double get_f64(const unsigned char* in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace detail

template <typename T>
std::vector<unsigned char> encode_field(const Field<T>& f) {
  using Traits = FieldTraits<T>;
  const Grid& g = f.grid();
  std::vector<unsigned char> out;
  out.reserve(kFieldHeaderBytes + f.size() * Traits::doubles * 8);
  out.insert(out.end(), std::begin(kFieldMagic), std::end(kFieldMagic));
  out.push_back(static_cast<unsigned char>(Traits::kind));
  out.push_back(static_cast<unsigned char>(g.dims()));
  out.push_back(Traits::components);
  for (std::size_t k = 0; k < 3; ++k) detail::put_u64(out, g.points(k));
  for (std::size_t k = 0; k < 3; ++k) detail::put_f64(out, g.extent(k));
  double buf[Traits::doubles];
  for (const T& v : f) {
    Traits::put(v, buf);
    for (double d : buf) detail::put_f64(out, d);
  }
  return out;
}

/// Header fields of an encoded field, without its samples.
struct FieldHeader {
  FieldKind kind;
  Grid grid;
  std::uint8_t components;
};

inline FieldHeader decode_header(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < kFieldHeaderBytes || std::memcmp(bytes.data(), kFieldMagic, 5) != 0)
    throw InvalidInput("not an MZBW1 field file");
  const auto kind_byte = bytes[5];
  if (kind_byte > 3) throw InvalidInput("unknown field kind " + std::to_string(kind_byte));
  const std::size_t dims = bytes[6];
  std::array<std::size_t, 3> points{};
  std::array<double, 3> extent{};
  for (std::size_t k = 0; k < 3; ++k) {
    points[k] = static_cast<std::size_t>(detail::get_u64(bytes.data() + 8 + 8 * k));
    extent[k] = detail::get_f64(bytes.data() + 32 + 8 * k);
    if (points[k] > (std::size_t{1} << 24)) throw InvalidInput("field header point count out of range");
  }
  return {static_cast<FieldKind>(kind_byte), Grid(dims, points, extent), bytes[7]};
}

template <typename T>
Field<T> decode_field(const std::vector<unsigned char>& bytes) {
  using Traits = FieldTraits<T>;
  const FieldHeader h = decode_header(bytes);
  if (h.kind != Traits::kind) throw InvalidInput("field kind mismatch");
  if (h.components != Traits::components) throw InvalidInput("component count mismatch");
  const std::size_t expected = kFieldHeaderBytes + h.grid.size() * Traits::doubles * 8;
  if (bytes.size() != expected)
    throw InvalidInput("field payload is " + std::to_string(bytes.size()) + " bytes, expected " + std::to_string(expected));
  Field<T> f(h.grid);
  const unsigned char* p = bytes.data() + kFieldHeaderBytes;
  double buf[Traits::doubles];
  for (std::size_t n = 0; n < f.size(); ++n) {
    for (auto& d : buf) {
      d = detail::get_f64(p);
      p += 8;
    }
    f[n] = Traits::get(buf);
  }
  return f;
}

template <typename T>
void write_field(const std::filesystem::path& path, const Field<T>& f) {
  const auto bytes = encode_field(f);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InvalidInput("failed writing " + path.string());
}

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
Field<T> read_field(const std::filesystem::path& path) {
  return decode_field<T>(read_bytes(path));
}

}  // namespace mzbw

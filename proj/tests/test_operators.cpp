#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mzbw/operators.hpp"

namespace {

using namespace mzbw;
constexpr double kPi = std::numbers::pi;

double sup_diff(const RealField& a, const RealField& b) {
  double m = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) m = std::max(m, std::abs(a[n] - b[n]));
  return m;
}

RealField gaussian_1d(const Grid& g) {
  return RealField::sample(g, [](double x, double, double) { return std::exp(-0.5 * x * x); });
}

double gaussian_derivative_error(std::size_t points, Backend backend) {
  const Grid g = Grid::line(points, 20.0);
  const VectorField d = gradient(gaussian_1d(g), backend);
  double err = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double x = g.coordinate(0, n);
    if (std::abs(x) < 5.0) err = std::max(err, std::abs(d[n].x + x * std::exp(-0.5 * x * x)));
  }
  return err;
}

TEST(Grid, RejectsInvalidShapes) {
  EXPECT_THROW(Grid::line(63, 1.0), InvalidInput);
  EXPECT_THROW(Grid::line(0, 1.0), InvalidInput);
  EXPECT_THROW(Grid::line(64, -1.0), InvalidInput);
  EXPECT_THROW(Grid::line(64, std::nan("")), InvalidInput);
}

TEST(Grid, SpacingAndCoordinates) {
  const Grid g = Grid::plane(8, 4, 2.0, 1.0);
  EXPECT_EQ(g.size(), 32u);
  EXPECT_DOUBLE_EQ(g.spacing(0), 0.25);
  EXPECT_DOUBLE_EQ(g.spacing(1), 0.25);
  EXPECT_DOUBLE_EQ(g.coordinate(0, 0), -1.0);
  EXPECT_EQ(g.unravel(g.index(3, 2)), (std::array<std::size_t, 3>{3, 2, 0}));
}

TEST(Gradient, SineMode) {
  const Grid g = Grid::line(64, 3.0);
  const double k = 2.0 * kPi / 3.0;
  const VectorField d = gradient(RealField::sample(g, [k](double x, double, double) { return std::sin(k * x); }));
  for (std::size_t n = 0; n < g.size(); ++n) {
    EXPECT_NEAR(d[n].x, k * std::cos(k * g.coordinate(0, n)), 1e-13);
    EXPECT_EQ(d[n].y, 0.0);
    EXPECT_EQ(d[n].z, 0.0);
  }
}

TEST(Gradient, ConstantIsZero) {
  const Grid g = Grid::box(8, 8, 8, 1.0, 2.0, 3.0);
  for (Backend b : {Backend::spectral, Backend::fd2}) {
    EXPECT_LT(max_abs(gradient(RealField(g, 2.5), b)), 1e-14);
  }
}

TEST(Gradient, GaussianOracle) { EXPECT_LT(gaussian_derivative_error(256, Backend::spectral), 1e-10); }

TEST(Gradient, Fd2ConvergesAtSecondOrder) {
  const double coarse = gaussian_derivative_error(256, Backend::fd2);
  const double fine = gaussian_derivative_error(512, Backend::fd2);
  EXPECT_GE(coarse / fine, 3.5);
}

TEST(Gradient, RejectsNonFinite) {
  RealField f(Grid::line(8, 1.0));
  f[3] = std::nan("");
  EXPECT_THROW(gradient(f), NumericalError);
}

TEST(Laplacian, SineModeAndConstant) {
  const Grid g = Grid::line(64, 5.0);
  const double k = 2.0 * kPi / 5.0;
  const RealField f = RealField::sample(g, [k](double x, double, double) { return std::sin(k * x); });
  const RealField lap = laplacian(f);
  for (std::size_t n = 0; n < g.size(); ++n) EXPECT_NEAR(lap[n], -k * k * f[n], 1e-12);
  EXPECT_LT(max_abs(laplacian(RealField(g, 1.0))), 1e-14);
}

TEST(Laplacian, GaussianOracle) {
  const Grid g = Grid::line(256, 20.0);
  const RealField lap = laplacian(gaussian_1d(g));
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double x = g.coordinate(0, n);
    EXPECT_NEAR(lap[n], (x * x - 1.0) * std::exp(-0.5 * x * x), 1e-9);
  }
}

TEST(Laplacian, ComplexMatchesComponents) {
  const Grid g = Grid::plane(16, 16, 4.0, 4.0);
  const ComplexField f = ComplexField::sample(g, [](double x, double y, double) {
    return complex(std::exp(-x * x), std::exp(-y * y - x));
  });
  const ComplexField lap = laplacian(f);
  const RealField re = laplacian(real_part(f)), im = laplacian(imag_part(f));
  for (std::size_t n = 0; n < g.size(); ++n) {
    EXPECT_NEAR(lap[n].real(), re[n], 1e-10);
    EXPECT_NEAR(lap[n].imag(), im[n], 1e-10);
  }
}

TEST(Divergence, OfGradientIsLaplacian) {
  const Grid g = Grid::line(128, 20.0);
  const RealField f = gaussian_1d(g);
  EXPECT_LT(sup_diff(divergence(gradient(f)), laplacian(f)), 1e-12);
}

TEST(Divergence, OfGradientIsLaplacian2d) {
  const Grid g = Grid::plane(64, 64, 16.0, 16.0);
  const RealField f = RealField::sample(g, [](double x, double y, double) { return std::exp(-0.5 * (x * x + 2.0 * y * y)); });
  EXPECT_LT(sup_diff(divergence(gradient(f)), laplacian(f)), 1e-12);
}

TEST(Divergence, ConstantIsZero) {
  const Grid g = Grid::plane(8, 8, 1.0, 1.0);
  EXPECT_LT(max_abs(divergence(VectorField(g, Vec3{1.0, -2.0, 3.0}))), 1e-14);
}

TEST(Curl, ResolvedModes) {
  const double L = 4.0, k = 2.0 * kPi / L;
  const Grid g = Grid::plane(32, 32, L, L);
  const VectorField v = VectorField::sample(g, [k](double x, double y, double) {
    return Vec3{-std::sin(k * y), std::sin(k * x), 0.0};
  });
  const VectorField c = curl(v);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto p = g.position(n);
    EXPECT_NEAR(c[n].x, 0.0, 1e-13);
    EXPECT_NEAR(c[n].y, 0.0, 1e-13);
    EXPECT_NEAR(c[n].z, k * (std::cos(k * p[0]) + std::cos(k * p[1])), 1e-12);
  }
}

TEST(Curl, OfGradientAndConstantVanish) {
  const Grid g = Grid::box(16, 16, 16, 10.0, 10.0, 10.0);
  const RealField f = RealField::sample(g, [](double x, double y, double z) { return std::exp(-0.3 * (x * x + y * y + z * z)); });
  EXPECT_LT(max_abs(curl(gradient(f))), 1e-10);
  EXPECT_LT(max_abs(curl(VectorField(g, Vec3{1.0, 2.0, 3.0}))), 1e-14);
}

TEST(Curl, DivergenceOfCurlVanishes) {
  const Grid g = Grid::box(16, 16, 16, 10.0, 10.0, 10.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a = u(rng), b = u(rng), c = u(rng);
  const VectorField w = VectorField::sample(g, [&](double x, double y, double z) {
    const double e = std::exp(-0.2 * (x * x + y * y + z * z));
    return Vec3{a * e * y, b * e * z * x, c * e};
  });
  EXPECT_LT(max_abs(divergence(curl(w))), 1e-10);
}

TEST(Integrate, Basics) {
  const Grid g = Grid::line(64, 3.0);
  EXPECT_NEAR(integrate(RealField(g, 1.0)), 3.0, 1e-14);
  EXPECT_NEAR(integrate(RealField::sample(g, [](double x, double, double) { return std::sin(2.0 * kPi * x / 3.0); })), 0.0,
              1e-15);
  const Grid big = Grid::line(512, 40.0);
  const RealField gauss =
      RealField::sample(big, [](double x, double, double) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); });
  EXPECT_NEAR(integrate(gauss), 1.0, 1e-12);
}

TEST(Integrate, BitReproducible) {
  const Grid g = Grid::plane(64, 64, 7.0, 7.0);
  const RealField f = RealField::sample(g, [](double x, double y, double) { return std::cos(x) * std::exp(-y * y); });
  EXPECT_EQ(integrate(f), integrate(f));
}

TEST(VectorIdentity, CrossSquare) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const Vec3 a{u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng)};
    const double lhs = norm2(cross(a, b));
    const double rhs = norm2(a) * norm2(b) - dot(a, b) * dot(a, b);
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * norm2(a) * norm2(b));
  }
}

TEST(Backend, ParseRoundTrip) {
  EXPECT_EQ(parse_backend("spectral"), Backend::spectral);
  EXPECT_EQ(parse_backend("fd2"), Backend::fd2);
  EXPECT_FALSE(parse_backend("fd4").has_value());
  EXPECT_EQ(to_string(Backend::fd2), "fd2");
}

}  // namespace

#include <traffic2d/kde.hpp>

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace traffic2d;

TEST(Kernel, PeakValue) {
  const KernelConfig k{5.0, 1.0};
  EXPECT_NEAR(gaussian_kernel(0.0, 0.0, k), 1.0 / (2.0 * std::numbers::pi * 5.0), 1e-12);
  EXPECT_LT(gaussian_kernel(5.0, 0.0, k), gaussian_kernel(0.0, 0.0, k));
  EXPECT_DOUBLE_EQ(gaussian_kernel(3.0, -0.5, k), gaussian_kernel(-3.0, 0.5, k));
}

TEST(Kernel, DefaultBandwidths) {
  KernelConfig k = default_bandwidths(450.0, 14.0);
  EXPECT_DOUBLE_EQ(k.hx, 22.5);
  EXPECT_DOUBLE_EQ(k.hy, 0.7);
  k = default_bandwidths(20.0, 20.0);
  EXPECT_DOUBLE_EQ(k.hx, 1.0);
  EXPECT_DOUBLE_EQ(k.hy, 1.0);
  k = default_bandwidths(100.0, 6.0);
  EXPECT_DOUBLE_EQ(k.hx, 5.0);
  EXPECT_NEAR(k.hy, 0.3, 1e-15);
  EXPECT_THROW(default_bandwidths(0.0, 1.0), ParameterError);
  EXPECT_THROW((KernelConfig{0.0, 1.0}.validate()), ParameterError);
}

TEST(Reconstruction, SingleVehiclePeak) {
  const Grid2D g = Grid2D::from_spacing(20.0, 20.0, 1.0, 1.0, -10.0, -10.0);
  const std::vector<Point2> p{{0.5, 0.5}};
  const ScalarField f = reconstruct_density(p, g, {2.0, 3.0});
  EXPECT_NEAR(f(10, 10), 1.0 / (2.0 * std::numbers::pi * 6.0), 1e-12);
}

TEST(Reconstruction, MassOnPaddedGrid) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(0.0, 100.0), uy(0.0, 6.0);
  std::vector<Point2> p;
  for (int k = 0; k < 30; ++k) p.push_back({ux(rng), uy(rng)});
  const KernelConfig k{5.0, 0.3};
  const Grid2D g = Grid2D::from_spacing(100.0 + 10 * k.hx, 6.0 + 10 * k.hy, 0.5, 0.05, -5 * k.hx, -5 * k.hy);
  const ScalarField f = reconstruct_density(p, g, k);
  EXPECT_NEAR(integral(f), 30.0, 0.3);
  EXPECT_NEAR(truncation_loss(f, 30), 0.0, 0.01);
  EXPECT_EQ(truncation_loss(f, 0), 0.0);
}

TEST(Reconstruction, EquidistantVehiclesGiveNearlyFlatInterior) {
  std::vector<double> pos;
  for (int k = 0; k < 40; ++k) pos.push_back(10.0 * k);
  const std::vector<double> d = reconstruct_density_1d(pos, 0.0, 1.0, 390, 10.0);
  const std::vector<double> interior(d.begin() + 100, d.begin() + 290);
  double m = 0.0, var = 0.0;
  for (double v : interior) m += v / static_cast<double>(interior.size());
  for (double v : interior) var += (v - m) * (v - m) / static_cast<double>(interior.size());
  const double cv = std::sqrt(var) / m;
  EXPECT_LE(cv, 0.05);
  EXPECT_NEAR(m, 0.1, 0.005);
  EXPECT_THROW(reconstruct_density_1d(pos, 0.0, 1.0, 10, 0.0), ParameterError);
}

TEST(Reconstruction, LinearInPositionsAndTranslationCovariant) {
  const Grid2D g = Grid2D::from_spacing(40.0, 8.0, 0.5, 0.25, 0.0, 0.0);
  const KernelConfig k{3.0, 0.5};
  const std::vector<Point2> a{{10.0, 2.0}, {15.0, 3.5}};
  const std::vector<Point2> b{{25.0, 5.0}};
  std::vector<Point2> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  const ScalarField fa = reconstruct_density(a, g, k);
  const ScalarField fb = reconstruct_density(b, g, k);
  const ScalarField fab = reconstruct_density(ab, g, k);
  for (std::size_t j = 0; j < g.ny; ++j) {
    for (std::size_t i = 0; i < g.nx; ++i) EXPECT_NEAR(fab(i, j), fa(i, j) + fb(i, j), 1e-14);
  }
  // Shifting by whole cells shifts the field.
  std::vector<Point2> shifted = a;
  for (auto& p : shifted) {
    p.x += 4 * g.dx();
    p.y += 2 * g.dy();
  }
  const ScalarField fs = reconstruct_density(shifted, g, k);
  for (std::size_t j = 2; j < g.ny; ++j) {
    for (std::size_t i = 4; i < g.nx; ++i) EXPECT_NEAR(fs(i, j), fa(i - 4, j - 2), 1e-13);
  }
}

TEST(L1Error, MetricProperties) {
  const Grid2D g{4.0, 2.0, 4, 2};
  ScalarField a(g, 1.0), b(g, 0.5), c(g, 0.0);
  c(1, 1) = 3.0;
  EXPECT_DOUBLE_EQ(l1_error(a, a), 0.0);
  EXPECT_DOUBLE_EQ(l1_error(a, b), 0.5 * 8.0);
  EXPECT_DOUBLE_EQ(l1_error(a, c), l1_error(c, a));
  EXPECT_LE(l1_error(a, c), l1_error(a, b) + l1_error(b, c) + 1e-14);
  const ScalarField other(Grid2D{4.0, 2.0, 2, 2}, 0.0);
  EXPECT_THROW(l1_error(a, other), ParameterError);
}

TEST(LinearTracks, ExactOnLinearData) {
  TrajectoryDataset data;
  for (int k = 0; k < 5; ++k) {
    data.push_back({"c", VehicleClass::Car, 0.2 * k, 3.0 + 25.0 * 0.2 * k, 2.0 - 0.1 * 0.2 * k});
    data.push_back({"t", VehicleClass::Truck, 0.2 * k, 10.0 + 20.0 * 0.2 * k, 5.0});
  }
  const auto tracks = fit_linear_tracks(data);
  ASSERT_EQ(tracks.size(), 2u);
  EXPECT_NEAR(tracks[0].a_x, 3.0, 1e-12);
  EXPECT_NEAR(tracks[0].b_x, 25.0, 1e-12);
  EXPECT_NEAR(tracks[0].b_y, -0.1, 1e-12);
  EXPECT_DOUBLE_EQ(tracks[0].t_end, 0.8);
  const auto cars = positions_at(tracks, 2.0, VehicleClass::Car);
  ASSERT_EQ(cars.size(), 1u);
  EXPECT_NEAR(cars[0].x, 53.0, 1e-10);
  EXPECT_EQ(positions_at(tracks, 2.0, VehicleClass::Truck).size(), 1u);
  EXPECT_THROW(fit_linear_tracks({{"x", VehicleClass::Car, 0, 0, 0}}), InputError);
}

TEST(LinearTracks, MatchNormalEquationsOnNoisyData) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> noise(0.0, 0.3);
  TrajectoryDataset data;
  std::vector<double> t, x;
  for (int k = 0; k < 50; ++k) {
    const double tk = 0.1 * k;
    const double xk = 4.0 + 30.0 * tk + noise(rng);
    t.push_back(tk);
    x.push_back(xk);
    data.push_back({"v", VehicleClass::Car, tk, xk, 1.0});
  }
  double st = 0, sx = 0, stt = 0, stx = 0;
  const double n = static_cast<double>(t.size());
  for (std::size_t k = 0; k < t.size(); ++k) {
    st += t[k];
    sx += x[k];
    stt += t[k] * t[k];
    stx += t[k] * x[k];
  }
  const double slope = (n * stx - st * sx) / (n * stt - st * st);
  const double intercept = (sx - slope * st) / n;
  const auto tr = fit_linear_tracks(data).front();
  EXPECT_NEAR(tr.b_x, slope, 1e-9);
  EXPECT_NEAR(tr.a_x, intercept, 1e-9);
}

#include <traffic2d/model.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace traffic2d;

namespace {

const FluxParams kShared = SharedFlux{-1.0, -1.0, 1.0};

std::vector<FluxParams> all_variants() {
  return {SharedFlux{97.04, -0.41, 400.0}, LengthWeightedFlux{99.61, -0.40, 74.86, -0.49, 400.0},
          PerClassFlux{80.0, -0.4, 0.0, 0.0, 400.0}};
}

}  // namespace

TEST(Flux, SharedSubstitution) {
  const Vec2 q = flux({0.5, 0.25}, kShared, Axis::X);
  EXPECT_DOUBLE_EQ(q[0], -0.125);
  EXPECT_DOUBLE_EQ(q[1], -0.0625);
}

TEST(Flux, LengthWeightedHandValue) {
  const FluxParams p = LengthWeightedFlux{99.61, -0.40, 74.86, -0.49, 400.0};
  const Vec2 q = flux({100.0, 50.0}, p, Axis::X);
  EXPECT_NEAR(q[0], 4980.5, 1e-9);
  EXPECT_NEAR(q[1], 1871.5, 1e-9);
}

TEST(Flux, VanishesAtJamForEveryVariant) {
  for (const auto& p : all_variants()) {
    const double w = std::holds_alternative<LengthWeightedFlux>(p) ? 2.0 : 1.0;
    const ClassState jam{200.0, 200.0 / w};
    for (Axis a : {Axis::X, Axis::Y}) {
      const Vec2 q = flux(jam, p, a);
      EXPECT_EQ(q[0], 0.0);
      EXPECT_EQ(q[1], 0.0);
    }
  }
}

TEST(Flux, RejectsOverJamAndBadRmax) {
  EXPECT_THROW(flux({0.8, 0.3}, kShared, Axis::X), DomainError);
  EXPECT_THROW(flux({-0.1, 0.0}, kShared, Axis::X), DomainError);
  EXPECT_THROW(flux({0.1, 0.1}, FluxParams{SharedFlux{-1, -1, 0.0}}, Axis::X), ParameterError);
}

TEST(Flux, ClampsRoundoffAboveJam) {
  const Vec2 q = flux({0.5, 0.5 + 1e-13}, kShared, Axis::X);
  EXPECT_EQ(q[0], 0.0);
  EXPECT_EQ(q[1], 0.0);
}

TEST(Velocity, Examples) {
  const Vec2 u = velocity({0.5, 0.25}, kShared, Axis::X);
  EXPECT_DOUBLE_EQ(u[0], -0.25);
  EXPECT_DOUBLE_EQ(u[1], -0.25);
  const Vec2 free = velocity({0.0, 0.0}, FluxParams{SharedFlux{97.04, -0.41, 400.0}}, Axis::X);
  EXPECT_DOUBLE_EQ(free[0], 97.04);
  EXPECT_EQ(velocity({0.5, 0.5}, kShared, Axis::Y)[0], 0.0);
}

TEST(Velocity, ConsistencyWithFluxOnRandomStates) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& p : all_variants()) {
    for (int k = 0; k < 2000; ++k) {
      const double w = std::holds_alternative<LengthWeightedFlux>(p) ? 2.0 : 1.0;
      const double occ = u(rng), share = u(rng);
      const ClassState s{400.0 * occ * (1 - share), 400.0 * occ * share / w};
      for (Axis a : {Axis::X, Axis::Y}) {
        const Vec2 q = flux(s, p, a);
        const Vec2 v = velocity(s, p, a);
        EXPECT_EQ(q[0], s.rho * v[0]);
        EXPECT_EQ(q[1], s.mu * v[1]);
      }
    }
  }
}

TEST(Velocity, SharedClassSymmetry) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  const FluxParams p = SharedFlux{-1.3, 0.7, 1.0};
  for (int k = 0; k < 1000; ++k) {
    const ClassState s{u(rng), u(rng)};
    const ClassState t{s.mu, s.rho};
    const Vec2 qs = flux(s, p, Axis::X), qt = flux(t, p, Axis::X);
    EXPECT_DOUBLE_EQ(qs[0], qt[1]);
    EXPECT_DOUBLE_EQ(qs[1], qt[0]);
    EXPECT_DOUBLE_EQ(velocity(s, p, Axis::X)[0], velocity(t, p, Axis::X)[0]);
  }
}

TEST(Eigen, Examples) {
  const SharedFlux p{-1.0, -1.0, 1.0};
  const EigenData vac = eigen({0.0, 0.0}, p, 0.3, 0.9);
  EXPECT_DOUBLE_EQ(vac.lambda1, -1.2);
  EXPECT_DOUBLE_EQ(vac.lambda2, -1.2);
  const EigenData e = eigen({0.3, 0.2}, p, 1.0, 0.0);
  EXPECT_DOUBLE_EQ(e.lambda1, -0.5);
  EXPECT_DOUBLE_EQ(e.lambda2, 0.0);
  ASSERT_TRUE(e.gamma2.has_value());
  EXPECT_DOUBLE_EQ((*e.gamma2)[0], 1.5);
  EXPECT_DOUBLE_EQ((*e.gamma2)[1], 1.0);
  EXPECT_EQ(e.gamma1, (Vec2{-1.0, 1.0}));
  EXPECT_EQ(e.field1_type, FieldType::LinearlyDegenerate);
  EXPECT_EQ(e.field2_type, FieldType::GenuinelyNonlinear);
}

TEST(Eigen, Gamma2UndefinedWithoutTrucks) {
  EXPECT_FALSE(eigen({0.4, 0.0}, SharedFlux{-1, -1, 1}, 1, 0).gamma2.has_value());
}

TEST(Eigen, MatchesJacobianEigenpairs) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 0.49), k(-2.0, 2.0);
  const SharedFlux p{-0.8, -1.7, 1.0};
  for (int n = 0; n < 1000; ++n) {
    const ClassState s{u(rng), u(rng)};
    const double k1 = k(rng), k2 = k(rng);
    const Mat2 a = jacobian(s, p, Axis::X), b = jacobian(s, p, Axis::Y);
    Mat2 m;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) m[i][j] = k1 * a[i][j] + k2 * b[i][j];
    }
    const EigenData e = eigen(s, p, k1, k2);
    for (const auto& [lam, vec] : {std::pair{e.lambda1, e.gamma1}, std::pair{e.lambda2, *e.gamma2}}) {
      for (int i = 0; i < 2; ++i) {
        EXPECT_NEAR(m[i][0] * vec[0] + m[i][1] * vec[1], lam * vec[i], 1e-12);
      }
    }
  }
}

TEST(Eigen, HyperbolicAndCoincidenceCondition) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0), k(-3.0, 3.0);
  const SharedFlux p{-1.0, -0.5, 1.0};
  for (int n = 0; n < 10000; ++n) {
    const double occ = 0.001 + 0.998 * u(rng), share = u(rng);
    const ClassState s{occ * (1 - share), occ * share};
    const double k1 = k(rng), k2 = k(rng);
    const EigenData e = eigen(s, p, k1, k2);
    EXPECT_TRUE(std::isfinite(e.lambda1) && std::isfinite(e.lambda2));
    EXPECT_NE(e.lambda1, e.lambda2);
    // Complex eigenvalues would show up as a negative discriminant.
    const Mat2 a = jacobian(s, p, Axis::X), b = jacobian(s, p, Axis::Y);
    const double m00 = k1 * a[0][0] + k2 * b[0][0], m01 = k1 * a[0][1] + k2 * b[0][1];
    const double m10 = k1 * a[1][0] + k2 * b[1][0], m11 = k1 * a[1][1] + k2 * b[1][1];
    const double disc = 0.25 * (m00 - m11) * (m00 - m11) + m01 * m10;
    EXPECT_GE(disc, -1e-12);
  }
  const EigenData e = eigen({0.2, 0.1}, p, 0.5, -1.0);
  EXPECT_DOUBLE_EQ(e.lambda1, e.lambda2);
}

TEST(Eigen, FieldCharacterByFiniteDifferences) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.02, 0.45);
  const SharedFlux p{-1.0, -1.0, 1.0};
  const double h = 1e-6;
  for (int n = 0; n < 500; ++n) {
    const ClassState s{u(rng), u(rng)};
    const double k1 = 0.6, k2 = 0.8;
    auto lam = [&](const ClassState& z, int which) {
      const EigenData e = eigen(z, p, k1, k2);
      return which == 1 ? e.lambda1 : e.lambda2;
    };
    auto grad = [&](int which) {
      return Vec2{(lam({s.rho + h, s.mu}, which) - lam({s.rho - h, s.mu}, which)) / (2 * h),
                  (lam({s.rho, s.mu + h}, which) - lam({s.rho, s.mu - h}, which)) / (2 * h)};
    };
    const EigenData e = eigen(s, p, k1, k2);
    const Vec2 g1 = grad(1), g2 = grad(2);
    EXPECT_NEAR(g1[0] * e.gamma1[0] + g1[1] * e.gamma1[1], 0.0, 1e-6);
    const double c = k1 * p.c_x + k2 * p.c_y;
    const double analytic = -2.0 * c * ((*e.gamma2)[0] + (*e.gamma2)[1]);
    const double numeric = g2[0] * (*e.gamma2)[0] + g2[1] * (*e.gamma2)[1];
    EXPECT_NEAR(numeric, analytic, 1e-6 * std::abs(analytic));
    if (std::abs(analytic) > 1e-8) {
      EXPECT_NE(numeric, 0.0);
    }
  }
}

TEST(RiemannInvariants, Examples) {
  const auto a = riemann_invariants({0.3, 0.3});
  EXPECT_DOUBLE_EQ(a.z1, 0.6);
  EXPECT_DOUBLE_EQ(*a.z2, 0.0);
  const auto b = riemann_invariants({0.4, 0.2});
  EXPECT_DOUBLE_EQ(b.z1, 0.6000000000000001);
  EXPECT_DOUBLE_EQ(*b.z2, std::log(2.0));
  EXPECT_NEAR(*riemann_invariants({std::exp(1.0) * 0.07, 0.07}).z2, 1.0, 1e-15);
  EXPECT_FALSE(riemann_invariants({0.0, 0.2}).z2.has_value());
}

TEST(RiemannInvariants, ConstantAlongTheOtherField) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.05, 0.45);
  const double h = 1e-6;
  for (int n = 0; n < 500; ++n) {
    const ClassState s{u(rng), u(rng)};
    const EigenData e = eigen(s, SharedFlux{-1, -1, 1}, 1, 0);
    // z1 along gamma1 is constant: rho + mu unchanged by (-1, 1).
    const auto g1 = e.gamma1;
    const auto g2 = *e.gamma2;
    auto z = [](const ClassState& c) { return riemann_invariants(c); };
    const double dz1 =
        (z({s.rho + h * g1[0], s.mu + h * g1[1]}).z1 - z({s.rho - h * g1[0], s.mu - h * g1[1]}).z1) / (2 * h);
    const double dz2 = (*z({s.rho + h * g2[0], s.mu + h * g2[1]}).z2 -
                        *z({s.rho - h * g2[0], s.mu - h * g2[1]}).z2) / (2 * h);
    EXPECT_NEAR(dz1, 0.0, 1e-6);
    EXPECT_NEAR(dz2, 0.0, 1e-6);
  }
}

TEST(WaveSpeed, SharedClosedFormMatchesJacobian) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  const FluxParams p = SharedFlux{-1.2, 0.4, 1.0};
  for (int n = 0; n < 1000; ++n) {
    const ClassState s{u(rng), u(rng)};
    for (Axis a : {Axis::X, Axis::Y}) {
      EXPECT_NEAR(directional_wave_speed(s, p, a), spectral_radius(jacobian(s, p, a)), 1e-12);
    }
  }
}

TEST(Normalize, DividesByRmax) {
  const ClassState s = normalize({100.0, 50.0}, 400.0);
  EXPECT_DOUBLE_EQ(s.rho, 0.25);
  EXPECT_DOUBLE_EQ(s.mu, 0.125);
  EXPECT_THROW(normalize({1, 1}, 0.0), ParameterError);
  EXPECT_EQ(variant_name(kShared), "shared");
}

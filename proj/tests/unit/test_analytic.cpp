#include <gtest/gtest.h>

#include <cmath>

#include "convdyn/analytic.hpp"
#include "convdyn/verify.hpp"
#include "helpers.hpp"

using namespace convdyn;
using convdyn::testing::at_angle;
using convdyn::testing::gaussian;

namespace {

// Scalar expansion of the loss, written out term by term. `cross_factor`
// multiplies the last term; the correct value is 1/(2π).
double expanded_loss(const StudentParams& s, const TeacherParams& t, double cross_factor) {
  const double c = t.w_star_norm();
  const double phi = angle(s.v(), t.w_star());
  const double g = (kPi - phi) * std::cos(phi) + std::sin(phi);
  const double one_a = s.a().sum();
  const double one_as = t.a_star().sum();
  const double two_pi = 2.0 * kPi;
  return 0.5 * ((kPi - 1) * c * c / two_pi * t.a_star().squaredNorm() +
                (kPi - 1) / two_pi * s.a().squaredNorm() -
                2.0 * (g - 1) * c / two_pi * s.a().dot(t.a_star()) +
                c * c / two_pi * one_as * one_as + one_a * one_a / two_pi -
                2.0 * c * cross_factor * one_a * one_as);
}

double correct_expanded(const StudentParams& s, const TeacherParams& t) {
  return expanded_loss(s, t, 1.0 / (2.0 * kPi));
}

double uncorrected_expanded(const StudentParams& s, const TeacherParams& t) {
  return expanded_loss(s, t, 1.0);
}

}  // namespace

TEST(GPhi, EndpointsAndMonotone) {
  EXPECT_DOUBLE_EQ(g_phi(0.0), kPi);
  EXPECT_NEAR(g_phi(kPi), 0.0, 1e-15);
  EXPECT_NEAR(g_phi(kPi / 2), 1.0, 1e-15);
  double prev = g_phi(0.0);
  for (int i = 1; i <= 100; ++i) {
    const double g = g_phi(kPi * i / 100);
    EXPECT_LE(g, prev);
    prev = g;
  }
  EXPECT_THROW(g_phi(-1e-3), std::domain_error);
  EXPECT_THROW(g_phi(kPi + 1e-3), std::domain_error);
}

TEST(GramMatrices, ReluMoments) {
  // E[σ(x)²] = ‖w‖²/2 and E[σ(x)] = ‖w‖/√(2π) for x ~ N(0, ‖w‖²); patches
  // are independent, so off-diagonals are products of first moments.
  Rng rng = make_rng({21});
  const Vector w = gaussian(6, rng);
  const Vector ws = gaussian(6, rng);
  const GramPair g = gram_matrices(w, ws, 4);
  const double nw = w.norm(), nws = ws.norm();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (i == j) {
        EXPECT_NEAR(g.A_w(i, j), nw * nw / 2, 1e-12);
        EXPECT_NEAR(g.B_ww(i, j), g_phi(angle(w, ws)) * nw * nws / (2 * kPi), 1e-12);
      } else {
        EXPECT_NEAR(g.A_w(i, j), nw * nw / (2 * kPi), 1e-12);
        EXPECT_NEAR(g.B_ww(i, j), nw * nws / (2 * kPi), 1e-12);
      }
    }
  }
  // At w = w*, B(w, w) = A(w).
  const GramPair same = gram_matrices(w, w, 4);
  EXPECT_LE((same.A_w - same.B_ww).norm(), 1e-12 * same.A_w.norm());
}

TEST(PopulationLoss, AgreesWithGramAndExpandedForms) {
  Rng rng = make_rng({22});
  for (int i = 0; i < 500; ++i) {
    const RandomPoint pt = random_point(rng);
    const double stable = population_loss(pt.s, pt.t);
    const double gram = population_loss_gram(pt.s, pt.t);
    const double expanded = correct_expanded(pt.s, pt.t);
    const double size = pt.t.scale() * pt.t.scale() + pt.s.a().squaredNorm();
    EXPECT_NEAR(stable, gram, 1e-12 * size);
    EXPECT_NEAR(stable, expanded, 1e-12 * size);
  }
}

TEST(PopulationLoss, ScaleInvariantInV) {
  Rng rng = make_rng({23});
  for (int i = 0; i < 50; ++i) {
    const RandomPoint pt = random_point(rng);
    const double base = population_loss(pt.s, pt.t);
    for (double c : {0.1, 1.0, 10.0}) {
      const double scaled = population_loss(StudentParams(c * pt.s.v(), pt.s.a()), pt.t);
      EXPECT_NEAR(scaled, base, 1e-12 * std::abs(base));
    }
  }
}

TEST(PopulationLoss, NonnegativeOnRandomConfigs) {
  const CheckResult r = check_nonnegativity(
      [](const StudentParams& s, const TeacherParams& t) { return population_loss(s, t); },
      10'000, 5);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(PopulationLoss, UncorrectedCrossTermGoesNegative) {
  const CheckResult r = check_nonnegativity(uncorrected_expanded, 10'000, 5);
  EXPECT_FALSE(r.passed);
  EXPECT_LT(r.metric, -1e-3);
}

TEST(PopulationLoss, ZeroAtGlobalMinimum) {
  Rng rng = make_rng({24});
  for (int i = 0; i < 100; ++i) {
    const RandomPoint pt = random_point(rng);
    const double c = std::uniform_real_distribution<double>(0.1, 10.0)(rng);
    const StudentParams opt(c * pt.t.w_star(), pt.t.w_star_norm() * pt.t.a_star());
    EXPECT_LE(std::abs(population_loss(opt, pt.t)), 1e-20 * pt.t.scale() * pt.t.scale());
  }
}

TEST(PopulationLoss, SpuriousPointIsBoundedAwayFromZero) {
  Rng rng = make_rng({25});
  std::uniform_int_distribution<int> kd(2, 60);
  std::uniform_int_distribution<int> pd(1, 10);
  std::uniform_real_distribution<double> ratio(0.0, 0.01);
  std::uniform_real_distribution<double> norm(0.2, 5.0);
  for (int i = 0; i < 500; ++i) {
    const int k = kd(rng);
    const int p = pd(rng);
    Vector ws = gaussian(p, rng);
    ws *= norm(rng) / ws.norm();
    const TeacherParams t(ws, make_target_a(k, ratio(rng), norm(rng), rng));
    const StudentParams s(-t.w_star(), spurious_a(t));
    EXPECT_GE(population_loss(s, t), 0.1 * t.scale() * t.scale()) << "k=" << k;
  }
}

TEST(PopulationLoss, DimensionMismatchThrows) {
  const TeacherParams t(Vector::Ones(3), Vector::Ones(2));
  EXPECT_THROW(population_loss(StudentParams(Vector::Ones(4), Vector::Ones(2)), t),
               std::domain_error);
  EXPECT_THROW(population_loss(StudentParams(Vector::Ones(3), Vector::Ones(5)), t),
               std::domain_error);
}

TEST(Gradients, MatchFiniteDifferences) {
  Rng rng = make_rng({26});
  const double h = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const RandomPoint pt = random_point(rng);
    const Vector gv = grad_v(pt.s, pt.t);
    const Vector ga = grad_a(pt.s, pt.t);
    Vector fv(pt.s.p()), fa(pt.s.k());
    for (Eigen::Index j = 0; j < pt.s.p(); ++j) {
      Vector up = pt.s.v(), dn = pt.s.v();
      up[j] += h;
      dn[j] -= h;
      fv[j] = (correct_expanded(StudentParams(up, pt.s.a()), pt.t) -
               correct_expanded(StudentParams(dn, pt.s.a()), pt.t)) / (2 * h);
    }
    for (Eigen::Index j = 0; j < pt.s.k(); ++j) {
      Vector up = pt.s.a(), dn = pt.s.a();
      up[j] += h;
      dn[j] -= h;
      fa[j] = (correct_expanded(StudentParams(pt.s.v(), up), pt.t) -
               correct_expanded(StudentParams(pt.s.v(), dn), pt.t)) / (2 * h);
    }
    EXPECT_LE((gv - fv).norm(), 1e-5 * std::max(fv.norm(), 1e-8)) << "point " << i;
    EXPECT_LE((ga - fa).norm(), 1e-5 * fa.norm()) << "point " << i;
  }
}

TEST(Gradients, VGradientOrthogonalToV) {
  Rng rng = make_rng({27});
  for (int i = 0; i < 200; ++i) {
    const RandomPoint pt = random_point(rng);
    const Vector gv = grad_v(pt.s, pt.t);
    EXPECT_LE(std::abs(gv.dot(pt.s.v())), 1e-12 * gv.norm() * pt.s.v().norm() + 1e-300);
  }
}

TEST(Gradients, VGradientVanishesWithoutSignal) {
  Vector a(2), as(2);
  a << 1, 0;
  as << 0, 1;
  Rng rng = make_rng({28});
  const TeacherParams t(gaussian(4, rng), as);
  const Vector gv = grad_v(StudentParams(gaussian(4, rng), a), t);
  EXPECT_EQ(gv.norm(), 0.0);
}

TEST(Gradients, FastPathMatches) {
  Rng rng = make_rng({29});
  for (int i = 0; i < 50; ++i) {
    const RandomPoint pt = random_point(rng);
    Vector gv(pt.s.p()), ga(pt.s.k());
    const double phi = population_gradients_into(pt.s.v(), pt.s.a(), pt.t, gv, ga);
    EXPECT_DOUBLE_EQ(phi, angle(pt.s.v(), pt.t.w_star()));
    EXPECT_LE((gv - grad_v(pt.s, pt.t)).norm(), 1e-15 * (1 + gv.norm()));
    EXPECT_LE((ga - grad_a(pt.s, pt.t)).norm(), 1e-15 * (1 + ga.norm()));
  }
}

TEST(StationaryPoints, BothClosedFormsAreStationary) {
  Rng rng = make_rng({30});
  for (int i = 0; i < 100; ++i) {
    const int k = 1 + i % 30;
    const TeacherParams t(gaussian(1 + i % 7, rng), gaussian(k, rng));
    const double tol = 1e-12 * t.scale();

    const StudentParams global(2.0 * t.w_star(), t.w_star_norm() * t.a_star());
    const Gradients gg = population_gradients(global, t);
    EXPECT_LE(gg.v.norm(), tol);
    EXPECT_LE(gg.a.norm(), tol);

    const StudentParams spurious(-0.5 * t.w_star(), spurious_a(t));
    const Gradients gs = population_gradients(spurious, t);
    EXPECT_LE(gs.v.norm(), tol);
    EXPECT_LE(gs.a.norm(), tol);
  }
}

TEST(SpuriousA, SpecialCases) {
  Vector one(1);
  one << 2.5;
  EXPECT_EQ(spurious_a(TeacherParams(Vector::Ones(3), one)).norm(), 0.0);

  Vector zero_sum(4);
  zero_sum << 1, -2, 0.5, 0.5;
  const TeacherParams t(Vector::Ones(2), zero_sum);
  const Vector expected = -t.w_star_norm() * zero_sum / (kPi - 1);
  EXPECT_LE((spurious_a(t) - expected).norm(), 1e-14);
}

TEST(SpuriousA, SolvesTheLinearSystem) {
  Rng rng = make_rng({31});
  const int k = 6;
  const TeacherParams t(gaussian(3, rng), gaussian(k, rng));
  const Matrix ones = Matrix::Ones(k, k);
  const Matrix lhs = ones + (kPi - 1) * Matrix::Identity(k, k);
  const Vector rhs = (ones - Matrix::Identity(k, k)) * t.w_star_norm() * t.a_star();
  EXPECT_LE((lhs * spurious_a(t) - rhs).norm(), 1e-12 * rhs.norm());
  const Vector ga = grad_a(StudentParams(-t.w_star(), spurious_a(t)), t);
  EXPECT_LE(ga.norm(), 1e-12);
}

TEST(Gradients, AGradientZeroAtAlignedOptimum) {
  Rng rng = make_rng({32});
  const TeacherParams t(gaussian(5, rng), gaussian(5, rng));
  const StudentParams s(t.w_star(), t.w_star_norm() * t.a_star());
  EXPECT_LE(grad_a(s, t).norm(), 1e-14 * t.scale());
  const Vector v = at_angle(t.w_star(), 0.3, 1.0, rng);
  EXPECT_GT(grad_a(StudentParams(v, s.a()), t).norm(), 1e-3);
}

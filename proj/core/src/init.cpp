#include "convdyn/init.hpp"

#include <cmath>
#include <stdexcept>

#include "convdyn/analytic.hpp"

namespace convdyn {

double init_ball_radius(const TeacherParams& t) {
  const double sqrt_k = std::sqrt(static_cast<double>(t.k()));
  const double s = std::abs(t.sum_a_star());
  // 1ᵀa* below rounding level of the sum counts as zero.
  if (s <= 1e-12 * sqrt_k * t.a_star_norm()) return t.scale() / sqrt_k;
  return s * t.w_star_norm() / sqrt_k;
}

StudentParams sample_init(int p, int k, const TeacherParams& t, Rng& rng) {
  if (p != t.p() || k != t.k()) throw std::domain_error("sample_init: dimension mismatch");
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  Vector v(p);
  do {
    for (int i = 0; i < p; ++i) v[i] = normal(rng);
  } while (v.norm() == 0.0);
  v.normalize();

  Vector a(k);
  do {
    for (int i = 0; i < k; ++i) a[i] = normal(rng);
  } while (a.norm() == 0.0);
  const double radius = init_ball_radius(t) * std::pow(uniform(rng), 1.0 / k);
  a *= radius / a.norm();
  return StudentParams(std::move(v), std::move(a));
}

SignVariants sign_variants(const StudentParams& s) {
  return {{StudentParams(s.v(), s.a()), StudentParams(s.v(), -s.a()),
           StudentParams(-s.v(), s.a()), StudentParams(-s.v(), -s.a())}};
}

std::optional<StudentParams> select_good_variant(const SignVariants& sv, const TeacherParams& t) {
  for (const StudentParams& s : sv.variants) {
    if (s.a().dot(t.a_star()) > 0.0 && angle(s.v(), t.w_star()) < kPi / 2.0) return s;
  }
  return std::nullopt;
}

std::optional<StudentParams> select_bad_variant(const SignVariants& sv, const TeacherParams& t) {
  const double s = t.sum_a_star();
  const double threshold = 1.0 - 2.0 * s * s / t.a_star().squaredNorm();
  for (const StudentParams& cand : sv.variants) {
    if (cand.a().dot(t.a_star()) < 0.0 && g_phi(angle(cand.v(), t.w_star())) <= threshold) {
      return cand;
    }
  }
  return std::nullopt;
}

}  // namespace convdyn

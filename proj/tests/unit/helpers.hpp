#pragma once

#include <random>

#include "convdyn/model.hpp"

namespace convdyn::testing {

inline Vector gaussian(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = normal(rng);
  return x;
}

inline TeacherParams random_teacher(int p, int k, Rng& rng) {
  return TeacherParams(gaussian(p, rng), gaussian(k, rng));
}

inline StudentParams random_student(int p, int k, Rng& rng) {
  return StudentParams(gaussian(p, rng), gaussian(k, rng));
}

// v at angle phi from w (in the plane of w and a random direction), norm r.
inline Vector at_angle(const Vector& w, double phi, double r, Rng& rng) {
  Vector u = gaussian(w.size(), rng);
  const Vector e = w.normalized();
  u -= u.dot(e) * e;
  u.normalize();
  return r * (std::cos(phi) * e + std::sin(phi) * u);
}

}  // namespace convdyn::testing

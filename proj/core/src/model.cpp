#include "convdyn/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace convdyn {

StudentParams::StudentParams(Vector v, Vector a) : v_(std::move(v)), a_(std::move(a)) {
  if (v_.size() < 1 || a_.size() < 1) {
    throw std::domain_error("StudentParams: v and a must be nonempty");
  }
  if (!(v_.norm() > 0.0)) {
    throw std::domain_error("StudentParams: v must have positive norm");
  }
}

TeacherParams::TeacherParams(Vector w_star, Vector a_star)
    : w_star_(std::move(w_star)), a_star_(std::move(a_star)), w_star_norm_(w_star_.norm()) {
  if (w_star_.size() < 1 || a_star_.size() < 1) {
    throw std::domain_error("TeacherParams: w* and a* must be nonempty");
  }
  if (!(w_star_norm_ > 0.0)) {
    throw std::domain_error("TeacherParams: w* must have positive norm");
  }
  if (!(a_star_.norm() > 0.0)) {
    throw std::domain_error("TeacherParams: a* must not be identically zero");
  }
}

std::string_view to_string(StationaryClass c) {
  switch (c) {
    case StationaryClass::Global: return "global";
    case StationaryClass::SpuriousLocal: return "spurious";
    case StationaryClass::Undetermined: return "undetermined";
  }
  return "undetermined";
}

std::string_view to_string(InitMode m) {
  switch (m) {
    case InitMode::Good: return "good";
    case InitMode::Bad: return "bad";
    case InitMode::Raw: return "raw";
  }
  return "raw";
}

InitMode parse_init_mode(std::string_view s) {
  if (s == "good") return InitMode::Good;
  if (s == "bad") return InitMode::Bad;
  if (s == "raw") return InitMode::Raw;
  throw std::domain_error("unknown init mode '" + std::string(s) + "'");
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::domain_error(msg); };
  if (p < 1) fail("p must be >= 1");
  if (k < 1) fail("k must be >= 1");
  if (!(ratio >= 0.0)) fail("ratio must be >= 0");
  if (ratio > k) fail("ratio must be <= k (Cauchy-Schwarz)");
  if (!(w_star_norm > 0.0)) fail("w_star_norm must be > 0");
  if (!(a_star_norm > 0.0)) fail("a_star_norm must be > 0");
  if (max_iters < 1) fail("max_iters must be >= 1");
  if (!(grad_tol > 0.0)) fail("grad_tol must be > 0");
  if (!(class_tol > 0.0)) fail("class_tol must be > 0");
  if (trials < 1) fail("trials must be >= 1");
  if (stride < 1) fail("stride must be >= 1");
  if (workers < 0) fail("workers must be >= 0");
  if (const auto* a = std::get_if<AutoStep>(&step_size_policy)) {
    if (!(a->scale > 0.0 && a->scale <= 1.0)) fail("eta scale must be in (0, 1]");
  } else if (!(std::get<FixedStep>(step_size_policy).eta > 0.0)) {
    fail("eta must be > 0");
  }
}

double angle(const Vector& x, const Vector& y) {
  const double nx = x.norm();
  const double ny = y.norm();
  if (!(nx > 0.0) || !(ny > 0.0)) {
    throw std::domain_error("angle: zero-norm input");
  }
  if (x.size() != y.size()) {
    throw std::domain_error("angle: dimension mismatch");
  }
  // Equals acos(⟨x̂, ŷ⟩) but keeps full precision near 0 and π.
  return 2.0 * std::atan2((x / nx - y / ny).norm(), (x / nx + y / ny).norm());
}

Vector make_target_a(int k, double ratio, double norm, Rng& rng) {
  if (k < 1) throw std::domain_error("make_target_a: k must be >= 1");
  if (!(ratio >= 0.0) || ratio > k) {
    throw std::domain_error("make_target_a: ratio must lie in [0, k]");
  }
  if (!(norm > 0.0)) throw std::domain_error("make_target_a: norm must be > 0");

  const double kd = static_cast<double>(k);
  const double along = std::sqrt(ratio) / kd;            // per-entry share along 1
  const double across = std::sqrt(std::max(0.0, 1.0 - ratio / kd));
  Vector a = Vector::Constant(k, along);
  if (across > 0.0) {
    if (k == 1) {
      throw std::domain_error("make_target_a: k = 1 admits only ratio = 1");
    }
    std::normal_distribution<double> normal;
    Vector u(k);
    do {
      for (Eigen::Index i = 0; i < k; ++i) u[i] = normal(rng);
      u.array() -= u.mean();
    } while (u.norm() < 1e-8);
    a += across * u.normalized();
  }
  return norm * a;
}

Vector unit_vector(Eigen::Index n, Eigen::Index i) {
  Vector e = Vector::Zero(n);
  e[i] = 1.0;
  return e;
}

Rng make_rng(std::initializer_list<std::uint64_t> material) {
  std::vector<std::uint32_t> words;
  words.reserve(material.size() * 2);
  for (std::uint64_t m : material) {
    words.push_back(static_cast<std::uint32_t>(m & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(m >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

}  // namespace convdyn

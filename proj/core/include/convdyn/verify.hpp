#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "convdyn/model.hpp"

namespace convdyn {

using LossFn = std::function<double(const StudentParams&, const TeacherParams&)>;

struct CheckResult {
  std::string name;
  bool passed = false;
  double metric = 0.0;     // worst observed value
  double threshold = 0.0;  // pass iff metric <= threshold (or >= for lower bounds)
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 1;
  int identity_pairs = 10;
  std::int64_t identity_samples = 1'000'000;
  double identity_z_max = 5.0;
  int fd_points = 100;
  double fd_step = 1e-6;
  double fd_rel_tol = 1e-5;
  int oracle_configs = 20;
  std::int64_t oracle_samples = 100'000;
  double oracle_z_max = 4.0;
  int nonneg_configs = 10'000;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool all_passed() const;
};

/// Random point with p ≤ 8, k ≤ 10 and φ ∈ (0.05, π − 0.05).
struct RandomPoint {
  StudentParams s;
  TeacherParams t;
};
RandomPoint random_point(Rng& rng, int max_p = 8, int max_k = 10);

/// Central differences of `loss` (step h) against grad_v / grad_a. The
/// metric is the worst ‖analytic − numeric‖/‖numeric‖ over all points.
CheckResult check_gradients_fd(const LossFn& loss, int points, double h, double rel_tol,
                               std::uint64_t seed);

/// Worst |z| of empirical loss/gradients against the closed forms.
CheckResult check_oracle(const LossFn& loss, int configs, std::int64_t n, double z_max,
                         std::uint64_t seed);

/// One check per Gaussian identity, each over `pairs` random (w, w*).
std::vector<CheckResult> check_identities(int pairs, std::int64_t n, double z_max,
                                          std::uint64_t seed);

/// Smallest loss/(‖a*‖²‖w*‖² + ‖a‖²) over random configurations; fails
/// below −1e−12.
CheckResult check_nonnegativity(const LossFn& loss, int configs, std::uint64_t seed);

VerifyReport run_verification(const VerifyOptions& opts, const LossFn& loss);
VerifyReport run_verification(const VerifyOptions& opts);

}  // namespace convdyn

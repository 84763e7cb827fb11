#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>

#include <Eigen/Dense>

namespace convdyn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Every random stream in the library is a 64-bit Mersenne twister seeded
/// through std::seed_seq, so results depend only on the seed material.
using Rng = std::mt19937_64;

inline constexpr double kPi = 3.14159265358979323846;

/// Learnable parameters: first-layer direction v (normalized on use) and
/// second-layer weights a.
class StudentParams {
 public:
  StudentParams(Vector v, Vector a);

  const Vector& v() const { return v_; }
  const Vector& a() const { return a_; }
  Eigen::Index p() const { return v_.size(); }
  Eigen::Index k() const { return a_.size(); }

 private:
  Vector v_;
  Vector a_;
};

/// Ground-truth parameters (w*, a*) generating the labels.
class TeacherParams {
 public:
  TeacherParams(Vector w_star, Vector a_star);

  const Vector& w_star() const { return w_star_; }
  const Vector& a_star() const { return a_star_; }
  Eigen::Index p() const { return w_star_.size(); }
  Eigen::Index k() const { return a_star_.size(); }

  double w_star_norm() const { return w_star_norm_; }
  double a_star_norm() const { return a_star_.norm(); }
  double sum_a_star() const { return a_star_.sum(); }
  /// ‖a*‖₂‖w*‖₂, the natural scale of gradients and distances in a.
  double scale() const { return a_star_.norm() * w_star_norm_; }

 private:
  Vector w_star_;
  Vector a_star_;
  double w_star_norm_;
};

/// Observables recorded after each (strided) iteration.
struct TrajectoryRecord {
  std::int64_t iter = 0;
  double phi = 0.0;
  double a_dot_astar = 0.0;
  double sum_a = 0.0;
  double a_norm = 0.0;
  double v_norm = 0.0;
  double loss = 0.0;
  double grad_v_norm = 0.0;
  double grad_a_norm = 0.0;
  double dist_a = 0.0;   // ‖a − ‖w*‖a*‖
  double sum_gap = 0.0;  // |1ᵀa − ‖w*‖1ᵀa*|
};

enum class StationaryClass { Global, SpuriousLocal, Undetermined };

std::string_view to_string(StationaryClass c);

struct AutoStep {
  double scale = 0.5;
};
struct FixedStep {
  double eta = 1e-3;
};
using StepSizePolicy = std::variant<AutoStep, FixedStep>;

/// How the initial point of a trajectory is chosen from a random draw.
enum class InitMode { Good, Bad, Raw };

std::string_view to_string(InitMode m);
InitMode parse_init_mode(std::string_view s);

struct ExperimentConfig {
  int p = 25;
  int k = 20;
  double ratio = 4.0;  // target (1ᵀa*)² / ‖a*‖²
  double w_star_norm = 1.0;
  double a_star_norm = 1.0;
  StepSizePolicy step_size_policy = AutoStep{0.5};
  std::int64_t max_iters = 1'000'000;
  double grad_tol = 1e-10;
  double class_tol = 1e-2;
  int trials = 2000;
  std::uint64_t seed = 1;

  InitMode init = InitMode::Good;
  /// Record every `stride` iterations; the final iterate is always recorded.
  std::int64_t stride = 1;
  /// Stop as soon as classify_stationary leaves Undetermined (checked on
  /// recorded iterations). Used by the success grid.
  bool stop_when_classified = false;
  /// Run InvariantMonitor on every step. The success grid turns it off.
  bool monitor_invariants = true;
  bool resample_a_star_per_trial = false;
  double phase_cos_threshold = 0.5;
  double phase_signal_threshold = 0.25;
  int workers = 0;  // 0 = hardware concurrency

  /// Throws std::domain_error naming the first violated constraint.
  void validate() const;
};

/// Angle in [0, π] between two nonzero vectors.
double angle(const Vector& x, const Vector& y);

/// Second-layer target with ‖a*‖ = norm and (1ᵀa*)² = ratio·norm².
Vector make_target_a(int k, double ratio, double norm, Rng& rng);

/// Unit vector e_i in ℝⁿ.
Vector unit_vector(Eigen::Index n, Eigen::Index i);

/// Generator seeded from arbitrary 64-bit seed material.
Rng make_rng(std::initializer_list<std::uint64_t> material);

}  // namespace convdyn

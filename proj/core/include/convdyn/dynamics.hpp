#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "convdyn/model.hpp"

namespace convdyn {

/// The four terms of the step-size bound for two-phase convergence.
enum class BindingTerm {
  SecondLayerSignal,  // (a⁰)ᵀa* cos φ⁰ / D
  AngleKernel,        // (g(φ⁰) − 1)‖a*‖² cos φ⁰ / D
  AngleCosine,        // cos φ⁰ / D
  InverseWidth,       // 1 / k
};

std::string_view to_string(BindingTerm term);

struct StepSizeBound {
  double eta = 0.0;
  BindingTerm binding_term = BindingTerm::InverseWidth;
};

/// η = scale · min of the four terms, with D = (‖a*‖² + (1ᵀa*)²)‖w*‖².
/// Requires φ⁰ < π/2, (a⁰)ᵀa* > 0 and 0 < scale ≤ 1.
StepSizeBound step_size_auto(const StudentParams& s0, const TeacherParams& t, double scale);

/// Fallback step for starts outside the good basin:
/// 0.5·min{1/k, 1/((‖a*‖² + (1ᵀa*)²)‖w*‖²)}.
double step_size_fallback(const TeacherParams& t);

/// One gradient step on both layers, both gradients taken at (vᵗ, aᵗ).
StudentParams gd_step(const StudentParams& s, const TeacherParams& t, double eta);

StationaryClass classify_stationary(const StudentParams& s, const TeacherParams& t,
                                    double class_tol);

TrajectoryRecord observe(std::int64_t iter, const StudentParams& s, const TeacherParams& t);

struct InvariantViolation {
  std::int64_t iter = 0;
  std::string name;
};

struct RunResult {
  std::vector<TrajectoryRecord> trajectory;
  StudentParams final;
  StationaryClass cls = StationaryClass::Undetermined;
  std::int64_t iters_run = 0;
  std::optional<std::int64_t> phase1_end;
  std::vector<InvariantViolation> invariant_violations;
  double eta = 0.0;
  double max_v_norm = 0.0;  // over every iterate when monitored, else 0
};

/// Step size used by run() for the given start and policy. Auto falls back
/// to step_size_fallback() when the start is outside the good basin.
double resolve_step_size(const StudentParams& s0, const TeacherParams& t,
                         const StepSizePolicy& policy);

/// Gradient descent from s0 until ‖∇v‖ + ‖∇a‖ ≤ grad_tol·‖a*‖‖w*‖ or
/// max_iters. With cfg.monitor_invariants the monitors see every iterate,
/// whatever the stride.
RunResult run(const StudentParams& s0, const TeacherParams& t, const ExperimentConfig& cfg);

/// Checks on consecutive iterates (t, t+1):
///   I    angle does not increase while aᵀa* > 0
///   II   aᵀa* stays positive under the positive-signal hypotheses
///   III  1ᵀa*·1ᵀa stays below (1ᵀa*)²‖w*‖
///   IV   sin²φ contracts by (1 − η cos φ λ)
///   V    ‖v‖ ≤ 2 from a unit start
///   VI   the affine 1ᵀa recurrence holds exactly
/// Each check is evaluated only where its hypotheses hold. Only iter, phi,
/// a_dot_astar, sum_a, a_norm and v_norm of the records are read.
class InvariantMonitor {
 public:
  /// Keeps the first kMaxStored violations; count() has the total.
  static constexpr std::size_t kMaxStored = 1000;

  InvariantMonitor(const TeacherParams& t, double eta, const TrajectoryRecord& first);

  void check(const TrajectoryRecord& cur, const TrajectoryRecord& next);

  const std::vector<InvariantViolation>& violations() const { return violations_; }
  std::int64_t count() const { return count_; }

 private:
  void flag(std::int64_t iter, const char* name);

  const TeacherParams& t_;
  double eta_;
  double sum_bound_;
  double sum_tol_;
  bool step_ok_;
  bool unit_start_;
  std::vector<InvariantViolation> violations_;
  std::int64_t count_ = 0;
};

/// InvariantMonitor over a stride-1 trajectory.
std::vector<InvariantViolation> monitor_invariants(const std::vector<TrajectoryRecord>& trajectory,
                                                   const TeacherParams& t, double eta);

struct PhaseThresholds {
  double cos_phi = 0.5;
  double signal = 0.25;
};

/// First recorded iteration with cos φ ≥ cos_phi and
/// aᵀa*‖w*‖ ≥ signal·‖a*‖²‖w*‖².
std::optional<std::int64_t> detect_phases(const std::vector<TrajectoryRecord>& trajectory,
                                          const TeacherParams& t, PhaseThresholds thresholds = {});

/// Geometric decay rates of sin²φ, −log(sin²φᵗ⁺¹/sin²φᵗ) per iteration.
struct PhaseRates {
  double pre_median = 0.0;  // median per-step rate before the transition
  double post_rate = 0.0;   // mean rate from the transition until sin²φ reaches the floor
  double ratio() const { return pre_median > 0.0 ? post_rate / pre_median : 0.0; }
};

/// Requires a stride-1 trajectory. sin²φ values below `floor` are excluded
/// since they are dominated by rounding.
PhaseRates phase_rates(const std::vector<TrajectoryRecord>& trajectory, std::int64_t phase1_end,
                       double floor = 1e-24);

}  // namespace convdyn

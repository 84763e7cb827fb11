#include "convdyn/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "convdyn/analytic.hpp"

namespace convdyn {
namespace {

constexpr double kAngleSlack = 1e-12;

// D = (‖a*‖² + (1ᵀa*)²)‖w*‖²
double bound_denominator(const TeacherParams& t) {
  const double s = t.sum_a_star();
  const double nws = t.w_star_norm();
  return (t.a_star().squaredNorm() + s * s) * nws * nws;
}

struct BoundTerms {
  double terms[4];
};

BoundTerms bound_terms(double phi0, double a_dot0, const TeacherParams& t) {
  const double d = bound_denominator(t);
  const double c = std::cos(phi0);
  return {{a_dot0 * c / d, (g_phi(phi0) - 1.0) * t.a_star().squaredNorm() * c / d, c / d,
           1.0 / static_cast<double>(t.k())}};
}

StepSizeBound min_bound(const BoundTerms& b, double scale) {
  int best = 0;
  for (int i = 1; i < 4; ++i) {
    if (b.terms[i] < b.terms[best]) best = i;
  }
  return {scale * b.terms[best], static_cast<BindingTerm>(best)};
}

bool in_good_basin(double phi, double a_dot) { return a_dot > 0.0 && phi < kPi / 2.0; }

class Classifier {
 public:
  Classifier(const TeacherParams& t, double tol)
      : t_(t), tol_(tol), spurious_(spurious_a(t)), global_(t.w_star_norm() * t.a_star()) {}

  StationaryClass operator()(double phi, const Vector& a) const {
    const double radius = tol_ * t_.scale();
    if (phi <= tol_ && (a - global_).norm() <= radius) return StationaryClass::Global;
    if (std::abs(phi - kPi) <= tol_ && (a - spurious_).norm() <= radius) {
      return StationaryClass::SpuriousLocal;
    }
    return StationaryClass::Undetermined;
  }

 private:
  const TeacherParams& t_;
  double tol_;
  Vector spurious_;
  Vector global_;
};

TrajectoryRecord make_record(std::int64_t iter, const Vector& v, const Vector& a, double phi,
                             const Vector& gv, const Vector& ga, const TeacherParams& t) {
  TrajectoryRecord r;
  r.iter = iter;
  r.phi = phi;
  r.a_dot_astar = a.dot(t.a_star());
  r.sum_a = a.sum();
  r.a_norm = a.norm();
  r.v_norm = v.norm();
  r.loss = population_loss(StudentParams(v, a), t);
  r.grad_v_norm = gv.norm();
  r.grad_a_norm = ga.norm();
  r.dist_a = (a - t.w_star_norm() * t.a_star()).norm();
  r.sum_gap = std::abs(r.sum_a - t.w_star_norm() * t.sum_a_star());
  return r;
}

double sin2(double phi) {
  const double s = std::sin(phi);
  return s * s;
}

// The fields InvariantMonitor reads.
TrajectoryRecord light_record(std::int64_t iter, const Vector& v, const Vector& a, double phi,
                              const TeacherParams& t) {
  TrajectoryRecord r;
  r.iter = iter;
  r.phi = phi;
  r.a_dot_astar = a.dot(t.a_star());
  r.sum_a = a.sum();
  r.a_norm = a.norm();
  r.v_norm = v.norm();
  return r;
}

}  // namespace

std::string_view to_string(BindingTerm term) {
  switch (term) {
    case BindingTerm::SecondLayerSignal: return "second_layer_signal";
    case BindingTerm::AngleKernel: return "angle_kernel";
    case BindingTerm::AngleCosine: return "angle_cosine";
    case BindingTerm::InverseWidth: return "inverse_width";
  }
  return "inverse_width";
}

StepSizeBound step_size_auto(const StudentParams& s0, const TeacherParams& t, double scale) {
  if (!(scale > 0.0 && scale <= 1.0)) {
    throw std::domain_error("step_size_auto: scale must lie in (0, 1]");
  }
  const double phi0 = angle(s0.v(), t.w_star());
  const double a_dot0 = s0.a().dot(t.a_star());
  if (!in_good_basin(phi0, a_dot0)) {
    throw std::domain_error("step_size_auto: requires phi0 < pi/2 and a0.a* > 0");
  }
  return min_bound(bound_terms(phi0, a_dot0, t), scale);
}

double step_size_fallback(const TeacherParams& t) {
  return 0.5 * std::min(1.0 / static_cast<double>(t.k()), 1.0 / bound_denominator(t));
}

StudentParams gd_step(const StudentParams& s, const TeacherParams& t, double eta) {
  if (!(eta > 0.0)) throw std::domain_error("gd_step: eta must be > 0");
  const Gradients g = population_gradients(s, t);
  return StudentParams(s.v() - eta * g.v, s.a() - eta * g.a);
}

StationaryClass classify_stationary(const StudentParams& s, const TeacherParams& t,
                                    double class_tol) {
  if (!(class_tol > 0.0)) throw std::domain_error("classify_stationary: class_tol must be > 0");
  return Classifier(t, class_tol)(angle(s.v(), t.w_star()), s.a());
}

TrajectoryRecord observe(std::int64_t iter, const StudentParams& s, const TeacherParams& t) {
  const Gradients g = population_gradients(s, t);
  return make_record(iter, s.v(), s.a(), g.phi, g.v, g.a, t);
}

double resolve_step_size(const StudentParams& s0, const TeacherParams& t,
                         const StepSizePolicy& policy) {
  if (const auto* fixed = std::get_if<FixedStep>(&policy)) return fixed->eta;
  const double scale = std::get<AutoStep>(policy).scale;
  const double phi0 = angle(s0.v(), t.w_star());
  if (in_good_basin(phi0, s0.a().dot(t.a_star()))) return step_size_auto(s0, t, scale).eta;
  return step_size_fallback(t);
}

RunResult run(const StudentParams& s0, const TeacherParams& t, const ExperimentConfig& cfg) {
  cfg.validate();
  if (s0.p() != t.p() || s0.k() != t.k()) throw std::domain_error("run: dimension mismatch");

  const double eta = resolve_step_size(s0, t, cfg.step_size_policy);
  const double stop_norm = cfg.grad_tol * t.scale();
  const Classifier classify(t, cfg.class_tol);

  Vector v = s0.v();
  Vector a = s0.a();
  Vector gv(v.size());
  Vector ga(a.size());

  std::vector<TrajectoryRecord> trajectory;
  std::int64_t iter = 0;
  StationaryClass early = StationaryClass::Undetermined;
  std::optional<InvariantMonitor> monitor;
  TrajectoryRecord prev;
  double max_v_norm = 0.0;
  for (;; ++iter) {
    const double phi = population_gradients_into(v, a, t, gv, ga);
    if (cfg.monitor_invariants) {
      const TrajectoryRecord now = light_record(iter, v, a, phi, t);
      if (monitor) {
        monitor->check(prev, now);
      } else {
        monitor.emplace(t, eta, now);
      }
      prev = now;
      max_v_norm = std::max(max_v_norm, now.v_norm);
    }
    const bool recorded = iter % cfg.stride == 0;
    if (recorded) trajectory.push_back(make_record(iter, v, a, phi, gv, ga, t));
    if (gv.norm() + ga.norm() <= stop_norm) break;
    if (cfg.stop_when_classified && recorded) {
      early = classify(phi, a);
      if (early != StationaryClass::Undetermined) break;
    }
    if (iter >= cfg.max_iters) break;
    v.noalias() -= eta * gv;
    a.noalias() -= eta * ga;
  }
  if (trajectory.empty() || trajectory.back().iter != iter) {
    const double phi = population_gradients_into(v, a, t, gv, ga);
    trajectory.push_back(make_record(iter, v, a, phi, gv, ga, t));
  }

  RunResult result{std::move(trajectory), StudentParams(v, a), StationaryClass::Undetermined,
                   iter,                    std::nullopt,        {},
                   eta};
  result.cls = early != StationaryClass::Undetermined ? early : classify(angle(v, t.w_star()), a);
  result.phase1_end = detect_phases(result.trajectory, t,
                                    {cfg.phase_cos_threshold, cfg.phase_signal_threshold});
  if (monitor) {
    result.invariant_violations = monitor->violations();
    result.max_v_norm = max_v_norm;
  }
  return result;
}

InvariantMonitor::InvariantMonitor(const TeacherParams& t, double eta,
                                   const TrajectoryRecord& first)
    : t_(t), eta_(eta) {
  const double s_star = t.sum_a_star();
  sum_bound_ = s_star * s_star * t.w_star_norm();  // (1ᵀa*)²‖w*‖
  sum_tol_ = 1e-12 * std::max(1.0, sum_bound_);
  // IV and V need the step-size hypothesis at the start.
  step_ok_ = in_good_basin(first.phi, first.a_dot_astar) &&
             eta <= min_bound(bound_terms(first.phi, first.a_dot_astar, t), 1.0).eta;
  unit_start_ = std::abs(first.v_norm - 1.0) <= 1e-12;
}

void InvariantMonitor::flag(std::int64_t iter, const char* name) {
  ++count_;
  if (violations_.size() < kMaxStored) violations_.push_back({iter, name});
}

void InvariantMonitor::check(const TrajectoryRecord& cur, const TrajectoryRecord& next) {
  const double k = static_cast<double>(t_.k());
  const double nws = t_.w_star_norm();
  const double s_star = t_.sum_a_star();
  const double eta = eta_;
  const double signal = s_star * cur.sum_a;  // 1ᵀa*·1ᵀaᵗ

  if (cur.a_dot_astar > 0.0 && next.phi > cur.phi + kAngleSlack) {
    flag(next.iter, "I:angle_nonincreasing");
  }

  if (cur.a_dot_astar > 0.0 && signal >= 0.0 && signal <= sum_bound_ && cur.phi > 0.0 &&
      cur.phi < kPi / 2.0 && eta < 2.0 && !(next.a_dot_astar > 0.0)) {
    flag(next.iter, "II:positive_signal");
  }

  if (signal <= sum_bound_ && eta < 2.0 * kPi / (k + kPi - 1.0) &&
      s_star * next.sum_a > sum_bound_ + sum_tol_) {
    flag(next.iter, "III:sum_bounded");
  }

  if (step_ok_ && in_good_basin(cur.phi, cur.a_dot_astar)) {
    const double lambda =
        nws * (kPi - cur.phi) * cur.a_dot_astar / (2.0 * kPi * cur.v_norm * cur.v_norm);
    const double bound = (1.0 - eta * std::cos(cur.phi) * lambda) * sin2(cur.phi);
    if (sin2(next.phi) > bound + 1e-12) flag(next.iter, "IV:sin2_contraction");
  }

  if (step_ok_ && unit_start_ && next.v_norm > 2.0) flag(next.iter, "V:v_norm_bounded");

  const double predicted = (1.0 - eta * (k + kPi - 1.0) / (2.0 * kPi)) * cur.sum_a +
                           eta * (k + g_phi(cur.phi) - 1.0) / (2.0 * kPi) * nws * s_star;
  const double scale =
      std::max({std::abs(next.sum_a), std::abs(predicted), std::sqrt(k) * cur.a_norm});
  if (std::abs(next.sum_a - predicted) > 1e-10 * scale) flag(next.iter, "VI:sum_recurrence");
}

std::vector<InvariantViolation> monitor_invariants(const std::vector<TrajectoryRecord>& trajectory,
                                                   const TeacherParams& t, double eta) {
  if (trajectory.size() < 2) return {};
  InvariantMonitor monitor(t, eta, trajectory.front());
  for (std::size_t i = 0; i + 1 < trajectory.size(); ++i) {
    if (trajectory[i + 1].iter != trajectory[i].iter + 1) {
      throw std::domain_error("monitor_invariants: trajectory must be recorded at stride 1");
    }
    monitor.check(trajectory[i], trajectory[i + 1]);
  }
  return monitor.violations();
}

std::optional<std::int64_t> detect_phases(const std::vector<TrajectoryRecord>& trajectory,
                                          const TeacherParams& t, PhaseThresholds thresholds) {
  const double nws = t.w_star_norm();
  const double target = thresholds.signal * t.a_star().squaredNorm() * nws * nws;
  for (const TrajectoryRecord& r : trajectory) {
    if (std::cos(r.phi) >= thresholds.cos_phi && r.a_dot_astar * nws >= target) return r.iter;
  }
  return std::nullopt;
}

PhaseRates phase_rates(const std::vector<TrajectoryRecord>& trajectory, std::int64_t phase1_end,
                       double floor) {
  PhaseRates rates;
  std::vector<double> pre;
  std::size_t start = trajectory.size();
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    if (trajectory[i].iter == phase1_end) {
      start = i;
      break;
    }
  }
  if (start == trajectory.size()) return rates;

  for (std::size_t i = 0; i < start; ++i) {
    const double s0 = sin2(trajectory[i].phi);
    const double s1 = sin2(trajectory[i + 1].phi);
    if (s0 > floor && s1 > floor) pre.push_back(-std::log(s1 / s0));
  }
  if (!pre.empty()) {
    const auto mid = pre.begin() + static_cast<std::ptrdiff_t>(pre.size() / 2);
    std::nth_element(pre.begin(), mid, pre.end());
    rates.pre_median = *mid;
    if (pre.size() % 2 == 0) {
      rates.pre_median = 0.5 * (rates.pre_median + *std::max_element(pre.begin(), mid));
    }
  }

  std::size_t end = start;
  while (end + 1 < trajectory.size() && sin2(trajectory[end + 1].phi) > floor) ++end;
  if (end > start) {
    const double span = static_cast<double>(trajectory[end].iter - trajectory[start].iter);
    rates.post_rate =
        std::log(sin2(trajectory[start].phi) / sin2(trajectory[end].phi)) / span;
  }
  return rates;
}

}  // namespace convdyn

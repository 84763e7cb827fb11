// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "convdyn/analytic.hpp"
#include "convdyn/dynamics.hpp"
#include "convdyn/experiments.hpp"
#include "convdyn/verify.hpp"

using namespace convdyn;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& what) {
  if (!pass) ++failures;
  std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << "  " << what << std::endl;
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double pop_loss(const StudentParams& s, const TeacherParams& t) { return population_loss(s, t); }

// 1 and 2 share one full grid.
void table_criteria() {
  const std::vector<int> ks{25, 36, 49, 64, 81, 100};
  const std::vector<double> ratios{0, 1, 4, 9, 16, 25};
  ExperimentConfig cfg;
  cfg.p = 6;
  cfg.trials = 2000;
  cfg.seed = 1;
  cfg.stride = 100;
  cfg.init = InitMode::Raw;
  const auto t0 = std::chrono::steady_clock::now();
  const GridResult g = success_grid(cfg, ks, ratios);

  auto prob = [&](std::size_t ki, std::size_t ri) {
    return g.rows[ki * ratios.size() + ri].success_probability;
  };
  std::cout << "success grid (p=6, 2000 trials, seed 1, " << fmt("%.0f", seconds_since(t0))
            << " s)\n   k \\ ratio";
  for (double r : ratios) std::cout << fmt("%8.0f", r);
  std::cout << '\n';
  for (std::size_t i = 0; i < ks.size(); ++i) {
    std::cout << fmt("%12.0f", ks[i]);
    for (std::size_t j = 0; j < ratios.size(); ++j) std::cout << fmt("%8.3f", prob(i, j));
    std::cout << '\n';
  }
  int undetermined = 0;
  for (const GridRow& r : g.rows) undetermined += r.undetermined_count;
  std::cout << "undetermined trials: " << undetermined << std::endl;

  struct Cell {
    std::size_t ki, ri;
    double lo, hi;
  };
  const Cell cells[] = {{0, 0, 0.46, 0.54}, {0, 5, 0.99, 1.0}, {3, 3, 0.66, 0.76},
                        {5, 5, 0.85, 0.95}, {5, 0, 0.46, 0.54}};
  bool ok = true;
  std::ostringstream detail;
  for (const Cell& c : cells) {
    const double p = prob(c.ki, c.ri);
    const bool in = p >= c.lo && p <= c.hi;
    ok = ok && in;
    detail << "(k=" << ks[c.ki] << ", ratio=" << ratios[c.ri] << ") " << fmt("%.3f", p)
           << (in ? "" : " out of range") << "; ";
  }
  report(1, ok, "table cells: " + detail.str());

  const double slack = 0.03;
  std::ostringstream bad;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    for (std::size_t j = 0; j + 1 < ratios.size(); ++j) {
      if (prob(i, j + 1) < prob(i, j) - slack) {
        bad << "k=" << ks[i] << " ratio " << ratios[j] << "->" << ratios[j + 1] << "; ";
      }
    }
  }
  for (std::size_t j = 0; j < ratios.size(); ++j) {
    if (ratios[j] < 4) continue;
    for (std::size_t i = 0; i + 1 < ks.size(); ++i) {
      if (prob(i + 1, j) > prob(i, j) + slack) {
        bad << "ratio=" << ratios[j] << " k " << ks[i] << "->" << ks[i + 1] << "; ";
      }
    }
  }
  report(2, bad.str().empty(),
         "monotone in ratio per k and in k per ratio >= 4 within 0.03" +
             (bad.str().empty() ? std::string() : ": violations " + bad.str()));
}

void gradient_criterion() {
  const CheckResult r = check_gradients_fd(pop_loss, 100, 1e-6, 1e-5, 1);
  report(3, r.passed, "finite differences at 100 points, " + r.detail);
}

void oracle_criterion() {
  const CheckResult oracle = check_oracle(pop_loss, 20, 100'000, 4.0, 1);
  const std::vector<CheckResult> ids = check_identities(10, 1'000'000, 5.0, 1);
  bool ok = oracle.passed;
  std::string detail = "oracle over 20 configs " + oracle.detail;
  for (const CheckResult& c : ids) {
    ok = ok && c.passed;
    detail += "; " + c.name + " " + fmt("%.2f", c.metric);
  }
  report(4, ok, detail);
}

void stationary_criterion() {
  Rng rng = make_rng({5});
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> scale(0.2, 5.0);
  std::uniform_real_distribution<double> small_ratio(0.0, 0.01);
  double worst_grad = 0, worst_global = 0, worst_spurious = INFINITY;
  for (int i = 0; i < 1000; ++i) {
    const int p = 1 + i % 10;
    const int k = 2 + i % 60;
    Vector w(p);
    for (int j = 0; j < p; ++j) w[j] = normal(rng);
    w *= scale(rng) / w.norm();
    const double ratio = i % 2 == 0 ? small_ratio(rng) : std::uniform_real_distribution<double>(0, k)(rng);
    const TeacherParams t(w, make_target_a(k, ratio, scale(rng), rng));
    const double sc = t.scale();

    const StudentParams global(scale(rng) * t.w_star(), t.w_star_norm() * t.a_star());
    const StudentParams spurious(-scale(rng) * t.w_star(), spurious_a(t));
    for (const StudentParams* s : {&global, &spurious}) {
      const Gradients g = population_gradients(*s, t);
      worst_grad = std::max(worst_grad, std::max(g.v.norm(), g.a.norm()) / sc);
    }
    worst_global = std::max(worst_global, std::abs(population_loss(global, t)));
    if (ratio <= 0.01) {
      worst_spurious = std::min(worst_spurious, population_loss(spurious, t) / (sc * sc));
    }
  }
  const bool ok = worst_grad <= 1e-12 && worst_global <= 1e-20 && worst_spurious >= 0.1;
  report(5, ok,
         "1000 teachers: max |grad|/scale " + fmt("%.2e", worst_grad) + ", max global loss " +
             fmt("%.2e", worst_global) + ", min spurious loss/scale^2 (ratio <= 0.01) " +
             fmt("%.4f", worst_spurious));
}

struct BoundTracker {
  double max_v_norm = 0;
  int runs = 0;
  int recurrence_violations = 0;
  int v_norm_violations = 0;

  void add(const TrajectoryDump& d, bool unit_good_start) {
    ++runs;
    for (const InvariantViolation& v : d.invariant_violations) {
      if (v.name == "VI:sum_recurrence") ++recurrence_violations;
    }
    if (!unit_good_start) return;
    max_v_norm = std::max(max_v_norm, d.max_v_norm);
    if (d.max_v_norm > 2.0) ++v_norm_violations;
  }
};

void invariance_criterion(BoundTracker& bounds) {
  const auto t0 = std::chrono::steady_clock::now();
  const double ratios[] = {0, 1, 4, 9};
  int good_global = 0, good_clean = 0;
  std::int64_t longest = 0;
  std::string first_violation;
  for (int i = 0; i < 100; ++i) {
    ExperimentConfig cfg;
    cfg.p = 10;
    cfg.k = 15;
    cfg.ratio = ratios[i % 4];
    cfg.seed = static_cast<std::uint64_t>(1000 + i);
    cfg.step_size_policy = AutoStep{0.5};
    cfg.init = InitMode::Good;
    // Near-orthogonal starts get a tiny step and need up to ~5e7 iterations.
    cfg.max_iters = 100'000'000;
    cfg.stride = 1000;
    const TrajectoryDump d = trajectory_experiment(cfg);
    if (d.cls == StationaryClass::Global) ++good_global;
    longest = std::max(longest, d.records.back().iter);
    if (d.invariant_violations.empty()) {
      ++good_clean;
    } else if (first_violation.empty()) {
      first_violation = " (first: seed " + std::to_string(cfg.seed) + " " +
                        d.invariant_violations.front().name + " at iter " +
                        std::to_string(d.invariant_violations.front().iter) + ")";
    }
    bounds.add(d, true);
  }
  int bad_spurious = 0;
  for (int i = 0; i < 50; ++i) {
    ExperimentConfig cfg;
    cfg.p = 10;
    cfg.k = 15;
    cfg.ratio = 0;
    cfg.seed = static_cast<std::uint64_t>(2000 + i);
    cfg.init = InitMode::Bad;
    cfg.stride = 1000;
    const TrajectoryDump d = trajectory_experiment(cfg);
    if (d.cls == StationaryClass::SpuriousLocal) ++bad_spurious;
    bounds.add(d, false);
  }
  const bool ok = good_global == 100 && good_clean == 100 && bad_spurious == 50;
  report(6, ok,
         "good starts: " + std::to_string(good_global) + "/100 global, " +
             std::to_string(good_clean) + "/100 without invariant violations" + first_violation +
             ", longest " + std::to_string(longest) + " iters" +
             "; bad starts (ratio 0): " + std::to_string(bad_spurious) + "/50 spurious (" +
             fmt("%.0f", seconds_since(t0)) + " s)");
}

void two_phase_criterion(BoundTracker& bounds) {
  ExperimentConfig cfg;
  cfg.p = 25;
  cfg.k = 20;
  cfg.ratio = 4;
  cfg.seed = 1;
  cfg.max_iters = 100'000;
  cfg.init = InitMode::Good;
  cfg.step_size_policy = FixedStep{step_size_fallback(make_teacher(cfg, cfg.k, cfg.ratio))};
  const TrajectoryDump d = trajectory_experiment(cfg);
  bounds.add(d, true);
  const TeacherParams t(d.w_star, d.a_star);
  const double final_loss = d.records.back().loss / (t.scale() * t.scale());
  double ratio = 0;
  std::string rates;
  if (d.phase1_end) {
    const PhaseRates r = phase_rates(d.records, *d.phase1_end);
    ratio = r.ratio();
    rates = ", rates " + fmt("%.3g", r.pre_median) + " -> " + fmt("%.3g", r.post_rate);
  }
  const bool ok = final_loss <= 1e-8 && d.phase1_end.has_value() && ratio >= 5;
  report(7, ok,
         "k=20 p=25 eta=" + fmt("%.4g", d.eta) + ": final loss/scale^2 " +
             fmt("%.2e", final_loss) + " after " + std::to_string(d.records.back().iter) +
             " iters, phase1_end " +
             (d.phase1_end ? std::to_string(*d.phase1_end) : std::string("none")) + rates +
             ", ratio " + fmt("%.1f", ratio));
}

}  // namespace

// Optional arguments pick criteria, e.g. `convdyn_acceptance 6 8`.
int main(int argc, char** argv) {
  std::cout.setf(std::ios::unitbuf);
  std::vector<int> picked;
  for (int i = 1; i < argc; ++i) picked.push_back(std::atoi(argv[i]));
  auto want = [&](int id) {
    return picked.empty() || std::find(picked.begin(), picked.end(), id) != picked.end();
  };
  if (want(1) || want(2)) table_criteria();
  if (want(3)) gradient_criterion();
  if (want(4)) oracle_criterion();
  if (want(5)) stationary_criterion();
  BoundTracker bounds;
  if (want(6) || want(8)) invariance_criterion(bounds);
  if (want(7) || want(8)) two_phase_criterion(bounds);
  if (want(8)) {
    report(8, bounds.v_norm_violations == 0 && bounds.recurrence_violations == 0,
           "max |v| on unit good starts " + fmt("%.6f", bounds.max_v_norm) +
               ", sum recurrence violations " + std::to_string(bounds.recurrence_violations) +
               " over " + std::to_string(bounds.runs) + " runs");
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}

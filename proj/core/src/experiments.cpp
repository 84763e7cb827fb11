#include "convdyn/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <exception>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "convdyn/init.hpp"

namespace convdyn {
namespace {

constexpr std::uint64_t kTeacherStream = 0x746561636865ULL;  // "teache"
constexpr std::uint64_t kTrialStream = 0x747269616cULL;      // "trial"
constexpr int kMaxInitDraws = 10000;

std::uint64_t bits(double x) { return std::bit_cast<std::uint64_t>(x); }

struct TrialOutcome {
  StationaryClass cls = StationaryClass::Undetermined;
  std::int64_t iters = 0;
};

int worker_count(const ExperimentConfig& cfg, std::size_t jobs) {
  int n = cfg.workers > 0 ? cfg.workers : static_cast<int>(std::thread::hardware_concurrency());
  n = std::max(n, 1);
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(n), std::max<std::size_t>(jobs, 1)));
}

}  // namespace

TeacherParams make_teacher(const ExperimentConfig& cfg, int k, double ratio,
                           std::optional<int> trial) {
  Rng rng = trial ? make_rng({kTeacherStream, cfg.seed, static_cast<std::uint64_t>(cfg.p),
                              static_cast<std::uint64_t>(k), bits(ratio),
                              static_cast<std::uint64_t>(*trial)})
                  : make_rng({kTeacherStream, cfg.seed, static_cast<std::uint64_t>(cfg.p),
                              static_cast<std::uint64_t>(k), bits(ratio)});
  std::normal_distribution<double> normal;
  Vector w(cfg.p);
  do {
    for (int i = 0; i < cfg.p; ++i) w[i] = normal(rng);
  } while (w.norm() == 0.0);
  w *= cfg.w_star_norm / w.norm();
  Vector a = make_target_a(k, ratio, cfg.a_star_norm, rng);
  return TeacherParams(std::move(w), std::move(a));
}

GridResult success_grid(const ExperimentConfig& cfg, const std::vector<int>& k_values,
                        const std::vector<double>& ratio_values) {
  cfg.validate();
  if (k_values.empty() || ratio_values.empty()) {
    throw std::domain_error("success_grid: empty grid axis");
  }
  for (int k : k_values) {
    for (double r : ratio_values) {
      if (k < 1 || !(r >= 0.0) || r > k) {
        std::ostringstream msg;
        msg << "invalid grid cell (k=" << k << ", ratio=" << r << "): ratio must lie in [0, k]";
        throw std::domain_error(msg.str());
      }
    }
  }

  struct Cell {
    int k;
    double ratio;
    std::optional<TeacherParams> teacher;
  };
  std::vector<Cell> cells;
  for (int k : k_values) {
    for (double r : ratio_values) {
      Cell c{k, r, std::nullopt};
      if (!cfg.resample_a_star_per_trial) c.teacher = make_teacher(cfg, k, r);
      cells.push_back(std::move(c));
    }
  }

  const std::size_t trials = static_cast<std::size_t>(cfg.trials);
  const std::size_t jobs = cells.size() * trials;
  std::vector<TrialOutcome> outcomes(jobs);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (std::size_t j = next++; j < jobs && !failed; j = next++) {
      try {
        const Cell& cell = cells[j / trials];
        const int trial = static_cast<int>(j % trials);
        const TeacherParams teacher =
            cell.teacher ? *cell.teacher : make_teacher(cfg, cell.k, cell.ratio, trial);

        ExperimentConfig trial_cfg = cfg;
        trial_cfg.k = cell.k;
        trial_cfg.ratio = cell.ratio;
        trial_cfg.stop_when_classified = true;
        trial_cfg.monitor_invariants = false;
        if (std::holds_alternative<AutoStep>(cfg.step_size_policy)) {
          trial_cfg.step_size_policy = FixedStep{step_size_fallback(teacher)};
        }
        Rng rng = make_rng({kTrialStream, cfg.seed, static_cast<std::uint64_t>(cfg.p),
                            static_cast<std::uint64_t>(cell.k), bits(cell.ratio),
                            static_cast<std::uint64_t>(trial)});
        const StudentParams s0 = sample_init(cfg.p, cell.k, teacher, rng);
        const RunResult r = run(s0, teacher, trial_cfg);
        outcomes[j] = {r.cls, r.iters_run};
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };

  const int n_workers = worker_count(cfg, jobs);
  std::vector<std::thread> pool;
  for (int i = 1; i < n_workers; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();
  if (error) std::rethrow_exception(error);

  GridResult result;
  result.meta = cfg;
  result.k_values = k_values;
  result.ratio_values = ratio_values;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    GridRow row;
    row.k = cells[c].k;
    row.ratio = cells[c].ratio;
    row.trials = cfg.trials;
    double iters = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const TrialOutcome& o = outcomes[c * trials + t];
      iters += static_cast<double>(o.iters);
      switch (o.cls) {
        case StationaryClass::Global: ++row.successes; break;
        case StationaryClass::SpuriousLocal: ++row.spurious_count; break;
        case StationaryClass::Undetermined: ++row.undetermined_count; break;
      }
    }
    row.success_probability = static_cast<double>(row.successes) / row.trials;
    row.mean_iters = iters / static_cast<double>(trials);
    result.rows.push_back(row);
  }
  return result;
}

TrajectoryDump trajectory_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const TeacherParams teacher = make_teacher(cfg, cfg.k, cfg.ratio);
  Rng rng = make_rng({kTrialStream, cfg.seed, static_cast<std::uint64_t>(cfg.p),
                      static_cast<std::uint64_t>(cfg.k), bits(cfg.ratio), ~0ULL});

  std::optional<StudentParams> s0;
  for (int draw = 0; draw < kMaxInitDraws && !s0; ++draw) {
    const StudentParams raw = sample_init(cfg.p, cfg.k, teacher, rng);
    switch (cfg.init) {
      case InitMode::Raw: s0 = raw; break;
      case InitMode::Good: s0 = select_good_variant(sign_variants(raw), teacher); break;
      case InitMode::Bad: s0 = select_bad_variant(sign_variants(raw), teacher); break;
    }
  }
  if (!s0) {
    throw std::domain_error("no initialization satisfying the " +
                            std::string(to_string(cfg.init)) + "-basin conditions was found");
  }

  RunResult r = run(*s0, teacher, cfg);
  TrajectoryDump dump;
  dump.records = std::move(r.trajectory);
  dump.phase1_end = r.phase1_end;
  dump.cls = r.cls;
  dump.eta = r.eta;
  dump.invariant_violations = std::move(r.invariant_violations);
  dump.max_v_norm = r.max_v_norm;
  dump.w_star = teacher.w_star();
  dump.a_star = teacher.a_star();
  dump.meta = cfg;
  return dump;
}

}  // namespace convdyn

#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "convdyn/dynamics.hpp"
#include "convdyn/model.hpp"

namespace convdyn {

inline constexpr int kOutputSchemaVersion = 1;

struct GridRow {
  int k = 0;
  double ratio = 0.0;
  int trials = 0;
  int successes = 0;
  double success_probability = 0.0;
  double mean_iters = 0.0;
  int spurious_count = 0;
  int undetermined_count = 0;
};

struct GridResult {
  std::vector<GridRow> rows;
  ExperimentConfig meta;
  std::vector<int> k_values;
  std::vector<double> ratio_values;
};

struct TrajectoryDump {
  std::vector<TrajectoryRecord> records;
  std::optional<std::int64_t> phase1_end;
  StationaryClass cls = StationaryClass::Undetermined;
  double eta = 0.0;
  std::vector<InvariantViolation> invariant_violations;
  double max_v_norm = 0.0;
  Vector w_star;
  Vector a_star;
  ExperimentConfig meta;
};

/// Teacher for a (k, ratio) cell: w* a random direction of norm
/// w_star_norm, a* from make_target_a. Depends only on (seed, p, k, ratio)
/// and, when resampling per trial, the trial index.
TeacherParams make_teacher(const ExperimentConfig& cfg, int k, double ratio,
                           std::optional<int> trial = std::nullopt);

/// Success probability over raw random draws for every (k, ratio) cell.
/// Trials run on cfg.workers threads; every trial seeds its own generator
/// from (seed, k, ratio, trial), so the result is independent of the
/// worker count. Throws std::domain_error naming the first cell with
/// ratio > k.
GridResult success_grid(const ExperimentConfig& cfg, const std::vector<int>& k_values,
                        const std::vector<double>& ratio_values);

/// One fully recorded run from an initialization chosen per cfg.init.
TrajectoryDump trajectory_experiment(const ExperimentConfig& cfg);

// Output. Every file embeds the resolved configuration: JSON under "config",
// CSV as leading "# key=value" comment lines.

nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Git-style content hash (SHA-1 of "blob <len>\0<canonical config JSON>").
std::string config_hash(const ExperimentConfig& cfg);

nlohmann::json to_json(const GridResult& result);
nlohmann::json to_json(const TrajectoryDump& dump);

void write_grid_csv(std::ostream& os, const GridResult& result);
void write_trajectory_csv(std::ostream& os, const TrajectoryDump& dump);

}  // namespace convdyn

#include <charconv>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include <openssl/evp.h>

#include "convdyn/experiments.hpp"

namespace convdyn {
namespace {

// Shortest representation that round-trips.
std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

nlohmann::json vector_json(const Vector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

std::string sha1_blob_hex(const std::string& body) {
  std::string blob = "blob " + std::to_string(body.size());
  blob.push_back('\0');
  blob += body;

  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof(byte), "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

// A grid has no single (k, ratio); its axes take their place.
nlohmann::json grid_config_json(const GridResult& result) {
  nlohmann::json j = config_to_json(result.meta);
  j.erase("k");
  j.erase("ratio");
  j["k_values"] = result.k_values;
  j["ratio_values"] = result.ratio_values;
  return j;
}

void write_config_comments(std::ostream& os, const nlohmann::json& config) {
  os << "# schema_version=" << kOutputSchemaVersion << '\n';
  os << "# config_hash=" << sha1_blob_hex(config.dump()) << '\n';
  for (const auto& [key, value] : config.items()) {
    os << "# " << key << '=' << (value.is_string() ? value.get<std::string>() : value.dump())
       << '\n';
  }
}

}  // namespace

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["p"] = cfg.p;
  j["k"] = cfg.k;
  j["ratio"] = cfg.ratio;
  j["w_star_norm"] = cfg.w_star_norm;
  j["a_star_norm"] = cfg.a_star_norm;
  if (const auto* a = std::get_if<AutoStep>(&cfg.step_size_policy)) {
    j["step_size_policy"] = "auto";
    j["eta_scale"] = a->scale;
  } else {
    j["step_size_policy"] = "fixed";
    j["eta"] = std::get<FixedStep>(cfg.step_size_policy).eta;
  }
  j["max_iters"] = cfg.max_iters;
  j["grad_tol"] = cfg.grad_tol;
  j["class_tol"] = cfg.class_tol;
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["init"] = std::string(to_string(cfg.init));
  j["stride"] = cfg.stride;
  j["stop_when_classified"] = cfg.stop_when_classified;
  j["monitor_invariants"] = cfg.monitor_invariants;
  j["resample_a_star_per_trial"] = cfg.resample_a_star_per_trial;
  j["phase_cos_threshold"] = cfg.phase_cos_threshold;
  j["phase_signal_threshold"] = cfg.phase_signal_threshold;
  return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
  return sha1_blob_hex(config_to_json(cfg).dump());
}

nlohmann::json to_json(const GridResult& result) {
  nlohmann::json j;
  j["schema_version"] = kOutputSchemaVersion;
  j["kind"] = "success_grid";
  j["config"] = grid_config_json(result);
  j["config_hash"] = sha1_blob_hex(j["config"].dump());
  j["seed"] = result.meta.seed;
  nlohmann::json rows = nlohmann::json::array();
  for (const GridRow& r : result.rows) {
    rows.push_back({{"k", r.k},
                    {"ratio", r.ratio},
                    {"trials", r.trials},
                    {"successes", r.successes},
                    {"probability", r.success_probability},
                    {"mean_iters", r.mean_iters},
                    {"spurious_count", r.spurious_count},
                    {"undetermined_count", r.undetermined_count}});
  }
  j["rows"] = std::move(rows);
  return j;
}

nlohmann::json to_json(const TrajectoryDump& dump) {
  nlohmann::json j;
  j["schema_version"] = kOutputSchemaVersion;
  j["kind"] = "trajectory";
  j["config"] = config_to_json(dump.meta);
  j["config_hash"] = config_hash(dump.meta);
  j["seed"] = dump.meta.seed;
  j["class"] = std::string(to_string(dump.cls));
  j["eta"] = dump.eta;
  j["phase1_end"] = dump.phase1_end ? nlohmann::json(*dump.phase1_end) : nlohmann::json(nullptr);
  j["w_star"] = vector_json(dump.w_star);
  j["a_star"] = vector_json(dump.a_star);
  nlohmann::json violations = nlohmann::json::array();
  for (const InvariantViolation& v : dump.invariant_violations) {
    violations.push_back({{"iter", v.iter}, {"name", v.name}});
  }
  j["invariant_violations"] = std::move(violations);
  nlohmann::json records = nlohmann::json::array();
  for (const TrajectoryRecord& r : dump.records) {
    const double s = std::sin(r.phi);
    records.push_back({{"iter", r.iter},
                       {"phi", r.phi},
                       {"sin2phi", s * s},
                       {"a_dot_astar", r.a_dot_astar},
                       {"sum_a", r.sum_a},
                       {"v_norm", r.v_norm},
                       {"loss", r.loss},
                       {"grad_v_norm", r.grad_v_norm},
                       {"grad_a_norm", r.grad_a_norm},
                       {"dist_a", r.dist_a},
                       {"sum_gap", r.sum_gap}});
  }
  j["records"] = std::move(records);
  return j;
}

void write_grid_csv(std::ostream& os, const GridResult& result) {
  write_config_comments(os, grid_config_json(result));
  os << "k,ratio,trials,successes,probability,mean_iters,undetermined_count,spurious_count\n";
  for (const GridRow& r : result.rows) {
    os << r.k << ',' << num(r.ratio) << ',' << r.trials << ',' << r.successes << ','
       << num(r.success_probability) << ',' << num(r.mean_iters) << ',' << r.undetermined_count
       << ',' << r.spurious_count << '\n';
  }
}

void write_trajectory_csv(std::ostream& os, const TrajectoryDump& dump) {
  write_config_comments(os, config_to_json(dump.meta));
  os << "# class=" << to_string(dump.cls) << '\n';
  os << "# eta=" << num(dump.eta) << '\n';
  os << "# phase1_end=" << (dump.phase1_end ? std::to_string(*dump.phase1_end) : "none") << '\n';
  os << "iter,phi,sin2phi,a_dot_astar,sum_a,v_norm,loss,dist_a,sum_gap\n";
  for (const TrajectoryRecord& r : dump.records) {
    const double s = std::sin(r.phi);
    os << r.iter << ',' << num(r.phi) << ',' << num(s * s) << ',' << num(r.a_dot_astar) << ','
       << num(r.sum_a) << ',' << num(r.v_norm) << ',' << num(r.loss) << ',' << num(r.dist_a)
       << ',' << num(r.sum_gap) << '\n';
  }
}

}  // namespace convdyn

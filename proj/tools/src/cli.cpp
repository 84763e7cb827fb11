#include "convdyn_cli/cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "convdyn/dynamics.hpp"
#include "convdyn/experiments.hpp"
#include "convdyn/verify.hpp"

namespace convdyn::cli {
namespace {

constexpr const char* kSeedEnv = "CONVDYN_SEED";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Flat key=value file. Keys are option names without the leading dashes
// ('_' and '-' are interchangeable). Values already given on the command
// line win.
void apply_config_file(CLI::App& sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    for (char& c : key) {
      if (c == '_') c = '-';
    }
    CLI::Option* opt = key == "config" ? nullptr : sub.get_option_no_throw("--" + key);
    if (opt == nullptr) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (opt->count() > 0) continue;
    if (opt->get_items_expected_max() > 1) {
      std::stringstream parts(value);
      std::string item;
      while (std::getline(parts, item, ',')) opt->add_result(trim(item));
    } else {
      opt->add_result(value);
    }
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::uint64_t parse_seed(const std::string& text) {
  std::uint64_t seed = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), seed);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw UsageError(std::string(kSeedEnv) + ": not an unsigned integer: '" + text + "'");
  }
  return seed;
}

// Options shared by run, grid and phases, bound to one ExperimentConfig.
struct ExperimentOptions {
  ExperimentConfig cfg;
  double eta = 0.0;
  double eta_scale = 0.5;
  std::string init = "good";
  std::string out;
  std::string format = "csv";
  std::string config_path;
  CLI::Option* eta_opt = nullptr;
  CLI::Option* eta_scale_opt = nullptr;
  CLI::Option* seed_opt = nullptr;

  void add(CLI::App& sub, bool with_shape) {
    if (with_shape) {
      sub.add_option("--k", cfg.k, "hidden units (patches)")->capture_default_str();
      sub.add_option("--ratio", cfg.ratio, "(1'a*)^2 / |a*|^2")->capture_default_str();
      sub.add_option("--init", init, "initialization basin")
          ->check(CLI::IsMember({"good", "bad", "raw"}))
          ->capture_default_str();
    }
    sub.add_option("--p", cfg.p, "filter size")->capture_default_str();
    sub.add_option("--w-star-norm", cfg.w_star_norm)->capture_default_str();
    sub.add_option("--a-star-norm", cfg.a_star_norm)->capture_default_str();
    eta_opt = sub.add_option("--eta", eta, "fixed step size");
    eta_scale_opt = sub.add_option("--eta-scale", eta_scale, "scale of the automatic step size")
                        ->capture_default_str();
    eta_opt->excludes(eta_scale_opt);
    sub.add_option("--max-iters", cfg.max_iters)->capture_default_str();
    sub.add_option("--grad-tol", cfg.grad_tol)->capture_default_str();
    sub.add_option("--class-tol", cfg.class_tol)->capture_default_str();
    sub.add_option("--trials", cfg.trials)->capture_default_str();
    seed_opt = sub.add_option("--seed", cfg.seed, std::string("seed (fallback: $") + kSeedEnv + ")")
                   ->capture_default_str();
    sub.add_option("--stride", cfg.stride, "record every N iterations")->capture_default_str();
    sub.add_option("--workers", cfg.workers, "worker threads (0 = all cores)")
        ->capture_default_str();
    sub.add_option("--out", out, "output file (default: standard output)");
    sub.add_option("--format", format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    sub.add_option("--config", config_path, "flat key=value file");
  }

  // Config file, environment seed and step policy, after the command line
  // has been parsed.
  void resolve(CLI::App& sub) {
    if (!config_path.empty()) apply_config_file(sub, config_path);
    if (seed_opt->count() == 0) {
      if (const char* env = std::getenv(kSeedEnv); env != nullptr && *env != '\0') {
        cfg.seed = parse_seed(env);
      }
    }
    if (eta_opt->count() > 0 && eta_scale_opt->count() > 0) {
      throw UsageError("--eta and --eta-scale are mutually exclusive");
    }
    if (eta_opt->count() > 0) {
      cfg.step_size_policy = FixedStep{eta};
    } else {
      cfg.step_size_policy = AutoStep{eta_scale};
    }
    cfg.init = parse_init_mode(init);
  }
};

template <class Writer>
void emit(const ExperimentOptions& opts, std::ostream& out, Writer&& write) {
  if (opts.out.empty()) {
    write(out);
    return;
  }
  std::ofstream file(opts.out, std::ios::binary);
  if (!file) throw UsageError("cannot open '" + opts.out + "' for writing");
  write(file);
  if (!file) throw std::runtime_error("write to '" + opts.out + "' failed");
}

int exit_code(StationaryClass cls) {
  switch (cls) {
    case StationaryClass::Global: return kExitOk;
    case StationaryClass::SpuriousLocal: return kExitSpurious;
    case StationaryClass::Undetermined: return kExitUndetermined;
  }
  return kExitUndetermined;
}

int cmd_run(ExperimentOptions& opts, std::ostream& out) {
  const TrajectoryDump dump = trajectory_experiment(opts.cfg);
  emit(opts, out, [&](std::ostream& os) {
    if (opts.format == "json") {
      os << to_json(dump).dump(2) << '\n';
    } else {
      write_trajectory_csv(os, dump);
    }
  });
  if (!opts.out.empty()) {
    const TrajectoryRecord& last = dump.records.back();
    out << "class=" << to_string(dump.cls) << " iters=" << last.iter << " eta=" << dump.eta
        << " loss=" << last.loss << " phi=" << last.phi << '\n';
  }
  return exit_code(dump.cls);
}

int cmd_grid(ExperimentOptions& opts, const std::vector<int>& ks, const std::vector<double>& ratios,
             std::ostream& out) {
  const GridResult result = success_grid(opts.cfg, ks, ratios);
  emit(opts, out, [&](std::ostream& os) {
    if (opts.format == "json") {
      os << to_json(result).dump(2) << '\n';
    } else {
      write_grid_csv(os, result);
    }
  });
  return kExitOk;
}

int cmd_phases(ExperimentOptions& opts, std::ostream& out) {
  opts.cfg.stride = 1;
  const TrajectoryDump dump = trajectory_experiment(opts.cfg);
  if (!opts.out.empty()) {
    emit(opts, out, [&](std::ostream& os) {
      if (opts.format == "json") {
        os << to_json(dump).dump(2) << '\n';
      } else {
        write_trajectory_csv(os, dump);
      }
    });
  }
  const TeacherParams t(dump.w_star, dump.a_star);
  const TrajectoryRecord& last = dump.records.back();
  out << std::setprecision(10);
  out << "class: " << to_string(dump.cls) << '\n';
  out << "eta: " << dump.eta << '\n';
  out << "iterations: " << last.iter << '\n';
  out << "final loss: " << last.loss << '\n';
  if (!dump.phase1_end) {
    out << "no phase transition\n";
    return kExitOk;
  }
  const std::int64_t t1 = *dump.phase1_end;
  const TrajectoryRecord& r = dump.records[static_cast<std::size_t>(t1)];
  const PhaseRates rates = phase_rates(dump.records, t1);
  const double norm = t.a_star_norm() * t.a_star_norm() * t.w_star_norm() * t.w_star_norm();
  out << "phase1_end: " << t1 << '\n';
  out << "at transition: phi=" << r.phi << " cos_phi=" << std::cos(r.phi)
      << " a_dot_astar=" << r.a_dot_astar
      << " signal=" << r.a_dot_astar * t.w_star_norm() / norm << " sum_a=" << r.sum_a
      << " loss=" << r.loss << '\n';
  out << "sin2phi decay rate before: " << rates.pre_median << " (median per step)\n";
  out << "sin2phi decay rate after: " << rates.post_rate << " (mean per step)\n";
  out << "rate ratio: " << rates.ratio() << '\n';
  return kExitOk;
}

struct VerifyArgs {
  VerifyOptions opts;
  CLI::Option* seed_opt = nullptr;
};

int cmd_verify(const VerifyArgs& args, std::ostream& out) {
  VerifyOptions opts = args.opts;
  if (args.seed_opt->count() == 0) {
    if (const char* env = std::getenv(kSeedEnv); env != nullptr && *env != '\0') {
      opts.seed = parse_seed(env);
    }
  }
  const VerifyReport report = run_verification(opts);
  out << std::setprecision(6);
  int failed = 0;
  for (const CheckResult& c : report.checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    if (!c.passed) ++failed;
  }
  if (failed == 0) {
    out << "all " << report.checks.size() << " checks passed\n";
    return kExitOk;
  }
  out << failed << " of " << report.checks.size() << " checks failed\n";
  return kExitCheckFailed;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Population gradient descent for a one-hidden-layer convolutional network",
               "convdyn"};
  app.require_subcommand(1);

  ExperimentOptions run_opts;
  CLI::App* run = app.add_subcommand("run", "one recorded trajectory");
  run_opts.add(*run, true);

  ExperimentOptions phase_opts;
  CLI::App* phases = app.add_subcommand("phases", "phase transition analysis of one run");
  phase_opts.add(*phases, true);

  ExperimentOptions grid_opts;
  grid_opts.cfg.p = 6;
  grid_opts.cfg.stride = 100;
  grid_opts.init = "raw";
  std::vector<int> ks{25, 36, 49, 64, 81, 100};
  std::vector<double> ratios{0, 1, 4, 9, 16, 25};
  CLI::App* grid = app.add_subcommand("grid", "success probability over (k, ratio) cells");
  grid_opts.add(*grid, false);
  grid->add_option("--k", ks, "comma-separated k values")->delimiter(',')->capture_default_str();
  grid->add_option("--ratio", ratios, "comma-separated ratio values")
      ->delimiter(',')
      ->capture_default_str();

  VerifyArgs verify_args;
  CLI::App* verify = app.add_subcommand("verify", "closed forms against independent oracles");
  verify_args.seed_opt = verify->add_option("--seed", verify_args.opts.seed)->capture_default_str();
  verify->add_option("--n-samples", verify_args.opts.identity_samples,
                     "samples per Gaussian identity check")
      ->capture_default_str();
  verify->add_option("--oracle-samples", verify_args.opts.oracle_samples)->capture_default_str();
  verify->add_option("--pairs", verify_args.opts.identity_pairs)->capture_default_str();
  verify->add_option("--fd-points", verify_args.opts.fd_points)->capture_default_str();
  verify->add_option("--oracle-configs", verify_args.opts.oracle_configs)->capture_default_str();
  verify->add_option("--nonneg-configs", verify_args.opts.nonneg_configs)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "convdyn: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (run->parsed()) {
      run_opts.resolve(*run);
      return cmd_run(run_opts, out);
    }
    if (phases->parsed()) {
      phase_opts.resolve(*phases);
      return cmd_phases(phase_opts, out);
    }
    if (grid->parsed()) {
      grid_opts.resolve(*grid);
      return cmd_grid(grid_opts, ks, ratios, out);
    }
    if (verify->parsed()) return cmd_verify(verify_args, out);
  } catch (const UsageError& e) {
    err << "convdyn: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::domain_error& e) {
    err << "convdyn: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "convdyn: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "convdyn: " << e.what() << '\n';
    return kExitCheckFailed;
  }
  return kExitUsage;
}

}  // namespace convdyn::cli

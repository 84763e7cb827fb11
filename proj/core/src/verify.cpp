#include "convdyn/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "convdyn/analytic.hpp"
#include "convdyn/montecarlo.hpp"

namespace convdyn {
namespace {

constexpr std::uint64_t kVerifyStream = 0x766572696679ULL;  // "verify"

Vector gaussian(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = normal(rng);
  return x;
}

std::string describe(const char* what, double metric, double threshold) {
  std::ostringstream os;
  os << what << " = " << metric << " (threshold " << threshold << ")";
  return os.str();
}

}  // namespace

bool VerifyReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

RandomPoint random_point(Rng& rng, int max_p, int max_k) {
  std::uniform_int_distribution<int> p_dist(2, std::max(2, max_p));
  std::uniform_int_distribution<int> k_dist(1, std::max(1, max_k));
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  for (;;) {
    const int p = p_dist(rng);
    const int k = k_dist(rng);
    Vector v = gaussian(p, rng);
    Vector w_star = gaussian(p, rng);
    Vector a = gaussian(k, rng);
    Vector a_star = gaussian(k, rng);
    if (v.norm() == 0.0 || w_star.norm() == 0.0 || a_star.norm() == 0.0) continue;
    w_star *= scale(rng) / w_star.norm();
    const double phi = angle(v, w_star);
    if (phi <= 0.05 || phi >= kPi - 0.05) continue;
    return {StudentParams(std::move(v), std::move(a)),
            TeacherParams(std::move(w_star), std::move(a_star))};
  }
}

CheckResult check_gradients_fd(const LossFn& loss, int points, double h, double rel_tol,
                               std::uint64_t seed) {
  Rng rng = make_rng({kVerifyStream, seed, 1});
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const RandomPoint pt = random_point(rng);
    const Gradients g = population_gradients(pt.s, pt.t);

    Vector fd_v(pt.s.p());
    for (Eigen::Index j = 0; j < pt.s.p(); ++j) {
      Vector up = pt.s.v(), down = pt.s.v();
      up[j] += h;
      down[j] -= h;
      fd_v[j] = (loss(StudentParams(up, pt.s.a()), pt.t) -
                 loss(StudentParams(down, pt.s.a()), pt.t)) / (2.0 * h);
    }
    Vector fd_a(pt.s.k());
    for (Eigen::Index j = 0; j < pt.s.k(); ++j) {
      Vector up = pt.s.a(), down = pt.s.a();
      up[j] += h;
      down[j] -= h;
      fd_a[j] = (loss(StudentParams(pt.s.v(), up), pt.t) -
                 loss(StudentParams(pt.s.v(), down), pt.t)) / (2.0 * h);
    }
    const double rel_v = (g.v - fd_v).norm() / std::max(fd_v.norm(), g.v.norm());
    const double rel_a = (g.a - fd_a).norm() / std::max(fd_a.norm(), g.a.norm());
    worst = std::max({worst, rel_v, rel_a});
  }
  return {"gradient_vs_finite_difference", worst <= rel_tol, worst, rel_tol,
          describe("max relative error", worst, rel_tol)};
}

CheckResult check_oracle(const LossFn& loss, int configs, std::int64_t n, double z_max,
                         std::uint64_t seed) {
  Rng rng = make_rng({kVerifyStream, seed, 2});
  double worst = 0.0;
  for (int i = 0; i < configs; ++i) {
    const RandomPoint pt = random_point(rng);
    const PatchBatch batch =
        sample_patches(n, static_cast<int>(pt.s.k()), static_cast<int>(pt.s.p()),
                       seed * 1000 + static_cast<std::uint64_t>(i));
    const ScalarEstimate l = empirical_loss_stats(batch, pt.s, pt.t);
    const EmpiricalGradientStats g = empirical_grad_stats(batch, pt.s, pt.t);
    const Gradients exact = population_gradients(pt.s, pt.t);
    Vector l_mean(1), l_se(1), l_exact(1);
    l_mean << l.mean;
    l_se << l.std_error;
    l_exact << loss(pt.s, pt.t);
    worst = std::max({worst, max_abs_z(l_mean, l_exact, l_se),
                      max_abs_z(g.v.mean, exact.v, g.v.std_error),
                      max_abs_z(g.a.mean, exact.a, g.a.std_error)});
  }
  return {"monte_carlo_oracle", worst <= z_max, worst, z_max, describe("max |z|", worst, z_max)};
}

std::vector<CheckResult> check_identities(int pairs, std::int64_t n, double z_max,
                                          std::uint64_t seed) {
  Rng rng = make_rng({kVerifyStream, seed, 3});
  std::uniform_int_distribution<int> p_dist(2, 8);
  std::vector<std::pair<Vector, Vector>> ws;
  for (int i = 0; i < pairs; ++i) {
    const int p = p_dist(rng);
    ws.emplace_back(gaussian(p, rng), gaussian(p, rng));
  }
  std::vector<CheckResult> out;
  for (int id = 1; id <= 4; ++id) {
    double worst = 0.0;
    for (int i = 0; i < pairs; ++i) {
      const IdentityCheckReport r = check_identity(id, ws[static_cast<std::size_t>(i)].first,
                                                   ws[static_cast<std::size_t>(i)].second, n,
                                                   seed * 1000 + static_cast<std::uint64_t>(i));
      worst = std::max(worst, r.max_abs_z_score);
    }
    out.push_back({"gaussian_identity_" + std::to_string(id), worst <= z_max, worst, z_max,
                   describe("max |z|", worst, z_max)});
  }
  return out;
}

CheckResult check_nonnegativity(const LossFn& loss, int configs, std::uint64_t seed) {
  Rng rng = make_rng({kVerifyStream, seed, 4});
  std::uniform_int_distribution<int> p_dist(1, 8);
  std::uniform_int_distribution<int> k_dist(1, 10);
  std::uniform_real_distribution<double> scale(0.1, 3.0);
  std::bernoulli_distribution coin(0.25);
  double worst = 0.0;
  for (int i = 0; i < configs; ++i) {
    const int p = p_dist(rng);
    const int k = k_dist(rng);
    Vector w_star = gaussian(p, rng) * scale(rng);
    Vector a_star = gaussian(k, rng) * scale(rng);
    // Some configurations near the global minimum, where sign errors show.
    Vector a = coin(rng) ? Vector(w_star.norm() * a_star + 0.01 * gaussian(k, rng))
                         : Vector(gaussian(k, rng) * scale(rng));
    Vector v = coin(rng) ? Vector(w_star + 0.01 * gaussian(p, rng)) : gaussian(p, rng);
    if (v.norm() == 0.0 || w_star.norm() == 0.0 || a_star.norm() == 0.0) continue;
    const TeacherParams t(w_star, a_star);
    const StudentParams s(v, a);
    const double norm = t.scale() * t.scale() + a.squaredNorm();
    worst = std::min(worst, loss(s, t) / norm);
  }
  const double threshold = -1e-12;
  return {"loss_nonnegative", worst >= threshold, worst, threshold,
          describe("min normalized loss", worst, threshold)};
}

VerifyReport run_verification(const VerifyOptions& opts, const LossFn& loss) {
  VerifyReport report;
  report.checks.push_back(check_nonnegativity(loss, opts.nonneg_configs, opts.seed));
  report.checks.push_back(
      check_gradients_fd(loss, opts.fd_points, opts.fd_step, opts.fd_rel_tol, opts.seed));
  for (CheckResult& c : check_identities(opts.identity_pairs, opts.identity_samples,
                                         opts.identity_z_max, opts.seed)) {
    report.checks.push_back(std::move(c));
  }
  report.checks.push_back(
      check_oracle(loss, opts.oracle_configs, opts.oracle_samples, opts.oracle_z_max, opts.seed));
  return report;
}

VerifyReport run_verification(const VerifyOptions& opts) {
  return run_verification(opts, [](const StudentParams& s, const TeacherParams& t) {
    return population_loss(s, t);
  });
}

}  // namespace convdyn

#include "convdyn/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "convdyn/analytic.hpp"

namespace convdyn {
namespace {

constexpr std::uint64_t kPatchStream = 0x7061746368ULL;     // "patch"
constexpr std::uint64_t kIdentityStream = 0x6964656e74ULL;  // "ident"

// Per-coordinate mean and M2, merged chunk by chunk in index order so the
// result does not depend on how chunks are scheduled.
class Moments {
 public:
  explicit Moments(Eigen::Index dim) : mean_(Vector::Zero(dim)), m2_(Vector::Zero(dim)) {}

  void add(const Vector& x) {
    ++count_;
    const Vector delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_.array() += delta.array() * (x - mean_).array();
  }

  void merge(const Moments& other) {
    if (other.count_ == 0) return;
    const double n1 = static_cast<double>(count_);
    const double n2 = static_cast<double>(other.count_);
    const double n = n1 + n2;
    const Vector delta = other.mean_ - mean_;
    mean_ += delta * (n2 / n);
    m2_ += other.m2_ + (delta.array().square() * (n1 * n2 / n)).matrix();
    count_ += other.count_;
  }

  VectorEstimate estimate() const {
    VectorEstimate e{mean_, Vector::Zero(mean_.size())};
    if (count_ > 1) {
      const double n = static_cast<double>(count_);
      e.std_error = (m2_ / (n - 1.0) / n).array().sqrt().matrix();
    }
    return e;
  }

 private:
  std::int64_t count_ = 0;
  Vector mean_;
  Vector m2_;
};

double relu(double x) { return x > 0.0 ? x : 0.0; }

void check_batch(const PatchBatch& batch, const StudentParams& s, const TeacherParams& t) {
  if (batch.k() != s.k() || batch.p() != s.p() || batch.k() != t.k() || batch.p() != t.p()) {
    throw std::domain_error("patch batch dimensions do not match parameters");
  }
}

template <typename Fn>
Moments accumulate_samples(const PatchBatch& batch, Eigen::Index dim, Fn&& per_sample) {
  Moments total(dim);
  for (std::int64_t start = 0; start < batch.n(); start += PatchBatch::kPatchChunk) {
    const std::int64_t stop = std::min(batch.n(), start + PatchBatch::kPatchChunk);
    Moments chunk(dim);
    for (std::int64_t i = start; i < stop; ++i) chunk.add(per_sample(batch.sample(i)));
    total.merge(chunk);
  }
  return total;
}

struct SampleTerms {
  double residual;
  Vector act;       // σ(Zw)
  Vector gate_a;    // a ∘ 1{Zw > 0}
};

}  // namespace

PatchBatch::PatchBatch(std::int64_t n, int k, int p, std::vector<double> data)
    : n_(n), k_(k), p_(p), data_(std::move(data)) {
  if (n_ < 1 || k_ < 1 || p_ < 1) throw std::domain_error("PatchBatch: n, k, p must be >= 1");
  if (static_cast<std::int64_t>(data_.size()) != n_ * k_ * p_) {
    throw std::domain_error("PatchBatch: data size does not match n*k*p");
  }
}

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
PatchBatch::sample(std::int64_t s) const {
  return {data_.data() + s * k_ * p_, k_, p_};
}

PatchBatch sample_patches(std::int64_t n, int k, int p, std::uint64_t seed) {
  if (n < 1 || k < 1 || p < 1) throw std::domain_error("sample_patches: n, k, p must be >= 1");
  const std::int64_t per_sample = static_cast<std::int64_t>(k) * p;
  std::vector<double> data(static_cast<std::size_t>(n * per_sample));
  std::normal_distribution<double> normal;
  for (std::int64_t c = 0; c * PatchBatch::kPatchChunk < n; ++c) {
    Rng rng = make_rng({kPatchStream, seed, static_cast<std::uint64_t>(c)});
    const std::int64_t start = c * PatchBatch::kPatchChunk * per_sample;
    const std::int64_t stop = std::min(n, (c + 1) * PatchBatch::kPatchChunk) * per_sample;
    for (std::int64_t i = start; i < stop; ++i) data[static_cast<std::size_t>(i)] = normal(rng);
  }
  return PatchBatch(n, k, p, std::move(data));
}

namespace {

template <typename Sample>
SampleTerms sample_terms(const Sample& z, const Vector& w, const StudentParams& s,
                         const TeacherParams& t) {
  const Vector h = z * w;
  const Vector h_star = z * t.w_star();
  SampleTerms st;
  st.act = h.unaryExpr(&relu);
  st.gate_a = (h.array() > 0.0).select(s.a().array(), 0.0).matrix();
  st.residual = s.a().dot(st.act) - t.a_star().dot(h_star.unaryExpr(&relu));
  return st;
}

}  // namespace

ScalarEstimate empirical_loss_stats(const PatchBatch& batch, const StudentParams& s,
                                    const TeacherParams& t) {
  check_batch(batch, s, t);
  const Vector w = s.v().normalized();
  Vector out(1);
  const Moments m = accumulate_samples(batch, 1, [&](const auto& z) -> const Vector& {
    const SampleTerms st = sample_terms(z, w, s, t);
    out[0] = 0.5 * st.residual * st.residual;
    return out;
  });
  const VectorEstimate e = m.estimate();
  return {e.mean[0], e.std_error[0]};
}

double empirical_loss(const PatchBatch& batch, const StudentParams& s, const TeacherParams& t) {
  return empirical_loss_stats(batch, s, t).mean;
}

EmpiricalGradientStats empirical_grad_stats(const PatchBatch& batch, const StudentParams& s,
                                            const TeacherParams& t) {
  check_batch(batch, s, t);
  const Eigen::Index p = s.p();
  const Eigen::Index k = s.k();
  const double nv = s.v().norm();
  const Vector w = s.v() / nv;
  // (1/‖v‖)(I − wwᵀ) applied per sample; linear, so it commutes with the mean.
  const Matrix projection = (Matrix::Identity(p, p) - w * w.transpose()) / nv;
  Vector out(p + k);
  const Moments m = accumulate_samples(batch, p + k, [&](const auto& z) -> const Vector& {
    const SampleTerms st = sample_terms(z, w, s, t);
    const Vector grad_w = st.residual * (z.transpose() * st.gate_a);
    out.head(p) = projection * grad_w;
    out.tail(k) = st.residual * st.act;
    return out;
  });
  const VectorEstimate e = m.estimate();
  return {{e.mean.head(p), e.std_error.head(p)}, {e.mean.tail(k), e.std_error.tail(k)}};
}

EmpiricalGradient empirical_grad(const PatchBatch& batch, const StudentParams& s,
                                 const TeacherParams& t) {
  EmpiricalGradientStats st = empirical_grad_stats(batch, s, t);
  // Exact orthogonality to v, removing the rounding left by the projection.
  const Vector w = s.v().normalized();
  st.v.mean -= w.dot(st.v.mean) * w;
  return {std::move(st.v.mean), std::move(st.a.mean)};
}

Vector identity_closed_form(int identity_id, const Vector& w, const Vector& w_star) {
  const double nw = w.norm();
  const double nws = w_star.norm();
  if (!(nw > 0.0) || !(nws > 0.0)) throw std::domain_error("identity: zero vector");
  const double phi = angle(w, w_star);
  switch (identity_id) {
    case 1:
      return w / 2.0;
    case 2:
      return w / (std::sqrt(2.0 * kPi) * nw);
    case 3:
      return ((kPi - phi) / (2.0 * kPi)) * w_star + (std::sin(phi) / (2.0 * kPi)) * (nws / nw) * w;
    case 4: {
      Vector r(1);
      r[0] = g_phi(phi) / (2.0 * kPi) * nw * nws;
      return r;
    }
    default:
      throw std::domain_error("identity_id must be in 1..4");
  }
}

IdentityCheckReport check_identity(int identity_id, const Vector& w, const Vector& w_star,
                                   std::int64_t n, std::uint64_t seed) {
  IdentityCheckReport report;
  report.identity_id = identity_id;
  report.closed_form = identity_closed_form(identity_id, w, w_star);
  if (w.size() != w_star.size()) throw std::domain_error("identity: dimension mismatch");
  if (n < 2) throw std::domain_error("identity: n must be >= 2");

  const Eigen::Index p = w.size();
  const Eigen::Index dim = report.closed_form.size();
  std::normal_distribution<double> normal;
  Moments total(dim);
  Vector z(p);
  Vector value(dim);
  for (std::int64_t c = 0; c * PatchBatch::kPatchChunk < n; ++c) {
    Rng rng = make_rng({kIdentityStream, seed, static_cast<std::uint64_t>(identity_id),
                        static_cast<std::uint64_t>(c)});
    const std::int64_t count = std::min(PatchBatch::kPatchChunk, n - c * PatchBatch::kPatchChunk);
    Moments chunk(dim);
    for (std::int64_t i = 0; i < count; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) z[j] = normal(rng);
      const double zw = z.dot(w);
      const double zws = z.dot(w_star);
      switch (identity_id) {
        case 1: value = z * relu(zw); break;
        case 2: value = zw >= 0.0 ? z : Vector::Zero(p); break;
        case 3: value = (zw >= 0.0 && zws >= 0.0) ? Vector(z * zws) : Vector::Zero(p); break;
        case 4: value[0] = relu(zw) * relu(zws); break;
      }
      chunk.add(value);
    }
    total.merge(chunk);
  }
  const VectorEstimate e = total.estimate();
  report.estimate = e.mean;
  report.std_error = e.std_error;
  report.max_abs_z_score = max_abs_z(report.estimate, report.closed_form, report.std_error);
  return report;
}

double max_abs_z(const Vector& estimate, const Vector& expected, const Vector& std_error) {
  if (estimate.size() != expected.size() || estimate.size() != std_error.size()) {
    throw std::domain_error("max_abs_z: shape mismatch");
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < estimate.size(); ++i) {
    const double diff = std::abs(estimate[i] - expected[i]);
    if (std_error[i] > 0.0) {
      worst = std::max(worst, diff / std_error[i]);
    } else if (diff > 0.0) {
      worst = std::numeric_limits<double>::infinity();
    }
  }
  return worst;
}

}  // namespace convdyn

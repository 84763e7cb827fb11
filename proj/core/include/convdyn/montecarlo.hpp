#pragma once

#include <cstdint>
#include <vector>

#include "convdyn/model.hpp"

namespace convdyn {

/// n samples of a k × p Gaussian patch matrix, stored sample-major
/// (sample s, patch i, coordinate j at (s·k + i)·p + j).
///
/// Samples are drawn in fixed chunks of kPatchChunk, chunk c from a
/// generator seeded with (seed, c), so the batch depends only on
/// (n, k, p, seed).
class PatchBatch {
 public:
  static constexpr std::int64_t kPatchChunk = 4096;

  PatchBatch(std::int64_t n, int k, int p, std::vector<double> data);

  std::int64_t n() const { return n_; }
  int k() const { return k_; }
  int p() const { return p_; }
  const std::vector<double>& data() const { return data_; }

  /// k × p view of sample s; row i is patch Zᵢᵀ.
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> sample(
      std::int64_t s) const;

 private:
  std::int64_t n_;
  int k_;
  int p_;
  std::vector<double> data_;
};

PatchBatch sample_patches(std::int64_t n, int k, int p, std::uint64_t seed);

/// Sample mean with its plug-in standard error.
struct ScalarEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

struct VectorEstimate {
  Vector mean;
  Vector std_error;
};

double empirical_loss(const PatchBatch& batch, const StudentParams& s, const TeacherParams& t);
ScalarEstimate empirical_loss_stats(const PatchBatch& batch, const StudentParams& s,
                                    const TeacherParams& t);

struct EmpiricalGradient {
  Vector v;
  Vector a;
};

/// Batch-averaged per-sample gradients. The v-gradient is the averaged
/// w-gradient pushed through (1/‖v‖)(I − vvᵀ/‖v‖²). σ'(0) is taken as 0.
EmpiricalGradient empirical_grad(const PatchBatch& batch, const StudentParams& s,
                                 const TeacherParams& t);

struct EmpiricalGradientStats {
  VectorEstimate v;
  VectorEstimate a;
};

EmpiricalGradientStats empirical_grad_stats(const PatchBatch& batch, const StudentParams& s,
                                            const TeacherParams& t);

/// Gaussian expectations behind the closed forms, each checked by sampling
/// z ~ N(0, I_p):
///   1. E[zzᵀ1{zᵀw≥0}]w                  = w/2
///   2. E[z·1{zᵀw≥0}]                    = w/(√(2π)‖w‖)
///   3. E[zzᵀ1{zᵀw≥0, zᵀw*≥0}]w*         = ((π−φ)/2π)w* + (sin φ/2π)(‖w*‖/‖w‖)w
///   4. E[σ(zᵀw)σ(zᵀw*)]                 = (g(φ)/2π)‖w‖‖w*‖
struct IdentityCheckReport {
  int identity_id = 0;
  Vector estimate;
  Vector closed_form;
  Vector std_error;
  double max_abs_z_score = 0.0;
};

Vector identity_closed_form(int identity_id, const Vector& w, const Vector& w_star);

IdentityCheckReport check_identity(int identity_id, const Vector& w, const Vector& w_star,
                                   std::int64_t n, std::uint64_t seed);

/// Entrywise |estimate − expected| / std_error, maximized. A zero standard
/// error with a nonzero difference yields +inf.
double max_abs_z(const Vector& estimate, const Vector& expected, const Vector& std_error);

}  // namespace convdyn

#pragma once

#include <array>
#include <optional>

#include "convdyn/model.hpp"

namespace convdyn {

/// The four sign combinations of a draw, in the order
/// (v, a), (v, −a), (−v, a), (−v, −a).
struct SignVariants {
  std::array<StudentParams, 4> variants;
};

/// Radius of the second-layer initialization ball, |1ᵀa*|‖w*‖/√k. When
/// 1ᵀa* vanishes the ball degenerates and ‖a*‖‖w*‖/√k is used instead.
double init_ball_radius(const TeacherParams& t);

/// v uniform on the unit sphere, a uniform in the ball of init_ball_radius.
StudentParams sample_init(int p, int k, const TeacherParams& t, Rng& rng);

SignVariants sign_variants(const StudentParams& s);

/// The variant with (a⁰)ᵀa* > 0 and φ⁰ < π/2; absent only on exact ties.
std::optional<StudentParams> select_good_variant(const SignVariants& sv, const TeacherParams& t);

/// The variant with (a⁰)ᵀa* < 0 and g(φ⁰) ≤ 1 − 2(1ᵀa*)²/‖a*‖², if any.
std::optional<StudentParams> select_bad_variant(const SignVariants& sv, const TeacherParams& t);

}  // namespace convdyn

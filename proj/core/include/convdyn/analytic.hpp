#pragma once

#include "convdyn/model.hpp"

namespace convdyn {

/// Angle kernel g(φ) = (π − φ)cos φ + sin φ. Decreases from π at φ = 0 to 0
/// at φ = π. Throws std::domain_error outside [0, π].
double g_phi(double phi);

/// A(w) = E[σ(Zw)σ(Zw)ᵀ] and B(w, w*) = E[σ(Zw)σ(Zw*)ᵀ] for Gaussian patches.
struct GramPair {
  Matrix A_w;
  Matrix B_ww;
};

GramPair gram_matrices(const Vector& w, const Vector& w_star, Eigen::Index k);

/// Closed-form population loss ½[a*ᵀA(w*)a* + aᵀA(w)a − 2aᵀB(w, w*)a*]
/// with w = v/‖v‖, evaluated in a rearranged O(k) form that is exactly zero
/// at the global minimum.
double population_loss(const StudentParams& s, const TeacherParams& t);

/// The same loss assembled literally from gram_matrices. O(k²); kept as the
/// reference form.
double population_loss_gram(const StudentParams& s, const TeacherParams& t);

Vector grad_v(const StudentParams& s, const TeacherParams& t);
Vector grad_a(const StudentParams& s, const TeacherParams& t);

struct Gradients {
  Vector v;
  Vector a;
  double phi = 0.0;
};

/// Both population gradients at one point, sharing the angle computation.
Gradients population_gradients(const StudentParams& s, const TeacherParams& t);

/// Same as above on raw (v, a), writing into preallocated outputs. Returns φ.
/// Used by the descent loop to avoid per-iteration allocation.
double population_gradients_into(const Vector& v, const Vector& a, const TeacherParams& t,
                                 Vector& grad_v_out, Vector& grad_a_out);

/// Second layer of the spurious stationary family at θ(v, w*) = π:
///   (11ᵀ + (π−1)I)⁻¹(11ᵀ − I)‖w*‖a*.
/// The inverse is applied in closed form, (1/(π−1))(I − 11ᵀ/(k+π−1)).
Vector spurious_a(const TeacherParams& t);

}  // namespace convdyn

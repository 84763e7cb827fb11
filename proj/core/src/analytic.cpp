#include "convdyn/analytic.hpp"

#include <cmath>
#include <stdexcept>

namespace convdyn {
namespace {

void check_dims(const StudentParams& s, const TeacherParams& t) {
  if (s.p() != t.p() || s.k() != t.k()) {
    throw std::domain_error("student/teacher dimension mismatch");
  }
}

}  // namespace

double g_phi(double phi) {
  if (!(phi >= 0.0 && phi <= kPi)) {
    throw std::domain_error("g_phi: angle outside [0, pi]");
  }
  return (kPi - phi) * std::cos(phi) + std::sin(phi);
}

GramPair gram_matrices(const Vector& w, const Vector& w_star, Eigen::Index k) {
  if (k < 1) throw std::domain_error("gram_matrices: k must be >= 1");
  const double phi = angle(w, w_star);
  const double nw = w.norm();
  const double nws = w_star.norm();
  const Matrix ones = Matrix::Ones(k, k);
  const Matrix eye = Matrix::Identity(k, k);
  GramPair gp;
  gp.A_w = (nw * nw / (2.0 * kPi)) * (ones + (kPi - 1.0) * eye);
  gp.B_ww = (nw * nws / (2.0 * kPi)) * (ones + (g_phi(phi) - 1.0) * eye);
  return gp;
}

double population_loss(const StudentParams& s, const TeacherParams& t) {
  check_dims(s, t);
  // With unit w, A(w) = M := (11ᵀ + (π−1)I)/2π, A(w*) = ‖w*‖²M and
  // B = ‖w*‖(M − (π − g(φ))/(2π)·I). Substituting into the Gram form gives
  //   ½(a − ‖w*‖a*)ᵀM(a − ‖w*‖a*) + ‖w*‖(π − g(φ))/(2π)·aᵀa*,
  // which has no cancellation at the global minimum.
  const double phi = angle(s.v(), t.w_star());
  const double c = t.w_star_norm();
  const Vector d = s.a() - c * t.a_star();
  const double sum_d = d.sum();
  const double quad = (sum_d * sum_d + (kPi - 1.0) * d.squaredNorm()) / (2.0 * kPi);
  const double cross = c * (kPi - g_phi(phi)) / (2.0 * kPi) * s.a().dot(t.a_star());
  return 0.5 * quad + cross;
}

double population_loss_gram(const StudentParams& s, const TeacherParams& t) {
  check_dims(s, t);
  const Vector w = s.v().normalized();
  const GramPair student = gram_matrices(w, t.w_star(), s.k());
  const GramPair teacher = gram_matrices(t.w_star(), t.w_star(), s.k());
  const Vector& a = s.a();
  const Vector& as = t.a_star();
  return 0.5 * (as.dot(teacher.A_w * as) + a.dot(student.A_w * a) - 2.0 * a.dot(student.B_ww * as));
}

double population_gradients_into(const Vector& v, const Vector& a, const TeacherParams& t,
                                 Vector& grad_v_out, Vector& grad_a_out) {
  if (v.size() != t.p() || a.size() != t.k()) {
    throw std::domain_error("student/teacher dimension mismatch");
  }
  const double nv = v.norm();
  const double phi = angle(v, t.w_star());
  const double a_dot = a.dot(t.a_star());
  const double g = g_phi(phi);

  // −(1/(2π‖v‖))(I − vvᵀ/‖v‖²)(aᵀa*)(π−φ)w*
  const double along = v.dot(t.w_star()) / (nv * nv);
  const double coef = -a_dot * (kPi - phi) / (2.0 * kPi * nv);
  grad_v_out.resize(v.size());
  grad_v_out.noalias() = coef * (t.w_star() - along * v);

  // (1/2π)[(11ᵀ + (π−1)I)a − ‖w*‖(11ᵀ + (g(φ)−1)I)a*]
  const double c = t.w_star_norm();
  const double shift = (a.sum() - c * t.a_star().sum()) / (2.0 * kPi);
  grad_a_out.resize(a.size());
  grad_a_out.array() =
      ((kPi - 1.0) * a.array() - (c * (g - 1.0)) * t.a_star().array()) / (2.0 * kPi) + shift;
  return phi;
}

Gradients population_gradients(const StudentParams& s, const TeacherParams& t) {
  Gradients g;
  g.phi = population_gradients_into(s.v(), s.a(), t, g.v, g.a);
  return g;
}

Vector grad_v(const StudentParams& s, const TeacherParams& t) {
  return population_gradients(s, t).v;
}

Vector grad_a(const StudentParams& s, const TeacherParams& t) {
  return population_gradients(s, t).a;
}

Vector spurious_a(const TeacherParams& t) {
  const double k = static_cast<double>(t.k());
  const Vector rhs = t.w_star_norm() * (Vector::Constant(t.k(), t.a_star().sum()) - t.a_star());
  return (rhs.array() - rhs.sum() / (k + kPi - 1.0)).matrix() / (kPi - 1.0);
}

}  // namespace convdyn

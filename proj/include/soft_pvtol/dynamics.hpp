#pragma once

/// @file
/// Euler-Lagrange model of the soft PVTOL:
///
///   D(q) q'' + C(q, q') q' + g(q) = tau,   q = (x_v, z_v, theta, q_l, q_r).
///
/// The matrix functions are templates over the scalar type so that oracles
/// can re-evaluate them in extended precision.

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "soft_pvtol/kernels.hpp"
#include "soft_pvtol/params.hpp"
#include "soft_pvtol/types.hpp"

namespace soft_pvtol {

/// Inertia matrix in lumped-parameter form. Symmetric by construction.
template <typename T>
Matrix5<T> mass_matrix(const Vector5<T>& q, const PhysicalParams& p,
                       const KernelConfig& cfg) {
  const T ql = q(kQl), qr = q(kQr);
  const T t1(p.theta1()), t2(p.theta2()), t3(p.theta3()), t4(p.theta4());
  Matrix5<T> D = Matrix5<T>::Zero();
  D(0, 0) = t1;
  D(1, 1) = t1;
  D(2, 2) = t2;
  D(0, 3) = D(3, 0) = t3 * eval(KernelKind::kD1, ql, cfg);
  D(1, 3) = D(3, 1) = t3 * eval(KernelKind::kD2, ql, cfg);
  D(0, 4) = D(4, 0) = t4 * eval(KernelKind::kD3, qr, cfg);
  D(1, 4) = D(4, 1) = t4 * eval(KernelKind::kD4, qr, cfg);
  D(3, 3) = T(p.l_l) * t3 * eval(KernelKind::kD5, ql, cfg) + T(p.theta5());
  D(4, 4) = T(p.l_r) * t4 * eval(KernelKind::kD6, qr, cfg) + T(p.theta6());
  return D;
}

/// Inertia matrix assembled term by term from the unsimplified d_mn
/// expressions. Entries of an arm whose curvature lies inside the kernel band
/// fall back to mass_matrix(), since the raw terms are singular there.
template <typename T>
Matrix5<T> mass_matrix_raw(const Vector5<T>& q, const PhysicalParams& p,
                           const KernelConfig& cfg) {
  using std::abs;
  using std::cos;
  using std::sin;
  Matrix5<T> D = mass_matrix(q, p, cfg);
  const T ql = q(kQl), qr = q(kQr);
  if (abs(ql) >= T(cfg.delta)) {
    const T l(p.l_l), m(p.m_l);
    const T s = sin(ql), c = cos(ql);
    D(0, 3) = D(3, 0) = -l * m * (c / ql - s / (ql * ql));
    D(1, 3) = D(3, 1) = -l * m * (T(1) / (ql * ql) - c / (ql * ql) - s / ql);
    D(3, 3) = l * l * m * (T(1) / (ql * ql)) +
              T(2) * l * l * m / (ql * ql * ql * ql) -
              T(2) * l * l * m * c / (ql * ql * ql * ql) -
              T(2) * l * l * m * s / (ql * ql * ql) + T(p.I_l);
  }
  if (abs(qr) >= T(cfg.delta)) {
    const T l(p.l_r), m(p.m_r);
    const T s = sin(qr), c = cos(qr);
    D(0, 4) = D(4, 0) = l * m * (c / qr - s / (qr * qr));
    D(1, 4) = D(4, 1) = -l * m * (T(1) / (qr * qr) - c / (qr * qr) - s / qr);
    D(4, 4) = l * l * m * (T(1) / (qr * qr)) +
              T(2) * l * l * m / (qr * qr * qr * qr) -
              T(2) * l * l * m * c / (qr * qr * qr * qr) -
              T(2) * l * l * m * s / (qr * qr * qr) + T(p.I_r);
  }
  return D;
}

/// Coriolis matrix from the Christoffel symbols of mass_matrix().
template <typename T>
Matrix5<T> coriolis_matrix(const Vector5<T>& q, const Vector5<T>& qdot,
                           const PhysicalParams& p, const KernelConfig& cfg) {
  const T ql = q(kQl), qr = q(kQr);
  const T dl = qdot(kQl), dr = qdot(kQr);
  const T t3(p.theta3()), t4(p.theta4());
  Matrix5<T> C = Matrix5<T>::Zero();
  C(0, 3) = t3 * eval(KernelKind::kC1, ql, cfg) * dl;
  C(0, 4) = -t4 * eval(KernelKind::kC3, qr, cfg) * dr;
  C(1, 3) = t3 * eval(KernelKind::kC2, ql, cfg) * dl;
  C(1, 4) = t4 * eval(KernelKind::kC4, qr, cfg) * dr;
  C(3, 3) = -T(2) * T(p.l_l) * t3 * eval(KernelKind::kC5, ql, cfg) * dl;
  C(4, 4) = -T(2) * T(p.l_r) * t4 * eval(KernelKind::kC6, qr, cfg) * dr;
  return C;
}

/// Coriolis matrix assembled from the unsimplified c_mn expressions. Used to
/// cross-check coriolis_matrix(); same fallback rule as mass_matrix_raw().
template <typename T>
Matrix5<T> coriolis_matrix_expanded(const Vector5<T>& q,
                                    const Vector5<T>& qdot,
                                    const PhysicalParams& p,
                                    const KernelConfig& cfg) {
  using std::abs;
  using std::cos;
  using std::sin;
  Matrix5<T> C = coriolis_matrix(q, qdot, p, cfg);
  auto arm = [](T x, T l, T m, T rate, T sign, T& c_x, T& c_z, T& c_q) {
    const T s = sin(x), c = cos(x);
    const T x2 = x * x, x3 = x2 * x, x4 = x3 * x, x5 = x4 * x;
    c_x = sign * l * m * ((x * s + c) / x2 + (x * c - T(2) * s) / x3) * rate;
    c_z = (T(2) * l * m / x3 - l * m * (x * s + T(2) * c) / x3 +
           l * m * (x * c - s) / x2) *
          rate;
    c_q = (-l * l * m / x3 - T(4) * l * l * m / x5 +
           l * l * m * (x * s + T(4) * c) / x5 -
           l * l * m * (x * c - T(3) * s) / x4) *
          rate;
  };
  if (abs(q(kQl)) >= T(cfg.delta)) {
    arm(q(kQl), T(p.l_l), T(p.m_l), qdot(kQl), T(1), C(0, 3), C(1, 3),
        C(3, 3));
  }
  if (abs(q(kQr)) >= T(cfg.delta)) {
    arm(q(kQr), T(p.l_r), T(p.m_r), qdot(kQr), T(-1), C(0, 4), C(1, 4),
        C(4, 4));
  }
  return C;
}

/// Analytic time derivative of mass_matrix() along qdot.
template <typename T>
Matrix5<T> mass_matrix_dot(const Vector5<T>& q, const Vector5<T>& qdot,
                           const PhysicalParams& p, const KernelConfig& cfg) {
  const T ql = q(kQl), qr = q(kQr);
  const T dl = qdot(kQl), dr = qdot(kQr);
  const T t3(p.theta3()), t4(p.theta4());
  Matrix5<T> Dd = Matrix5<T>::Zero();
  Dd(0, 3) = Dd(3, 0) = t3 * eval(KernelKind::kC1, ql, cfg) * dl;
  Dd(0, 4) = Dd(4, 0) = -t4 * eval(KernelKind::kC3, qr, cfg) * dr;
  Dd(1, 3) = Dd(3, 1) = t3 * eval(KernelKind::kC2, ql, cfg) * dl;
  Dd(1, 4) = Dd(4, 1) = t4 * eval(KernelKind::kC4, qr, cfg) * dr;
  Dd(3, 3) = -T(4) * T(p.l_l) * t3 * eval(KernelKind::kC5, ql, cfg) * dl;
  Dd(4, 4) = -T(4) * T(p.l_r) * t4 * eval(KernelKind::kC6, qr, cfg) * dr;
  return Dd;
}

template <typename T>
Vector5<T> gravity_vector(const Vector5<T>& q, const PhysicalParams& p,
                          const KernelConfig& cfg) {
  Vector5<T> g = Vector5<T>::Zero();
  g(kZ) = T(p.g) * T(p.theta1());
  g(kQl) = T(p.g) * T(p.theta3()) * eval(KernelKind::kGrav, q(kQl), cfg);
  g(kQr) = T(p.g) * T(p.theta4()) * eval(KernelKind::kGrav, q(kQr), cfg);
  return g;
}

/// Thrown when the inertia matrix cannot be factorized reliably, which only
/// happens if parameter validation was bypassed.
class IllConditionedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kMaxConditionNumber = 1e12;

/// Accelerations solving D q'' = tau - C q' - g by Cholesky factorization.
inline Vector5d forward_dynamics(const GenState& state, const ControlVector& tau,
                                 const PhysicalParams& p,
                                 const KernelConfig& cfg) {
  const Matrix5d D = mass_matrix<double>(state.q, p, cfg);
  const Eigen::LLT<Matrix5d> llt(D);
  if (llt.info() != Eigen::Success || !(llt.rcond() * kMaxConditionNumber > 1.0)) {
    std::ostringstream os;
    os << "inertia matrix ill-conditioned at q = " << state.q.transpose()
       << " (reciprocal condition estimate " << llt.rcond() << ")";
    throw IllConditionedError(os.str());
  }
  const Vector5d rhs = tau -
                       coriolis_matrix<double>(state.q, state.qdot, p, cfg) *
                           state.qdot -
                       gravity_vector<double>(state.q, p, cfg);
  return llt.solve(rhs);
}

template <typename T>
T kinetic_energy(const Vector5<T>& q, const Vector5<T>& qdot,
                 const PhysicalParams& p, const KernelConfig& cfg) {
  return T(0.5) * qdot.dot(mass_matrix(q, p, cfg) * qdot);
}

inline double kinetic_energy(const GenState& s, const PhysicalParams& p,
                             const KernelConfig& cfg) {
  return kinetic_energy<double>(s.q, s.qdot, p, cfg);
}

template <typename T>
T potential_energy(const Vector5<T>& q, const PhysicalParams& p,
                   const KernelConfig& cfg) {
  const T g(p.g);
  return T(p.theta1()) * g * q(kZ) +
         T(p.theta3()) * g * eval(KernelKind::kBend, q(kQl), cfg) +
         T(p.theta4()) * g * eval(KernelKind::kBend, q(kQr), cfg);
}

inline double potential_energy(const GenCoords& q, const PhysicalParams& p,
                               const KernelConfig& cfg) {
  return potential_energy<double>(q, p, cfg);
}

inline double total_energy(const GenState& s, const PhysicalParams& p,
                           const KernelConfig& cfg) {
  return kinetic_energy(s, p, cfg) + potential_energy(s.q, p, cfg);
}

struct PlanarPoints {
  Vector2d body;
  Vector2d left;
  Vector2d right;
};

namespace detail {
// Kinematics never needs the paper-faithful constant substitution.
inline constexpr KernelConfig kSmoothKernels{0.1, KernelMode::kSeries};
}  // namespace detail

/// Body and rotor positions in the inertial frame. Arm offsets are added
/// without rotation by theta, matching the Lagrangian the model derives from.
inline PlanarPoints tip_positions(const GenCoords& q, const PhysicalParams& p) {
  const auto& k = detail::kSmoothKernels;
  PlanarPoints out;
  out.body = Vector2d(q(kX), q(kZ));
  out.left = out.body + Vector2d(-p.epsilon - p.l_l * eval(KernelKind::kSinc, q(kQl), k),
                                 p.l_l * eval(KernelKind::kBend, q(kQl), k));
  out.right = out.body + Vector2d(p.epsilon + p.l_r * eval(KernelKind::kSinc, q(kQr), k),
                                  p.l_r * eval(KernelKind::kBend, q(kQr), k));
  return out;
}

inline PlanarPoints tip_velocities(const GenState& s, const PhysicalParams& p) {
  const auto& k = detail::kSmoothKernels;
  const double ql = s.q(kQl), qr = s.q(kQr);
  PlanarPoints out;
  out.body = Vector2d(s.qdot(kX), s.qdot(kZ));
  out.left = out.body + p.l_l * s.qdot(kQl) *
                            Vector2d(eval(KernelKind::kD1, ql, k),
                                     eval(KernelKind::kD2, ql, k));
  out.right = out.body + p.l_r * s.qdot(kQr) *
                             Vector2d(eval(KernelKind::kD3, qr, k),
                                      eval(KernelKind::kD4, qr, k));
  return out;
}

/// True when both curvatures respect |q| <= pi.
inline bool curvatures_bounded(const GenCoords& q) {
  return std::abs(q(kQl)) <= M_PI && std::abs(q(kQr)) <= M_PI;
}

}  // namespace soft_pvtol

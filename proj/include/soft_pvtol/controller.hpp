#pragma once

/// @file
/// Passivity-based tracking controller
///
///   tau = D(q) a + C(q, q') v + g(q) - K r,
///   v = qd' - Lambda e,  a = qd'' - Lambda e',  r = q' - v,  e = q - qd,
///
/// together with the references it tracks and the Lyapunov diagnostics used
/// to check its exponential convergence.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "soft_pvtol/dynamics.hpp"

namespace soft_pvtol {

/// Diagonal gain matrices K and Lambda, stored as their diagonals.
struct Gains {
  Vector5d K = (Vector5d() << 2.55, 2.55, 10.5, 21.0, 21.0).finished();
  Vector5d Lambda = (Vector5d() << 1.0, 1.0, 5.0, 10.0, 10.0).finished();

  void validate() const {
    for (int i = 0; i < 5; ++i) {
      if (!(K(i) > 0.0) || !std::isfinite(K(i))) {
        throw std::invalid_argument("gains.K." + std::to_string(i + 1) +
                                    " must be strictly positive");
      }
      if (!(Lambda(i) > 0.0) || !std::isfinite(Lambda(i))) {
        throw std::invalid_argument("gains.Lambda." + std::to_string(i + 1) +
                                    " must be strictly positive");
      }
    }
  }
};

struct ReferenceSample {
  Vector5d q = Vector5d::Zero();
  Vector5d qdot = Vector5d::Zero();
  Vector5d qddot = Vector5d::Zero();
};

/// Sliding variable r = q' - qd' + Lambda (q - qd).
inline Vector5d sliding_variable(const GenState& s, const ReferenceSample& ref,
                                 const Gains& gains) {
  const Vector5d v =
      ref.qdot - gains.Lambda.cwiseProduct(s.q - ref.q);
  return s.qdot - v;
}

inline ControlVector tracking_control(const GenState& s,
                                      const ReferenceSample& ref,
                                      const Gains& gains,
                                      const PhysicalParams& p,
                                      const KernelConfig& cfg) {
  const Vector5d e = s.q - ref.q;
  const Vector5d e_dot = s.qdot - ref.qdot;
  const Vector5d v = ref.qdot - gains.Lambda.cwiseProduct(e);
  const Vector5d a = ref.qddot - gains.Lambda.cwiseProduct(e_dot);
  const Vector5d r = s.qdot - v;
  return mass_matrix<double>(s.q, p, cfg) * a +
         coriolis_matrix<double>(s.q, s.qdot, p, cfg) * v +
         gravity_vector<double>(s.q, p, cfg) - gains.K.cwiseProduct(r);
}

/// Reference for (x_v, z_v, theta): a horizontal sinusoid over a slow
/// vertical oscillation at zero pitch. Arm entries are left at zero.
inline ReferenceSample pose_reference(double t) {
  ReferenceSample ref;
  ref.q(kX) = 4.0 * std::sin(0.5 * t);
  ref.qdot(kX) = 2.0 * std::cos(0.5 * t);
  ref.qddot(kX) = -std::sin(0.5 * t);
  // cos(-t/10) is even, so the derivatives are those of 3 cos(t/10) + 4.
  ref.q(kZ) = 3.0 * std::cos(-t / 10.0) + 4.0;
  ref.qdot(kZ) = -0.3 * std::sin(t / 10.0);
  ref.qddot(kZ) = -0.03 * std::cos(t / 10.0);
  return ref;
}

/// First-order low-pass filter on the curvature references produced by the
/// allocator, with derivatives from backward differences of the output.
///
/// The filter is discretized exactly (zero-order hold on the input), so a
/// step response reaches 1 - 1/e of its final value after one time constant
/// regardless of the step size.
class ArmRefFilter {
 public:
  explicit ArmRefFilter(double time_constant = 0.05)
      : time_constant_(time_constant) {
    if (!(time_constant > 0.0)) {
      throw std::invalid_argument("arm filter time constant must be positive");
    }
  }

  /// Starts the filter at a known value with zero derivatives.
  void reset(const Vector2d& value) {
    y_ = value;
    ydot_.setZero();
    yddot_.setZero();
    initialized_ = true;
  }

  /// Advances by one step of length h with raw input `raw`. The first sample
  /// of an uninitialized filter is passed through with zero derivatives.
  void update(const Vector2d& raw, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("filter step must be positive");
    if (!initialized_) {
      reset(raw);
      return;
    }
    const double alpha = -std::expm1(-h / time_constant_);
    const Vector2d y_next = y_ + alpha * (raw - y_);
    const Vector2d ydot_next = (y_next - y_) / h;
    yddot_ = (ydot_next - ydot_) / h;
    ydot_ = ydot_next;
    y_ = y_next;
  }

  bool initialized() const { return initialized_; }
  double time_constant() const { return time_constant_; }
  const Vector2d& value() const { return y_; }
  const Vector2d& rate() const { return ydot_; }
  const Vector2d& acceleration() const { return yddot_; }

  /// Writes the arm entries of `ref`.
  void fill(ReferenceSample& ref) const {
    ref.q(kQl) = y_(0);
    ref.q(kQr) = y_(1);
    ref.qdot(kQl) = ydot_(0);
    ref.qdot(kQr) = ydot_(1);
    ref.qddot(kQl) = yddot_(0);
    ref.qddot(kQr) = yddot_(1);
  }

 private:
  double time_constant_;
  bool initialized_ = false;
  Vector2d y_ = Vector2d::Zero();
  Vector2d ydot_ = Vector2d::Zero();
  Vector2d yddot_ = Vector2d::Zero();
};

struct LyapunovSample {
  double V = 0.0;
  Vector5d r = Vector5d::Zero();
};

/// V = 1/2 r^T D r + e^T Lambda K e.
inline LyapunovSample lyapunov_value(const GenState& s,
                                     const ReferenceSample& ref,
                                     const Gains& gains,
                                     const PhysicalParams& p,
                                     const KernelConfig& cfg) {
  LyapunovSample out;
  out.r = sliding_variable(s, ref, gains);
  const Vector5d e = s.q - ref.q;
  const Matrix5d D = mass_matrix<double>(s.q, p, cfg);
  out.V = 0.5 * out.r.dot(D * out.r) +
          e.dot(gains.Lambda.cwiseProduct(gains.K).cwiseProduct(e));
  return out;
}

/// The 10x10 matrix Q = [[K, K Lambda], [K Lambda, 2 Lambda K Lambda]] of the
/// decay bound. Along the closed loop V' = -z^T Q z holds for z = (r, -e);
/// flipping the sign of e is a similarity, so the spectrum is unaffected.
inline Eigen::Matrix<double, 10, 10> decay_matrix(const Gains& gains) {
  const Vector5d K = gains.K, L = gains.Lambda;
  Eigen::Matrix<double, 10, 10> Q = Eigen::Matrix<double, 10, 10>::Zero();
  Q.topLeftCorner<5, 5>() = K.asDiagonal();
  Q.topRightCorner<5, 5>() = K.cwiseProduct(L).asDiagonal();
  Q.bottomLeftCorner<5, 5>() = K.cwiseProduct(L).asDiagonal();
  Q.bottomRightCorner<5, 5>() = (2.0 * L.cwiseProduct(K).cwiseProduct(L)).asDiagonal();
  return Q;
}

/// V' along the ideal closed loop, -(r^T K r - 2 r^T Lambda K e +
/// 2 e^T Lambda K Lambda e).
inline double lyapunov_rate(const Vector5d& r, const Vector5d& e,
                            const Gains& gains) {
  const Vector5d lk = gains.Lambda.cwiseProduct(gains.K);
  return -(r.dot(gains.K.cwiseProduct(r)) - 2.0 * r.dot(lk.cwiseProduct(e)) +
           2.0 * e.dot(lk.cwiseProduct(gains.Lambda).cwiseProduct(e)));
}

/// Guaranteed exponential rate rho = lambda_min(Q) / max_q lambda_max(P(q)),
/// P(q) = blockdiag(D(q)/2, Lambda K), with the maximum over `q_samples`.
inline double decay_rate_bound(const Gains& gains, const PhysicalParams& p,
                               std::span<const GenCoords> q_samples,
                               const KernelConfig& cfg = {}) {
  if (q_samples.empty()) {
    throw std::invalid_argument("decay_rate_bound needs at least one sample");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 10, 10>> qs(
      decay_matrix(gains), Eigen::EigenvaluesOnly);
  const double lambda_min_q = qs.eigenvalues().minCoeff();
  const double lk_max = gains.Lambda.cwiseProduct(gains.K).maxCoeff();
  double lambda_max_p = lk_max;
  for (const auto& q : q_samples) {
    const Eigen::SelfAdjointEigenSolver<Matrix5d> ds(
        0.5 * mass_matrix<double>(q, p, cfg), Eigen::EigenvaluesOnly);
    lambda_max_p = std::max(lambda_max_p, ds.eigenvalues().maxCoeff());
  }
  return lambda_min_q / lambda_max_p;
}

}  // namespace soft_pvtol

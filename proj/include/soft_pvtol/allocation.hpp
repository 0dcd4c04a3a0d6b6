#pragma once

/// @file
/// Control allocation: from the commanded generalized forces
/// (tau_x, tau_z, tau_theta) to rotor thrusts (T_l, T_r) and desired arm
/// curvatures (q_l^d, q_r^d).
///
/// With v = (T_r sin q_r, T_r cos q_r, T_l sin q_l, T_l cos q_l) the body-frame
/// wrench is linear in v, u = A(q) v. Replacing sin(q)/q by cos(q/2) in A
/// gives a matrix whose pseudo-inverse stays finite at q_l = q_r = 0; solving
/// v = pinv(A) u for thrusts and angles turns the allocation into a 4x4
/// fixed-point problem x = G(x), x = (T_l, T_r, q_l^d, q_r^d).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "soft_pvtol/kernels.hpp"
#include "soft_pvtol/params.hpp"
#include "soft_pvtol/types.hpp"

namespace soft_pvtol {

using Vector3d = Eigen::Vector3d;
using Matrix34d = Eigen::Matrix<double, 3, 4>;
using Matrix43d = Eigen::Matrix<double, 4, 3>;

struct WrenchCommand {
  double tau_x = 0.0;
  double tau_z = 0.0;
  double tau_theta = 0.0;
  double theta = 0.0;  // current pitch
};

/// Body-frame virtual inputs (upsilon_x, upsilon_z): (tau_x, tau_z) rotated by
/// -theta.
inline Vector2d to_body_virtual(const WrenchCommand& cmd) {
  const double c = std::cos(cmd.theta), s = std::sin(cmd.theta);
  return Vector2d(cmd.tau_x * c + cmd.tau_z * s, -cmd.tau_x * s + cmd.tau_z * c);
}

/// Inverse of to_body_virtual().
inline Vector2d to_inertial(const Vector2d& body, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  return Vector2d(c * body(0) - s * body(1), s * body(0) + c * body(1));
}

namespace detail {

template <typename LeverFn>
Vector3d forward_map(double T_l, double T_r, double q_l, double q_r,
                     double theta, const PhysicalParams& p, LeverFn lever) {
  const Vector2d body(-T_r * std::sin(q_r) + T_l * std::sin(q_l),
                      T_r * std::cos(q_r) + T_l * std::cos(q_l));
  const Vector2d inertial = to_inertial(body, theta);
  const double tau_theta = p.l_r * T_r * std::cos(q_r) * lever(q_r) -
                           p.l_l * T_l * std::cos(q_l) * lever(q_l);
  return Vector3d(inertial(0), inertial(1), tau_theta);
}

inline constexpr KernelConfig kSincKernel{0.1, KernelMode::kSeries};

}  // namespace detail

/// (tau_x, tau_z, tau_theta) produced by the actuators, with the exact lever
/// arm l sin(q)/q.
inline Vector3d exact_forward_map(double T_l, double T_r, double q_l,
                                  double q_r, double theta,
                                  const PhysicalParams& p) {
  return detail::forward_map(T_l, T_r, q_l, q_r, theta, p, [](double q) {
    return eval(KernelKind::kSinc, q, detail::kSincKernel);
  });
}

/// As exact_forward_map() with sin(q)/q replaced by cos(q/2).
inline Vector3d approx_forward_map(double T_l, double T_r, double q_l,
                                   double q_r, double theta,
                                   const PhysicalParams& p) {
  return detail::forward_map(T_l, T_r, q_l, q_r, theta, p,
                             [](double q) { return std::cos(0.5 * q); });
}

/// The approximated effectiveness matrix: (upsilon_x, upsilon_z, tau_theta) =
/// A v.
inline Matrix34d approx_effectiveness(double q_l, double q_r,
                                      const PhysicalParams& p) {
  Matrix34d A;
  A << -1.0, 0.0, 1.0, 0.0,
        0.0, 1.0, 0.0, 1.0,
        0.0, p.l_r * std::cos(0.5 * q_r), 0.0, -p.l_l * std::cos(0.5 * q_l);
  return A;
}

/// Sum of the approximated lever arms, the denominator of every pseudo-inverse
/// entry. Zero only when both curvatures sit at +-pi.
inline double lever_sum(double q_l, double q_r, const PhysicalParams& p) {
  return p.l_l * std::cos(0.5 * q_l) + p.l_r * std::cos(0.5 * q_r);
}

inline constexpr double kMinLeverSum = 1e-12;

/// Closed-form Moore-Penrose inverse of approx_effectiveness(). Empty when the
/// lever sum vanishes.
inline std::optional<Matrix43d> approx_effectiveness_pinv(
    double q_l, double q_r, const PhysicalParams& p) {
  const double L = lever_sum(q_l, q_r, p);
  if (!(std::abs(L) > kMinLeverSum)) return std::nullopt;
  const double a_l = p.l_l * std::cos(0.5 * q_l);
  const double a_r = p.l_r * std::cos(0.5 * q_r);
  Matrix43d P;
  P << -0.5, 0.0, 0.0,
        0.0, a_l / L, 1.0 / L,
        0.5, 0.0, 0.0,
        0.0, a_r / L, -1.0 / L;
  return P;
}

/// v = (T_r sin q_r, T_r cos q_r, T_l sin q_l, T_l cos q_l) from the body
/// wrench. Empty when the command is infeasible at these curvatures.
inline std::optional<Vector4d> pinv_map(double upsilon_x, double upsilon_z,
                                        double tau_theta, double q_l,
                                        double q_r, const PhysicalParams& p) {
  const auto P = approx_effectiveness_pinv(q_l, q_r, p);
  if (!P) return std::nullopt;
  return Vector4d(*P * Vector3d(upsilon_x, upsilon_z, tau_theta));
}

/// How thrust direction is recovered from the pseudo-inverse components
/// (T sin q, T cos q).
enum class AllocationBranch {
  // Square-root magnitude and arctan angle: T >= 0, |q| < pi/2. A rotor whose
  // vertical component must be negative cannot be represented.
  kArctan,
  // Arctan angle, thrust carrying the sign of the vertical component.
  kSignedThrust,
  // Square-root magnitude and atan2 angle: T >= 0, |q| <= pi.
  kFullCircle,
};

inline constexpr std::string_view branch_name(AllocationBranch b) {
  switch (b) {
    case AllocationBranch::kArctan: return "ARCTAN";
    case AllocationBranch::kSignedThrust: return "SIGNED_THRUST";
    case AllocationBranch::kFullCircle: return "FULL_CIRCLE";
  }
  return "UNKNOWN";
}

inline AllocationBranch parse_branch(std::string_view name) {
  if (name == "ARCTAN") return AllocationBranch::kArctan;
  if (name == "SIGNED_THRUST") return AllocationBranch::kSignedThrust;
  if (name == "FULL_CIRCLE") return AllocationBranch::kFullCircle;
  throw std::invalid_argument("unknown allocation branch '" +
                              std::string(name) +
                              "' (expected ARCTAN, SIGNED_THRUST or FULL_CIRCLE)");
}

/// Vertical components (T_l cos q_l, T_r cos q_r) demanded by the
/// pseudo-inverse at curvatures (q_l, q_r).
inline Vector2d vertical_demand(double q_l, double q_r, double upsilon_z,
                                double tau_theta, const PhysicalParams& p) {
  const double L = lever_sum(q_l, q_r, p);
  const double a_l = p.l_l * std::cos(0.5 * q_l);
  const double a_r = p.l_r * std::cos(0.5 * q_r);
  return Vector2d((a_r * upsilon_z - tau_theta) / L,
                  (a_l * upsilon_z + tau_theta) / L);
}

/// The fixed-point map G with x = G(x) at an allocation, x = (T_l, T_r, q_l^d,
/// q_r^d).
inline Vector4d allocation_map(const Vector4d& x, double upsilon_x,
                               double upsilon_z, double tau_theta,
                               const PhysicalParams& p,
                               AllocationBranch branch = AllocationBranch::kArctan) {
  const double q_l = x(2), q_r = x(3);
  const double L = lever_sum(q_l, q_r, p);
  const double a_l = p.l_l * std::cos(0.5 * q_l);
  const double a_r = p.l_r * std::cos(0.5 * q_r);
  const double half_x = 0.5 * upsilon_x;
  const double left_z = (a_r * upsilon_z - tau_theta) / L;
  const double right_z = (a_l * upsilon_z + tau_theta) / L;
  Vector4d out;
  out(0) = std::sqrt(half_x * half_x + left_z * left_z);
  out(1) = std::sqrt(half_x * half_x + right_z * right_z);
  switch (branch) {
    case AllocationBranch::kArctan:
      out(2) = std::atan(upsilon_x * L / (2.0 * (a_r * upsilon_z - tau_theta)));
      out(3) = std::atan(-upsilon_x * L / (2.0 * (a_l * upsilon_z + tau_theta)));
      break;
    case AllocationBranch::kSignedThrust:
      out(2) = std::atan(upsilon_x * L / (2.0 * (a_r * upsilon_z - tau_theta)));
      out(3) = std::atan(-upsilon_x * L / (2.0 * (a_l * upsilon_z + tau_theta)));
      if (left_z < 0.0) out(0) = -out(0);
      if (right_z < 0.0) out(1) = -out(1);
      break;
    case AllocationBranch::kFullCircle:
      out(2) = std::atan2(half_x, left_z);
      out(3) = std::atan2(-half_x, right_z);
      break;
  }
  return out;
}

/// f(x) = x - G(x).
inline Vector4d residual(const Vector4d& x, double upsilon_x, double upsilon_z,
                         double tau_theta, const PhysicalParams& p,
                         AllocationBranch branch = AllocationBranch::kArctan) {
  return x - allocation_map(x, upsilon_x, upsilon_z, tau_theta, p, branch);
}

struct SolverSettings {
  Vector4d initial_guess = Vector4d(20.0, 10.0, 0.4, -0.2);
  double tolerance = 1e-10;
  int max_iterations = 50;
  double damping = 1.0;        // initial Newton step fraction, in (0, 1]
  double fd_step = 1e-7;       // central-difference Jacobian step
  double thrust_limit = 200.0; // solutions above this are flagged [N]
  AllocationBranch branch = AllocationBranch::kSignedThrust;

  void validate() const {
    if (!(tolerance > 0.0)) {
      throw std::invalid_argument("solver.tolerance must be positive");
    }
    if (max_iterations < 1) {
      throw std::invalid_argument("solver.max_iterations must be at least 1");
    }
    if (!(damping > 0.0 && damping <= 1.0)) {
      throw std::invalid_argument("solver.damping must lie in (0, 1]");
    }
    if (!(fd_step > 0.0)) {
      throw std::invalid_argument("solver.fd_step must be positive");
    }
    if (!initial_guess.allFinite()) {
      throw std::invalid_argument("solver.guess must be finite");
    }
  }
};

enum class AllocationStatus { kConverged, kNonConvergence, kInfeasible };

inline const char* to_string(AllocationStatus s) {
  switch (s) {
    case AllocationStatus::kConverged: return "converged";
    case AllocationStatus::kNonConvergence: return "non-convergence";
    case AllocationStatus::kInfeasible: return "infeasible";
  }
  return "unknown";
}

struct AllocationSolution {
  double T_l = 0.0;
  double T_r = 0.0;
  double q_l_d = 0.0;
  double q_r_d = 0.0;
  double residual_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  AllocationStatus status = AllocationStatus::kNonConvergence;
  bool thrust_saturated = false;
  bool used_fixed_point = false;

  bool converged() const { return status == AllocationStatus::kConverged; }
  Vector4d x() const { return Vector4d(T_l, T_r, q_l_d, q_r_d); }
};

namespace detail {

inline AllocationSolution make_solution(const Vector4d& x, double norm,
                                        int iterations, AllocationStatus status,
                                        const SolverSettings& settings) {
  AllocationSolution s;
  s.T_l = x(0);
  s.T_r = x(1);
  s.q_l_d = x(2);
  s.q_r_d = x(3);
  s.residual_norm = norm;
  s.iterations = iterations;
  s.status = status;
  s.thrust_saturated =
      std::max(std::abs(x(0)), std::abs(x(1))) > settings.thrust_limit;
  return s;
}

}  // namespace detail

/// Damped Newton on residual() with a central-difference Jacobian. When a
/// Newton step cannot reduce the residual the solver falls back to plain
/// fixed-point iteration of allocation_map() for the remaining budget.
/// Thrusts are nonnegative except on the SIGNED_THRUST branch.
inline AllocationSolution solve(double upsilon_x, double upsilon_z,
                                double tau_theta, const PhysicalParams& p,
                                const SolverSettings& settings) {
  auto f = [&](const Vector4d& x) {
    return residual(x, upsilon_x, upsilon_z, tau_theta, p, settings.branch);
  };
  Vector4d x = settings.initial_guess;
  Vector4d fx = f(x);
  double norm = fx.norm();
  if (!std::isfinite(norm)) {
    return detail::make_solution(x, norm, 0, AllocationStatus::kInfeasible,
                                 settings);
  }
  bool fixed_point = false;
  int it = 0;
  while (norm > settings.tolerance && it < settings.max_iterations) {
    ++it;
    if (!fixed_point) {
      Eigen::Matrix4d J;
      for (int j = 0; j < 4; ++j) {
        const double h = settings.fd_step * std::max(1.0, std::abs(x(j)));
        Vector4d xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        J.col(j) = (f(xp) - f(xm)) / (2.0 * h);
      }
      const Vector4d dx = J.fullPivLu().solve(-fx);
      bool accepted = false;
      if (dx.allFinite()) {
        double step = settings.damping;
        for (int k = 0; k < 30; ++k, step *= 0.5) {
          const Vector4d xn = x + step * dx;
          const Vector4d fn = f(xn);
          const double nn = fn.norm();
          if (std::isfinite(nn) && nn < norm) {
            x = xn;
            fx = fn;
            norm = nn;
            accepted = true;
            break;
          }
        }
      }
      if (accepted) continue;
      fixed_point = true;
    }
    const Vector4d xn =
        allocation_map(x, upsilon_x, upsilon_z, tau_theta, p, settings.branch);
    const Vector4d fn = f(xn);
    if (!fn.allFinite()) {
      return detail::make_solution(x, norm, it, AllocationStatus::kInfeasible,
                                   settings);
    }
    x = xn;
    fx = fn;
    norm = fn.norm();
  }
  AllocationStatus status = norm <= settings.tolerance
                                ? AllocationStatus::kConverged
                                : AllocationStatus::kNonConvergence;
  // A root of the arctan branch with a negative vertical demand satisfies
  // x = G(x) but realizes the mirrored wrench for that rotor.
  if (status == AllocationStatus::kConverged &&
      settings.branch == AllocationBranch::kArctan &&
      vertical_demand(x(2), x(3), upsilon_z, tau_theta, p).minCoeff() < 0.0) {
    status = AllocationStatus::kInfeasible;
  }
  AllocationSolution sol = detail::make_solution(x, norm, it, status, settings);
  sol.used_fixed_point = fixed_point;
  return sol;
}

inline AllocationSolution solve(const WrenchCommand& cmd,
                                const PhysicalParams& p,
                                const SolverSettings& settings) {
  const Vector2d u = to_body_virtual(cmd);
  return solve(u(0), u(1), cmd.tau_theta, p, settings);
}

}  // namespace soft_pvtol

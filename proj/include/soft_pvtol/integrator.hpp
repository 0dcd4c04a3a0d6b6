#pragma once

/// @file
/// Classical fourth-order Runge-Kutta, fixed step.

#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>

#include <Eigen/Core>

#include "soft_pvtol/types.hpp"

namespace soft_pvtol {

class IntegrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline bool all_finite(double y) { return std::isfinite(y); }

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& y) {
  return y.allFinite();
}

}  // namespace detail

/// One RK4 step of y' = f(t, y). Works for scalars and Eigen vectors.
template <typename State, typename Rhs>
State rk4_step(const State& y, double t, double h, Rhs&& f) {
  if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
  const State k1 = f(t, y);
  const State k2 = f(t + 0.5 * h, State(y + (0.5 * h) * k1));
  const State k3 = f(t + 0.5 * h, State(y + (0.5 * h) * k2));
  const State k4 = f(t + h, State(y + h * k3));
  State out = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!detail::all_finite(out)) {
    throw IntegrationError("non-finite state after RK4 step at t = " +
                           std::to_string(t));
  }
  return out;
}

using PhaseVector = Eigen::Matrix<double, 10, 1>;

inline PhaseVector to_phase(const GenState& s) {
  PhaseVector y;
  y << s.q, s.qdot;
  return y;
}

inline GenState from_phase(const PhaseVector& y) {
  return GenState{y.head<5>(), y.tail<5>()};
}

/// One RK4 step of q'' = accel(state) in first-order form.
template <typename AccelFn>
GenState step(const GenState& state, AccelFn&& accel, double h) {
  const PhaseVector y = rk4_step(
      to_phase(state), 0.0, h, [&](double, const PhaseVector& z) {
        const GenState s = from_phase(z);
        const Vector5d a = accel(s);
        if (!a.allFinite()) {
          throw IntegrationError("non-finite acceleration");
        }
        PhaseVector dz;
        dz << s.qdot, a;
        return dz;
      });
  return from_phase(y);
}

}  // namespace soft_pvtol

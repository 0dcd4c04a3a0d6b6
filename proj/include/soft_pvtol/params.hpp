#pragma once

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace soft_pvtol {

/// Physical constants of the aircraft. Defaults are the reference vehicle:
/// a 5 kg body with 1 kg rotors on 0.5 m soft arms.
struct PhysicalParams {
  double m = 5.0;     // body mass [kg]
  double m_l = 1.0;   // left rotor mass [kg]
  double m_r = 1.0;   // right rotor mass [kg]
  double I = 1.0;     // body inertia [kg m^2]
  double I_l = 0.1;   // left arm inertia [kg m^2]
  double I_r = 0.1;   // right arm inertia [kg m^2]
  double l_l = 0.5;   // left arm length [m]
  double l_r = 0.5;   // right arm length [m]
  double epsilon = 0.0;  // half frame length [m], kinematics only
  double g = 9.8;     // gravity [m/s^2]

  // Lumped inertial parameters.
  double theta1() const { return m + m_l + m_r; }
  double theta2() const { return I; }
  double theta3() const { return l_l * m_l; }
  double theta4() const { return l_r * m_r; }
  double theta5() const { return I_l; }
  double theta6() const { return I_r; }

  // The same, normalized by theta3.
  double rho1() const { return theta1() / theta3(); }
  double rho2() const { return theta2() / theta3(); }
  double rho3() const { return theta5() / theta3(); }
  double rho4() const { return theta4() / theta3(); }
  double rho5() const { return theta6() / theta3(); }

  /// Margin of theta1 > theta3^2 / (l_l theta3 + 4 theta5); positive when the
  /// leading 4x4 minor of the inertia matrix is bounded away from zero.
  double minor4_margin() const {
    const double t3 = theta3();
    return theta1() - t3 * t3 / (l_l * t3 + 4.0 * theta5());
  }

  /// Left side minus right side of the worst-case (q -> 0) determinant
  /// condition on the full inertia matrix.
  double det5_margin() const {
    const double r1 = rho1(), r3 = rho3(), r4 = rho4(), r5 = rho5();
    const double lhs = 4.0 * r3 * r1 * r4 * l_r + 16.0 * r3 * r1 * r5 +
                       l_l * r1 * r4 * l_r + 4.0 * r1 * r5 * l_l;
    const double rhs =
        r4 * l_r + 4.0 * r5 + 4.0 * r3 * r4 * r4 + l_l * r4 * r4;
    return lhs - rhs;
  }

  /// Human-readable list of violated invariants; empty when valid.
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    auto positive = [&](double v, const char* name) {
      if (!(std::isfinite(v) && v > 0.0)) {
        std::ostringstream os;
        os << name << " must be strictly positive (got " << v << ")";
        out.push_back(os.str());
      }
    };
    positive(m, "params.m");
    positive(m_l, "params.m_l");
    positive(m_r, "params.m_r");
    positive(I, "params.I");
    positive(I_l, "params.I_l");
    positive(I_r, "params.I_r");
    positive(l_l, "params.l_l");
    positive(l_r, "params.l_r");
    positive(g, "params.g");
    if (!(std::isfinite(epsilon) && epsilon >= 0.0)) {
      out.push_back("params.epsilon must be nonnegative");
    }
    // With positive masses and inertias both inequalities hold automatically,
    // so they are still checked (when computable) after a positivity failure.
    if (!(std::isfinite(minor4_margin()) && std::isfinite(det5_margin()))) {
      return out;
    }
    if (!(minor4_margin() > 0.0)) {
      std::ostringstream os;
      os << "inertia 4x4 minor condition violated: theta1 = " << theta1()
         << " must exceed theta3^2/(l_l*theta3 + 4*theta5) = "
         << theta1() - minor4_margin();
      out.push_back(os.str());
    }
    if (!(det5_margin() > 0.0)) {
      std::ostringstream os;
      os << "inertia determinant condition violated at q -> 0 (margin "
         << det5_margin() << ")";
      out.push_back(os.str());
    }
    return out;
  }

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const {
    const auto v = violations();
    if (!v.empty()) throw std::invalid_argument(v.front());
  }
};

/// Zero-gravity variant of the reference vehicle. Validation requires g > 0,
/// so this is only for conservative-system checks that bypass validate().
inline PhysicalParams zero_gravity(PhysicalParams p) {
  p.g = 0.0;
  return p;
}

}  // namespace soft_pvtol

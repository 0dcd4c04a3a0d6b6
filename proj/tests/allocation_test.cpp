#include <cmath>
#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "soft_pvtol/allocation.hpp"

namespace soft_pvtol {
namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

SolverSettings settings_for(AllocationBranch b) {
  SolverSettings s;
  s.branch = b;
  return s;
}

constexpr AllocationBranch kBranches[] = {AllocationBranch::kArctan,
                                          AllocationBranch::kSignedThrust,
                                          AllocationBranch::kFullCircle};

TEST(Allocation, HoverWrench) {
  const PhysicalParams p;
  for (AllocationBranch b : kBranches) {
    const AllocationSolution s = solve(0.0, 68.6, 0.0, p, settings_for(b));
    ASSERT_TRUE(s.converged()) << branch_name(b);
    EXPECT_NEAR(s.T_l, 34.3, 1e-6);
    EXPECT_NEAR(s.T_r, 34.3, 1e-6);
    EXPECT_NEAR(s.q_l_d, 0.0, 1e-6);
    EXPECT_NEAR(s.q_r_d, 0.0, 1e-6);
    EXPECT_FALSE(s.thrust_saturated);
  }
}

TEST(Allocation, PitchTorqueSplitsThrust) {
  // tau_theta = l (T_r - T_l) with straight arms and l = 0.5.
  const AllocationSolution s = solve(0.0, 68.6, 1.0, PhysicalParams{}, SolverSettings{});
  ASSERT_TRUE(s.converged());
  EXPECT_NEAR(s.T_l, 33.3, 1e-6);
  EXPECT_NEAR(s.T_r, 35.3, 1e-6);
  EXPECT_NEAR(s.q_l_d, 0.0, 1e-9);
  EXPECT_NEAR(s.q_r_d, 0.0, 1e-9);
}

TEST(Allocation, PseudoInverseAtStraightArms) {
  const auto P = approx_effectiveness_pinv(0.0, 0.0, PhysicalParams{});
  ASSERT_TRUE(P.has_value());
  Matrix43d expected;
  expected << -0.5, 0, 0,
               0, 0.5, 1,
               0.5, 0, 0,
               0, 0.5, -1;
  EXPECT_TRUE(P->isApprox(expected, 1e-15));
  const auto v = pinv_map(2.0, 68.6, 1.0, 0.0, 0.0, PhysicalParams{});
  ASSERT_TRUE(v.has_value());
  EXPECT_NEAR((*v)(0), -1.0, 1e-15);
  EXPECT_NEAR((*v)(1), 35.3, 1e-12);
  EXPECT_NEAR((*v)(2), 1.0, 1e-15);
  EXPECT_NEAR((*v)(3), 33.3, 1e-12);
}

TEST(Allocation, PseudoInverseIsRightInverse) {
  Rng rng(31);
  PhysicalParams p;
  p.l_r = 0.6;
  for (int i = 0; i < 1000; ++i) {
    const double ql = uniform(rng, -M_PI, M_PI), qr = uniform(rng, -M_PI, M_PI);
    const auto P = approx_effectiveness_pinv(ql, qr, p);
    ASSERT_TRUE(P.has_value());
    const Eigen::Matrix3d I = approx_effectiveness(ql, qr, p) * *P;
    EXPECT_LT((I - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-10);
    // Moore-Penrose: pinv(A) A is symmetric.
    const Eigen::Matrix4d PA = *P * approx_effectiveness(ql, qr, p);
    EXPECT_LT((PA - PA.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Allocation, PseudoInverseUndefinedWithBothArmsFolded) {
  EXPECT_FALSE(approx_effectiveness_pinv(M_PI, -M_PI, PhysicalParams{}).has_value());
  EXPECT_FALSE(pinv_map(0, 1, 0, M_PI, M_PI, PhysicalParams{}).has_value());
}

TEST(Allocation, StraightArmsReduceToClassicalPvtol) {
  const PhysicalParams p;
  for (double theta : {0.0, 0.3, -1.2}) {
    const Vector3d w = exact_forward_map(30.0, 40.0, 0.0, 0.0, theta, p);
    EXPECT_NEAR(w(0), -70.0 * std::sin(theta), 1e-12);
    EXPECT_NEAR(w(1), 70.0 * std::cos(theta), 1e-12);
    EXPECT_NEAR(w(2), 0.5 * (40.0 - 30.0), 1e-12);
    EXPECT_TRUE(w.isApprox(approx_forward_map(30.0, 40.0, 0.0, 0.0, theta, p)));
  }
}

TEST(Allocation, ExactAndApproximateMapsDifferOnlyInLever) {
  const PhysicalParams p;
  const double T_l = 31.0, T_r = 29.0, ql = 0.6, qr = -0.9;
  const Vector3d e = exact_forward_map(T_l, T_r, ql, qr, 0.2, p);
  const Vector3d a = approx_forward_map(T_l, T_r, ql, qr, 0.2, p);
  EXPECT_NEAR(e(0), a(0), 1e-14);
  EXPECT_NEAR(e(1), a(1), 1e-14);
  const double expected =
      p.l_r * T_r * std::cos(qr) * (std::sin(qr) / qr - std::cos(qr / 2)) -
      p.l_l * T_l * std::cos(ql) * (std::sin(ql) / ql - std::cos(ql / 2));
  EXPECT_NEAR(e(2) - a(2), expected, 1e-13);
  // cos(q/2) is exact at 0 and off by cos(pi/4) - 2/pi at q = pi/2.
  for (double q = -M_PI / 2; q <= M_PI / 2; q += 0.01) {
    const double sinc = q == 0 ? 1 : std::sin(q) / q;
    EXPECT_LE(std::abs(sinc - std::cos(q / 2)), std::cos(M_PI / 4) - 2 / M_PI + 1e-12);
  }
}

TEST(Allocation, FrameRotationRoundTrips) {
  const WrenchCommand cmd{3.0, 60.0, 0.5, 0.7};
  const Vector2d body = to_body_virtual(cmd);
  EXPECT_NEAR(body.norm(), std::hypot(3.0, 60.0), 1e-12);
  const Vector2d back = to_inertial(body, cmd.theta);
  EXPECT_NEAR(back(0), 3.0, 1e-12);
  EXPECT_NEAR(back(1), 60.0, 1e-12);
}

TEST(Allocation, RoundTripThroughApproximateMap) {
  Rng rng(32);
  int converged = 0;
  for (int i = 0; i < 500; ++i) {
    const double ux = uniform(rng, -15, 15), uz = uniform(rng, 30, 120),
                 tt = uniform(rng, -8, 8);
    for (AllocationBranch b : kBranches) {
      const SolverSettings st = settings_for(b);
      const AllocationSolution s = solve(ux, uz, tt, PhysicalParams{}, st);
      if (!s.converged()) continue;
      ++converged;
      EXPECT_LT(s.residual_norm, st.tolerance);
      const Vector3d w = approx_forward_map(s.T_l, s.T_r, s.q_l_d, s.q_r_d, 0.0,
                                            PhysicalParams{});
      EXPECT_LT((w - Vector3d(ux, uz, tt)).lpNorm<Eigen::Infinity>(), 10 * st.tolerance)
          << branch_name(b) << " " << ux << " " << uz << " " << tt;
    }
  }
  EXPECT_EQ(converged, 1500);
}

TEST(Allocation, WrenchOverloadRotatesIntoBody) {
  const PhysicalParams p;
  const WrenchCommand cmd{2.0, 70.0, 0.3, 0.25};
  const AllocationSolution a = solve(cmd, p, SolverSettings{});
  const Vector2d u = to_body_virtual(cmd);
  const AllocationSolution b = solve(u(0), u(1), cmd.tau_theta, p, SolverSettings{});
  EXPECT_EQ(a.x(), b.x());
  const Vector3d w = approx_forward_map(a.T_l, a.T_r, a.q_l_d, a.q_r_d, cmd.theta, p);
  EXPECT_NEAR(w(0), cmd.tau_x, 1e-8);
  EXPECT_NEAR(w(1), cmd.tau_z, 1e-8);
}

TEST(Allocation, MirroringHorizontalForceFlipsAngles) {
  PhysicalParams p;
  p.l_r = 0.65;  // holds for asymmetric arms too
  const AllocationSolution a = solve(6.0, 70.0, 2.0, p, SolverSettings{});
  const AllocationSolution b = solve(-6.0, 70.0, 2.0, p, SolverSettings{});
  ASSERT_TRUE(a.converged() && b.converged());
  EXPECT_NEAR(a.T_l, b.T_l, 1e-9);
  EXPECT_NEAR(a.T_r, b.T_r, 1e-9);
  EXPECT_NEAR(a.q_l_d, -b.q_l_d, 1e-9);
  EXPECT_NEAR(a.q_r_d, -b.q_r_d, 1e-9);
}

TEST(Allocation, MirroringForceAndTorqueSwapsRotors) {
  const PhysicalParams p;
  const AllocationSolution a = solve(6.0, 70.0, 2.0, p, SolverSettings{});
  const AllocationSolution b = solve(-6.0, 70.0, -2.0, p, SolverSettings{});
  ASSERT_TRUE(a.converged() && b.converged());
  EXPECT_NEAR(a.T_l, b.T_r, 1e-9);
  EXPECT_NEAR(a.T_r, b.T_l, 1e-9);
  EXPECT_NEAR(a.q_l_d, b.q_r_d, 1e-9);
  EXPECT_NEAR(a.q_r_d, b.q_l_d, 1e-9);
}

TEST(Allocation, NegativeVerticalDemand) {
  // A large negative pitch torque needs the right rotor to push downwards.
  const PhysicalParams p;
  const double ux = 3.0, uz = 68.6, tt = -40.0;
  const AllocationSolution literal =
      solve(ux, uz, tt, p, settings_for(AllocationBranch::kArctan));
  EXPECT_EQ(literal.status, AllocationStatus::kInfeasible);

  for (AllocationBranch b : {AllocationBranch::kSignedThrust, AllocationBranch::kFullCircle}) {
    const AllocationSolution s = solve(ux, uz, tt, p, settings_for(b));
    ASSERT_TRUE(s.converged()) << branch_name(b);
    const Vector3d w = approx_forward_map(s.T_l, s.T_r, s.q_l_d, s.q_r_d, 0.0, p);
    EXPECT_LT((w - Vector3d(ux, uz, tt)).lpNorm<Eigen::Infinity>(), 1e-9);
    const Vector2d dz = vertical_demand(s.q_l_d, s.q_r_d, uz, tt, p);
    EXPECT_LT(dz.minCoeff(), 0.0);
    if (b == AllocationBranch::kSignedThrust) {
      EXPECT_LT(std::min(s.T_l, s.T_r), 0.0);
      EXPECT_LT(std::max(std::abs(s.q_l_d), std::abs(s.q_r_d)), M_PI / 2);
    } else {
      EXPECT_GE(std::min(s.T_l, s.T_r), 0.0);
      EXPECT_GT(std::max(std::abs(s.q_l_d), std::abs(s.q_r_d)), M_PI / 2);
    }
  }
}

TEST(Allocation, BranchesAgreeForPositiveDemand) {
  const PhysicalParams p;
  const AllocationSolution ref = solve(4.0, 80.0, 1.5, p, settings_for(AllocationBranch::kArctan));
  ASSERT_TRUE(ref.converged());
  for (AllocationBranch b : kBranches) {
    const AllocationSolution s = solve(4.0, 80.0, 1.5, p, settings_for(b));
    EXPECT_LT((s.x() - ref.x()).lpNorm<Eigen::Infinity>(), 1e-9) << branch_name(b);
  }
}

TEST(Allocation, Deterministic) {
  const PhysicalParams p;
  const AllocationSolution a = solve(1.7, 64.2, -0.8, p, SolverSettings{});
  const AllocationSolution b = solve(1.7, 64.2, -0.8, p, SolverSettings{});
  const Vector4d xa = a.x(), xb = b.x();
  EXPECT_EQ(std::memcmp(xa.data(), xb.data(), sizeof(double) * 4), 0);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(std::memcmp(&a.residual_norm, &b.residual_norm, sizeof(double)), 0);
}

TEST(Allocation, SaturationIsFlaggedNotClipped) {
  const AllocationSolution s = solve(0.0, 500.0, 0.0, PhysicalParams{}, SolverSettings{});
  ASSERT_TRUE(s.converged());
  EXPECT_TRUE(s.thrust_saturated);
  EXPECT_NEAR(s.T_l, 250.0, 1e-6);
}

TEST(Allocation, IterationBudgetIsRespected) {
  SolverSettings st;
  st.max_iterations = 1;
  st.initial_guess = Vector4d(1.0, 1.0, 1.2, -1.3);
  const AllocationSolution s = solve(5.0, 70.0, 3.0, PhysicalParams{}, st);
  EXPECT_EQ(s.status, AllocationStatus::kNonConvergence);
  EXPECT_EQ(s.iterations, 1);
}

TEST(Allocation, WarmStartConvergesImmediately) {
  const PhysicalParams p;
  const AllocationSolution first = solve(3.0, 70.0, 1.0, p, SolverSettings{});
  SolverSettings warm;
  warm.initial_guess = first.x();
  const AllocationSolution again = solve(3.0, 70.0, 1.0, p, warm);
  EXPECT_TRUE(again.converged());
  EXPECT_EQ(again.iterations, 0);
}

TEST(Allocation, SettingsValidation) {
  SolverSettings s;
  EXPECT_NO_THROW(s.validate());
  s.tolerance = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = SolverSettings{};
  s.max_iterations = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = SolverSettings{};
  s.damping = 1.5;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(Allocation, BranchNames) {
  for (AllocationBranch b : kBranches) EXPECT_EQ(parse_branch(branch_name(b)), b);
  EXPECT_THROW(parse_branch("atan"), std::invalid_argument);
  EXPECT_STREQ(to_string(AllocationStatus::kInfeasible), "infeasible");
}

}  // namespace
}  // namespace soft_pvtol

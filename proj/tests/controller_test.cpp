#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "soft_pvtol/controller.hpp"
#include "soft_pvtol/simulator.hpp"

namespace soft_pvtol {
namespace {

constexpr KernelConfig kLimitMode{0.1, KernelMode::kConstantLimit};
constexpr KernelConfig kSeriesMode{0.1, KernelMode::kSeries};

TEST(Gains, DefaultsAndValidation) {
  const Gains g;
  EXPECT_DOUBLE_EQ(g.K(kTheta), 10.5);
  EXPECT_DOUBLE_EQ(g.Lambda(kQr), 10.0);
  EXPECT_NO_THROW(g.validate());
  Gains bad;
  bad.K(2) = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = Gains{};
  bad.Lambda(4) = -1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(TrackingControl, AtRestOnReferenceIsGravity) {
  const PhysicalParams p;
  GenState s;
  s.q << 1.0, 3.0, 0.2, 0.4, -0.7;
  ReferenceSample ref;
  ref.q = s.q;
  const Vector5d tau = tracking_control(s, ref, Gains{}, p, kLimitMode);
  EXPECT_LT((tau - gravity_vector<double>(s.q, p, kLimitMode)).lpNorm<Eigen::Infinity>(),
            1e-14);
}

TEST(TrackingControl, ZeroErrorIsInverseDynamics) {
  const PhysicalParams p;
  GenState s;
  s.q << 0.1, 2.0, -0.1, 0.9, -0.3;
  s.qdot << 0.3, -0.2, 0.1, 0.8, -0.5;
  ReferenceSample ref;
  ref.q = s.q;
  ref.qdot = s.qdot;
  ref.qddot << 0.5, -1.0, 0.2, 3.0, -2.0;
  const Vector5d tau = tracking_control(s, ref, Gains{}, p, kLimitMode);
  const Vector5d expected = mass_matrix<double>(s.q, p, kLimitMode) * ref.qddot +
                            coriolis_matrix<double>(s.q, s.qdot, p, kLimitMode) * s.qdot +
                            gravity_vector<double>(s.q, p, kLimitMode);
  EXPECT_LT((tau - expected).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(TrackingControl, SlidingVariable) {
  GenState s;
  s.q << 1, 1, 1, 1, 1;
  s.qdot << 2, 2, 2, 2, 2;
  ReferenceSample ref;
  const Gains g;
  const Vector5d r = sliding_variable(s, ref, g);
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(r(i), 2.0 + g.Lambda(i));
}

TEST(PoseReference, InitialValues) {
  const ReferenceSample ref = pose_reference(0.0);
  EXPECT_DOUBLE_EQ(ref.q(kX), 0.0);
  EXPECT_DOUBLE_EQ(ref.q(kZ), 7.0);
  EXPECT_DOUBLE_EQ(ref.q(kTheta), 0.0);
  EXPECT_DOUBLE_EQ(ref.qdot(kX), 2.0);
  EXPECT_DOUBLE_EQ(ref.qdot(kZ), 0.0);
  EXPECT_DOUBLE_EQ(ref.qddot(kZ), -0.03);
  EXPECT_EQ(ref.q(kQl), 0.0);
  EXPECT_EQ(ref.q(kQr), 0.0);
}

TEST(PoseReference, DerivativesAreConsistent) {
  const double h = 1e-5;
  for (double t : {0.3, 2.0, 7.5, 19.0, 33.3}) {
    const ReferenceSample a = pose_reference(t + h), b = pose_reference(t - h),
                          c = pose_reference(t);
    for (int i : {kX, kZ}) {
      EXPECT_NEAR((a.q(i) - b.q(i)) / (2 * h), c.qdot(i), 1e-8) << "t = " << t;
      EXPECT_NEAR((a.qdot(i) - b.qdot(i)) / (2 * h), c.qddot(i), 1e-8);
    }
  }
}

TEST(ArmRefFilter, StepReachesOneTimeConstant) {
  for (double h : {0.001, 0.01, 0.025}) {
    ArmRefFilter f(0.05);
    f.reset(Vector2d::Zero());
    const int n = static_cast<int>(std::lround(0.05 / h));
    for (int i = 0; i < n; ++i) f.update(Vector2d(1.0, -2.0), h);
    const double target = 1.0 - std::exp(-1.0);
    EXPECT_NEAR(f.value()(0), target, 0.05 * target) << "h = " << h;
    EXPECT_NEAR(f.value()(0), target, 1e-12) << "h = " << h;
    EXPECT_NEAR(f.value()(1), -2.0 * target, 1e-12);
  }
}

TEST(ArmRefFilter, RampRateConverges) {
  ArmRefFilter f(0.05);
  f.reset(Vector2d::Zero());
  const double h = 0.01, slope = 0.7;
  for (int k = 1; k <= 200; ++k) f.update(Vector2d(slope * k * h, -slope * k * h), h);
  EXPECT_NEAR(f.rate()(0), slope, 0.01 * slope);
  EXPECT_NEAR(f.rate()(1), -slope, 0.01 * slope);
  EXPECT_NEAR(f.acceleration()(0), 0.0, 1e-6);
}

TEST(ArmRefFilter, FirstSamplePassesThrough) {
  ArmRefFilter f;
  EXPECT_FALSE(f.initialized());
  f.update(Vector2d(0.3, -0.1), 0.01);
  EXPECT_TRUE(f.initialized());
  EXPECT_EQ(f.value(), Vector2d(0.3, -0.1));
  EXPECT_EQ(f.rate(), Vector2d::Zero());
  ReferenceSample ref;
  f.fill(ref);
  EXPECT_EQ(ref.q(kQl), 0.3);
  EXPECT_EQ(ref.q(kQr), -0.1);
  EXPECT_EQ(ref.q(kX), 0.0);
}

TEST(ArmRefFilter, RejectsBadArguments) {
  EXPECT_THROW(ArmRefFilter(0.0), std::invalid_argument);
  ArmRefFilter f;
  EXPECT_THROW(f.update(Vector2d::Zero(), 0.0), std::invalid_argument);
}

TEST(Lyapunov, ZeroAtZeroError) {
  const PhysicalParams p;
  GenState s;
  s.q << 1, 2, 0.1, 0.3, -0.3;
  s.qdot << 0.2, 0.1, 0, 0.5, 0.5;
  ReferenceSample ref;
  ref.q = s.q;
  ref.qdot = s.qdot;
  const LyapunovSample v = lyapunov_value(s, ref, Gains{}, p, kLimitMode);
  EXPECT_EQ(v.V, 0.0);
  EXPECT_TRUE(v.r.isZero(0.0));
}

TEST(Lyapunov, PositiveAwayFromZero) {
  const PhysicalParams p;
  GenState s;
  s.q(kX) = 0.1;
  EXPECT_GT(lyapunov_value(s, ReferenceSample{}, Gains{}, p, kLimitMode).V, 0.0);
}

TEST(DecayMatrix, UnitGains) {
  Gains g;
  g.K.setOnes();
  g.Lambda.setOnes();
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 10, 10>> es(decay_matrix(g));
  EXPECT_NEAR(es.eigenvalues().minCoeff(), (3.0 - std::sqrt(5.0)) / 2.0, 1e-14);
  EXPECT_NEAR(es.eigenvalues().maxCoeff(), (3.0 + std::sqrt(5.0)) / 2.0, 1e-14);
}

TEST(DecayMatrix, DeterminantIsProductOfBlocks) {
  const Gains g;
  // Each (K, K Lambda; K Lambda, 2 Lambda K Lambda) block has det k^2 lambda^2.
  double expected = 1.0;
  for (int i = 0; i < 5; ++i) expected *= std::pow(g.K(i) * g.Lambda(i), 2);
  EXPECT_NEAR(decay_matrix(g).determinant() / expected, 1.0, 1e-12);
}

std::vector<GenCoords> arm_grid(int n) {
  std::vector<GenCoords> out;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      GenCoords q = GenCoords::Zero();
      q(kQl) = -M_PI + 2 * M_PI * i / (n - 1);
      q(kQr) = -M_PI + 2 * M_PI * j / (n - 1);
      out.push_back(q);
    }
  }
  return out;
}

TEST(DecayRate, PositiveForDefaults) {
  const auto grid = arm_grid(41);
  const double rho = decay_rate_bound(Gains{}, PhysicalParams{}, grid, kLimitMode);
  EXPECT_GT(rho, 0.0);
  EXPECT_LT(rho, 1.0);
  EXPECT_THROW(decay_rate_bound(Gains{}, PhysicalParams{}, {}, kLimitMode),
               std::invalid_argument);
}

TEST(DecayRate, LargerGainsDoNotSlowDown) {
  const auto grid = arm_grid(11);
  Gains fast;
  fast.K *= 2.0;
  EXPECT_GE(decay_rate_bound(fast, PhysicalParams{}, grid),
            decay_rate_bound(Gains{}, PhysicalParams{}, grid));
}

TEST(ClosedLoop, ErrorDynamicsIdentity) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const PhysicalParams p;
  const Gains g;
  for (int i = 0; i < 500; ++i) {
    GenState s;
    ReferenceSample ref;
    for (int j = 0; j < 5; ++j) {
      s.q(j) = 2.5 * u(rng);
      s.qdot(j) = 3.0 * u(rng);
      ref.q(j) = 2.5 * u(rng);
      ref.qdot(j) = 3.0 * u(rng);
      ref.qddot(j) = 3.0 * u(rng);
    }
    for (const auto& cfg : {kLimitMode, kSeriesMode}) {
      const Vector5d tau = tracking_control(s, ref, g, p, cfg);
      const Vector5d a = forward_dynamics(s, tau, p, cfg);
      const Vector5d e = s.q - ref.q;
      const Vector5d r = sliding_variable(s, ref, g);
      const Vector5d r_dot = a - ref.qddot + g.Lambda.cwiseProduct(s.qdot - ref.qdot);
      const Matrix5d D = mass_matrix<double>(s.q, p, cfg);
      const Vector5d res = D * r_dot +
                           coriolis_matrix<double>(s.q, s.qdot, p, cfg) * r +
                           g.K.cwiseProduct(r);
      EXPECT_LT(res.lpNorm<Eigen::Infinity>(), 1e-8 * std::max(1.0, tau.norm()));

      const Vector5d e_dot = s.qdot - ref.qdot;
      const double v_dot =
          r.dot(D * r_dot) +
          0.5 * r.dot(mass_matrix_dot<double>(s.q, s.qdot, p, cfg) * r) +
          2.0 * e.dot(g.Lambda.cwiseProduct(g.K).cwiseProduct(e_dot));
      EXPECT_NEAR(v_dot, lyapunov_rate(r, e, g), 1e-8 * std::max(1.0, std::abs(v_dot)));
      EXPECT_LE(lyapunov_rate(r, e, g), 0.0);
    }
  }
}

TEST(ClosedLoop, GravityCompensationFixedPoint) {
  const PhysicalParams p;
  const Gains g;
  ReferenceSample ref;
  ref.q << 1.0, 2.0, 0.1, 0.3, -0.4;
  GenState s0;
  s0.q = ref.q;
  for (const auto& cfg : {kLimitMode, kSeriesMode}) {
    const SimResult run = run_open_loop(
        s0,
        [&](double, const GenState& s) { return tracking_control(s, ref, g, p, cfg); },
        p, cfg, 0.01, 1.0);
    double drift = 0.0;
    for (const auto& rec : run.records) {
      drift = std::max({drift, (rec.q - ref.q).lpNorm<Eigen::Infinity>(),
                        rec.qdot.lpNorm<Eigen::Infinity>()});
    }
    EXPECT_LT(drift, 1e-6);
  }
}

}  // namespace
}  // namespace soft_pvtol

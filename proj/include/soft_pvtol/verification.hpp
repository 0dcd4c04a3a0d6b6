#pragma once

/// @file
/// Seeded invariant suites over the model, controller and allocator. Each
/// suite reports its worst residual against a fixed tolerance.

#include <chrono>
#include <cstdio>
#include <cmath>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "soft_pvtol/allocation.hpp"
#include "soft_pvtol/controller.hpp"
#include "soft_pvtol/dynamics.hpp"
#include "soft_pvtol/kernels.hpp"
#include "soft_pvtol/simulator.hpp"

namespace soft_pvtol {

struct SuiteResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;      // worst residual, or worst margin for bounds
  double tolerance = 0.0;
  double seconds = 0.0;
  std::string detail = {};
};

struct VerifyOptions {
  unsigned seed = 42;
  PhysicalParams params;
  Gains gains;
  KernelConfig kernels;
};

namespace verify {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// |q| drawn from [lo, hi] with a random sign.
inline double signed_magnitude(Rng& rng, double lo, double hi) {
  const double m = uniform(rng, lo, hi);
  return std::bernoulli_distribution(0.5)(rng) ? m : -m;
}

inline GenState random_state(Rng& rng, double curv_lo, double curv_hi,
                             double speed) {
  GenState s;
  s.q(kX) = uniform(rng, -5.0, 5.0);
  s.q(kZ) = uniform(rng, -5.0, 5.0);
  s.q(kTheta) = uniform(rng, -M_PI, M_PI);
  s.q(kQl) = signed_magnitude(rng, curv_lo, curv_hi);
  s.q(kQr) = signed_magnitude(rng, curv_lo, curv_hi);
  for (int i = 0; i < 5; ++i) s.qdot(i) = uniform(rng, -speed, speed);
  return s;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline double inf_norm(const Matrix5d& A) {
  return A.cwiseAbs().rowwise().sum().maxCoeff();
}

inline constexpr KernelConfig kSmooth{0.1, KernelMode::kSeries};

/// Limit of f at 0 from one-sided samples by Richardson extrapolation on the
/// symmetric average, in long double.
inline long double extrapolated_limit(KernelKind kind) {
  auto avg = [kind](long double q) {
    return 0.5L * (closed_form<long double>(kind, q) +
                   closed_form<long double>(kind, -q));
  };
  const long double q = 1e-3L;
  return (4.0L * avg(q / 2) - avg(q)) / 3.0L;
}

// Pairs (f, f') with f' = sign * scale * g.
struct DerivativeRelation {
  KernelKind f;
  KernelKind df;
  double factor;
};

inline constexpr DerivativeRelation kDerivativeRelations[] = {
    {KernelKind::kD1, KernelKind::kC1, 1.0},
    {KernelKind::kD2, KernelKind::kC2, 1.0},
    {KernelKind::kD3, KernelKind::kC3, -1.0},
    {KernelKind::kD4, KernelKind::kC4, 1.0},
    {KernelKind::kD5, KernelKind::kC5, -4.0},
    {KernelKind::kD6, KernelKind::kC6, -4.0},
    {KernelKind::kBend, KernelKind::kGrav, 1.0},
};

}  // namespace verify

inline SuiteResult suite_parameters(const VerifyOptions& o) {
  SuiteResult r{"parameters"};
  const auto v = o.params.violations();
  r.passed = v.empty();
  if (v.empty()) {
    r.worst = std::min(o.params.minor4_margin(), o.params.det5_margin());
    r.detail = "minor4 margin " + std::to_string(o.params.minor4_margin()) +
               ", det5 margin " + std::to_string(o.params.det5_margin());
  } else {
    r.worst = -1.0;
    for (const auto& s : v) r.detail += (r.detail.empty() ? "" : "; ") + s;
  }
  return r;
}

inline SuiteResult suite_kernel_limits(const VerifyOptions&) {
  SuiteResult r{"kernel_limits", false, 0.0, 1e-9};
  for (KernelKind k : kAllKernels) {
    const double expected = static_cast<double>(verify::extrapolated_limit(k));
    r.worst = std::max({r.worst, std::abs(limit(k) - expected),
                        std::abs(series(k, 0.0) - expected)});
  }
  r.passed = r.worst < r.tolerance;
  return r;
}

inline SuiteResult suite_kernel_derivatives(const VerifyOptions& o) {
  SuiteResult r{"kernel_derivatives", false, 0.0, 1e-6};
  verify::Rng rng(o.seed ^ 0x6b65726eULL);
  const long double h = 1e-5L;
  for (int i = 0; i < 400; ++i) {
    const long double q = verify::signed_magnitude(rng, 0.0, M_PI);
    for (const auto& rel : verify::kDerivativeRelations) {
      auto f = [&](long double x) {
        return std::abs(x) < 0.1L ? series<long double>(rel.f, x)
                                  : closed_form<long double>(rel.f, x);
      };
      const long double fd = (f(q + h) - f(q - h)) / (2.0L * h);
      const double got = rel.factor * eval(rel.df, static_cast<double>(q),
                                            verify::kSmooth);
      r.worst = std::max(r.worst, std::abs(static_cast<double>(fd) - got));
    }
  }
  r.passed = r.worst < r.tolerance;
  return r;
}

inline SuiteResult suite_kernel_series(const VerifyOptions&) {
  SuiteResult r{"kernel_series", false, 0.0, 1e-13};
  for (KernelKind k : kAllKernels) {
    for (int i = -100; i <= 100; ++i) {
      const long double q = 0.15L * i / 100.0L;
      if (q == 0.0L) continue;
      const long double exact = closed_form<long double>(k, q);
      const double s = series(k, static_cast<double>(q));
      r.worst = std::max(r.worst, static_cast<double>(std::abs(s - exact)));
    }
  }
  r.passed = r.worst < r.tolerance;
  return r;
}

inline SuiteResult suite_positive_definite(const VerifyOptions& o) {
  SuiteResult r{"positive_definite", false, std::numeric_limits<double>::infinity(), 0.0};
  for (KernelMode mode : {KernelMode::kConstantLimit, KernelMode::kSeries}) {
    const KernelConfig cfg{o.kernels.delta, mode};
    for (int i = 0; i < 100; ++i) {
      for (int j = 0; j < 100; ++j) {
        GenCoords q = GenCoords::Zero();
        q(kQl) = -M_PI + 2.0 * M_PI * i / 99.0;
        q(kQr) = -M_PI + 2.0 * M_PI * j / 99.0;
        const Eigen::SelfAdjointEigenSolver<Matrix5d> es(
            mass_matrix<double>(q, o.params, cfg), Eigen::EigenvaluesOnly);
        r.worst = std::min(r.worst, es.eigenvalues().minCoeff());
      }
    }
  }
  r.passed = r.worst > r.tolerance;
  r.detail = "min eigenvalue of D over the grid (must exceed 0)";
  return r;
}

/// Analytic and finite-difference forms of D' - 2C against skew symmetry.
inline SuiteResult suite_skew_symmetry(const VerifyOptions& o,
                                SuiteResult* fd_result = nullptr) {
  SuiteResult r{"skew_symmetry", false, 0.0, 1e-9};
  SuiteResult fd{"skew_symmetry_fd", false, 0.0, 1e-5};
  verify::Rng rng(o.seed ^ 0x6c656d32ULL);
  const double h = 1e-6;
  for (int i = 0; i < 1000; ++i) {
    const GenState s = verify::random_state(rng, o.kernels.delta, M_PI, 5.0);
    const Matrix5d C = coriolis_matrix<double>(s.q, s.qdot, o.params, o.kernels);
    const Matrix5d S = mass_matrix_dot<double>(s.q, s.qdot, o.params, o.kernels) -
                       2.0 * C;
    r.worst = std::max(r.worst, verify::inf_norm(S + S.transpose()));
    const Matrix5d Dfd =
        (mass_matrix<double>(GenCoords(s.q + h * s.qdot), o.params, verify::kSmooth) -
         mass_matrix<double>(GenCoords(s.q - h * s.qdot), o.params, verify::kSmooth)) /
        (2.0 * h);
    const Matrix5d Cs = coriolis_matrix<double>(s.q, s.qdot, o.params, verify::kSmooth);
    const Matrix5d Sfd = Dfd - 2.0 * Cs;
    fd.worst = std::max(fd.worst, verify::inf_norm(Sfd + Sfd.transpose()));
  }
  r.passed = r.worst < r.tolerance;
  fd.passed = fd.worst < fd.tolerance;
  if (fd_result) *fd_result = fd;
  r.detail = "finite-difference form " + verify::fmt(fd.worst) +
             (fd.passed ? " (ok)" : " (FAILED)");
  r.passed = r.passed && fd.passed;
  return r;
}

inline SuiteResult suite_form_equivalence(const VerifyOptions& o) {
  SuiteResult r{"form_equivalence", false, 0.0, 1e-10};
  verify::Rng rng(o.seed ^ 0x666f726dULL);
  double worst_d = 0.0, worst_c = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const GenState s = verify::random_state(rng, 0.0, M_PI, 5.0);
    // The raw forms divide by up to q^5, so they are evaluated in long double
    // to keep their own rounding out of the comparison.
    const Vector5<long double> q = s.q.cast<long double>();
    const Vector5<long double> qd = s.qdot.cast<long double>();
    const Matrix5d D_raw =
        mass_matrix_raw<long double>(q, o.params, o.kernels).cast<double>();
    const Matrix5d C_raw =
        coriolis_matrix_expanded<long double>(q, qd, o.params, o.kernels)
            .cast<double>();
    worst_d = std::max(
        worst_d,
        (mass_matrix<double>(s.q, o.params, o.kernels) - D_raw).cwiseAbs().maxCoeff());
    worst_c = std::max(
        worst_c, (coriolis_matrix<double>(s.q, s.qdot, o.params, o.kernels) - C_raw)
                     .cwiseAbs()
                     .maxCoeff());
  }
  r.worst = std::max(worst_d, worst_c);
  r.passed = r.worst < r.tolerance;
  r.detail = "D " + verify::fmt(worst_d) + ", C " + verify::fmt(worst_c);
  return r;
}

inline SuiteResult suite_gravity_gradient(const VerifyOptions& o) {
  SuiteResult r{"gravity_gradient", false, 0.0, 1e-7};
  verify::Rng rng(o.seed ^ 0x67726176ULL);
  const long double h = 1e-6L;
  for (int i = 0; i < 500; ++i) {
    const GenState s = verify::random_state(rng, 0.0, M_PI, 0.0);
    const Vector5<long double> q = s.q.cast<long double>();
    const Vector5d g = gravity_vector<double>(s.q, o.params, verify::kSmooth);
    for (int j = 0; j < 5; ++j) {
      Vector5<long double> qp = q, qm = q;
      qp(j) += h;
      qm(j) -= h;
      const long double d =
          (potential_energy<long double>(qp, o.params, verify::kSmooth) -
           potential_energy<long double>(qm, o.params, verify::kSmooth)) /
          (2.0L * h);
      r.worst = std::max(r.worst, std::abs(static_cast<double>(d) - g(j)));
    }
  }
  r.passed = r.worst < r.tolerance;
  return r;
}

/// Mean tendon torque of the passivity probe. Below the straight-arm gravity
/// torque it balances gravity at a negative curvature where the arm
/// potential is convex, so the arms oscillate instead of winding up.
inline constexpr double kProbeArmTorque = 2.0;

/// Bounded sinusoidal generalized forces for the open-loop passivity run.
inline Vector5d passivity_probe_force(double t) {
  Vector5d tau;
  tau << 2.0 * std::sin(1.3 * t), 68.6 + 3.0 * std::sin(0.7 * t),
      0.5 * std::sin(2.1 * t), kProbeArmTorque + 0.2 * std::sin(1.7 * t),
      kProbeArmTorque + 0.2 * std::cos(1.1 * t);
  return tau;
}

/// Start near the arms' balance point under kProbeArmTorque.
inline GenState passivity_initial_state() {
  GenState s;
  s.q << 0.0, 1.0, 0.1, -0.8, -1.0;
  s.qdot << 0.2, -0.1, 0.3, 0.5, -0.4;
  return s;
}

struct PassivityReport {
  double forced_residual = 0.0;  // max |H - H0 - W| under the probe force
  double quadrature_residual = 0.0;  // the same with trapezoidal W
  double max_abs_curvature = 0.0;
  double free_drift = 0.0;       // max |H - H0| with tau = 0, g = 0
  double duration = 10.0;
};

inline PassivityReport passivity_check(const PhysicalParams& p,
                                       double duration = 10.0,
                                       double h = 0.01) {
  PassivityReport rep;
  rep.duration = duration;
  const auto forced = run_open_loop(
      passivity_initial_state(),
      [](double t, const GenState&) { return passivity_probe_force(t); }, p,
      verify::kSmooth, h, duration);
  const EnergyAudit audit = energy_audit(forced);
  rep.forced_residual = audit.integrated_residual;
  rep.quadrature_residual = audit.quadrature_residual;
  for (const auto& rec : forced.records) {
    rep.max_abs_curvature = std::max(
        {rep.max_abs_curvature, std::abs(rec.q(kQl)), std::abs(rec.q(kQr))});
  }
  const auto free = run_open_loop(
      passivity_initial_state(),
      [](double, const GenState&) { return Vector5d::Zero().eval(); },
      zero_gravity(p), verify::kSmooth, h, duration);
  for (const auto& rec : free.records) {
    rep.free_drift =
        std::max(rep.free_drift, std::abs(rec.H - free.records.front().H));
  }
  return rep;
}

inline SuiteResult suite_passivity(const VerifyOptions& o) {
  SuiteResult r{"passivity", false, 0.0, 1e-4};
  const PassivityReport rep = passivity_check(o.params);
  r.worst = rep.forced_residual / rep.duration;
  r.passed = r.worst <= r.tolerance && rep.free_drift <= 1e-8 &&
             rep.max_abs_curvature < M_PI;
  r.detail = "free drift " + verify::fmt(rep.free_drift) +
             " (limit 1e-8), max |q_arm| " + verify::fmt(rep.max_abs_curvature);
  return r;
}

/// D r' + C r + K r = 0 and the Lyapunov rate identity at random states
/// under the ideal control law.
inline SuiteResult suite_closed_loop_identity(const VerifyOptions& o) {
  SuiteResult r{"closed_loop_identity", false, 0.0, 1e-8};
  verify::Rng rng(o.seed ^ 0x636c6f73ULL);
  double worst_rate = 0.0;
  for (int i = 0; i < 500; ++i) {
    const GenState s = verify::random_state(rng, 0.0, 2.0, 2.0);
    ReferenceSample ref;
    const GenState d = verify::random_state(rng, 0.0, 2.0, 2.0);
    ref.q = d.q;
    ref.qdot = d.qdot;
    for (int j = 0; j < 5; ++j) ref.qddot(j) = verify::uniform(rng, -1.0, 1.0);
    const Vector5d tau = tracking_control(s, ref, o.gains, o.params, o.kernels);
    const Vector5d qdd = forward_dynamics(s, tau, o.params, o.kernels);
    const Vector5d e = s.q - ref.q, e_dot = s.qdot - ref.qdot;
    const Vector5d rv = sliding_variable(s, ref, o.gains);
    const Vector5d r_dot = qdd - ref.qddot + o.gains.Lambda.cwiseProduct(e_dot);
    const Matrix5d D = mass_matrix<double>(s.q, o.params, o.kernels);
    const Matrix5d C = coriolis_matrix<double>(s.q, s.qdot, o.params, o.kernels);
    const Vector5d res = D * r_dot + C * rv + o.gains.K.cwiseProduct(rv);
    r.worst = std::max(r.worst, res.lpNorm<Eigen::Infinity>() /
                                    std::max(1.0, tau.lpNorm<Eigen::Infinity>()));
    const Matrix5d Dd = mass_matrix_dot<double>(s.q, s.qdot, o.params, o.kernels);
    const double v_dot =
        rv.dot(D * r_dot) + 0.5 * rv.dot(Dd * rv) +
        2.0 * e_dot.dot(o.gains.Lambda.cwiseProduct(o.gains.K).cwiseProduct(e));
    const double expected = lyapunov_rate(rv, e, o.gains);
    worst_rate = std::max(
        worst_rate, std::abs(v_dot - expected) / std::max(1.0, std::abs(expected)));
  }
  r.worst = std::max(r.worst, worst_rate);
  r.passed = r.worst < r.tolerance;
  r.detail = "Lyapunov rate identity " + verify::fmt(worst_rate);
  return r;
}

inline SuiteResult suite_allocation_round_trip(const VerifyOptions& o) {
  SuiteResult r{"allocation_round_trip", false, 0.0, 1e-8};
  verify::Rng rng(o.seed ^ 0x616c6c6fULL);
  SolverSettings settings;
  int converged = 0;
  for (int i = 0; i < 300; ++i) {
    const double ux = verify::uniform(rng, -20.0, 20.0);
    const double uz = verify::uniform(rng, 40.0, 100.0);
    const double tt = verify::uniform(rng, -5.0, 5.0);
    const AllocationSolution sol = solve(ux, uz, tt, o.params, settings);
    if (!sol.converged()) continue;
    ++converged;
    const Vector3d back =
        approx_forward_map(sol.T_l, sol.T_r, sol.q_l_d, sol.q_r_d, 0.0, o.params);
    r.worst = std::max(r.worst, (back - Vector3d(ux, uz, tt)).lpNorm<Eigen::Infinity>());
  }
  r.passed = r.worst < r.tolerance && converged == 300;
  r.detail = std::to_string(converged) + "/300 converged";
  return r;
}

inline std::vector<SuiteResult> run_all_suites(const VerifyOptions& o) {
  using Suite = std::function<SuiteResult(const VerifyOptions&)>;
  const std::vector<std::pair<std::string, Suite>> suites = {
      {"parameters", suite_parameters},
      {"kernel_limits", suite_kernel_limits},
      {"kernel_derivatives", suite_kernel_derivatives},
      {"kernel_series", suite_kernel_series},
      {"positive_definite", suite_positive_definite},
      {"skew_symmetry", [](const VerifyOptions& v) { return suite_skew_symmetry(v); }},
      {"form_equivalence", suite_form_equivalence},
      {"gravity_gradient", suite_gravity_gradient},
      {"passivity", suite_passivity},
      {"closed_loop_identity", suite_closed_loop_identity},
      {"allocation_round_trip", suite_allocation_round_trip},
  };
  std::vector<SuiteResult> out;
  for (const auto& [name, fn] : suites) {
    const auto t0 = std::chrono::steady_clock::now();
    SuiteResult r;
    try {
      r = fn(o);
    } catch (const std::exception& e) {
      r = SuiteResult{name, false, std::numeric_limits<double>::quiet_NaN(), 0.0};
      r.detail = std::string("threw: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
    out.push_back(std::move(r));
  }
  return out;
}

/// One line per suite; timings are left out so output is reproducible.
inline void print_suites(std::ostream& os, const std::vector<SuiteResult>& rs) {
  char buf[256];
  for (const auto& r : rs) {
    std::snprintf(buf, sizeof buf, "%-4s %-22s worst %-12.6g tol %-8.3g",
                  r.passed ? "PASS" : "FAIL", r.name.c_str(), r.worst,
                  r.tolerance);
    os << buf;
    if (!r.detail.empty()) os << "  " << r.detail;
    os << '\n';
  }
}

}  // namespace soft_pvtol

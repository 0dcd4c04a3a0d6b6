#pragma once

/// @file
/// Fixed-step closed-loop simulation of controller, allocation and plant,
/// with per-step telemetry and an energy audit.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "soft_pvtol/allocation.hpp"
#include "soft_pvtol/controller.hpp"
#include "soft_pvtol/dynamics.hpp"
#include "soft_pvtol/integrator.hpp"

namespace soft_pvtol {

enum class ReferenceMode { kPaperTrajectory, kPrescribedSmooth, kHover };

inline constexpr std::string_view reference_mode_name(ReferenceMode m) {
  switch (m) {
    case ReferenceMode::kPaperTrajectory: return "PAPER_TRAJECTORY";
    case ReferenceMode::kPrescribedSmooth: return "PRESCRIBED_SMOOTH";
    case ReferenceMode::kHover: return "HOVER";
  }
  return "UNKNOWN";
}

inline ReferenceMode parse_reference_mode(std::string_view name) {
  if (name == "PAPER_TRAJECTORY") return ReferenceMode::kPaperTrajectory;
  if (name == "PRESCRIBED_SMOOTH") return ReferenceMode::kPrescribedSmooth;
  if (name == "HOVER") return ReferenceMode::kHover;
  throw std::invalid_argument("unknown reference mode '" + std::string(name) +
                              "' (expected PAPER_TRAJECTORY, PRESCRIBED_SMOOTH "
                              "or HOVER)");
}

inline GenState paper_initial_state() {
  GenState s;
  s.q << 5.0, 0.0, 0.2 * M_PI, 0.01 * M_PI, -0.15 * M_PI;
  return s;
}

struct SimConfig {
  double t_end = 40.0;
  double h = 0.01;
  GenState initial = paper_initial_state();
  PhysicalParams params;
  Gains gains;
  KernelConfig kernels;
  SolverSettings solver;
  double arm_filter_tau = 0.05;  // [s]
  ReferenceMode reference = ReferenceMode::kPaperTrajectory;
  // Feed the controller's tau straight to the plant instead of the wrench
  // rebuilt from the solved actuators.
  bool ideal_wrench = false;
  // Amplitude and angular frequency of the analytic arm references used by
  // PRESCRIBED_SMOOTH: q_l^d = a sin(w t), q_r^d = -a sin(w t).
  double smooth_arm_amplitude = 0.3;
  double smooth_arm_frequency = 0.5;
  std::string output_path = "soft_pvtol_log.csv";

  long steps() const { return std::lround(t_end / h); }

  void validate() const {
    if (!(h > 0.0) || !std::isfinite(h)) {
      throw std::invalid_argument("sim.h must be positive");
    }
    if (!(t_end >= h) || !std::isfinite(t_end)) {
      throw std::invalid_argument("sim.t_end must be at least sim.h");
    }
    if (std::abs(steps() * h - t_end) > 1e-9 * t_end) {
      throw std::invalid_argument("sim.t_end must be a whole number of steps");
    }
    if (!(arm_filter_tau > 0.0)) {
      throw std::invalid_argument("sim.arm_filter_tau must be positive");
    }
    if (!initial.q.allFinite() || !initial.qdot.allFinite()) {
      throw std::invalid_argument("initial state must be finite");
    }
    if (!(std::abs(initial.q(kQl)) < M_PI && std::abs(initial.q(kQr)) < M_PI)) {
      throw std::invalid_argument(
          "initial curvatures must satisfy |q_l|, |q_r| < pi");
    }
    params.validate();
    gains.validate();
    kernels.validate();
    solver.validate();
  }
};

/// Allocation outcome recorded per step. kBypassed marks runs that skip the
/// allocator; kReused marks steps that fell back to the previous solution.
enum class AllocationFlag : int { kOk = 0, kReused = 1, kBypassed = 2 };

struct LogRecord {
  double t = 0.0;
  Vector5d q = Vector5d::Zero();
  Vector5d qdot = Vector5d::Zero();
  Vector5d q_d = Vector5d::Zero();
  Vector5d tau = Vector5d::Zero();      // applied to the plant
  Vector5d tau_cmd = Vector5d::Zero();  // controller output
  double T_l = 0.0;
  double T_r = 0.0;
  double q_l_d = 0.0;
  double q_r_d = 0.0;
  double V = 0.0;
  double H = 0.0;
  double W = 0.0;  // work supplied since t = 0, integrated with the state
  double alloc_residual = 0.0;
  int alloc_iterations = 0;
  AllocationStatus alloc_status = AllocationStatus::kConverged;
  AllocationFlag alloc_flag = AllocationFlag::kOk;
};

/// How the applied force varies inside a step.
enum class ForceProfile {
  kSampleAndHold,  // tau of record k acts on [t_k, t_k+1)
  kContinuous,     // tau is re-evaluated at each integrator stage
};

struct SimResult {
  std::vector<LogRecord> records;
  ForceProfile profile = ForceProfile::kSampleAndHold;
  double h = 0.0;
};

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

using AugmentedVector = Eigen::Matrix<double, 11, 1>;

inline AugmentedVector augment(const GenState& s, double W) {
  AugmentedVector y;
  y << s.q, s.qdot, W;
  return y;
}

inline GenState state_of(const AugmentedVector& y) {
  return GenState{y.segment<5>(0), y.segment<5>(5)};
}

/// Advances (q, q', W) by one step with force tau_fn(t, state).
template <typename TauFn>
AugmentedVector advance(const AugmentedVector& y, double t, double h,
                        const PhysicalParams& p, const KernelConfig& cfg,
                        TauFn&& tau_fn) {
  return rk4_step(y, t, h, [&](double ts, const AugmentedVector& z) {
    const GenState s = state_of(z);
    const Vector5d tau = tau_fn(ts, s);
    const Vector5d a = forward_dynamics(s, tau, p, cfg);
    if (!a.allFinite()) throw IntegrationError("non-finite acceleration");
    AugmentedVector dz;
    dz << s.qdot, a, s.qdot.dot(tau);
    return dz;
  });
}

}  // namespace detail

/// Full 5-DOF reference for PRESCRIBED_SMOOTH: the pose reference with
/// analytic arm curvatures.
inline ReferenceSample smooth_reference(double t, double amplitude,
                                        double frequency) {
  ReferenceSample ref = pose_reference(t);
  const double s = std::sin(frequency * t), c = std::cos(frequency * t);
  const double w = frequency;
  ref.q(kQl) = amplitude * s;
  ref.qdot(kQl) = amplitude * w * c;
  ref.qddot(kQl) = -amplitude * w * w * s;
  ref.q(kQr) = -ref.q(kQl);
  ref.qdot(kQr) = -ref.qdot(kQl);
  ref.qddot(kQr) = -ref.qddot(kQl);
  return ref;
}

/// Constant pose held by the HOVER reference: the initial position at zero
/// pitch.
inline ReferenceSample hover_reference(const GenState& initial) {
  ReferenceSample ref;
  ref.q(kX) = initial.q(kX);
  ref.q(kZ) = initial.q(kZ);
  return ref;
}

/// Runs the closed loop and returns one record per time step, t = 0 .. t_end.
///
/// Per step: pose reference; arm references from the filter state; controller
/// tau; body virtual inputs; allocation warm-started from the previous
/// solution; filter update; RK4 with the applied force held over the step.
/// PRESCRIBED_SMOOTH instead evaluates the controller at every RK4 stage
/// against an analytic reference and never calls the allocator.
inline SimResult run_closed_loop(const SimConfig& cfg) {
  cfg.validate();
  const PhysicalParams& p = cfg.params;
  const KernelConfig& kc = cfg.kernels;
  const long n = cfg.steps();
  const double h = cfg.h;

  SimResult result;
  result.h = h;
  result.records.reserve(static_cast<std::size_t>(n + 1));

  const bool smooth = cfg.reference == ReferenceMode::kPrescribedSmooth;
  result.profile =
      smooth ? ForceProfile::kContinuous : ForceProfile::kSampleAndHold;

  auto smooth_ref = [&](double t) {
    return smooth_reference(t, cfg.smooth_arm_amplitude,
                            cfg.smooth_arm_frequency);
  };

  ArmRefFilter filter(cfg.arm_filter_tau);
  filter.reset(Vector2d(cfg.initial.q(kQl), cfg.initial.q(kQr)));
  AllocationSolution previous;
  bool have_previous = false;
  SolverSettings solver = cfg.solver;

  detail::AugmentedVector y = detail::augment(cfg.initial, 0.0);

  for (long k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * h;
    const GenState s = detail::state_of(y);

    LogRecord rec;
    rec.t = t;
    rec.q = s.q;
    rec.qdot = s.qdot;
    rec.W = y(10);

    ReferenceSample ref;
    if (smooth) {
      ref = smooth_ref(t);
    } else {
      ref = cfg.reference == ReferenceMode::kHover ? hover_reference(cfg.initial)
                                                   : pose_reference(t);
      filter.fill(ref);
    }
    rec.q_d = ref.q;
    rec.tau_cmd = tracking_control(s, ref, cfg.gains, p, kc);

    if (smooth) {
      rec.tau = rec.tau_cmd;
      rec.alloc_flag = AllocationFlag::kBypassed;
      rec.q_l_d = ref.q(kQl);
      rec.q_r_d = ref.q(kQr);
    } else {
      WrenchCommand cmd{rec.tau_cmd(kX), rec.tau_cmd(kZ), rec.tau_cmd(kTheta),
                        s.q(kTheta)};
      if (have_previous) solver.initial_guess = previous.x();
      AllocationSolution sol = solve(cmd, p, solver);
      rec.alloc_residual = sol.residual_norm;
      rec.alloc_iterations = sol.iterations;
      rec.alloc_status = sol.status;
      if (!sol.converged()) {
        if (!have_previous) {
          throw SimulationError(
              std::string("allocation failed at t = 0 (") +
              to_string(sol.status) + ", residual " +
              std::to_string(sol.residual_norm) + ")");
        }
        rec.alloc_flag = AllocationFlag::kReused;
        sol = previous;
      }
      previous = sol;
      have_previous = true;
      rec.T_l = sol.T_l;
      rec.T_r = sol.T_r;
      rec.q_l_d = sol.q_l_d;
      rec.q_r_d = sol.q_r_d;
      filter.update(Vector2d(sol.q_l_d, sol.q_r_d), h);

      if (cfg.ideal_wrench) {
        rec.tau = rec.tau_cmd;
      } else {
        const Vector3d w = exact_forward_map(sol.T_l, sol.T_r, sol.q_l_d,
                                             sol.q_r_d, s.q(kTheta), p);
        rec.tau << w(0), w(1), w(2), rec.tau_cmd(kQl), rec.tau_cmd(kQr);
      }
    }

    rec.V = lyapunov_value(s, ref, cfg.gains, p, kc).V;
    rec.H = total_energy(s, p, kc);
    result.records.push_back(rec);

    if (k == n) break;
    try {
      if (smooth) {
        y = detail::advance(y, t, h, p, kc, [&](double ts, const GenState& st) {
          return tracking_control(st, smooth_ref(ts), cfg.gains, p, kc);
        });
      } else {
        const Vector5d tau = rec.tau;
        y = detail::advance(y, t, h, p, kc,
                            [&](double, const GenState&) { return tau; });
      }
    } catch (const std::exception& e) {
      throw SimulationError("integration failed at t = " + std::to_string(t) +
                            ": " + e.what());
    }
  }
  return result;
}

/// Open-loop run under a prescribed force tau_fn(t, state), re-evaluated at
/// every integrator stage. Fields that belong to the closed loop stay zero.
template <typename TauFn>
SimResult run_open_loop(const GenState& initial, TauFn&& tau_fn,
                        const PhysicalParams& p, const KernelConfig& kc,
                        double h, double t_end) {
  if (!(h > 0.0) || !(t_end >= h)) {
    throw std::invalid_argument("open-loop run needs 0 < h <= t_end");
  }
  const long n = std::lround(t_end / h);
  SimResult result;
  result.h = h;
  result.profile = ForceProfile::kContinuous;
  result.records.reserve(static_cast<std::size_t>(n + 1));
  detail::AugmentedVector y = detail::augment(initial, 0.0);
  for (long k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * h;
    const GenState s = detail::state_of(y);
    LogRecord rec;
    rec.t = t;
    rec.q = s.q;
    rec.qdot = s.qdot;
    rec.tau = tau_fn(t, s);
    rec.tau_cmd = rec.tau;
    rec.H = total_energy(s, p, kc);
    rec.W = y(10);
    rec.alloc_flag = AllocationFlag::kBypassed;
    result.records.push_back(rec);
    if (k == n) break;
    y = detail::advance(y, t, h, p, kc, tau_fn);
  }
  return result;
}

struct EnergyAudit {
  // max_k |H_k - H_0 - W_k| with W by quadrature over the log.
  double quadrature_residual = 0.0;
  // The same with W integrated alongside the state.
  double integrated_residual = 0.0;
  double duration = 0.0;

  double quadrature_rate() const {
    return duration > 0.0 ? quadrature_residual / duration : 0.0;
  }
  double integrated_rate() const {
    return duration > 0.0 ? integrated_residual / duration : 0.0;
  }
};

/// Compares energy differences against the supplied work. For
/// sample-and-hold runs the force is constant on each step and its work is
/// exactly tau_k^T (q_k+1 - q_k); otherwise q'^T tau is integrated by the
/// trapezoidal rule.
inline EnergyAudit energy_audit(const SimResult& result) {
  EnergyAudit out;
  const auto& r = result.records;
  if (r.empty()) return out;
  out.duration = r.back().t - r.front().t;
  double W = 0.0;
  for (std::size_t k = 1; k < r.size(); ++k) {
    const double dt = r[k].t - r[k - 1].t;
    if (result.profile == ForceProfile::kSampleAndHold) {
      W += (r[k].q - r[k - 1].q).dot(r[k - 1].tau);
    } else {
      W += 0.5 * dt * (r[k - 1].qdot.dot(r[k - 1].tau) + r[k].qdot.dot(r[k].tau));
    }
    const double dH = r[k].H - r.front().H;
    out.quadrature_residual = std::max(out.quadrature_residual, std::abs(dH - W));
    out.integrated_residual =
        std::max(out.integrated_residual, std::abs(dH - (r[k].W - r.front().W)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV output

namespace detail {

inline void append_number(std::string& line, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  line += buf;
}

}  // namespace detail

inline std::string csv_header() {
  std::string h = "t";
  const char* names[5] = {"x", "z", "theta", "q_l", "q_r"};
  for (const char* suffix : {"", "_dot", "_ref", "_tau", "_tau_cmd"}) {
    for (const char* n : names) {
      h += ',';
      h += n;
      h += suffix;
    }
  }
  h += ",T_l,T_r,q_l_d,q_r_d,V,H,W,alloc_residual,alloc_iterations,"
       "alloc_status,alloc_flag";
  return h;
}

inline std::string csv_row(const LogRecord& r) {
  std::string line;
  line.reserve(640);
  detail::append_number(line, r.t);
  for (const Vector5d* v : {&r.q, &r.qdot, &r.q_d, &r.tau, &r.tau_cmd}) {
    for (int i = 0; i < 5; ++i) {
      line += ',';
      detail::append_number(line, (*v)(i));
    }
  }
  for (double v : {r.T_l, r.T_r, r.q_l_d, r.q_r_d, r.V, r.H, r.W,
                   r.alloc_residual}) {
    line += ',';
    detail::append_number(line, v);
  }
  line += ',' + std::to_string(r.alloc_iterations);
  line += ',' + std::to_string(static_cast<int>(r.alloc_status));
  line += ',' + std::to_string(static_cast<int>(r.alloc_flag));
  return line;
}

inline void write_csv(std::ostream& os, const std::vector<LogRecord>& records) {
  os << csv_header() << '\n';
  for (const auto& r : records) os << csv_row(r) << '\n';
}

inline void write_csv(const std::string& path,
                      const std::vector<LogRecord>& records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(os, records);
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// Summary

struct RunSummary {
  std::size_t records = 0;
  Vector5d final_error = Vector5d::Zero();
  double max_abs_theta = 0.0;
  double max_abs_curvature = 0.0;
  double energy_residual = 0.0;       // quadrature audit
  double energy_residual_rate = 0.0;  // per unit time
  double mean_alloc_iterations = 0.0;
  std::size_t reused_allocations = 0;
  double final_T_l = 0.0;
  double final_T_r = 0.0;
};

/// Everything here is recomputable from the log alone.
inline RunSummary summarize(const SimResult& result) {
  RunSummary s;
  const auto& r = result.records;
  s.records = r.size();
  if (r.empty()) return s;
  s.final_error = r.back().q - r.back().q_d;
  long solved = 0, iterations = 0;
  for (const auto& rec : r) {
    s.max_abs_theta = std::max(s.max_abs_theta, std::abs(rec.q(kTheta)));
    s.max_abs_curvature = std::max(
        {s.max_abs_curvature, std::abs(rec.q(kQl)), std::abs(rec.q(kQr))});
    if (rec.alloc_flag != AllocationFlag::kBypassed) {
      ++solved;
      iterations += rec.alloc_iterations;
    }
    if (rec.alloc_flag == AllocationFlag::kReused) ++s.reused_allocations;
  }
  s.mean_alloc_iterations =
      solved > 0 ? static_cast<double>(iterations) / solved : 0.0;
  const EnergyAudit audit = energy_audit(result);
  s.energy_residual = audit.quadrature_residual;
  s.energy_residual_rate = audit.quadrature_rate();
  s.final_T_l = r.back().T_l;
  s.final_T_r = r.back().T_r;
  return s;
}

inline void write_summary(std::ostream& os, const RunSummary& s) {
  char buf[160];
  auto line = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof buf, fmt, args...);
    os << buf << '\n';
  };
  line("records                 %zu", s.records);
  line("final error x           %.9g m", s.final_error(kX));
  line("final error z           %.9g m", s.final_error(kZ));
  line("final error theta       %.9g rad", s.final_error(kTheta));
  line("final error q_l         %.9g rad", s.final_error(kQl));
  line("final error q_r         %.9g rad", s.final_error(kQr));
  line("max |theta|             %.9g rad", s.max_abs_theta);
  line("max |q_l|, |q_r|        %.9g rad", s.max_abs_curvature);
  line("energy audit residual   %.9g J (%.9g J/s)", s.energy_residual,
       s.energy_residual_rate);
  line("mean alloc iterations   %.6f", s.mean_alloc_iterations);
  line("reused allocations      %zu", s.reused_allocations);
  line("final T_l               %.9f N", s.final_T_l);
  line("final T_r               %.9f N", s.final_T_r);
}

}  // namespace soft_pvtol

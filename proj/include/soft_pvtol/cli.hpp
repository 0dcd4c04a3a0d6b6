#pragma once

/// @file
/// The three batch commands behind the `soft_pvtol` executable. Each writes to
/// caller-supplied streams and returns the process exit code.

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "soft_pvtol/config.hpp"
#include "soft_pvtol/kernels.hpp"
#include "soft_pvtol/simulator.hpp"
#include "soft_pvtol/verification.hpp"

namespace soft_pvtol::cli {

enum ExitCode : int {
  kOk = 0,
  kVerifyFailed = 1,
  kConfigError = 2,
  kSimulationError = 3,
};

struct SimulateOptions {
  std::string config_path;  // empty: all defaults
  std::string output_path;  // empty: from the config
  std::optional<KernelMode> mode;
  bool ideal_wrench = false;
};

inline std::string summary_path(const std::string& csv_path) {
  return csv_path + ".summary.txt";
}

/// Loads the config, validates it collecting every violated invariant, and
/// applies command-line overrides.
inline SimConfig resolve_config(const std::string& path,
                                std::optional<KernelMode> mode) {
  SimConfig cfg = path.empty() ? SimConfig{} : load_config(path);
  if (mode) cfg.kernels.mode = *mode;
  const auto bad = cfg.params.violations();
  if (!bad.empty()) {
    std::string msg;
    for (const auto& b : bad) msg += (msg.empty() ? "" : "; ") + b;
    throw ConfigError(msg);
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline int simulate(const SimulateOptions& opt, std::ostream& out,
                    std::ostream& err) {
  SimConfig cfg;
  try {
    cfg = resolve_config(opt.config_path, opt.mode);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  if (opt.ideal_wrench) cfg.ideal_wrench = true;
  if (!opt.output_path.empty()) cfg.output_path = opt.output_path;

  SimResult result;
  try {
    result = run_closed_loop(cfg);
  } catch (const std::exception& e) {
    err << "simulation failed: " << e.what() << '\n';
    return kSimulationError;
  }
  try {
    write_csv(cfg.output_path, result.records);
    const RunSummary summary = summarize(result);
    std::ofstream sf(summary_path(cfg.output_path), std::ios::binary);
    if (!sf) {
      throw std::runtime_error("cannot write " + summary_path(cfg.output_path));
    }
    out << "reference               " << reference_mode_name(cfg.reference)
        << "\nkernel mode             " << kernel_mode_name(cfg.kernels.mode)
        << "\nwrench                  "
        << (cfg.ideal_wrench ? "ideal" : "reconstructed") << "\n";
    write_summary(out, summary);
    write_summary(sf, summary);
  } catch (const std::exception& e) {
    err << "output failed: " << e.what() << '\n';
    return kSimulationError;
  }
  return kOk;
}

struct VerifyCommandOptions {
  unsigned seed = 42;
  std::string config_path;
  std::optional<KernelMode> mode;
};

/// Runs every suite. Parameters come from the config file if given; invalid
/// parameters are reported by the parameter suite rather than rejected.
inline int verify(const VerifyCommandOptions& opt, std::ostream& out,
                  std::ostream& err) {
  VerifyOptions vo;
  vo.seed = opt.seed;
  if (!opt.config_path.empty()) {
    try {
      const SimConfig cfg = load_config(opt.config_path);
      vo.params = cfg.params;
      vo.gains = cfg.gains;
      vo.kernels = cfg.kernels;
    } catch (const std::exception& e) {
      err << "config error: " << e.what() << '\n';
      return kConfigError;
    }
  }
  if (opt.mode) vo.kernels.mode = *opt.mode;
  out << "seed " << vo.seed << ", kernel mode "
      << kernel_mode_name(vo.kernels.mode) << '\n';
  const auto results = run_all_suites(vo);
  print_suites(out, results);
  bool ok = true;
  for (const auto& r : results) ok = ok && r.passed;
  out << (ok ? "all suites passed" : "one or more suites FAILED") << '\n';
  return ok ? kOk : kVerifyFailed;
}

struct KernelTableOptions {
  double q_min = -M_PI;
  double q_max = M_PI;
  int samples = 629;
  double delta = 0.1;
  bool with_approx = false;  // extra cos(q/2) column
};

/// Throws std::invalid_argument on a bad range.
inline void validate(const KernelTableOptions& o) {
  if (!(o.q_min < o.q_max) || !std::isfinite(o.q_min) ||
      !std::isfinite(o.q_max)) {
    throw std::invalid_argument("q-min must be less than q-max");
  }
  if (o.samples < 2) throw std::invalid_argument("samples must be at least 2");
  KernelConfig{o.delta, KernelMode::kSeries}.validate();
}

/// Sample i of n on [a, b], written so a symmetric range hits 0 exactly.
inline double grid_point(double a, double b, int i, int n) {
  return ((n - 1 - i) * a + i * b) / (n - 1);
}

inline void write_kernel_table(std::ostream& os, const KernelTableOptions& o) {
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::string line = "q";
  for (KernelMode mode : {KernelMode::kConstantLimit, KernelMode::kSeries}) {
    for (KernelKind k : kAllKernels) {
      line += ',';
      line += kernel_name(k);
      line += '_';
      line += kernel_mode_name(mode);
    }
  }
  if (o.with_approx) line += ",COS_HALF";
  os << line << '\n';
  for (int i = 0; i < o.samples; ++i) {
    const double q = grid_point(o.q_min, o.q_max, i, o.samples);
    line = num(q);
    for (KernelMode mode : {KernelMode::kConstantLimit, KernelMode::kSeries}) {
      const KernelConfig cfg{o.delta, mode};
      for (KernelKind k : kAllKernels) line += ',' + num(eval(k, q, cfg));
    }
    if (o.with_approx) line += ',' + num(std::cos(0.5 * q));
    os << line << '\n';
  }
}

inline void write_limit_table(std::ostream& os) {
  char buf[64];
  os << "kernel,limit\n";
  for (const auto& [kind, value] : limit_table()) {
    std::snprintf(buf, sizeof buf, ",%.17g", value);
    os << kernel_name(kind) << buf << '\n';
  }
}

/// Sample table on `out` followed by a blank line and the limit table, unless
/// `limits` is given, in which case the limit table goes there.
inline int kernels(const KernelTableOptions& opt, std::ostream& out,
                   std::ostream& err, std::ostream* limits = nullptr) {
  try {
    validate(opt);
  } catch (const std::exception& e) {
    err << "bad range: " << e.what() << '\n';
    return kConfigError;
  }
  write_kernel_table(out, opt);
  if (limits) {
    write_limit_table(*limits);
  } else {
    out << '\n';
    write_limit_table(out);
  }
  return kOk;
}

}  // namespace soft_pvtol::cli

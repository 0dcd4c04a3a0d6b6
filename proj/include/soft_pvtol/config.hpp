#pragma once

/// @file
/// Plain-text `key = value` configuration for SimConfig. Lines starting with
/// '#' (or the remainder after one) are comments. Keys are dot-separated field
/// paths with 1-based indices, e.g. `gains.K.3 = 10.5`. Unknown keys are
/// errors; missing keys keep their defaults.

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "soft_pvtol/simulator.hpp"

namespace soft_pvtol {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

inline int parse_int(std::string_view text) {
  int v = 0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

inline bool parse_bool(std::string_view text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ConfigError("expected true or false, got '" + std::string(text) + "'");
}

using Setter = std::function<void(SimConfig&, std::string_view)>;

inline std::map<std::string, Setter, std::less<>> config_setters() {
  std::map<std::string, Setter, std::less<>> s;
  auto num = [&](const std::string& key, auto member) {
    s[key] = [member](SimConfig& c, std::string_view v) {
      member(c) = parse_double(v);
    };
  };
  num("sim.t_end", [](SimConfig& c) -> double& { return c.t_end; });
  num("sim.h", [](SimConfig& c) -> double& { return c.h; });
  num("sim.arm_filter_tau",
      [](SimConfig& c) -> double& { return c.arm_filter_tau; });
  num("sim.smooth_arm_amplitude",
      [](SimConfig& c) -> double& { return c.smooth_arm_amplitude; });
  num("sim.smooth_arm_frequency",
      [](SimConfig& c) -> double& { return c.smooth_arm_frequency; });
  s["sim.reference"] = [](SimConfig& c, std::string_view v) {
    try {
      c.reference = parse_reference_mode(v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  };
  s["sim.ideal_wrench"] = [](SimConfig& c, std::string_view v) {
    c.ideal_wrench = parse_bool(v);
  };
  s["sim.output"] = [](SimConfig& c, std::string_view v) {
    c.output_path = std::string(v);
  };

  for (int i = 0; i < 5; ++i) {
    const std::string n = std::to_string(i + 1);
    s["initial.q." + n] = [i](SimConfig& c, std::string_view v) {
      c.initial.q(i) = parse_double(v);
    };
    s["initial.qdot." + n] = [i](SimConfig& c, std::string_view v) {
      c.initial.qdot(i) = parse_double(v);
    };
    s["gains.K." + n] = [i](SimConfig& c, std::string_view v) {
      c.gains.K(i) = parse_double(v);
    };
    s["gains.Lambda." + n] = [i](SimConfig& c, std::string_view v) {
      c.gains.Lambda(i) = parse_double(v);
    };
  }

  num("params.m", [](SimConfig& c) -> double& { return c.params.m; });
  num("params.m_l", [](SimConfig& c) -> double& { return c.params.m_l; });
  num("params.m_r", [](SimConfig& c) -> double& { return c.params.m_r; });
  num("params.I", [](SimConfig& c) -> double& { return c.params.I; });
  num("params.I_l", [](SimConfig& c) -> double& { return c.params.I_l; });
  num("params.I_r", [](SimConfig& c) -> double& { return c.params.I_r; });
  num("params.l_l", [](SimConfig& c) -> double& { return c.params.l_l; });
  num("params.l_r", [](SimConfig& c) -> double& { return c.params.l_r; });
  num("params.epsilon",
      [](SimConfig& c) -> double& { return c.params.epsilon; });
  num("params.g", [](SimConfig& c) -> double& { return c.params.g; });

  num("kernel.delta", [](SimConfig& c) -> double& { return c.kernels.delta; });
  s["kernel.mode"] = [](SimConfig& c, std::string_view v) {
    try {
      c.kernels.mode = parse_kernel_mode(v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  };

  for (int i = 0; i < 4; ++i) {
    s["solver.guess." + std::to_string(i + 1)] =
        [i](SimConfig& c, std::string_view v) {
          c.solver.initial_guess(i) = parse_double(v);
        };
  }
  num("solver.tolerance",
      [](SimConfig& c) -> double& { return c.solver.tolerance; });
  num("solver.damping",
      [](SimConfig& c) -> double& { return c.solver.damping; });
  num("solver.fd_step",
      [](SimConfig& c) -> double& { return c.solver.fd_step; });
  num("solver.thrust_limit",
      [](SimConfig& c) -> double& { return c.solver.thrust_limit; });
  s["solver.max_iterations"] = [](SimConfig& c, std::string_view v) {
    c.solver.max_iterations = parse_int(v);
  };
  s["solver.branch"] = [](SimConfig& c, std::string_view v) {
    try {
      c.solver.branch = parse_branch(v);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  };
  return s;
}

}  // namespace detail

/// Applies the assignments in `text` on top of `base`. Throws ConfigError
/// with the offending line number. Does not validate the result.
inline SimConfig parse_config(std::string_view text, SimConfig base = {}) {
  static const auto setters = detail::config_setters();
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) {
      throw ConfigError(where + "expected 'key = value'");
    }
    const std::string_view key = detail::trim(line.substr(0, eq));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw ConfigError(where + "unknown key '" + std::string(key) + "'");
    }
    if (value.empty()) {
      throw ConfigError(where + "missing value for '" + std::string(key) + "'");
    }
    try {
      it->second(base, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + std::string(key) + ": " + e.what());
    }
  }
  return base;
}

inline SimConfig load_config(const std::string& path, SimConfig base = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

/// Every key with its current value; parse_config(dump_config(c)) == c.
inline std::string dump_config(const SimConfig& c) {
  std::ostringstream os;
  os.precision(17);
  const char* coords[5] = {"x_v", "z_v", "theta", "q_l", "q_r"};
  os << "sim.t_end = " << c.t_end << "\n"
     << "sim.h = " << c.h << "\n"
     << "sim.reference = " << reference_mode_name(c.reference) << "\n"
     << "sim.ideal_wrench = " << (c.ideal_wrench ? "true" : "false") << "\n"
     << "sim.arm_filter_tau = " << c.arm_filter_tau << "\n"
     << "sim.smooth_arm_amplitude = " << c.smooth_arm_amplitude << "\n"
     << "sim.smooth_arm_frequency = " << c.smooth_arm_frequency << "\n"
     << "sim.output = " << c.output_path << "\n";
  for (int i = 0; i < 5; ++i) {
    os << "initial.q." << i + 1 << " = " << c.initial.q(i) << "  # "
       << coords[i] << "\n";
  }
  for (int i = 0; i < 5; ++i) {
    os << "initial.qdot." << i + 1 << " = " << c.initial.qdot(i) << "\n";
  }
  const PhysicalParams& p = c.params;
  os << "params.m = " << p.m << "\nparams.m_l = " << p.m_l
     << "\nparams.m_r = " << p.m_r << "\nparams.I = " << p.I
     << "\nparams.I_l = " << p.I_l << "\nparams.I_r = " << p.I_r
     << "\nparams.l_l = " << p.l_l << "\nparams.l_r = " << p.l_r
     << "\nparams.epsilon = " << p.epsilon << "\nparams.g = " << p.g << "\n";
  for (int i = 0; i < 5; ++i) {
    os << "gains.K." << i + 1 << " = " << c.gains.K(i) << "\n";
  }
  for (int i = 0; i < 5; ++i) {
    os << "gains.Lambda." << i + 1 << " = " << c.gains.Lambda(i) << "\n";
  }
  os << "kernel.delta = " << c.kernels.delta << "\n"
     << "kernel.mode = " << kernel_mode_name(c.kernels.mode) << "\n";
  for (int i = 0; i < 4; ++i) {
    os << "solver.guess." << i + 1 << " = " << c.solver.initial_guess(i)
       << "\n";
  }
  os << "solver.tolerance = " << c.solver.tolerance << "\n"
     << "solver.max_iterations = " << c.solver.max_iterations << "\n"
     << "solver.damping = " << c.solver.damping << "\n"
     << "solver.fd_step = " << c.solver.fd_step << "\n"
     << "solver.thrust_limit = " << c.solver.thrust_limit << "\n"
     << "solver.branch = " << branch_name(c.solver.branch) << "\n";
  return os.str();
}

}  // namespace soft_pvtol

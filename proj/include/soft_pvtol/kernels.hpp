#pragma once

/// @file
/// Shape functions of a single constant-curvature segment.
///
/// Every entry of the inertia matrix, the Coriolis matrix, the gravity vector
/// and the arm kinematics is a scalar multiple of one of the kernels below.
/// Their textbook forms divide by powers of the curvature angle q, so each
/// kernel is evaluated through a switch: the closed form for |q| >= delta and
/// either the q -> 0 limit (KernelMode::kConstantLimit) or a Taylor polynomial
/// (KernelMode::kSeries) inside the band.

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace soft_pvtol {

enum class KernelKind : std::size_t {
  kSinc,  // sin q / q
  kBend,  // (1 - cos q) / q
  kD1,
  kD2,
  kD3,
  kD4,
  kD5,
  kD6,
  kC1,
  kC2,
  kC3,
  kC4,
  kC5,
  kC6,
  kGrav,  // (q sin q + cos q - 1) / q^2
};

inline constexpr std::size_t kKernelCount = 15;

inline constexpr std::array<KernelKind, kKernelCount> kAllKernels = {
    KernelKind::kSinc, KernelKind::kBend, KernelKind::kD1, KernelKind::kD2,
    KernelKind::kD3,   KernelKind::kD4,   KernelKind::kD5, KernelKind::kD6,
    KernelKind::kC1,   KernelKind::kC2,   KernelKind::kC3, KernelKind::kC4,
    KernelKind::kC5,   KernelKind::kC6,   KernelKind::kGrav,
};

inline constexpr std::string_view kernel_name(KernelKind kind) {
  constexpr std::array<std::string_view, kKernelCount> names = {
      "SINC", "BEND", "D1", "D2", "D3", "D4", "D5", "D6",
      "C1",   "C2",   "C3", "C4", "C5", "C6", "GRAV"};
  return names[static_cast<std::size_t>(kind)];
}

/// Parses the names produced by kernel_name(). Throws std::invalid_argument.
inline KernelKind parse_kernel_kind(std::string_view name) {
  for (KernelKind kind : kAllKernels) {
    if (kernel_name(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown kernel '" + std::string(name) + "'");
}

enum class KernelMode { kConstantLimit, kSeries };

inline constexpr std::string_view kernel_mode_name(KernelMode mode) {
  return mode == KernelMode::kSeries ? "SERIES" : "CONSTANT_LIMIT";
}

inline KernelMode parse_kernel_mode(std::string_view name) {
  if (name == "CONSTANT_LIMIT") return KernelMode::kConstantLimit;
  if (name == "SERIES") return KernelMode::kSeries;
  throw std::invalid_argument("unknown kernel mode '" + std::string(name) +
                              "' (expected CONSTANT_LIMIT or SERIES)");
}

struct KernelConfig {
  double delta = 0.1;  // rad
  KernelMode mode = KernelMode::kConstantLimit;

  /// Throws std::invalid_argument unless 0 < delta <= 0.5.
  void validate() const {
    if (!(delta > 0.0) || !(delta <= 0.5)) {
      throw std::invalid_argument(
          "kernel.delta must satisfy 0 < delta <= 0.5 (got " +
          std::to_string(delta) + ")");
    }
  }
};

namespace detail {

// Taylor coefficients about q = 0 through q^12, stored as exact rationals
// {numerator, denominator}. Generated once by symbolic series expansion of
// the closed forms below (sympy `series(expr, q, 0, 13)`).
struct Rational {
  double num;
  double den;
};

inline constexpr std::size_t kSeriesTerms = 13;
using SeriesRow = std::array<Rational, kSeriesTerms>;

inline constexpr Rational z{0, 1};

inline constexpr SeriesRow kSincSeries = {{{1, 1}, z, {-1, 6}, z, {1, 120}, z,
                                           {-1, 5040}, z, {1, 362880}, z,
                                           {-1, 39916800}, z, {1, 6227020800.0}}};
inline constexpr SeriesRow kBendSeries = {{z, {1, 2}, z, {-1, 24}, z, {1, 720},
                                           z, {-1, 40320}, z, {1, 3628800}, z,
                                           {-1, 479001600}, z}};
inline constexpr SeriesRow kD1Series = {{z, {1, 3}, z, {-1, 30}, z, {1, 840}, z,
                                         {-1, 45360}, z, {1, 3991680}, z,
                                         {-1, 518918400}, z}};
inline constexpr SeriesRow kD2Series = {{{1, 2}, z, {-1, 8}, z, {1, 144}, z,
                                         {-1, 5760}, z, {1, 403200}, z,
                                         {-1, 43545600}, z, {1, 6706022400.0}}};
inline constexpr SeriesRow kD5Series = {
    {{1, 4}, z, {-1, 72}, z, {1, 2880}, z, {-1, 201600}, z, {1, 21772800}, z,
     {-1, 3353011200.0}, z, {1, 697426329600.0}}};
inline constexpr SeriesRow kC1Series = {{{1, 3}, z, {-1, 10}, z, {1, 168}, z,
                                         {-1, 6480}, z, {1, 443520}, z,
                                         {-1, 47174400}, z, {1, 7185024000.0}}};
inline constexpr SeriesRow kC2Series = {{z, {-1, 4}, z, {1, 36}, z, {-1, 960},
                                         z, {1, 50400}, z, {-1, 4354560}, z,
                                         {1, 558835200}, z}};
inline constexpr SeriesRow kC5Series = {
    {z, {1, 144}, z, {-1, 2880}, z, {1, 134400}, z, {-1, 10886400}, z,
     {1, 1341204480.0}, z, {-1, 232475443200.0}, z}};

inline constexpr SeriesRow negated(const SeriesRow& row) {
  SeriesRow out = row;
  for (auto& c : out) c.num = -c.num;
  return out;
}

// D3 = -D1 (mirrored arm); the remaining right-arm kernels coincide with
// their left-arm counterparts as functions of their own curvature.
inline constexpr SeriesRow kD3Series = negated(kD1Series);

inline constexpr const SeriesRow& series_row(KernelKind kind) {
  switch (kind) {
    case KernelKind::kSinc: return kSincSeries;
    case KernelKind::kBend: return kBendSeries;
    case KernelKind::kD1: return kD1Series;
    case KernelKind::kD3: return kD3Series;
    case KernelKind::kD2:
    case KernelKind::kD4:
    case KernelKind::kGrav: return kD2Series;
    case KernelKind::kD5:
    case KernelKind::kD6: return kD5Series;
    case KernelKind::kC1:
    case KernelKind::kC3: return kC1Series;
    case KernelKind::kC2:
    case KernelKind::kC4: return kC2Series;
    case KernelKind::kC5:
    case KernelKind::kC6: return kC5Series;
  }
  return kSincSeries;
}

}  // namespace detail

/// Closed-form value of a kernel. Undefined at q = 0; accurate for |q| well
/// away from zero. 1 - cos q is written as 2 sin^2(q/2) to limit cancellation.
template <typename T>
T closed_form(KernelKind kind, T q) {
  using std::cos;
  using std::sin;
  const T s = sin(q);
  const T c = cos(q);
  const T sh = sin(q / T(2));
  const T one_minus_cos = T(2) * sh * sh;
  const T q2 = q * q;
  switch (kind) {
    case KernelKind::kSinc: return s / q;
    case KernelKind::kBend: return one_minus_cos / q;
    case KernelKind::kD1: return (s - q * c) / q2;
    case KernelKind::kD3: return (q * c - s) / q2;
    case KernelKind::kD2:
    case KernelKind::kD4:
    case KernelKind::kGrav: return (q * s - one_minus_cos) / q2;
    case KernelKind::kD5:
    case KernelKind::kD6:
      return (q2 + T(2) * one_minus_cos - T(2) * q * s) / (q2 * q2);
    case KernelKind::kC1:
    case KernelKind::kC3: return ((q2 - T(2)) * s + T(2) * q * c) / (q2 * q);
    case KernelKind::kC2:
    case KernelKind::kC4:
      return (q2 * c - T(2) * q * s + T(2) * one_minus_cos) / (q2 * q);
    case KernelKind::kC5:
    case KernelKind::kC6: {
      const T w = q * cos(q / T(2)) - T(2) * sh;
      return w * w / (q2 * q2 * q);
    }
  }
  return T(0);
}

/// Taylor polynomial about q = 0 (degree 12).
template <typename T>
T series(KernelKind kind, T q) {
  const auto& row = detail::series_row(kind);
  T acc(0);
  for (std::size_t k = detail::kSeriesTerms; k-- > 0;) {
    acc = acc * q + T(row[k].num) / T(row[k].den);
  }
  return acc;
}

/// q -> 0 limit of a kernel.
template <typename T = double>
T limit(KernelKind kind) {
  const auto& c0 = detail::series_row(kind)[0];
  return T(c0.num) / T(c0.den);
}

/// Switched evaluation: closed form for |q| >= cfg.delta, otherwise the limit
/// constant or the Taylor polynomial depending on cfg.mode.
template <typename T>
T eval(KernelKind kind, T q, const KernelConfig& cfg) {
  using std::abs;
  if (abs(q) >= T(cfg.delta)) return closed_form(kind, q);
  if (cfg.mode == KernelMode::kConstantLimit) return limit<T>(kind);
  return series(kind, q);
}

/// True for kernels that are odd functions of q.
inline constexpr bool is_odd(KernelKind kind) {
  switch (kind) {
    case KernelKind::kBend:
    case KernelKind::kD1:
    case KernelKind::kD3:
    case KernelKind::kC2:
    case KernelKind::kC4:
    case KernelKind::kC5:
    case KernelKind::kC6: return true;
    default: return false;
  }
}

/// The constants substituted inside the band in kConstantLimit mode.
inline std::map<KernelKind, double> limit_table() {
  std::map<KernelKind, double> table;
  for (KernelKind kind : kAllKernels) table.emplace(kind, limit<double>(kind));
  return table;
}

}  // namespace soft_pvtol

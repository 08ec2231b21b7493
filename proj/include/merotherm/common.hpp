#pragma once

// Shared value types, error taxonomy and small numeric helpers used across the
// workbench. Everything here is header-only and dependency-free.

#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace merotherm {

using cplx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// Error taxonomy.  The CLI maps config_error to exit code 2 and the numeric
// failures (truncation_failure, convergence_failure) to exit code 3; library
// users just catch what they care about.

struct workbench_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : workbench_error {
  std::vector<std::string> fields;  // per-field diagnostics
  explicit config_error(std::string msg, std::vector<std::string> f = {})
      : workbench_error(std::move(msg)), fields(std::move(f)) {}
};

struct domain_error : workbench_error {
  using workbench_error::workbench_error;
};

// Raised when a requested tail tolerance cannot be met within the branch-index
// cap; carries the best certified tail bound that was achieved.
struct truncation_failure : workbench_error {
  double certified_tail;
  truncation_failure(std::string msg, double tail)
      : workbench_error(std::move(msg)), certified_tail(tail) {}
};

struct convergence_failure : workbench_error {
  std::vector<double> raw_sequence;  // the data that refused to settle
  convergence_failure(std::string msg, std::vector<double> raw = {})
      : workbench_error(std::move(msg)), raw_sequence(std::move(raw)) {}
};

// ---------------------------------------------------------------------------
// Value of a meromorphic map: either a finite complex number or the point at
// infinity (what evaluation at a pole returns -- never a NaN).

struct MapValue {
  cplx value{0.0, 0.0};
  bool at_infinity = false;

  static MapValue infinity() { return MapValue{cplx{}, true}; }
  static MapValue finite(cplx v) { return MapValue{v, false}; }
};

// ---------------------------------------------------------------------------
// Neumaier-compensated accumulator.  All reductions in the workbench that feed
// reported numbers go through this (or through the fixed-block parallel sum
// built on top of it) so results do not depend on summation luck.

class NeumaierSum {
 public:
  void add(double x) {
    double t = s_ + x;
    if (std::abs(s_) >= std::abs(x))
      c_ += (s_ - t) + x;
    else
      c_ += (x - t) + s_;
    s_ = t;
  }
  [[nodiscard]] double value() const { return s_ + c_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

inline double neumaier_total(std::span<const double> xs) {
  NeumaierSum acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

// ---------------------------------------------------------------------------
// Ordinary least squares line fit y ~ intercept + slope * x.  Used for the
// asymptotic-exponent regressions (growth exponents, decay slopes); constants
// that must *bound* data are fitted by sup/inf instead, never by regression.

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
  std::size_t n = 0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw domain_error("fit_line: need at least two matched samples");
  const auto n = static_cast<double>(x.size());
  NeumaierSum sx, sy, sxx, sxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx.add(x[i]);
    sy.add(y[i]);
    sxx.add(x[i] * x[i]);
    sxy.add(x[i] * y[i]);
  }
  const double mx = sx.value() / n, my = sy.value() / n;
  const double den = sxx.value() - n * mx * mx;
  if (den <= 0.0) throw domain_error("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = (sxy.value() - n * mx * my) / den;
  f.intercept = my - f.slope * mx;
  NeumaierSum r2;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    r2.add(r * r);
  }
  f.rms_residual = std::sqrt(r2.value() / n);
  f.n = x.size();
  return f;
}

// Aitken delta-squared extrapolation of the final entries of a sequence.
// Returns the accelerated value together with the last raw entry; falls back
// to the raw tail when the second difference underflows (already-converged or
// exactly-constant sequences).
struct AitkenResult {
  double value = 0.0;
  double last_raw = 0.0;
  bool accelerated = false;
};

inline AitkenResult aitken_limit(std::span<const double> a) {
  if (a.empty()) throw domain_error("aitken_limit: empty sequence");
  AitkenResult r;
  r.last_raw = a.back();
  r.value = a.back();
  if (a.size() < 3) return r;
  const std::size_t n = a.size();
  const double d1 = a[n - 1] - a[n - 2];
  const double d0 = a[n - 2] - a[n - 3];
  const double dd = d1 - d0;
  const double scale = std::abs(a[n - 1]) + std::abs(d1) + 1e-300;
  if (std::abs(dd) < 1e-13 * scale) return r;  // degenerate: keep raw tail
  r.value = a[n - 1] - d1 * d1 / dd;
  r.accelerated = true;
  return r;
}

// ---------------------------------------------------------------------------
// Deterministic float formatting: %.17g round-trips doubles exactly and keeps
// every artifact byte-stable across reruns of the same binary.

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline bool nearly_equal(double a, double b, double tol) {
  return std::abs(a - b) <= tol * (1.0 + std::max(std::abs(a), std::abs(b)));
}

}  // namespace merotherm

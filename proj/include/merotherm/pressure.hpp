#pragma once

// Topological pressure estimation from the growth of L_t^n 1, pressure curves
// in t, and the experimental pressure-zero probe.
//
// Estimator shape: the raw diagnostic sequence per_n = (1/n) log L_t^n 1(w0)
// converges only like P + const/n, so acceleration is applied to the
// increments b_n = log V_n - log V_{n-1}, which approach P geometrically; the
// reported per_n sequence stays the raw (1/n) log V_n definition.  Error bars
// are deliberately conservative: at least the distance from the last raw per_n
// to the accelerated value, so the known O(1/n) bias is always covered.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "merotherm/common.hpp"
#include "merotherm/model.hpp"
#include "merotherm/preimage.hpp"
#include "merotherm/transfer.hpp"

namespace merotherm {

struct PressureEstimate {
  double t = 0.0;
  double tau = 0.0;
  double value = 0.0;
  std::vector<std::pair<int, double>> per_n;  // (n, (1/n) log L_t^n 1(w0))
  cplx basepoint{};
  double error_bar = 0.0;
  std::string extrapolation;  // "aitken-on-increments" or "raw-tail"
};

// Default tree shape for pressure work: budget mode keeps level sizes flat so
// depth ~10-12 stays cheap while the certificate tracks what was dropped.
inline TreeOptions pressure_tree_options() {
  TreeOptions opts;
  opts.mode = TreeOptions::PruneMode::budget;
  opts.retention_tol = 1e-6;
  opts.node_budget = 20000;
  opts.cum_tol = 1e-12;
  return opts;
}

inline PressureEstimate estimate_pressure(const MapDescriptor& m,
                                          const PotentialParams& p, cplx w0,
                                          int n_max, const TruncationPolicy& trunc,
                                          const TreeOptions& opts = pressure_tree_options()) {
  if (n_max < 3)
    throw config_error("estimate_pressure: n_max must be >= 3 for acceleration");
  require_admissible(m, p);

  const PowerOneResult r = power_one(m, w0, n_max, p, trunc, opts);

  PressureEstimate est;
  est.t = p.t;
  est.tau = p.tau;
  est.basepoint = w0;

  std::vector<double> logV(static_cast<std::size_t>(n_max));
  std::vector<double> increments(static_cast<std::size_t>(n_max));
  for (int n = 1; n <= n_max; ++n) {
    const double v = r.tree.level_value(n);
    if (!(v > 0.0))
      throw convergence_failure("estimate_pressure: L_t^n 1 vanished at n = " +
                                std::to_string(n));
    logV[static_cast<std::size_t>(n - 1)] = std::log(v);
    est.per_n.emplace_back(n, logV[static_cast<std::size_t>(n - 1)] / n);
    increments[static_cast<std::size_t>(n - 1)] =
        n == 1 ? logV[0]
               : logV[static_cast<std::size_t>(n - 1)] - logV[static_cast<std::size_t>(n - 2)];
  }

  // Oscillation guard: per_n differences must shrink (up to 20% slack) over
  // the settled range n >= 4.
  std::vector<double> per_raw;
  per_raw.reserve(est.per_n.size());
  for (const auto& [n, v] : est.per_n) per_raw.push_back(v);
  for (std::size_t i = 4; i + 1 < per_raw.size(); ++i) {
    const double d0 = std::abs(per_raw[i] - per_raw[i - 1]);
    const double d1 = std::abs(per_raw[i + 1] - per_raw[i]);
    if (d1 > 1.2 * d0 + 1e-12)
      throw convergence_failure(
          "estimate_pressure: per_n differences grew at n = " + std::to_string(i + 2),
          per_raw);
  }

  const AitkenResult acc = aitken_limit(increments);
  est.value = acc.value;
  est.extrapolation = acc.accelerated ? "aitken-on-increments" : "raw-tail";

  double bar = std::abs(per_raw.back() - est.value);
  bar = std::max(bar, std::abs(increments.back() - est.value));
  if (increments.size() >= 4) {
    const AitkenResult prev = aitken_limit(
        std::span<const double>(increments.data(), increments.size() - 1));
    bar = std::max(bar, std::abs(prev.value - est.value));
  }
  est.error_bar = bar;
  return est;
}

// Two-basepoint consistency: the estimates must agree within the sum of their
// error bars.
struct BasepointAgreement {
  PressureEstimate first;
  PressureEstimate second;
  double difference = 0.0;
  bool consistent = false;
};

inline BasepointAgreement check_basepoint_agreement(
    const MapDescriptor& m, const PotentialParams& p, cplx w1, cplx w2, int n_max,
    const TruncationPolicy& trunc, const TreeOptions& opts = pressure_tree_options()) {
  BasepointAgreement out;
  out.first = estimate_pressure(m, p, w1, n_max, trunc, opts);
  out.second = estimate_pressure(m, p, w2, n_max, trunc, opts);
  out.difference = std::abs(out.first.value - out.second.value);
  out.consistent = out.difference <= out.first.error_bar + out.second.error_bar;
  return out;
}

struct PressureCurve {
  double tau = 0.0;
  std::vector<PressureEstimate> samples;              // ordered by t
  std::vector<std::pair<double, std::string>> skipped;  // (t, reason)
  bool strictly_decreasing = true;
};

// Sweeps t over a strictly increasing grid at shared truncation settings.
// Inadmissible t values are skipped individually with a recorded reason.  When
// the caller certifies that metric derivatives exceed 1 on the sampled set
// (the expansion check), a non-decreasing curve is an error.
inline PressureCurve pressure_curve(const MapDescriptor& m, double tau,
                                    const std::vector<double>& t_grid, cplx w0,
                                    int n_max, const TruncationPolicy& trunc,
                                    const TreeOptions& opts = pressure_tree_options(),
                                    bool expansion_certified = false) {
  for (std::size_t i = 1; i < t_grid.size(); ++i)
    if (!(t_grid[i] > t_grid[i - 1]))
      throw config_error("pressure_curve: t grid must be strictly increasing");

  PressureCurve curve;
  curve.tau = tau;
  for (double t : t_grid) {
    PotentialParams p{tau, t};
    const auto bad = admissibility_violations(m, p);
    if (!bad.empty()) {
      std::string reason;
      for (const auto& b : bad) reason += (reason.empty() ? "" : "; ") + b;
      curve.skipped.emplace_back(t, reason);
      continue;
    }
    curve.samples.push_back(estimate_pressure(m, p, w0, n_max, trunc, opts));
  }
  for (std::size_t i = 1; i < curve.samples.size(); ++i)
    if (!(curve.samples[i].value < curve.samples[i - 1].value))
      curve.strictly_decreasing = false;
  if (expansion_certified && !curve.strictly_decreasing) {
    std::vector<double> vals;
    for (const auto& s : curve.samples) vals.push_back(s.value);
    throw convergence_failure(
        "pressure_curve: curve failed to decrease despite certified expansion", vals);
  }
  return curve;
}

// Experimental dimension probe: bisection for the zero of t -> P_t.  Honest
// non-results: if the bracket shows no sign change, say so; never fabricate a
// root.  t* is cross-referenced against the dimension band 2 M rho/(2 + M rho).
struct PressureZero {
  bool bracketed = false;
  double t_star = 0.0;
  double P_at_t_star = 0.0;
  bool t_star_admissible = false;
  double P_low = 0.0;   // P at the bracket endpoints
  double P_high = 0.0;
  int evaluations = 0;
  double dimension_band = 0.0;  // upper band for the escaping-set dimension
  std::string note;
};

inline PressureZero find_pressure_zero(const MapDescriptor& m, double tau,
                                       std::pair<double, double> t_bracket, double tol,
                                       cplx w0, int n_max, const TruncationPolicy& trunc,
                                       const TreeOptions& opts = pressure_tree_options()) {
  if (!(tol > 0.0)) throw config_error("find_pressure_zero: tol must be > 0");
  auto [ta, tb] = t_bracket;
  if (!(ta < tb)) throw config_error("find_pressure_zero: bracket must satisfy a < b");
  for (double t : {ta, tb}) {
    PotentialParams p{tau, t};
    const auto bad = admissibility_violations(m, p);
    if (!bad.empty())
      throw config_error("find_pressure_zero: bracket endpoint t = " + format_double(t) +
                             " is inadmissible",
                         bad);
  }

  PressureZero out;
  const double M = m.params().max_pole_multiplicity;
  const double rho = m.params().borel_exponent;
  out.dimension_band = 2.0 * M * rho / (2.0 + M * rho);

  auto P_of = [&](double t) {
    ++out.evaluations;
    return estimate_pressure(m, PotentialParams{tau, t}, w0, n_max, trunc, opts).value;
  };

  double Pa = P_of(ta), Pb = P_of(tb);
  out.P_low = Pa;
  out.P_high = Pb;
  if (Pa * Pb > 0.0) {
    out.bracketed = false;
    out.note = "no sign change over the bracket: P(" + format_double(ta) + ") = " +
               format_double(Pa) + ", P(" + format_double(tb) + ") = " + format_double(Pb);
    return out;
  }

  out.bracketed = true;
  double lo = ta, hi = tb, Plo = Pa;
  double t_mid = 0.5 * (lo + hi), P_mid = 0.0;
  for (int it = 0; it < 60; ++it) {
    t_mid = 0.5 * (lo + hi);
    P_mid = P_of(t_mid);
    if (std::abs(P_mid) < tol || (hi - lo) < 1e-9) break;
    if (Plo * P_mid <= 0.0) {
      hi = t_mid;
    } else {
      lo = t_mid;
      Plo = P_mid;
    }
  }
  out.t_star = t_mid;
  out.P_at_t_star = P_mid;
  out.t_star_admissible =
      admissibility_violations(m, PotentialParams{tau, t_mid}).empty();
  out.note = out.t_star_admissible
                 ? "zero located inside the admissible window"
                 : "zero located but t* is outside the admissible window; treat as extrapolation";
  return out;
}

}  // namespace merotherm

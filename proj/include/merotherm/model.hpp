#pragma once

// The map layer: an abstract descriptor for a meromorphic map whose inverse
// branches can be enumerated, the tangent family z -> lambda * tan(z) as the
// concrete reference model, and the potential / orbit helpers built on top.
//
// Geometry conventions.  The workbench works in the tau-metric
//     |f'(z)|_tau = |f'(z)| * |z|^tau / |f(z)|^tau,
// the geometric potential is Phi_t(z) = -t * log |f'(z)|_tau, and the ergodic
// sum S_n Phi_t telescopes into -t * log(|(f^n)'(z)| * |z|^tau / |f^n(z)|^tau),
// an identity the tests pin to 1e-9.  Admissibility of (tau, t) means
// 1 < tau < 1 + 1/M and t > rho / (tau - 1), where M is the maximal pole
// multiplicity and rho the exponent beyond which the preimage (Borel) series
// sum 1/|z|^u converges.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "merotherm/common.hpp"

namespace merotherm {

// Potential parameters: tau picks the metric, t the inverse-temperature-like
// exponent of the weight |f'|_tau^{-t}.
struct PotentialParams {
  double tau = 1.5;
  double t = 3.0;
};

// Standing-hypothesis constants of a model.  modulus_floor (T) and
// distortion_scale (delta) are estimated numerically by the sampler and
// reported; the values stored here are the configured ones the algorithms use,
// so a disagreement is visible instead of silent.
struct ModelParams {
  int max_pole_multiplicity = 1;   // M
  double borel_exponent = 1.0;     // rho: series sum 1/|z|^u converges iff u > rho
  double escape_radius = 2.0;      // R0: f^-1({|w| > R0}) is a union of pole neighborhoods
  double modulus_floor = 1.1;      // T: lower bound for |z| over the sampled set
  double distortion_scale = 0.29;  // delta: pairs closer than this obey the distortion bounds
  double singular_radius = 0.5;    // the sampled set stays this far from sing(f^-1)
  double preimage_tol = 1e-10;     // |f(branch(w)) - w| must stay below this
  double pole_guard = 1e-8;        // evaluation/derivative guard distance to poles
  double omitted_guard = 1e-8;     // preimage guard distance to omitted/asymptotic values
};

struct Pole {
  cplx position;
  int multiplicity = 1;
};

class MapDescriptor {
 public:
  explicit MapDescriptor(ModelParams params) : params_(params) {}
  virtual ~MapDescriptor() = default;

  [[nodiscard]] const ModelParams& params() const { return params_; }
  ModelParams& params() { return params_; }

  [[nodiscard]] virtual std::string name() const = 0;

  // f(z); the infinity sentinel at (or numerically indistinguishably near) a
  // pole, never a NaN.
  [[nodiscard]] virtual MapValue eval(cplx z) const = 0;

  // f'(z); throws domain_error within pole_guard of a pole.
  [[nodiscard]] virtual cplx deriv(cplx z) const = 0;

  // The branch-k solution of f(z) = w, or nullopt when the model has no such
  // branch index.  Throws domain_error when w sits within omitted_guard of an
  // omitted value.  Branch indices are a model-owned labeling; for the tangent
  // family branch k lives in the vertical strip Re z in (k*pi - pi/2, k*pi + pi/2).
  [[nodiscard]] virtual std::optional<cplx> branch_point(cplx w, long k) const = 0;

  [[nodiscard]] virtual bool infinite_branching() const { return true; }

  // |f'(z)|_tau.  The default computes the tau-metric formula from eval/deriv;
  // synthetic test fixtures override it.
  [[nodiscard]] virtual double metric_deriv(cplx z, double tau) const {
    if (std::abs(z) == 0.0)
      throw domain_error("metric_deriv: z = 0 is excluded (0 is not on the sampled set)");
    const MapValue fv = eval(z);
    if (fv.at_infinity)
      throw domain_error("metric_deriv: z is at a pole");
    const double fa = std::abs(fv.value);
    if (fa == 0.0)
      throw domain_error("metric_deriv: f(z) = 0 is excluded (0 is not on the sampled set)");
    return std::abs(deriv(z)) * std::pow(std::abs(z) / fa, tau);
  }

  // Certified upper bound for the weight tail sum_{|k| > K} |f'(z_k)|_tau^{-t}
  // over the discarded inverse branches of w.  +infinity means "cannot
  // certify at this K" and makes the caller extend the enumeration.
  [[nodiscard]] virtual double branch_tail_bound(cplx w, long K,
                                                 const PotentialParams& p) const = 0;

  // Which inverse-branch cell a point lies in (used to attribute preimage mass
  // to enumerated branches); nullopt if the model has no cell structure.
  [[nodiscard]] virtual std::optional<long> branch_cell_index(cplx z) const = 0;

  // Poles with |a| <= R, sorted by modulus then real part.
  [[nodiscard]] virtual std::vector<Pole> poles_within(double R) const = 0;

  [[nodiscard]] virtual std::vector<cplx> omitted_values() const = 0;

  // Forward orbit of the omitted/asymptotic values (the postsingular set, up
  // to the given number of steps); used to estimate the distortion scale.
  [[nodiscard]] std::vector<cplx> singular_forward_orbit(int steps) const {
    std::vector<cplx> out;
    for (cplx v : omitted_values()) {
      cplx z = v;
      for (int i = 0; i < steps; ++i) {
        out.push_back(z);
        const MapValue next = eval(z);
        if (next.at_infinity) break;
        z = next.value;
      }
    }
    return out;
  }

 private:
  ModelParams params_;
};

// ---------------------------------------------------------------------------
// Tangent family f(z) = lambda * tan(z).
//
// Closed forms used throughout: f' = lambda + f^2/lambda (exact, and cheap at
// preimages where f is known); inverse branches z_k = atan(w/lambda) + k*pi;
// poles a_k = pi/2 + k*pi, all simple; omitted values +/- lambda*i (the
// asymptotic values of tan scaled by lambda).

class TangentMap : public MapDescriptor {
 public:
  explicit TangentMap(double lambda, ModelParams params = ModelParams{})
      : MapDescriptor(params), lambda_(lambda) {
    if (lambda == 0.0) throw config_error("tangent: lambda must be nonzero");
  }

  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] std::string name() const override { return "tangent"; }

  [[nodiscard]] MapValue eval(cplx z) const override {
    if (distance_to_pole(z) < params().pole_guard) return MapValue::infinity();
    cplx t;
    if (std::abs(z.imag()) <= 20.0) {
      t = std::tan(z);
    } else if (z.imag() > 0.0) {
      // tan z = -i (q - 1)/(q + 1) with q = e^{2iz}; |q| = e^{-2 Im z} -> 0,
      // so this stays finite where sin/cos would overflow.
      const cplx q = std::exp(cplx{0.0, 2.0} * z);
      t = cplx{0.0, -1.0} * (q - 1.0) / (q + 1.0);
    } else {
      const cplx r = std::exp(cplx{0.0, -2.0} * z);  // 1/q, tiny
      t = cplx{0.0, -1.0} * (1.0 - r) / (1.0 + r);
    }
    const cplx v = lambda_ * t;
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      return MapValue::infinity();
    return MapValue::finite(v);
  }

  [[nodiscard]] cplx deriv(cplx z) const override {
    const MapValue fv = eval(z);
    if (fv.at_infinity)
      throw domain_error("tangent deriv: z within pole_guard of a pole");
    return lambda_ + fv.value * fv.value / lambda_;
  }

  [[nodiscard]] std::optional<cplx> branch_point(cplx w, long k) const override {
    guard_omitted(w);
    return std::atan(w / lambda_) + cplx{static_cast<double>(k) * kPi, 0.0};
  }

  // Weight of branch k of w is A(w) / |z_k|^{tau t} with
  // A(w) = |lambda + w^2/lambda|^{-t} |w|^{tau t}; since |z_k| >= |k| pi - |a|
  // with a = atan(w/lambda), the discarded tail beyond K is bounded by the
  // comparison integral 2 A(w) (K pi - |a|)^{1 - tau t} / (pi (tau t - 1)).
  [[nodiscard]] double branch_tail_bound(cplx w, long K,
                                          const PotentialParams& p) const override {
    const double u = p.tau * p.t;
    if (u <= 1.0) return std::numeric_limits<double>::infinity();
    guard_omitted(w);
    const cplx a = std::atan(w / lambda_);
    const double base = static_cast<double>(K) * kPi - std::abs(a);
    if (base <= 0.0) return std::numeric_limits<double>::infinity();
    const double A = std::pow(std::abs(lambda_ + w * w / lambda_), -p.t) *
                     std::pow(std::abs(w), u);
    return 2.0 * A * std::pow(base, 1.0 - u) / (kPi * (u - 1.0));
  }

  [[nodiscard]] std::optional<long> branch_cell_index(cplx z) const override {
    return std::lround(z.real() / kPi);
  }

  [[nodiscard]] std::vector<Pole> poles_within(double R) const override {
    std::vector<Pole> out;
    const long kmax = static_cast<long>(std::floor((R - kPi / 2.0) / kPi));
    for (long k = -kmax - 1; k <= kmax; ++k) {
      const double a = kPi / 2.0 + static_cast<double>(k) * kPi;
      if (std::abs(a) <= R) out.push_back({cplx{a, 0.0}, 1});
    }
    std::sort(out.begin(), out.end(), [](const Pole& lhs, const Pole& rhs) {
      const double la = std::abs(lhs.position), ra = std::abs(rhs.position);
      if (la != ra) return la < ra;
      return lhs.position.real() < rhs.position.real();
    });
    return out;
  }

  [[nodiscard]] std::vector<cplx> omitted_values() const override {
    return {cplx{0.0, lambda_}, cplx{0.0, -lambda_}};
  }

  [[nodiscard]] double distance_to_pole(cplx z) const {
    const double k = std::round((z.real() - kPi / 2.0) / kPi);
    const double a = kPi / 2.0 + k * kPi;
    return std::abs(z - cplx{a, 0.0});
  }

 private:
  void guard_omitted(cplx w) const {
    for (cplx v : omitted_values())
      if (std::abs(w - v) < params().omitted_guard)
        throw domain_error(
            "tangent branch_point: w within omitted_guard of an asymptotic value");
  }

  double lambda_;
};

// ---------------------------------------------------------------------------
// Potential and orbit helpers.

inline double metric_deriv(const MapDescriptor& m, cplx z, const PotentialParams& p) {
  return m.metric_deriv(z, p.tau);
}

// Phi_t(z) = -t log |f'(z)|_tau.
inline double potential(const MapDescriptor& m, cplx z, const PotentialParams& p) {
  return -p.t * std::log(metric_deriv(m, z, p));
}

// Returns the admissibility violations of (tau, t) for this model; empty means
// admissible.
inline std::vector<std::string> admissibility_violations(const MapDescriptor& m,
                                                         const PotentialParams& p) {
  std::vector<std::string> out;
  const double M = m.params().max_pole_multiplicity;
  const double rho = m.params().borel_exponent;
  if (!(p.tau > 1.0 && p.tau < 1.0 + 1.0 / M))
    out.push_back("potential.tau: need 1 < tau < 1 + 1/M = " +
                  format_double(1.0 + 1.0 / M) + ", got " + format_double(p.tau));
  if (p.tau > 1.0 && !(p.t > rho / (p.tau - 1.0)))
    out.push_back("potential.t: need t > rho/(tau-1) = " +
                  format_double(rho / (p.tau - 1.0)) + ", got " + format_double(p.t));
  return out;
}

inline void require_admissible(const MapDescriptor& m, const PotentialParams& p) {
  auto v = admissibility_violations(m, p);
  if (!v.empty()) throw config_error("inadmissible potential parameters", std::move(v));
}

// Tail exponent r_t = (tau - 1) t - rho of the operator tail bound, and the
// envelope exponent (1 + 1/M - tau) t of the density/weight bounds.
inline double tail_exponent(const MapDescriptor& m, const PotentialParams& p) {
  return (p.tau - 1.0) * p.t - m.params().borel_exponent;
}
inline double envelope_exponent(const MapDescriptor& m, const PotentialParams& p) {
  return (1.0 + 1.0 / m.params().max_pole_multiplicity - p.tau) * p.t;
}

// Forward orbit z, f(z), ..., f^{n-1}(z); throws with the escape depth if the
// orbit hits a pole before n points are collected.
inline std::vector<cplx> forward_orbit(const MapDescriptor& m, cplx z, int n) {
  std::vector<cplx> orbit;
  orbit.reserve(n);
  for (int i = 0; i < n; ++i) {
    orbit.push_back(z);
    if (i + 1 == n) break;
    const MapValue next = m.eval(z);
    if (next.at_infinity)
      throw domain_error("forward_orbit: orbit hits a pole at depth " +
                         std::to_string(i + 1));
    z = next.value;
  }
  return orbit;
}

// S_n Phi_t(z) = sum_{i<n} Phi_t(f^i(z)).
inline double ergodic_sum(const MapDescriptor& m, cplx z, int n,
                          const PotentialParams& p) {
  NeumaierSum acc;
  for (int i = 0; i < n; ++i) {
    acc.add(potential(m, z, p));
    if (i + 1 == n) break;
    const MapValue next = m.eval(z);
    if (next.at_infinity)
      throw domain_error("ergodic_sum: orbit hits a pole at depth " +
                         std::to_string(i + 1));
    z = next.value;
  }
  return acc.value();
}

// Pulls w back along the given branch word (word[j] is the branch index used
// at step j+1); returns the points f_word^{-1}(w), ..., f_word^{-n}(w).
inline std::vector<cplx> pullback_orbit(const MapDescriptor& m, cplx w,
                                        std::span<const long> word) {
  std::vector<cplx> out;
  out.reserve(word.size());
  cplx cur = w;
  for (std::size_t j = 0; j < word.size(); ++j) {
    std::optional<cplx> z;
    try {
      z = m.branch_point(cur, word[j]);
    } catch (const domain_error& e) {
      throw domain_error("pullback_orbit: branch undefined at depth " +
                         std::to_string(j + 1) + ": " + e.what());
    }
    if (!z)
      throw domain_error("pullback_orbit: no branch with index " +
                         std::to_string(word[j]) + " at depth " +
                         std::to_string(j + 1));
    const MapValue back = m.eval(*z);
    if (back.at_infinity ||
        std::abs(back.value - cur) > m.params().preimage_tol * (1.0 + std::abs(cur)))
      throw domain_error("pullback_orbit: preimage residual exceeds tolerance at depth " +
                         std::to_string(j + 1));
    cur = *z;
    out.push_back(cur);
  }
  return out;
}

// Polishes seed_hint to a fixed point via Newton iteration (with a bisection
// fallback on the real line between the poles flanking the hint) and checks it
// is repelling.
inline cplx find_repelling_fixed_point(const MapDescriptor& m, cplx seed_hint) {
  auto fixed_residual = [&](cplx z) -> std::optional<cplx> {
    const MapValue fv = m.eval(z);
    if (fv.at_infinity) return std::nullopt;
    return fv.value - z;
  };
  cplx z = seed_hint;
  bool converged = false;
  for (int it = 0; it < 80; ++it) {
    const auto r = fixed_residual(z);
    if (!r) break;
    if (std::abs(*r) < 1e-13 * (1.0 + std::abs(z))) {
      converged = true;
      break;
    }
    cplx dg;
    try {
      dg = m.deriv(z) - 1.0;
    } catch (const domain_error&) {
      break;
    }
    if (std::abs(dg) < 1e-14) break;
    const cplx step = *r / dg;
    if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
    z -= step;
  }
  if (!converged && std::abs(seed_hint.imag()) < 1e-12) {
    // Bisection fallback between the poles flanking the hint.
    double lo = seed_hint.real() - kPi, hi = seed_hint.real() + kPi;
    for (const Pole& pole : m.poles_within(std::abs(seed_hint) + 2.0 * kPi)) {
      const double a = pole.position.real();
      if (a < seed_hint.real()) lo = std::max(lo, a + 1e-6);
      if (a > seed_hint.real()) hi = std::min(hi, a - 1e-6);
    }
    auto g = [&](double x) -> std::optional<double> {
      const auto r = fixed_residual(cplx{x, 0.0});
      if (!r) return std::nullopt;
      return r->real();
    };
    // Scan for a sign change, then bisect.
    const int kScan = 256;
    double a = lo, b = hi;
    bool bracketed = false;
    std::optional<double> prev;
    double prev_x = lo;
    for (int i = 0; i <= kScan; ++i) {
      const double x = lo + (hi - lo) * i / kScan;
      const auto gx = g(x);
      if (gx && prev && (*gx) * (*prev) <= 0.0) {
        a = prev_x;
        b = x;
        bracketed = true;
        break;
      }
      if (gx) {
        prev = gx;
        prev_x = x;
      }
    }
    if (bracketed) {
      for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (a + b);
        const auto gm = g(mid);
        if (!gm) break;
        const auto ga = g(a);
        if (!ga) break;
        if ((*gm) * (*ga) <= 0.0)
          b = mid;
        else
          a = mid;
      }
      z = cplx{0.5 * (a + b), 0.0};
      const auto r = fixed_residual(z);
      converged = r && std::abs(*r) < 1e-9 * (1.0 + std::abs(z));
    }
  }
  if (!converged)
    throw convergence_failure("find_repelling_fixed_point: polishing did not converge from hint (" +
                              format_double(seed_hint.real()) + ", " +
                              format_double(seed_hint.imag()) + ")");
  const double dz = std::abs(m.deriv(z));
  if (!(dz > 1.0 + 1e-9))
    throw domain_error("find_repelling_fixed_point: converged to a non-repelling point, |f'| = " +
                       format_double(dz));
  return z;
}

}  // namespace merotherm

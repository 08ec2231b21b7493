#pragma once

// Synthetic finite-branching models with closed-form spectral data, plus an
// independent brute-force root scanner for the tangent family.  These provide
// exact oracles for the transfer-operator, pressure, and measure machinery
// that are computed by entirely different means than the library code paths.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "merotherm/common.hpp"
#include "merotherm/model.hpp"

namespace merotherm::testing {

// ---------------------------------------------------------------------------
// Weighted m-cycle on the unit circle: f(x_j) = x_{j+1 mod m} with |f'(x_j)| =
// rates[j].  Because |x_j| = 1 the tau-metric factor (|z|/|f(z)|)^tau is
// exactly 1, so the transfer weight of the unique inverse branch of x_{j+1} is
// rates[j]^{-t} for every tau.  Writing a_j = rates[j]^{-t}:
//
//   pressure        e^{mP} = prod_j a_j          (L^m is scalar on the cycle)
//   eigenmeasure    nu_{j+1} = nu_j * e^P / a_j  (L* nu = e^P nu), normalized
//   eigenfunction   h_{j+1} = h_j * a_j * e^{-P} (L h = e^P h)
//   invariant state nu_j h_j = const, i.e. the invariant measure is uniform.
class CycleMap final : public MapDescriptor {
 public:
  explicit CycleMap(std::vector<double> rates)
      : MapDescriptor(loose_params()), rates_(std::move(rates)) {
    if (rates_.size() < 2) throw config_error("CycleMap: need >= 2 points");
    for (double r : rates_)
      if (!(r > 0.0)) throw config_error("CycleMap: rates must be positive");
    const auto m = rates_.size();
    points_.reserve(m);
    for (std::size_t j = 0; j < m; ++j) {
      const double ang = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(m);
      points_.emplace_back(std::cos(ang), std::sin(ang));
    }
  }

  [[nodiscard]] const std::vector<cplx>& points() const { return points_; }
  [[nodiscard]] std::size_t cycle_length() const { return points_.size(); }

  [[nodiscard]] std::string name() const override { return "cycle"; }

  [[nodiscard]] MapValue eval(cplx z) const override {
    return MapValue::finite(points_[(locate(z) + 1) % points_.size()]);
  }

  [[nodiscard]] cplx deriv(cplx z) const override {
    return cplx(rates_[locate(z)], 0.0);
  }

  [[nodiscard]] std::optional<cplx> branch_point(cplx w, long k) const override {
    if (k != 0) return std::nullopt;
    const std::size_t j = locate(w);
    return points_[(j + points_.size() - 1) % points_.size()];
  }

  [[nodiscard]] bool infinite_branching() const override { return false; }

  [[nodiscard]] double branch_tail_bound(cplx, long, const PotentialParams&) const override {
    return 0.0;  // the single branch is always enumerated
  }

  [[nodiscard]] std::optional<long> branch_cell_index(cplx) const override { return 0; }

  [[nodiscard]] std::vector<Pole> poles_within(double) const override { return {}; }

  [[nodiscard]] std::vector<cplx> omitted_values() const override { return {}; }

  // Closed forms ---------------------------------------------------------

  [[nodiscard]] double pressure(double t) const {
    double s = 0.0;
    for (double r : rates_) s += -t * std::log(r);
    return s / static_cast<double>(rates_.size());
  }

  // Normalized left eigenvector of the weighted shift (the conformal measure).
  [[nodiscard]] std::vector<double> eigenmeasure(double t) const {
    const double eP = std::exp(pressure(t));
    std::vector<double> nu(rates_.size(), 0.0);
    nu[0] = 1.0;
    for (std::size_t j = 0; j + 1 < rates_.size(); ++j)
      nu[j + 1] = nu[j] * eP * std::pow(rates_[j], t);
    double total = 0.0;
    for (double v : nu) total += v;
    for (double& v : nu) v /= total;
    return nu;
  }

  // Right eigenfunction with h_0 = 1 (the invariant density against nu).
  [[nodiscard]] std::vector<double> eigenfunction(double t) const {
    const double eP = std::exp(pressure(t));
    std::vector<double> h(rates_.size(), 0.0);
    h[0] = 1.0;
    for (std::size_t j = 0; j + 1 < rates_.size(); ++j)
      h[j + 1] = h[j] * std::pow(rates_[j], -t) / eP;
    return h;
  }

 private:
  [[nodiscard]] std::size_t locate(cplx z) const {
    std::size_t best = 0;
    double best_d = std::abs(z - points_[0]);
    for (std::size_t j = 1; j < points_.size(); ++j) {
      const double d = std::abs(z - points_[j]);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (best_d > 1e-6)
      throw workbench_error("CycleMap: off-lattice query at (" +
                            format_double(z.real()) + ", " + format_double(z.imag()) +
                            ")");
    return best;
  }

  static ModelParams loose_params() {
    ModelParams p;
    p.modulus_floor = 0.5;
    p.borel_exponent = 0.25;
    return p;
  }

  std::vector<double> rates_;
  std::vector<cplx> points_;
};

// ---------------------------------------------------------------------------
// Angle doubling f(z) = z^2 restricted to the unit circle.  Both inverse
// branches of any w on the circle stay on the circle, |f'| = 2 there, and the
// tau-metric factor is again exactly 1, so every branch weight is 2^{-t}:
//
//   L_t 1 = 2^{1-t}  identically, hence P(t) = (1 - t) log 2, zero at t = 1.
class DoublingMap final : public MapDescriptor {
 public:
  DoublingMap() : MapDescriptor(loose_params()) {}

  [[nodiscard]] std::string name() const override { return "doubling"; }

  [[nodiscard]] MapValue eval(cplx z) const override { return MapValue::finite(z * z); }

  [[nodiscard]] cplx deriv(cplx z) const override { return 2.0 * z; }

  [[nodiscard]] std::optional<cplx> branch_point(cplx w, long k) const override {
    if (k != 0 && k != 1) return std::nullopt;
    const cplx r = std::sqrt(w);  // principal: Re >= 0
    return k == 0 ? r : -r;
  }

  [[nodiscard]] bool infinite_branching() const override { return false; }

  [[nodiscard]] double branch_tail_bound(cplx, long K, const PotentialParams&) const override {
    return K >= 1 ? 0.0 : std::numeric_limits<double>::infinity();
  }

  [[nodiscard]] std::optional<long> branch_cell_index(cplx z) const override {
    // Principal square roots fill the closed right half plane with the
    // negative-imaginary axis removed.
    if (z.real() > 0.0 || (z.real() == 0.0 && z.imag() >= 0.0)) return 0;
    return 1;
  }

  [[nodiscard]] std::vector<Pole> poles_within(double) const override { return {}; }

  [[nodiscard]] std::vector<cplx> omitted_values() const override { return {}; }

  [[nodiscard]] static double pressure(double t) { return (1.0 - t) * std::log(2.0); }

 private:
  static ModelParams loose_params() {
    ModelParams p;
    p.modulus_floor = 0.5;
    p.borel_exponent = 0.25;
    return p;
  }
};

// ---------------------------------------------------------------------------
// Independent root scanner for lambda * tan(z) = w: Newton iteration from a
// dense grid of starting points, retaining deduplicated converged roots inside
// the square [-box, box]^2.  Shares no code with the branch enumeration (no
// arctan identities; only forward evaluation of tan).
//
// The imaginary scan range may be restricted: for |Im z| >= y0 one has
// |tan z|^2 = (sin^2 x + sinh^2 y)/(cos^2 x + sinh^2 y), which lies within
// [tanh^2 y0, coth^2 y0], so |lambda tan z| <= |lambda| coth(y0).  Callers
// pass targets with |w| strictly above that bound, making roots with
// |Im z| >= y0 impossible; the scanner asserts this.
inline std::vector<cplx> tangent_roots_by_scan(double lambda, cplx w, double box = 20.0,
                                               double step = 0.4, double im_range = 2.4) {
  const double reachable = std::abs(lambda) / std::tanh(im_range);
  if (!(std::abs(w) > reachable))
    throw config_error("tangent_roots_by_scan: |w| must exceed " +
                       format_double(reachable) + " for the restricted scan");

  std::vector<cplx> roots;
  const auto try_add = [&](cplx z) {
    if (std::abs(z.real()) > box || std::abs(z.imag()) > box) return;
    for (cplx r : roots)
      if (std::abs(r - z) < 1e-6) return;
    roots.push_back(z);
  };

  for (double re = -box; re <= box + 1e-9; re += step) {
    for (double im = -im_range; im <= im_range + 1e-9; im += step) {
      cplx z(re, im);
      bool converged = false;
      for (int it = 0; it < 60; ++it) {
        const cplx tz = std::tan(z);
        if (!std::isfinite(tz.real()) || !std::isfinite(tz.imag())) break;
        const cplx g = lambda * tz - w;
        if (std::abs(g) < 1e-11) {
          converged = true;
          break;
        }
        const cplx gp = lambda * (1.0 + tz * tz);
        if (std::abs(gp) < 1e-14) break;
        const cplx zn = z - g / gp;
        if (!std::isfinite(zn.real()) || !std::isfinite(zn.imag())) break;
        z = zn;
      }
      if (converged) try_add(z);
    }
  }

  std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return roots;
}

}  // namespace merotherm::testing

#pragma once

// Atomic approximations of the conformal measure and the invariant Gibbs
// state, plus the battery of measure-level checks (eigen-measure residual,
// invariance, Gibbs ratios, tightness, quasi-invariance).
//
// Every measure built here carries, besides its merged public atom list, an
// optional reference to the preimage tree it came from with per-node weights
// aligned to the tree levels.  That payload is what makes the integrals exact:
// integrating L_t phi against an adjoint-pushed measure is a one-level shift
// down the tree (children weighted by their branch ratios), and composing with
// f is a walk to the parent — no interpolation, no re-enumeration.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "merotherm/cloud.hpp"
#include "merotherm/common.hpp"
#include "merotherm/grid.hpp"
#include "merotherm/model.hpp"
#include "merotherm/parallel.hpp"
#include "merotherm/preimage.hpp"
#include "merotherm/transfer.hpp"

namespace merotherm {

struct TestFunction {
  std::string name;
  std::function<double(cplx)> f;
  double sup_hint = 0.0;  // 0 = take the sup over the evaluation points
};

// The standard bounded-continuous test set: constants, coordinate-like
// functions, a decaying exponential, and a disk indicator.
inline std::vector<TestFunction> default_test_functions(double R_hat) {
  std::vector<TestFunction> fns;
  fns.push_back({"one", [](cplx) { return 1.0; }, 1.0});
  fns.push_back({"abs", [](cplx w) { return std::abs(w); }, 0.0});
  fns.push_back({"re", [](cplx w) { return w.real(); }, 0.0});
  fns.push_back({"exp_neg_abs", [](cplx w) { return std::exp(-std::abs(w)); }, 1.0});
  fns.push_back({"disk_indicator",
                 [R_hat](cplx w) { return std::abs(w) <= R_hat ? 1.0 : 0.0; }, 1.0});
  return fns;
}

// ---------------------------------------------------------------------------
// AtomicMeasure.

class AtomicMeasure {
 public:
  // Public merged atom view (duplicate points merged, sorted by re then im).
  std::vector<cplx> points;
  std::vector<double> weights;
  double total_mass = 0.0;
  std::string provenance;  // "nu_s" | "adjoint_power" | "gibbs" | test tags
  std::string note;        // warnings (series tails etc.)
  double series_tail = 0.0;  // reported tail of a truncated mixture series

  // Exact-integration payload: per-(level, node) weights aligned with tree
  // levels 1..levels_used.  Empty when the measure is a bare atom list.
  std::shared_ptr<const PreimageTree> tree;
  std::vector<std::vector<double>> node_weights;
  int levels_used = 0;

  [[nodiscard]] bool tree_backed() const { return tree != nullptr && levels_used > 0; }

  // Integral of phi. Deterministic: fixed per-level block sums.
  [[nodiscard]] double integrate(const std::function<double(cplx)>& phi) const {
    if (tree_backed()) {
      NeumaierSum total;
      for (int d = 0; d < levels_used; ++d) {
        const auto& lv = tree->levels[static_cast<std::size_t>(d)];
        const auto& nw = node_weights[static_cast<std::size_t>(d)];
        total.add(parallel_sum(lv.size(),
                               [&](std::size_t i) { return nw[i] * phi(lv.z[i]); }));
      }
      return total.value();
    }
    NeumaierSum acc;
    for (std::size_t i = 0; i < points.size(); ++i) acc.add(weights[i] * phi(points[i]));
    return acc.value();
  }

  // Max |phi| over the support (points carrying positive weight).
  [[nodiscard]] double sup_over_support(const std::function<double(cplx)>& phi) const {
    double sup = 0.0;
    if (tree_backed()) {
      for (int d = 0; d < levels_used; ++d) {
        const auto& lv = tree->levels[static_cast<std::size_t>(d)];
        const auto& nw = node_weights[static_cast<std::size_t>(d)];
        for (std::size_t i = 0; i < lv.size(); ++i)
          if (nw[i] > 0.0) sup = std::max(sup, std::abs(phi(lv.z[i])));
      }
      return sup;
    }
    for (std::size_t i = 0; i < points.size(); ++i)
      if (weights[i] > 0.0) sup = std::max(sup, std::abs(phi(points[i])));
    return sup;
  }

  void normalize() {
    if (!(total_mass > 0.0))
      throw workbench_error("AtomicMeasure: cannot normalize zero total mass");
    const double inv = 1.0 / total_mass;
    for (double& w : weights) w *= inv;
    for (auto& lvl : node_weights)
      for (double& w : lvl) w *= inv;
    total_mass = 1.0;
    recompute_total();
  }

  // Rebuilds the merged atom view from the tree payload.
  void rebuild_atom_view() {
    if (!tree_backed()) return;
    std::vector<std::pair<cplx, double>> raw;
    for (int d = 0; d < levels_used; ++d) {
      const auto& lv = tree->levels[static_cast<std::size_t>(d)];
      const auto& nw = node_weights[static_cast<std::size_t>(d)];
      for (std::size_t i = 0; i < lv.size(); ++i)
        if (nw[i] != 0.0) raw.emplace_back(lv.z[i], nw[i]);
    }
    std::sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) {
      if (a.first.real() != b.first.real()) return a.first.real() < b.first.real();
      return a.first.imag() < b.first.imag();
    });
    points.clear();
    weights.clear();
    points.reserve(raw.size());
    weights.reserve(raw.size());
    for (const auto& [z, w] : raw) {
      if (!points.empty() && points.back() == z)
        weights.back() += w;
      else {
        points.push_back(z);
        weights.push_back(w);
      }
    }
    recompute_total();
  }

  void recompute_total() {
    if (tree_backed()) {
      NeumaierSum total;
      for (const auto& lvl : node_weights) total.add(neumaier_total(lvl));
      total_mass = total.value();
    } else {
      total_mass = neumaier_total(weights);
    }
  }
};

// Default tree shape for measure work: pure per-node retention (so pullback
// chains survive at every depth, which disk-mass estimates need), with a fine
// root level so the spatial tail is resolved far out.
inline TreeOptions measure_tree_options() {
  TreeOptions opts;
  opts.mode = TreeOptions::PruneMode::retention;
  opts.retention_tol = 1e-3;
  opts.root_level_tol = 5e-9;
  return opts;
}

namespace detail {

inline std::shared_ptr<const PreimageTree> shared_tree(const MapDescriptor& m, cplx w0,
                                                       int depth,
                                                       const PotentialParams& p,
                                                       const TruncationPolicy& trunc,
                                                       const TreeOptions& opts) {
  auto owned = std::make_shared<PreimageTree>(
      power_one(m, w0, depth, p, trunc, opts).tree);
  return owned;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Constructions.

// (L_t^n)* delta_{w0}: atoms at the depth-n tree leaves, weight exp(S_n Phi_t);
// unnormalized (total mass = L_t^n 1(w0)).  The tree is built one level deeper
// than n so eigen-residual shifts stay exact.
inline AtomicMeasure adjoint_delta(const MapDescriptor& m, cplx w0, int n,
                                   const PotentialParams& p,
                                   const TruncationPolicy& trunc,
                                   const TreeOptions& opts = measure_tree_options()) {
  if (n < 1) throw config_error("adjoint_delta: n must be >= 1");
  AtomicMeasure mu;
  mu.provenance = "adjoint_power";
  mu.tree = detail::shared_tree(m, w0, n + 1, p, trunc, opts);
  mu.levels_used = n;
  mu.node_weights.resize(static_cast<std::size_t>(n));
  for (int d = 0; d < n; ++d) {
    const auto& lv = mu.tree->levels[static_cast<std::size_t>(d)];
    mu.node_weights[static_cast<std::size_t>(d)].assign(lv.size(), 0.0);
    if (d == n - 1) mu.node_weights[static_cast<std::size_t>(d)] = lv.cum;
  }
  mu.recompute_total();
  mu.rebuild_atom_view();
  return mu;
}

// nu_s = (1/S) sum_n b_n e^{-ns} (L_t^n)* delta_{w0}, b_n = 1, truncated at
// n_max; probability-normalized, with the series tail reported.
inline AtomicMeasure nu_s(const MapDescriptor& m, cplx w0, double s,
                          const PotentialParams& p, int n_max,
                          const TruncationPolicy& trunc, double P_hat,
                          const TreeOptions& opts = measure_tree_options()) {
  if (n_max < 1) throw config_error("nu_s: n_max must be >= 1");
  if (!(s > P_hat))
    throw domain_error("nu_s: requires s > pressure estimate (s = " + format_double(s) +
                       ", P_hat = " + format_double(P_hat) + ")");

  AtomicMeasure mu;
  mu.provenance = "nu_s";
  mu.tree = detail::shared_tree(m, w0, n_max + 1, p, trunc, opts);
  mu.levels_used = n_max;
  mu.node_weights.resize(static_cast<std::size_t>(n_max));
  NeumaierSum S;
  for (int n = 1; n <= n_max; ++n) {
    const double coeff = std::exp(-static_cast<double>(n) * s);
    const auto& lv = mu.tree->levels[static_cast<std::size_t>(n - 1)];
    auto& nw = mu.node_weights[static_cast<std::size_t>(n - 1)];
    nw.resize(lv.size());
    for (std::size_t i = 0; i < lv.size(); ++i) nw[i] = coeff * lv.cum[i];
    S.add(coeff * lv.value);
  }
  mu.recompute_total();

  // Tail of the truncated series, estimated from the next level and the
  // geometric rate e^{P_hat - s}.
  const double ratio = std::exp(P_hat - s);
  const double next_term = std::exp(-static_cast<double>(n_max + 1) * s) *
                           mu.tree->level_value(n_max + 1);
  mu.series_tail = next_term / std::max(1e-12, 1.0 - ratio) /
                   std::max(mu.total_mass, 1e-300);
  if (mu.series_tail > 1e-3)
    mu.note = "truncated mixture tail estimate " + format_double(mu.series_tail) +
              " exceeds 1e-3 of total mass";

  mu.normalize();
  mu.rebuild_atom_view();
  return mu;
}

// ---------------------------------------------------------------------------
// Conformal measure estimates.

enum class ConformalStrategy { nu_s_limit, adjoint_power };

struct ScheduleRow {
  double s = 0.0;
  std::vector<double> test_integrals;
};

struct ConformalResult {
  AtomicMeasure measure;
  std::vector<ScheduleRow> schedule;  // nu_s_limit: stability across the s schedule
  double schedule_drift = 0.0;        // max relative change over the last step
};

// nu_s_limit: nu_s along a decreasing epsilon schedule s = P_hat + eps,
// eps in {0.2, 0.1, 0.05} x (1 + |P_hat|), reporting test-integral stability;
// adjoint_power: normalized (L_t^{n_max})* delta.
inline ConformalResult conformal_estimate(const MapDescriptor& m, cplx w0,
                                          const PotentialParams& p, int n_max,
                                          const TruncationPolicy& trunc,
                                          ConformalStrategy strategy, double P_hat,
                                          const TreeOptions& opts = measure_tree_options()) {
  ConformalResult out;
  if (strategy == ConformalStrategy::adjoint_power) {
    out.measure = adjoint_delta(m, w0, n_max, p, trunc, opts);
    out.measure.normalize();
    out.measure.rebuild_atom_view();
    return out;
  }

  const auto fns = default_test_functions(10.0);
  const double unit = 1.0 + std::abs(P_hat);
  AtomicMeasure last;
  for (double eps : {0.2 * unit, 0.1 * unit, 0.05 * unit}) {
    last = nu_s(m, w0, P_hat + eps, p, n_max, trunc, P_hat, opts);
    ScheduleRow row;
    row.s = P_hat + eps;
    for (const auto& fn : fns) row.test_integrals.push_back(last.integrate(fn.f));
    out.schedule.push_back(std::move(row));
  }
  for (std::size_t j = 0; out.schedule.size() >= 2 &&
                          j < out.schedule.back().test_integrals.size();
       ++j) {
    const double a = out.schedule[out.schedule.size() - 2].test_integrals[j];
    const double b = out.schedule.back().test_integrals[j];
    const double scale = std::max({std::abs(a), std::abs(b), 1e-12});
    out.schedule_drift = std::max(out.schedule_drift, std::abs(a - b) / scale);
  }
  out.measure = std::move(last);
  return out;
}

// ---------------------------------------------------------------------------
// Residuals.

namespace detail {

// Integral of L_t phi against a tree-backed measure, by the exact one-level
// shift: each node's (L_t phi) value is the branch-weighted sum over its
// children, and child branch weights are cum ratios.
inline double integrate_applied_exact(const AtomicMeasure& mu,
                                      const std::function<double(cplx)>& phi) {
  const PreimageTree& tree = *mu.tree;
  if (tree.depth < mu.levels_used + 1)
    throw workbench_error("integrate_applied_exact: tree lacks the shift level");
  NeumaierSum total;
  for (int d = 0; d < mu.levels_used; ++d) {
    const auto& child = tree.levels[static_cast<std::size_t>(d + 1)];
    const auto& parent_cum = tree.levels[static_cast<std::size_t>(d)].cum;
    const auto& nw = mu.node_weights[static_cast<std::size_t>(d)];
    total.add(parallel_sum(child.size(), [&](std::size_t c) {
      const std::uint32_t pi = child.parent[c];
      if (nw[pi] == 0.0) return 0.0;
      return nw[pi] * (child.cum[c] / parent_cum[pi]) * phi(child.z[c]);
    }));
  }
  return total.value();
}

// Generic fallback: re-enumerate branches at every atom.  Atoms carrying less
// than a 1e-9 fraction of the mass are skipped (their contribution is bounded
// by that fraction times the branch-sum bound).
inline double integrate_applied_generic(const MapDescriptor& m, const AtomicMeasure& mu,
                                        const std::function<double(cplx)>& phi,
                                        const PotentialParams& p,
                                        const TruncationPolicy& trunc) {
  const double floor_w = 1e-9 * mu.total_mass /
                         std::max<std::size_t>(1, mu.points.size());
  NeumaierSum acc;
  for (std::size_t i = 0; i < mu.points.size(); ++i) {
    if (mu.weights[i] < floor_w) continue;
    const PreimageSet ps = preimage_set(m, mu.points[i], trunc, p);
    NeumaierSum inner;
    for (const PreimageBranch& b : ps.branches) inner.add(b.metric_weight * phi(b.z));
    acc.add(mu.weights[i] * inner.value());
  }
  return acc.value();
}

}  // namespace detail

// max over test functions of |int L_t phi dmu - e^{P_hat} int phi dmu| / sup|phi|.
inline double eigen_residual(const MapDescriptor& m, const AtomicMeasure& mu,
                             const PotentialParams& p,
                             const std::vector<TestFunction>& test_fns,
                             const TruncationPolicy& trunc, double P_hat) {
  if (test_fns.empty()) throw config_error("eigen_residual: empty test-function set");
  if (std::abs(mu.total_mass - 1.0) > 1e-9)
    throw domain_error("eigen_residual: measure must be probability-normalized");
  const double lam = std::exp(P_hat);
  double worst = 0.0;
  for (const auto& fn : test_fns) {
    const double lhs = mu.tree_backed()
                           ? detail::integrate_applied_exact(mu, fn.f)
                           : detail::integrate_applied_generic(m, mu, fn.f, p, trunc);
    const double rhs = lam * mu.integrate(fn.f);
    double sup = fn.sup_hint > 0.0 ? fn.sup_hint : mu.sup_over_support(fn.f);
    if (sup <= 0.0) sup = 1.0;
    worst = std::max(worst, std::abs(lhs - rhs) / sup);
  }
  return worst;
}

// mu_t(A) = int_A h dm_t: reweights atoms by the density h (nearest-cloud
// evaluation) and renormalizes.
inline AtomicMeasure gibbs_from_density(const MapDescriptor& /*m*/,
                                        const AtomicMeasure& mt,
                                        const GridFunction& h) {
  if (h.cloud == nullptr || h.cloud->size() == 0)
    throw workbench_error("gibbs_from_density: density has no cloud");
  NearestIndex index(h.cloud->points);
  auto h_at = [&](cplx z) {
    const double v = h.values[index.nearest(z).index];
    if (!(v > 0.0))
      throw domain_error("gibbs_from_density: density is not strictly positive at "
                         "atom (" + format_double(z.real()) + ", " +
                         format_double(z.imag()) + ")");
    return v;
  };

  AtomicMeasure mu;
  mu.provenance = "gibbs";
  if (mt.tree_backed()) {
    mu.tree = mt.tree;
    mu.levels_used = mt.levels_used;
    mu.node_weights = mt.node_weights;
    for (int d = 0; d < mu.levels_used; ++d) {
      const auto& lv = mu.tree->levels[static_cast<std::size_t>(d)];
      auto& nw = mu.node_weights[static_cast<std::size_t>(d)];
      for (std::size_t i = 0; i < lv.size(); ++i)
        if (nw[i] != 0.0) nw[i] *= h_at(lv.z[i]);
    }
  } else {
    mu.points = mt.points;
    mu.weights = mt.weights;
    for (std::size_t i = 0; i < mu.points.size(); ++i)
      if (mu.weights[i] != 0.0) mu.weights[i] *= h_at(mu.points[i]);
  }
  mu.recompute_total();
  mu.normalize();
  mu.rebuild_atom_view();
  return mu;
}

// max over test functions of |int phi(f(x)) dmu - int phi dmu| / sup|phi|.
// Uses exact tree parents for composed evaluation when available.
inline double invariance_residual(const MapDescriptor& m, const AtomicMeasure& mu,
                                  const std::vector<TestFunction>& test_fns,
                                  const TruncationPolicy& /*trunc*/) {
  if (test_fns.empty())
    throw config_error("invariance_residual: empty test-function set");
  if (std::abs(mu.total_mass - 1.0) > 1e-9)
    throw domain_error("invariance_residual: measure must be probability-normalized");

  double worst = 0.0;
  for (const auto& fn : test_fns) {
    double pushed = 0.0;
    double sup = fn.sup_hint;
    if (mu.tree_backed()) {
      const PreimageTree& tree = *mu.tree;
      NeumaierSum acc;
      for (int d = 0; d < mu.levels_used; ++d) {
        const auto& lv = tree.levels[static_cast<std::size_t>(d)];
        const auto& nw = mu.node_weights[static_cast<std::size_t>(d)];
        const auto* parent_z =
            d == 0 ? nullptr : &tree.levels[static_cast<std::size_t>(d - 1)].z;
        acc.add(parallel_sum(lv.size(), [&](std::size_t i) {
          if (nw[i] == 0.0) return 0.0;
          const cplx fz = d == 0 ? tree.root : (*parent_z)[lv.parent[i]];
          return nw[i] * fn.f(fz);
        }));
      }
      pushed = acc.value();
    } else {
      NeumaierSum acc;
      for (std::size_t i = 0; i < mu.points.size(); ++i) {
        if (mu.weights[i] == 0.0) continue;
        const MapValue fv = m.eval(mu.points[i]);
        if (fv.at_infinity)
          throw domain_error("invariance_residual: atom at a pole");
        acc.add(mu.weights[i] * fn.f(fv.value));
        if (fn.sup_hint <= 0.0) sup = std::max(sup, std::abs(fn.f(fv.value)));
      }
      pushed = acc.value();
    }
    const double direct = mu.integrate(fn.f);
    if (fn.sup_hint <= 0.0) sup = std::max(sup, mu.sup_over_support(fn.f));
    if (sup <= 0.0) sup = 1.0;
    worst = std::max(worst, std::abs(pushed - direct) / sup);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Gibbs ratios.

struct GibbsRatioRow {
  cplx z{};
  int n = 0;
  double radius = 0.0;
  double disk_mass = 0.0;
  double comparison = 0.0;  // exp(S_n Phi_t(z) - n P)
  double ratio = 0.0;
  long atoms_in_disk = 0;  // distinct atom positions captured
  // false: the disk sits below the atomic resolution (fewer than two distinct
  // positions inside), so its mass is reported but never coerced to zero.
  bool resolved = false;
};

// mu(D(z, (delta/4) |(f^n)'(z)|^{-1})) / exp(S_n Phi_t(z) - n P) for each
// sample point and each n in n_range.
inline std::vector<GibbsRatioRow> gibbs_ratio(const MapDescriptor& m,
                                              const AtomicMeasure& mu,
                                              const std::vector<cplx>& z_samples,
                                              const std::vector<int>& n_range,
                                              const PotentialParams& p, double P) {
  std::vector<GibbsRatioRow> rows;
  const double delta = m.params().distortion_scale;
  for (cplx z : z_samples) {
    for (int n : n_range) {
      GibbsRatioRow row;
      row.z = z;
      row.n = n;
      // |(f^n)'(z)| along the forward orbit, and S_n Phi_t via the tau-metric.
      double log_deriv = 0.0;
      double ergodic = 0.0;
      cplx cur = z;
      bool ok = true;
      for (int i = 0; i < n; ++i) {
        cplx dz;
        try {
          dz = m.deriv(cur);
          ergodic += potential(m, cur, p);
        } catch (const domain_error&) {
          ok = false;
          break;
        }
        log_deriv += std::log(std::abs(dz));
        const MapValue next = m.eval(cur);
        if (next.at_infinity) {
          ok = false;
          break;
        }
        cur = next.value;
      }
      if (!ok)
        throw domain_error("gibbs_ratio: orbit of sample hit a pole before depth " +
                           std::to_string(n));
      row.radius = (delta / 4.0) * std::exp(-log_deriv);
      NeumaierSum mass;
      for (std::size_t i = 0; i < mu.points.size(); ++i)
        if (std::abs(mu.points[i] - z) <= row.radius) {
          mass.add(mu.weights[i]);
          ++row.atoms_in_disk;  // atom view holds distinct positions
        }
      row.disk_mass = mass.value();
      row.comparison = std::exp(ergodic - static_cast<double>(n) * P);
      row.resolved = row.atoms_in_disk >= 2;
      row.ratio = row.disk_mass > 0.0 ? row.disk_mass / row.comparison : 0.0;
      rows.push_back(row);
    }
  }
  return rows;
}

// Keeps sample points whose forward orbit dips below modulus R_t within n_max
// steps (the bounded-liminf surrogate).
inline std::vector<cplx> filter_bounded_orbit(const MapDescriptor& m,
                                              const std::vector<cplx>& pts, int n_max,
                                              double R_t) {
  std::vector<cplx> out;
  for (cplx z : pts) {
    cplx cur = z;
    bool bounded = false;
    for (int i = 0; i < n_max; ++i) {
      const MapValue next = m.eval(cur);
      if (next.at_infinity) break;
      cur = next.value;
      if (std::abs(cur) <= R_t) {
        bounded = true;
        break;
      }
    }
    if (bounded) out.push_back(z);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tightness and quasi-invariance.

// Fraction of mass beyond modulus R.
inline double tail_mass(const AtomicMeasure& mu, double R) {
  if (!(R > 0.0)) throw config_error("tail_mass: R must be > 0");
  if (!(mu.total_mass > 0.0)) throw workbench_error("tail_mass: empty measure");
  NeumaierSum tail;
  for (std::size_t i = 0; i < mu.points.size(); ++i)
    if (std::abs(mu.points[i]) > R) tail.add(mu.weights[i]);
  return tail.value() / mu.total_mass;
}

// A cell beyond the reference radius: modulus shell x real-part sign.
struct BorelBox {
  double r_lo = 0.0;
  double r_hi = 0.0;
  int re_sign = 0;  // +1 / -1

  [[nodiscard]] bool contains(cplx z) const {
    const double a = std::abs(z);
    if (!(a > r_lo && a <= r_hi)) return false;
    return re_sign >= 0 ? z.real() >= 0.0 : z.real() < 0.0;
  }
};

// Dyadic shells x sign(Re) covering (R, 8R].
inline std::vector<BorelBox> default_borel_boxes(double R, int shells = 3) {
  std::vector<BorelBox> boxes;
  double lo = R;
  for (int j = 0; j < shells; ++j) {
    boxes.push_back({lo, 2.0 * lo, +1});
    boxes.push_back({lo, 2.0 * lo, -1});
    lo *= 2.0;
  }
  return boxes;
}

struct BoxRatio {
  BorelBox box;
  double mass = 0.0;
  double preimage_mass = 0.0;
  double ratio = 0.0;
  bool skipped = false;  // zero-mass box
};

struct QuasiInvarianceResult {
  double R = 0.0;
  double c_R = 0.0;  // max ratio over boxes with positive mass
  std::vector<BoxRatio> boxes;
  int used_boxes = 0;
};

// Empirical quasi-invariance ratio: mu(f^{-1}(B)) / mu(B) over cells beyond
// radius R, with mu(f^{-1}(B)) computed from forward images (tree parents when
// available).
inline QuasiInvarianceResult quasi_invariance_check(const MapDescriptor& m,
                                                    const AtomicMeasure& mu, double R,
                                                    const std::vector<BorelBox>& boxes,
                                                    const PotentialParams& /*p*/) {
  QuasiInvarianceResult out;
  out.R = R;
  for (const BorelBox& box : boxes) {
    BoxRatio row;
    row.box = box;
    NeumaierSum mass;
    for (std::size_t i = 0; i < mu.points.size(); ++i)
      if (box.contains(mu.points[i])) mass.add(mu.weights[i]);
    row.mass = mass.value();
    if (!(row.mass > 0.0)) {
      row.skipped = true;
      out.boxes.push_back(row);
      continue;
    }
    NeumaierSum pre;
    if (mu.tree_backed()) {
      const PreimageTree& tree = *mu.tree;
      for (int d = 0; d < mu.levels_used; ++d) {
        const auto& lv = tree.levels[static_cast<std::size_t>(d)];
        const auto& nw = mu.node_weights[static_cast<std::size_t>(d)];
        const auto* parent_z =
            d == 0 ? nullptr : &tree.levels[static_cast<std::size_t>(d - 1)].z;
        for (std::size_t i = 0; i < lv.size(); ++i) {
          if (nw[i] == 0.0) continue;
          const cplx fz = d == 0 ? tree.root : (*parent_z)[lv.parent[i]];
          if (box.contains(fz)) pre.add(nw[i]);
        }
      }
    } else {
      for (std::size_t i = 0; i < mu.points.size(); ++i) {
        if (mu.weights[i] == 0.0) continue;
        const MapValue fv = m.eval(mu.points[i]);
        if (!fv.at_infinity && box.contains(fv.value)) pre.add(mu.weights[i]);
      }
    }
    row.preimage_mass = pre.value();
    row.ratio = row.preimage_mass / row.mass;
    out.c_R = std::max(out.c_R, row.ratio);
    ++out.used_boxes;
    out.boxes.push_back(row);
  }
  return out;
}

// mu(x : |f^i(x)| > R for all i <= n) for each n in n_list, read off ancestor
// chains of a tree-backed measure.  Beyond its own level an atom's forward
// orbit continues from the tree root.
inline std::vector<double> iterated_exterior_mass(const MapDescriptor& m,
                                                  const AtomicMeasure& mu, double R,
                                                  const std::vector<int>& n_list) {
  if (!mu.tree_backed())
    throw workbench_error("iterated_exterior_mass: needs a tree-backed measure");
  const PreimageTree& tree = *mu.tree;

  // Consecutive beyond-R prefix of the root's forward orbit, root included.
  const int cap = 1000000;  // sentinel: every checked image stays outside
  int root_streak = 0;
  {
    cplx cur = tree.root;
    for (int i = 0; i < 64; ++i) {
      if (!(std::abs(cur) > R)) break;
      ++root_streak;
      const MapValue next = m.eval(cur);
      if (next.at_infinity) {
        root_streak = cap;  // orbit leaves through a pole: treat as staying out
        break;
      }
      cur = next.value;
    }
  }

  // streak[d][i] = number of consecutive images f^1(x), f^2(x), ... of node
  // (d, i) lying beyond R.  f^1 is the parent point; a node's images beyond
  // its own depth continue along the root's forward orbit.
  std::vector<std::vector<int>> streak(static_cast<std::size_t>(mu.levels_used));
  for (int d = 0; d < mu.levels_used; ++d) {
    const auto& lv = tree.levels[static_cast<std::size_t>(d)];
    streak[static_cast<std::size_t>(d)].assign(lv.size(), 0);
    for (std::size_t i = 0; i < lv.size(); ++i) {
      if (d == 0) {
        // First image is the root itself, so the whole streak is the root's.
        streak[0][i] = root_streak;
        continue;
      }
      const cplx fz = tree.levels[static_cast<std::size_t>(d - 1)].z[lv.parent[i]];
      if (!(std::abs(fz) > R)) continue;
      const int ps = streak[static_cast<std::size_t>(d - 1)][lv.parent[i]];
      streak[static_cast<std::size_t>(d)][i] = 1 + std::min(ps, cap - 1);
    }
  }

  std::vector<double> out;
  for (int n : n_list) {
    NeumaierSum mass;
    for (int d = 0; d < mu.levels_used; ++d) {
      const auto& nw = mu.node_weights[static_cast<std::size_t>(d)];
      const auto& st = streak[static_cast<std::size_t>(d)];
      for (std::size_t i = 0; i < nw.size(); ++i)
        if (nw[i] != 0.0 && st[i] >= n) mass.add(nw[i]);
    }
    out.push_back(mass.value() / mu.total_mass);
  }
  return out;
}

// First R in the grid whose quasi-invariance ratio drops below the knee
// threshold; the bounded-orbit radius surrogate.
inline double estimate_R_t(const MapDescriptor& m, const AtomicMeasure& mu,
                           const std::vector<double>& R_grid,
                           const PotentialParams& p, double knee = 0.1) {
  for (double R : R_grid) {
    const auto q = quasi_invariance_check(m, mu, R, default_borel_boxes(R), p);
    if (q.used_boxes > 0 && q.c_R <= knee) return R;
  }
  return R_grid.empty() ? 0.0 : R_grid.back();
}

}  // namespace merotherm

#pragma once

// The transfer-operator engine.  Two evaluation paths, deliberately separate:
//   * exact weighted preimage trees for iterates of the constant function 1
//     (pressure estimation and measure construction) — no interpolation at
//     all, truncation controlled by certified tail accounting;
//   * a single interpolated application L_t phi on cloud-discretized functions
//     (density iteration), with nearest-neighbor lookup for off-cloud
//     preimages and an explicit tail + interpolation error report.
//
// Determinism contract: at fixed truncation settings every result here is
// bit-identical across worker counts.  Tree levels are assembled in fixed
// parent-block order, reductions use the block-ordered Neumaier scheme from
// parallel.hpp, and pruning decisions are made on deterministically ordered
// data.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include "merotherm/cloud.hpp"
#include "merotherm/common.hpp"
#include "merotherm/grid.hpp"
#include "merotherm/model.hpp"
#include "merotherm/parallel.hpp"
#include "merotherm/preimage.hpp"

namespace merotherm {

// ---------------------------------------------------------------------------
// Weighted preimage trees.

struct TreeOptions {
  enum class PruneMode { retention, budget };
  PruneMode mode = PruneMode::retention;

  // Per-node branch retention: a branch is kept while its weight is at least
  // retention_tol times the node's running branch-weight sum.  root_level_tol,
  // when positive, overrides this for the root's own expansion so the first
  // level can resolve far-out branches (the spatial tail of the measures).
  double retention_tol = 2e-4;
  double root_level_tol = 0.0;

  // Budget mode adds per-level pruning on top of (a typically much finer)
  // retention_tol: keep at most node_budget nodes per level (largest
  // cumulative weights first) and drop nodes below cum_tol times the level sum.
  long node_budget = 0;        // 0 = unlimited
  double cum_tol = 0.0;

  // Safety rails.
  long max_total_nodes = 8000000;  // hard cap -> error reporting achieved depth
  long k_floor = 8;                // always examine at least |k| <= k_floor per node
  long k_ceiling = 4096;           // per-node enumeration hard cap

  // Growth bound B for tail certificates: discarded mass at a level is
  // amplified by at most B per remaining level.  <= 0 means "use 1.5 x the
  // empirical sup of the branch-weight sum over the tree's own nodes".
  double growth_bound = 0.0;
};

struct TreeLevel {
  std::vector<cplx> z;
  std::vector<double> cum;            // exp(S_k Phi_t) along the branch word
  std::vector<long> k;                // branch index taken at this step
  std::vector<std::uint32_t> parent;  // index into the previous level
  double value = 0.0;                 // Neumaier sum of cum, fixed order
  double dropped_abs = 0.0;           // absolute cum mass discarded making this level

  [[nodiscard]] std::size_t size() const { return z.size(); }
};

class PreimageTree {
 public:
  cplx root{};
  int depth = 0;
  std::vector<TreeLevel> levels;  // levels[d] holds the depth-(d+1) nodes
  double tail_certificate = 0.0;  // certified bound on total discarded leaf mass
  double growth_bound_used = 0.0;

  // L_t^n 1(root) as summed over the kept depth-n nodes (1-based n).
  [[nodiscard]] double level_value(int n) const {
    if (n < 1 || n > depth) throw workbench_error("PreimageTree: level out of range");
    return levels[static_cast<std::size_t>(n - 1)].value;
  }
  [[nodiscard]] double value() const { return level_value(depth); }

  [[nodiscard]] std::size_t total_nodes() const {
    std::size_t s = 0;
    for (const auto& lv : levels) s += lv.size();
    return s;
  }

  // Branch word from the root to node i of depth-n level (outermost first).
  [[nodiscard]] std::vector<long> word(int n, std::size_t i) const {
    std::vector<long> w;
    for (int d = n - 1; d >= 0; --d) {
      const auto& lv = levels[static_cast<std::size_t>(d)];
      w.push_back(lv.k[i]);
      i = lv.parent[i];
    }
    std::reverse(w.begin(), w.end());
    return w;
  }

  // Node `up` generations above node i of depth-n level; up = n returns the
  // root.  Returns the point.
  [[nodiscard]] cplx ancestor_point(int n, std::size_t i, int up) const {
    if (up < 0 || up > n) throw workbench_error("PreimageTree: bad ancestor height");
    int d = n - 1;
    while (up > 0 && d >= 0) {
      const auto& lv = levels[static_cast<std::size_t>(d)];
      if (up == 1) return d == 0 ? root : levels[static_cast<std::size_t>(d - 1)].z[lv.parent[i]];
      i = lv.parent[i];
      --d;
      --up;
    }
    return levels[static_cast<std::size_t>(d)].z[i];
  }
};

namespace detail {

struct NodeExpansion {
  std::vector<long> k;
  std::vector<cplx> z;
  std::vector<double> weight;
  double dropped_rel = 0.0;   // dropped branch weights + certified enumeration tail
  double branch_sum = 0.0;    // kept + dropped weights (local L_t 1 estimate)
};

// Enumerates branches of w by |k| then sign, keeping a branch while its weight
// is at least tol_keep times the running sum.  Stops once both signs fall
// three orders below the retention threshold (weights are radius-decaying, so
// later branches cannot recover) and certifies the remainder via the
// closed-form tail bound.
inline NodeExpansion expand_node(const MapDescriptor& m, cplx w,
                                 const PotentialParams& p, double tol_keep,
                                 long k_floor, long k_ceiling) {
  NodeExpansion out;
  NeumaierSum kept_and_dropped;
  double running = 0.0;
  double dropped = 0.0;
  long k_stop = k_ceiling;

  auto consider = [&](long k) -> double {
    const auto z = m.branch_point(w, k);
    if (!z) return 0.0;
    const cplx fp = m.deriv(*z);
    const double wt = branch_weight(fp, *z, w, p);
    running += wt;
    kept_and_dropped.add(wt);
    if (wt >= tol_keep * running) {
      out.k.push_back(k);
      out.z.push_back(*z);
      out.weight.push_back(wt);
    } else {
      dropped += wt;
    }
    return wt;
  };

  consider(0);
  for (long k = 1; k <= k_ceiling; ++k) {
    const double wa = consider(-k);
    const double wb = consider(k);
    if (k >= k_floor && std::max(wa, wb) < 1e-3 * tol_keep * running) {
      k_stop = k;
      break;
    }
  }
  out.dropped_rel = dropped + m.branch_tail_bound(w, k_stop, p);
  out.branch_sum = kept_and_dropped.value();
  return out;
}

}  // namespace detail

// Builds the depth-n weighted preimage tree of root.  Throws (reporting the
// achieved depth) if the node cap is exceeded.
inline PreimageTree build_preimage_tree(const MapDescriptor& m, cplx root, int n,
                                        const PotentialParams& p,
                                        const TreeOptions& opts = TreeOptions{}) {
  if (n < 1) throw config_error("build_preimage_tree: depth must be >= 1");
  require_admissible(m, p);

  PreimageTree tree;
  tree.root = root;
  tree.depth = n;
  tree.levels.resize(static_cast<std::size_t>(n));

  double sup_branch_sum = 0.0;
  std::vector<double> level_dropped(static_cast<std::size_t>(n), 0.0);

  // Virtual level 0: the root with cumulative weight 1.
  const std::vector<cplx> root_z{root};
  const std::vector<double> root_cum{1.0};
  const std::vector<cplx>* prev_z = &root_z;
  const std::vector<double>* prev_cum = &root_cum;
  std::size_t total_nodes = 0;

  for (int d = 0; d < n; ++d) {
    TreeLevel& lv = tree.levels[static_cast<std::size_t>(d)];
    const std::size_t nparents = prev_z->size();
    const double tol = (d == 0 && opts.root_level_tol > 0.0) ? opts.root_level_tol
                                                             : opts.retention_tol;

    struct BlockOut {
      std::vector<cplx> z;
      std::vector<double> cum;
      std::vector<long> k;
      std::vector<std::uint32_t> parent;
      NeumaierSum dropped_abs;
      double max_branch_sum = 0.0;
    };
    std::vector<BlockOut> blocks((nparents + detail::kBlock - 1) / detail::kBlock);

    parallel_blocks(nparents, [&](std::size_t bi, std::size_t begin, std::size_t end) {
      BlockOut& b = blocks[bi];
      for (std::size_t i = begin; i < end; ++i) {
        const auto ex = detail::expand_node(m, (*prev_z)[i], p, tol, opts.k_floor,
                                            opts.k_ceiling);
        b.max_branch_sum = std::max(b.max_branch_sum, ex.branch_sum);
        b.dropped_abs.add(ex.dropped_rel * (*prev_cum)[i]);
        for (std::size_t c = 0; c < ex.k.size(); ++c) {
          b.z.push_back(ex.z[c]);
          b.cum.push_back((*prev_cum)[i] * ex.weight[c]);
          b.k.push_back(ex.k[c]);
          b.parent.push_back(static_cast<std::uint32_t>(i));
        }
      }
    });

    // Deterministic concatenation in block order.
    NeumaierSum dropped_this_level;
    std::size_t count = 0;
    for (const BlockOut& b : blocks) count += b.z.size();
    lv.z.reserve(count);
    lv.cum.reserve(count);
    lv.k.reserve(count);
    lv.parent.reserve(count);
    for (BlockOut& b : blocks) {
      lv.z.insert(lv.z.end(), b.z.begin(), b.z.end());
      lv.cum.insert(lv.cum.end(), b.cum.begin(), b.cum.end());
      lv.k.insert(lv.k.end(), b.k.begin(), b.k.end());
      lv.parent.insert(lv.parent.end(), b.parent.begin(), b.parent.end());
      dropped_this_level.add(b.dropped_abs.value());
      sup_branch_sum = std::max(sup_branch_sum, b.max_branch_sum);
    }

    // Budget-mode level pruning: keep the node_budget largest cumulative
    // weights and everything above cum_tol x level sum; order preserved.
    if (opts.mode == TreeOptions::PruneMode::budget &&
        (opts.node_budget > 0 || opts.cum_tol > 0.0)) {
      const std::size_t sz = lv.size();
      const double level_sum = neumaier_total(lv.cum);
      std::vector<std::uint32_t> order(sz);
      std::iota(order.begin(), order.end(), 0u);
      std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (lv.cum[a] != lv.cum[b]) return lv.cum[a] > lv.cum[b];
        return a < b;
      });
      std::vector<char> keep(sz, 1);
      if (opts.node_budget > 0)
        for (std::size_t r = static_cast<std::size_t>(opts.node_budget); r < sz; ++r)
          keep[order[r]] = 0;
      if (opts.cum_tol > 0.0) {
        const double floor_cum = opts.cum_tol * level_sum;
        for (std::size_t i = 0; i < sz; ++i)
          if (lv.cum[i] < floor_cum) keep[i] = 0;
      }
      TreeLevel pruned;
      pruned.z.reserve(sz);
      pruned.cum.reserve(sz);
      pruned.k.reserve(sz);
      pruned.parent.reserve(sz);
      for (std::size_t i = 0; i < sz; ++i) {
        if (keep[i]) {
          pruned.z.push_back(lv.z[i]);
          pruned.cum.push_back(lv.cum[i]);
          pruned.k.push_back(lv.k[i]);
          pruned.parent.push_back(lv.parent[i]);
        } else {
          dropped_this_level.add(lv.cum[i]);
        }
      }
      pruned.value = 0.0;
      lv = std::move(pruned);
    }

    lv.dropped_abs = dropped_this_level.value();
    level_dropped[static_cast<std::size_t>(d)] = lv.dropped_abs;
    lv.value = parallel_sum(lv.cum.size(), [&](std::size_t i) { return lv.cum[i]; });

    total_nodes += lv.size();
    if (static_cast<long>(total_nodes) > opts.max_total_nodes)
      throw workbench_error("build_preimage_tree: node cap " +
                            std::to_string(opts.max_total_nodes) +
                            " exceeded at depth " + std::to_string(d + 1) + " of " +
                            std::to_string(n));
    if (lv.size() == 0)
      throw workbench_error("build_preimage_tree: level " + std::to_string(d + 1) +
                            " pruned to zero nodes");

    prev_z = &lv.z;
    prev_cum = &lv.cum;
  }

  // Tail certificate: mass discarded while making level l can grow by at most
  // B per remaining level.
  const double B = opts.growth_bound > 0.0
                       ? std::max(opts.growth_bound, 1.5 * sup_branch_sum)
                       : 1.5 * sup_branch_sum;
  tree.growth_bound_used = B;
  NeumaierSum cert;
  for (int d = 0; d < n; ++d)
    cert.add(level_dropped[static_cast<std::size_t>(d)] *
             std::pow(B, static_cast<double>(n - 1 - d)));
  tree.tail_certificate = cert.value();
  return tree;
}

struct PowerOneResult {
  double value = 0.0;
  PreimageTree tree;
};

// L_t^n 1(w) summed exactly over the truncated depth-n preimage tree.
// trunc.K caps the per-node enumeration range (so the value is monotone
// nondecreasing in K and the certificate covers what a larger K would add);
// the retention rule prunes within that range.
inline PowerOneResult power_one(const MapDescriptor& m, cplx w, int n,
                                const PotentialParams& p,
                                const TruncationPolicy& trunc,
                                TreeOptions opts = TreeOptions{}) {
  trunc.validate();
  opts.k_ceiling = std::min(opts.k_ceiling, std::max<long>(1, trunc.K));
  opts.k_floor = std::min(opts.k_floor, opts.k_ceiling);
  PowerOneResult out;
  out.tree = build_preimage_tree(m, w, n, p, opts);
  out.value = out.tree.value();
  return out;
}

// e^{-nP} L_t^n 1(w).
inline double normalized_power_one(const MapDescriptor& m, cplx w, int n,
                                   const PotentialParams& p,
                                   const TruncationPolicy& trunc, double P,
                                   const TreeOptions& opts = TreeOptions{}) {
  return std::exp(-static_cast<double>(n) * P) * power_one(m, w, n, p, trunc, opts).value;
}

// The whole normalized sequence e^{-nP} L_t^n 1(w), n = 1..n_max, read off one
// depth-n_max tree.
inline std::vector<double> normalized_band(const MapDescriptor& m, cplx w, int n_max,
                                           const PotentialParams& p,
                                           const TruncationPolicy& trunc, double P,
                                           TreeOptions opts = TreeOptions{}) {
  const PowerOneResult r = power_one(m, w, n_max, p, trunc, opts);
  std::vector<double> band;
  band.reserve(static_cast<std::size_t>(n_max));
  for (int k = 1; k <= n_max; ++k)
    band.push_back(std::exp(-static_cast<double>(k) * P) * r.tree.level_value(k));
  return band;
}

// ---------------------------------------------------------------------------
// Interpolated single application on cloud functions.

struct CloudContext {
  const JuliaCloud* cloud = nullptr;
  NearestIndex index;

  explicit CloudContext(const JuliaCloud& c) : cloud(&c), index(c.points) {}
};

struct ApplyResult {
  GridFunction out;
  // Sup-norm bound covering certified branch tails plus the weight of branches
  // landing beyond the cloud's coverage (where phi has no sampled value).
  double tail_error = 0.0;
  double interp_error = 0.0;  // max in-coverage lookup distance x Lipschitz of phi
  double masked_weight = 0.0;  // worst per-point weight outside coverage
};

// (L_t phi)(w) = sum over branches of metric_weight x phi(z), phi evaluated by
// nearest-cloud-neighbor lookup.  Branches whose preimage lands farther from
// the cloud than a few resolutions carry no usable sample of phi; their weight
// is excluded from the sum and charged to the tail bound at sup|phi| instead
// of being extrapolated from boundary values.  Refuses when the cloud is too
// coarse for the lookup to be meaningful (resolution worse than the
// distortion scale).
inline ApplyResult apply(const MapDescriptor& m, const CloudContext& ctx,
                         const GridFunction& phi, const PotentialParams& p,
                         const TruncationPolicy& trunc) {
  if (phi.cloud != ctx.cloud)
    throw workbench_error("apply: phi is not discretized on the context cloud");
  const JuliaCloud& cloud = *ctx.cloud;
  if (cloud.pairwise_resolution > m.params().distortion_scale)
    throw domain_error("apply: cloud resolution " +
                       format_double(cloud.pairwise_resolution) +
                       " is coarser than the distortion scale " +
                       format_double(m.params().distortion_scale) +
                       "; nearest-neighbor evaluation is unjustified");
  require_admissible(m, p);
  const double coverage = 4.0 * std::max(cloud.pairwise_resolution, 1e-12);

  const std::size_t npts = cloud.size();
  GridFunction out(cloud, 0.0);
  const std::size_t nblocks = (npts + detail::kBlock - 1) / detail::kBlock;
  std::vector<double> block_tail(nblocks, 0.0);
  std::vector<double> block_dist(nblocks, 0.0);
  std::vector<double> block_masked(nblocks, 0.0);

  parallel_blocks(npts, [&](std::size_t bi, std::size_t begin, std::size_t end) {
    double worst_tail = 0.0;
    double worst_dist = 0.0;
    double worst_masked = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const PreimageSet ps = preimage_set(m, cloud.points[i], trunc, p);
      NeumaierSum acc;
      NeumaierSum masked;
      for (const PreimageBranch& b : ps.branches) {
        const auto hit = ctx.index.nearest(b.z);
        if (hit.distance > coverage) {
          masked.add(b.metric_weight);
          continue;
        }
        worst_dist = std::max(worst_dist, hit.distance);
        acc.add(b.metric_weight * phi.values[hit.index]);
      }
      out.values[i] = acc.value();
      worst_tail = std::max(worst_tail, ps.tail_bound + masked.value());
      worst_masked = std::max(worst_masked, masked.value());
    }
    block_tail[bi] = worst_tail;
    block_dist[bi] = worst_dist;
    block_masked[bi] = worst_masked;
  });

  out.refresh();
  ApplyResult res;
  res.out = std::move(out);
  const double max_tail =
      block_tail.empty() ? 0.0 : *std::max_element(block_tail.begin(), block_tail.end());
  const double max_dist =
      block_dist.empty() ? 0.0 : *std::max_element(block_dist.begin(), block_dist.end());
  res.masked_weight = block_masked.empty()
                          ? 0.0
                          : *std::max_element(block_masked.begin(), block_masked.end());
  res.tail_error = max_tail * phi.sup_norm;
  res.interp_error = max_dist * lipschitz_estimate(phi, ctx.index);
  return res;
}

// ---------------------------------------------------------------------------
// Cesaro fixed-point density of the normalized operator.

struct CesaroResult {
  GridFunction h;
  double residual = 0.0;  // sup|L-hat h - h| / sup h
  std::vector<int> history_terms;
  std::vector<double> residual_history;  // residual of partial averages
  bool residual_decreasing = true;
  std::string note;
  double tail_error = 0.0;
  double interp_error = 0.0;
};

// h_m = (1/m) sum_{k=1..m} (e^{-P} L_t)^k 1, with the fixed-point residual of
// the final average and of power-of-two partial averages along the way.
inline CesaroResult cesaro_density(const MapDescriptor& m, const CloudContext& ctx,
                                   const PotentialParams& p,
                                   const TruncationPolicy& trunc, double P,
                                   int n_terms) {
  if (n_terms < 1) throw config_error("cesaro_density: n_terms must be >= 1");
  const JuliaCloud& cloud = *ctx.cloud;
  const double scale = std::exp(-P);

  GridFunction g(cloud, 1.0);
  std::vector<NeumaierSum> acc(cloud.size());
  CesaroResult res;

  auto partial_average = [&](int terms) {
    GridFunction avg(cloud, 0.0);
    for (std::size_t i = 0; i < cloud.size(); ++i)
      avg.values[i] = acc[i].value() / static_cast<double>(terms);
    avg.refresh();
    return avg;
  };
  auto residual_of = [&](const GridFunction& h) {
    ApplyResult ar = apply(m, ctx, h, p, trunc);
    double worst = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i)
      worst = std::max(worst, std::abs(scale * ar.out.values[i] - h.values[i]));
    res.tail_error = std::max(res.tail_error, ar.tail_error);
    res.interp_error = std::max(res.interp_error, ar.interp_error);
    return h.sup_norm > 0.0 ? worst / h.sup_norm : std::numeric_limits<double>::infinity();
  };

  for (int k = 1; k <= n_terms; ++k) {
    ApplyResult ar = apply(m, ctx, g, p, trunc);
    res.tail_error = std::max(res.tail_error, ar.tail_error);
    res.interp_error = std::max(res.interp_error, ar.interp_error);
    g = std::move(ar.out);
    for (std::size_t i = 0; i < cloud.size(); ++i) g.values[i] *= scale;
    g.refresh();
    for (std::size_t i = 0; i < cloud.size(); ++i) acc[i].add(g.values[i]);
    const bool checkpoint = (k & (k - 1)) == 0 || k == n_terms;  // powers of 2
    if (checkpoint && k < n_terms) {
      res.history_terms.push_back(k);
      res.residual_history.push_back(residual_of(partial_average(k)));
    }
  }

  res.h = partial_average(n_terms);
  res.residual = residual_of(res.h);
  res.history_terms.push_back(n_terms);
  res.residual_history.push_back(res.residual);

  res.residual_decreasing =
      res.residual_history.back() <= res.residual_history.front();
  if (!res.residual_decreasing)
    res.note = "fixed-point residual did not decrease across partial averages";
  return res;
}

// ---------------------------------------------------------------------------
// Operator tail bound c_t / R^{r_t}.

struct TailFit {
  double c_fit = 0.0;      // sup-fitted constant of the branch-weight envelope
  double borel_tail = 0.0; // sup over the fit grid of R^{r_t} x preimage-modulus tail sum
};

// Fits the two empirical constants entering the tail bound, using the cloud's
// seed as the reference target: c_fit as the sup over sampled preimage
// branches of the envelope ratio, borel_tail from deep branch enumeration.
inline TailFit fit_tail_constants(const MapDescriptor& m, const JuliaCloud& cloud,
                                  const PotentialParams& p,
                                  const TruncationPolicy& trunc,
                                  std::size_t sample_targets = 40, long deep_K = 2000) {
  require_admissible(m, p);
  TailFit fit;
  const double env = envelope_exponent(m, p);
  const double u = (p.tau - 1.0) * p.t;
  const double rt = tail_exponent(m, p);
  if (rt <= 0.0)
    throw config_error("fit_tail_constants: tail exponent must be positive (t too small)");

  // c_fit: sup over (w, z) preimage pairs of [weight x |w|^{env} x |z|^{u}]^{1/t}.
  const std::size_t stride = std::max<std::size_t>(1, cloud.size() / sample_targets);
  double csup = 0.0;
  for (std::size_t i = 0; i < cloud.size(); i += stride) {
    const cplx w = cloud.points[i];
    const PreimageSet ps = preimage_set(m, w, trunc, p);
    for (const PreimageBranch& b : ps.branches) {
      const double val = b.metric_weight * std::pow(std::abs(w), env) *
                         std::pow(std::abs(b.z), u);
      csup = std::max(csup, std::pow(val, 1.0 / p.t));
    }
  }
  fit.c_fit = csup;

  // borel_tail: deep enumeration of preimage moduli of the seed.
  std::vector<double> moduli;
  for (long k = -deep_K; k <= deep_K; ++k)
    if (auto z = m.branch_point(cloud.seed, k)) moduli.push_back(std::abs(*z));
  std::sort(moduli.begin(), moduli.end());
  double bsup = 0.0;
  for (double R : {5.0, 10.0, 20.0, 40.0}) {
    NeumaierSum tail;
    for (auto it = std::lower_bound(moduli.begin(), moduli.end(), R);
         it != moduli.end(); ++it)
      tail.add(std::pow(*it, -u));
    bsup = std::max(bsup, std::pow(R, rt) * tail.value());
  }
  fit.borel_tail = bsup;
  return fit;
}

// Uniform bound on the operator mass escaping past radius R:
// sum over branches |z| > R of metric weight <= c_t / R^{r_t}.
inline double tail_bound(const MapDescriptor& m, double R, const PotentialParams& p,
                         const TailFit& fit) {
  if (R <= 1.0) throw config_error("tail_bound: R must exceed 1");
  const double rt = tail_exponent(m, p);
  if (rt <= 0.0)
    throw config_error("tail_bound: requires t > rho/(tau-1) so the tail exponent is positive");
  const double c_t = std::pow(fit.c_fit, p.t) *
                     std::pow(m.params().modulus_floor, -envelope_exponent(m, p)) *
                     fit.borel_tail;
  return c_t / std::pow(R, rt);
}

// 1.5 x the empirical sup of L_t 1 over the cloud; the growth bound used in
// tree tail certificates.
inline double growth_bound_estimate(const MapDescriptor& m, const JuliaCloud& cloud,
                                    const PotentialParams& p,
                                    const TruncationPolicy& trunc) {
  double sup = 0.0;
  for (cplx w : cloud.points) {
    const PreimageSet ps = preimage_set(m, w, trunc, p);
    sup = std::max(sup, ps.weight_sum + ps.tail_bound);
  }
  return 1.5 * sup;
}

}  // namespace merotherm

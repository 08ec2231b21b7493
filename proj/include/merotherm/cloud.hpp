#pragma once

// Backward-orbit sampling of the Julia set.  The cloud is the discretization
// carrier for everything downstream: grid functions live on it, operators are
// evaluated at its points, and the distortion scale delta is estimated from
// its distance to the forward orbit of the singular values.
//
// Sampling is deliberately serial: the only randomness in the whole workbench
// lives here, confined to one seeded generator, so a fixed rng_seed yields a
// byte-identical cloud regardless of worker count.  Every generation keeps its
// parents, so the backward-orbit consistency invariant (f maps each point onto
// some retained point, up to preimage_tol) survives subsampling.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "merotherm/common.hpp"
#include "merotherm/model.hpp"
#include "merotherm/parallel.hpp"

namespace merotherm {

struct JuliaCloud {
  std::vector<cplx> points;
  std::vector<int> depths;          // backward-orbit generation of each point
  int depth = 0;                    // deepest generation sampled
  cplx seed{};                      // polished repelling fixed point (generation 0)
  double min_modulus = 0.0;         // min |points|
  double pairwise_resolution = 0.0; // max nearest-neighbor gap

  [[nodiscard]] std::size_t size() const { return points.size(); }
};

namespace detail {

// Exact under any block partition: per-point nearest-neighbor distance is
// computed against the full cloud, and max is order-independent.
inline double max_nearest_neighbor_gap(const std::vector<cplx>& pts) {
  if (pts.size() < 2) return 0.0;
  const std::size_t n = pts.size();
  std::vector<double> block_max((n + kBlock - 1) / kBlock, 0.0);
  parallel_blocks(n, [&](std::size_t bi, std::size_t begin, std::size_t end) {
    double worst = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        best = std::min(best, std::abs(pts[i] - pts[j]));
      }
      worst = std::max(worst, best);
    }
    block_max[bi] = worst;
  });
  return *std::max_element(block_max.begin(), block_max.end());
}

}  // namespace detail

struct SamplerOptions {
  long k_range = 4;  // child branches drawn from |k| <= k_range
};

// Backward-orbit sampler.  Level 0 is the polished repelling fixed point; each
// subsequent generation enumerates the inverse branches |k| <= k_range of every
// point of the previous generation and keeps a deterministic random subset
// sized so the total stays within budget.
inline JuliaCloud sample_julia(const MapDescriptor& m, cplx seed_hint, int depth,
                               long budget, std::uint64_t rng_seed,
                               SamplerOptions opt = SamplerOptions{}) {
  if (budget < 1) throw config_error("sample_julia: budget must be >= 1");
  if (depth < 0) throw config_error("sample_julia: depth must be >= 0");

  JuliaCloud cloud;
  cloud.seed = find_repelling_fixed_point(m, seed_hint);
  cloud.depth = depth;
  cloud.points.push_back(cloud.seed);
  cloud.depths.push_back(0);

  std::mt19937_64 rng(rng_seed);
  std::vector<cplx> level{cloud.seed};
  for (int d = 1; d <= depth; ++d) {
    const long remaining = budget - static_cast<long>(cloud.points.size());
    if (remaining <= 0) break;
    const long quota = std::max<long>(1, remaining / (depth - d + 1));

    std::vector<cplx> children;
    for (cplx parent : level)
      for (long k = -opt.k_range; k <= opt.k_range; ++k)
        if (auto z = m.branch_point(parent, k)) children.push_back(*z);

    if (static_cast<long>(children.size()) > quota) {
      std::shuffle(children.begin(), children.end(), rng);
      children.resize(quota);
    }
    // Stable output order independent of the shuffle's internal order.
    std::sort(children.begin(), children.end(), [](cplx a, cplx b) {
      if (a.real() != b.real()) return a.real() < b.real();
      return a.imag() < b.imag();
    });

    for (cplx z : children) {
      cloud.points.push_back(z);
      cloud.depths.push_back(d);
    }
    level = std::move(children);
    if (level.empty()) break;
  }

  double min_mod = std::numeric_limits<double>::infinity();
  for (cplx z : cloud.points) min_mod = std::min(min_mod, std::abs(z));
  cloud.min_modulus = min_mod;
  if (min_mod < m.params().modulus_floor)
    throw domain_error("sample_julia: point with |z| = " + format_double(min_mod) +
                       " violates the modulus floor " +
                       format_double(m.params().modulus_floor) +
                       " (non-hyperbolic or misconfigured regime)");

  cloud.pairwise_resolution = detail::max_nearest_neighbor_gap(cloud.points);
  return cloud;
}

// Recomputes min_modulus / pairwise_resolution for a cloud loaded from disk.
inline void refresh_cloud_stats(JuliaCloud& cloud) {
  double min_mod = std::numeric_limits<double>::infinity();
  for (cplx z : cloud.points) min_mod = std::min(min_mod, std::abs(z));
  cloud.min_modulus = cloud.points.empty() ? 0.0 : min_mod;
  cloud.pairwise_resolution = detail::max_nearest_neighbor_gap(cloud.points);
  cloud.depth = 0;
  for (int d : cloud.depths) cloud.depth = std::max(cloud.depth, d);
}

// Distortion scale estimate: a quarter of the distance from the cloud to the
// forward orbit of the singular values together with the origin.
inline double estimate_delta(const MapDescriptor& m, const JuliaCloud& cloud,
                             int orbit_steps = 16) {
  std::vector<cplx> avoid = m.singular_forward_orbit(orbit_steps);
  avoid.push_back(cplx{0.0, 0.0});
  double dist = std::numeric_limits<double>::infinity();
  for (cplx z : cloud.points)
    for (cplx s : avoid) dist = std::min(dist, std::abs(z - s));
  return dist / 4.0;
}

// Verifies the backward-orbit consistency invariant: every point maps within
// tol of some cloud point or the seed.  Returns the worst residual.
inline double backward_orbit_residual(const MapDescriptor& m, const JuliaCloud& cloud) {
  double worst = 0.0;
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    if (cloud.depths[i] == 0) continue;
    const MapValue fv = m.eval(cloud.points[i]);
    if (fv.at_infinity) return std::numeric_limits<double>::infinity();
    double best = std::abs(fv.value - cloud.seed);
    for (cplx q : cloud.points) best = std::min(best, std::abs(fv.value - q));
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace merotherm

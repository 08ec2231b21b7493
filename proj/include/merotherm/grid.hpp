#pragma once

// Real-valued functions discretized on a Julia cloud, plus the hashed-cell
// nearest-neighbor index used to evaluate them at off-cloud points.  Nearest
// neighbor (not higher order) is deliberate: the continuity control available
// for these functions is Lipschitz-type, so first-order lookup is what the
// estimates actually justify.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "merotherm/cloud.hpp"
#include "merotherm/common.hpp"

namespace merotherm {

struct GridFunction {
  const JuliaCloud* cloud = nullptr;  // non-owning
  std::vector<double> values;
  double sup_norm = 0.0;
  bool nonnegative = false;

  GridFunction() = default;
  explicit GridFunction(const JuliaCloud& c, double fill = 0.0)
      : cloud(&c), values(c.size(), fill) {
    refresh();
  }
  GridFunction(const JuliaCloud& c, std::vector<double> v)
      : cloud(&c), values(std::move(v)) {
    if (values.size() != c.size())
      throw workbench_error("GridFunction: values length does not match cloud size");
    refresh();
  }

  void refresh() {
    sup_norm = 0.0;
    nonnegative = true;
    for (double v : values) {
      sup_norm = std::max(sup_norm, std::abs(v));
      if (v < 0.0) nonnegative = false;
    }
  }

  [[nodiscard]] std::size_t size() const { return values.size(); }
};

// Hashed-cell nearest-neighbor index over a fixed point set.  Cells of side
// cell_size; queries expand square rings until the best candidate is certified
// (ring distance exceeds the best found distance).
class NearestIndex {
 public:
  NearestIndex() = default;
  explicit NearestIndex(const std::vector<cplx>& pts, double cell_size = 0.0)
      : pts_(&pts) {
    if (pts.empty()) throw workbench_error("NearestIndex: empty point set");
    lo_re_ = hi_re_ = pts[0].real();
    lo_im_ = hi_im_ = pts[0].imag();
    for (cplx z : pts) {
      lo_re_ = std::min(lo_re_, z.real());
      hi_re_ = std::max(hi_re_, z.real());
      lo_im_ = std::min(lo_im_, z.imag());
      hi_im_ = std::max(hi_im_, z.imag());
    }
    if (cell_size <= 0.0) {
      // Heuristic: a handful of points per cell for a planar point set.
      const double extent = std::max(hi_re_ - lo_re_, hi_im_ - lo_im_);
      cell_size = std::max(
          1e-6, 2.0 * extent / std::sqrt(static_cast<double>(pts.size()) + 1.0));
    }
    h_ = cell_size;
    cells_.reserve(pts.size());
    long lo_x = cell_of(pts[0].real()), hi_x = lo_x;
    long lo_y = cell_of(pts[0].imag()), hi_y = lo_y;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const long a = cell_of(pts[i].real()), b = cell_of(pts[i].imag());
      lo_x = std::min(lo_x, a);
      hi_x = std::max(hi_x, a);
      lo_y = std::min(lo_y, b);
      hi_y = std::max(hi_y, b);
      cells_[key(a, b)].push_back(static_cast<std::uint32_t>(i));
    }
    span_rings_ = std::max(hi_x - lo_x, hi_y - lo_y) + 1;
  }

  struct Hit {
    std::size_t index;
    double distance;
  };

  [[nodiscard]] Hit nearest(cplx q) const { return search(q, kNoExclusion); }

  // Nearest point other than the one at `excluded` (for self-queries).
  [[nodiscard]] Hit nearest_excluding(cplx q, std::size_t excluded) const {
    return search(q, excluded);
  }

 private:
  static constexpr std::size_t kNoExclusion = static_cast<std::size_t>(-1);

  [[nodiscard]] Hit search(cplx q, std::size_t excluded) const {
    // Ring-search around the query projected onto the point bounding box.
    // For any indexed point p, convexity of the box gives
    //   |p - q|^2 >= |p - q_c|^2 + |q - q_c|^2,
    // so rings around q_c certify true distances to q even when q is far
    // outside the populated region.
    const cplx q_c(std::clamp(q.real(), lo_re_, hi_re_),
                   std::clamp(q.imag(), lo_im_, hi_im_));
    const double D2 = std::norm(q - q_c);
    const long cx = cell_of(q_c.real()), cy = cell_of(q_c.imag());
    std::size_t best_i = kNoExclusion;
    double best_d = std::numeric_limits<double>::infinity();
    for (long ring = 0; ring <= span_rings_ + 1; ++ring) {
      // Any point outside the current ring is at least (ring - 1) * h_ from
      // q_c, hence at least sqrt(D2 + ((ring - 1) h)^2) from q.
      if (ring > 1 && best_i != kNoExclusion) {
        const double margin = (static_cast<double>(ring) - 1.0) * h_;
        if (best_d * best_d <= D2 + margin * margin) break;
      }
      scan_ring(cx, cy, ring, q, excluded, best_i, best_d);
    }
    return {best_i, best_d};
  }

  [[nodiscard]] long cell_of(double x) const {
    return static_cast<long>(std::floor(x / h_));
  }
  static std::uint64_t key(long a, long b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint64_t>(static_cast<std::uint32_t>(b));
  }

  void scan_ring(long cx, long cy, long ring, cplx q, std::size_t excluded,
                 std::size_t& best_i, double& best_d) const {
    auto scan_cell = [&](long a, long b) {
      auto it = cells_.find(key(a, b));
      if (it == cells_.end()) return;
      for (std::uint32_t i : it->second) {
        if (i == excluded) continue;
        const double d = std::abs((*pts_)[i] - q);
        if (d < best_d || (d == best_d && i < best_i)) {
          best_d = d;
          best_i = i;
        }
      }
    };
    if (ring == 0) {
      scan_cell(cx, cy);
      return;
    }
    for (long a = cx - ring; a <= cx + ring; ++a) {
      scan_cell(a, cy - ring);
      scan_cell(a, cy + ring);
    }
    for (long b = cy - ring + 1; b <= cy + ring - 1; ++b) {
      scan_cell(cx - ring, b);
      scan_cell(cx + ring, b);
    }
  }

  const std::vector<cplx>* pts_ = nullptr;
  double h_ = 1.0;
  double lo_re_ = 0.0, hi_re_ = 0.0, lo_im_ = 0.0, hi_im_ = 0.0;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
  long span_rings_ = 1;
};

// Empirical Lipschitz estimate of phi over nearest-neighbor pairs of its
// cloud; used to turn lookup distances into interpolation-error estimates.
inline double lipschitz_estimate(const GridFunction& phi, const NearestIndex& index) {
  double lip = 0.0;
  const auto& pts = phi.cloud->points;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto hit = index.nearest_excluding(pts[i], i);
    if (hit.distance > 0.0 && std::isfinite(hit.distance))
      lip = std::max(lip, std::abs(phi.values[i] - phi.values[hit.index]) / hit.distance);
  }
  return lip;
}

}  // namespace merotherm

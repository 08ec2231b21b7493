#pragma once

// Enumeration of the inverse branches of a single target point, with certified
// control of the discarded tail.  This is the flat (single-level) form; the
// depth-n trees in transfer.hpp stack it.
//
// Enumeration is radius-monotone: branch indices are visited by |k| then sign
// (0, -1, 1, -2, 2, ...), matching the geometry of the tail bound, so cutting
// at any point leaves a tail controlled by the closed-form bound.

#include <algorithm>
#include <cmath>
#include <vector>

#include "merotherm/common.hpp"
#include "merotherm/model.hpp"

namespace merotherm {

struct TruncationPolicy {
  long K = 60;           // initial symmetric index range
  long K_max = 4096;     // adaptive-extension ceiling
  double tail_tol = 1e-10;

  void validate() const {
    std::vector<std::string> bad;
    if (K < 0) bad.push_back("truncation.K: must be >= 0");
    if (K > K_max) bad.push_back("truncation.K: must be <= truncation.K_max");
    if (!(tail_tol > 0.0)) bad.push_back("truncation.tail_tol: must be > 0");
    if (!bad.empty()) throw config_error("invalid truncation policy", std::move(bad));
  }
};

struct PreimageBranch {
  long branch_index = 0;
  cplx z{};              // the preimage f_k^{-1}(w)
  cplx fprime{};         // f'(z)
  double metric_weight = 0.0;  // |f'(z)|_tau^{-t} = e^{Phi_t(z)}
};

// Branch weight from the known target w: |f'(z)|_tau = |f'(z)| (|z|/|w|)^tau
// since f(z) = w by construction (within preimage_tol).
inline double branch_weight(cplx fprime, cplx z, cplx w, const PotentialParams& p) {
  const double md = std::abs(fprime) * std::pow(std::abs(z) / std::abs(w), p.tau);
  return std::pow(md, -p.t);
}

struct PreimageSet {
  std::vector<PreimageBranch> branches;  // sorted by |z| ascending
  double weight_sum = 0.0;               // Neumaier sum of metric weights
  double tail_bound = 0.0;               // certified bound on the discarded weight tail
  long K_used = 0;
};

namespace detail {

// Visits branch indices 0, -1, 1, -2, 2, ... up to |k| <= K.
template <class Fn>
void for_each_branch_index(long K, Fn&& fn) {
  fn(0L);
  for (long k = 1; k <= K; ++k) {
    fn(-k);
    fn(k);
  }
}

inline PreimageBranch make_branch(const MapDescriptor& m, cplx w, long k, cplx z,
                                  const PotentialParams& p) {
  PreimageBranch b;
  b.branch_index = k;
  b.z = z;
  b.fprime = m.deriv(z);
  b.metric_weight = branch_weight(b.fprime, z, w, p);
  return b;
}

}  // namespace detail

// All branches with |k| <= trunc.K, extended adaptively until the certified
// tail bound drops below trunc.tail_tol.  Throws truncation_failure (carrying
// the certified tail) if K_max is reached first.
inline PreimageSet preimage_set(const MapDescriptor& m, cplx w,
                                const TruncationPolicy& trunc,
                                const PotentialParams& p) {
  trunc.validate();
  PreimageSet out;
  NeumaierSum weight_sum;
  const double fwd_tol = m.params().preimage_tol;

  auto add_branch = [&](long k) {
    const auto z = m.branch_point(w, k);
    if (!z) return;
    const MapValue back = m.eval(*z);
    if (back.at_infinity || std::abs(back.value - w) > fwd_tol)
      throw workbench_error("preimage_set: branch " + std::to_string(k) +
                            " failed the forward-consistency check at w = (" +
                            format_double(w.real()) + ", " + format_double(w.imag()) + ")");
    out.branches.push_back(detail::make_branch(m, w, k, *z, p));
    weight_sum.add(out.branches.back().metric_weight);
  };

  detail::for_each_branch_index(trunc.K, add_branch);
  long K = trunc.K;
  double tail = m.branch_tail_bound(w, K, p);
  while (tail > trunc.tail_tol && K < trunc.K_max) {
    const long K_next = std::min(trunc.K_max, std::max(K + 1, (K * 3) / 2));
    for (long k = K + 1; k <= K_next; ++k) {
      add_branch(-k);
      add_branch(k);
    }
    K = K_next;
    tail = m.branch_tail_bound(w, K, p);
  }
  if (tail > trunc.tail_tol)
    throw truncation_failure("preimage_set: certified tail " + format_double(tail) +
                                 " above tail_tol at K_max = " + std::to_string(trunc.K_max),
                             tail);

  std::sort(out.branches.begin(), out.branches.end(),
            [](const PreimageBranch& a, const PreimageBranch& b) {
              const double ma = std::abs(a.z), mb = std::abs(b.z);
              if (ma != mb) return ma < mb;
              return a.branch_index < b.branch_index;
            });
  out.weight_sum = weight_sum.value();
  out.tail_bound = tail;
  out.K_used = K;
  return out;
}

// Convenience view: just the branches.
inline std::vector<PreimageBranch> preimages(const MapDescriptor& m, cplx w,
                                             const TruncationPolicy& trunc,
                                             const PotentialParams& p) {
  return preimage_set(m, w, trunc, p).branches;
}

}  // namespace merotherm

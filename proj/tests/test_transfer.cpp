#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "merotherm/cloud.hpp"
#include "merotherm/preimage.hpp"
#include "merotherm/pressure.hpp"
#include "merotherm/transfer.hpp"
#include "support/fixtures.hpp"
#include "support/frozen.hpp"

using namespace merotherm;
using merotherm::testing::DoublingMap;
namespace frozen = merotherm::testing::frozen;

namespace {
const TangentMap& desk_map() {
  static const TangentMap m(0.5);
  return m;
}
const PotentialParams kDesk{1.5, 3.0};
const cplx kMain(4.60421677720057687, 0.0);
}  // namespace

TEST_CASE("one-step branch sum matches the reference and its certificate") {
  const PreimageSet ps = preimage_set(desk_map(), kMain, TruncationPolicy{}, kDesk);

  // Deterministic pin of the |k| <= 60 truncated sum.
  CHECK(ps.K_used == 60);
  CHECK(ps.branches.size() == 121);
  CHECK(ps.weight_sum == Catch::Approx(frozen::kOneStepMainK60).epsilon(1e-12));

  // Certificate honesty: the certified tail really covers the distance to the
  // independently computed full sum.
  CHECK(ps.tail_bound <= frozen::kOneStepMainK60Tail);
  const double gap = frozen::kOneStepMainExact - ps.weight_sum;
  REQUIRE(gap > 0.0);  // truncation can only undercount (weights are positive)
  CHECK(gap <= ps.tail_bound * (1.0 + 1e-6));

  // Branches come sorted by modulus and satisfy the forward identity.
  for (std::size_t i = 1; i < ps.branches.size(); ++i)
    CHECK(std::abs(ps.branches[i - 1].z) <= std::abs(ps.branches[i].z) + 1e-15);
}

TEST_CASE("deterministic pin at the small fixed point") {
  const cplx z0(1.16556118520721141, 0.0);
  const PreimageSet ps = preimage_set(desk_map(), z0, TruncationPolicy{}, kDesk);
  CHECK(ps.weight_sum == Catch::Approx(frozen::kOneStepSmallK60).epsilon(1e-12));
}

TEST_CASE("tighter tolerance extends the enumeration and grows the sum") {
  TruncationPolicy tight;
  tight.tail_tol = 1e-14;
  const PreimageSet wide = preimage_set(desk_map(), kMain, tight, kDesk);
  const PreimageSet base = preimage_set(desk_map(), kMain, TruncationPolicy{}, kDesk);
  CHECK(wide.K_used > base.K_used);
  CHECK(wide.tail_bound <= 1e-14);
  CHECK(wide.weight_sum >= base.weight_sum);
  CHECK(wide.weight_sum <= frozen::kOneStepMainExact * (1.0 + 1e-12));
}

TEST_CASE("unreachable tolerance raises a certified truncation failure") {
  TruncationPolicy hopeless;
  hopeless.K = 60;
  hopeless.K_max = 70;
  hopeless.tail_tol = 1e-30;
  try {
    preimage_set(desk_map(), kMain, hopeless, kDesk);
    FAIL("expected truncation_failure");
  } catch (const truncation_failure& e) {
    CHECK(e.certified_tail > 1e-30);
    CHECK(std::string(e.what()).find("tail") != std::string::npos);
  }
}

TEST_CASE("tree power values are exact on the doubling fixture") {
  DoublingMap dbl;
  const PotentialParams p{1.5, 1.7};
  const auto r = power_one(dbl, cplx(1.0, 0.0), 8, p, TruncationPolicy{});
  for (int n = 1; n <= 8; ++n) {
    const double expect = std::pow(2.0, static_cast<double>(n) * (1.0 - p.t));
    CHECK(r.tree.level_value(n) == Catch::Approx(expect).epsilon(1e-13));
  }
  CHECK(r.tree.tail_certificate == 0.0);  // finite branching loses nothing
  CHECK(r.value == Catch::Approx(std::pow(2.0, 8.0 * (1.0 - p.t))).epsilon(1e-13));
}

TEST_CASE("budget-mode tree reproduces the deep iterated sums") {
  const auto r =
      power_one(desk_map(), kMain, 6, kDesk, TruncationPolicy{}, pressure_tree_options());
  for (int n = 1; n <= 6; ++n) {
    const double expect = frozen::kIteratedSums[n - 1];
    const double got = r.tree.level_value(n);
    // Pruning can only undercount; the frozen values come from a deeper
    // enumeration, so the relative gap stays small and one-sided.
    CHECK(got <= expect * (1.0 + 1e-9));
    CHECK(got >= expect * (1.0 - 2e-4));
  }
}

TEST_CASE("normalized band is flat exactly where the operator is scalar") {
  DoublingMap dbl;
  const PotentialParams p{1.5, 1.7};
  const auto band = normalized_band(dbl, cplx(1.0, 0.0), 8, p, TruncationPolicy{},
                                    DoublingMap::pressure(p.t));
  for (double v : band) CHECK(v == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("interpolated application matches direct branch sums for constants") {
  const TangentMap& m = desk_map();
  const JuliaCloud cloud = sample_julia(m, cplx(4.5, 0.0), 6, 800, 20260822);
  const CloudContext ctx(cloud);
  GridFunction one(cloud, 1.0);

  const ApplyResult res = apply(m, ctx, one, kDesk, TruncationPolicy{});
  REQUIRE(res.out.values.size() == cloud.size());
  CHECK(res.interp_error == 0.0);  // constant function: lookup is exact

  // For phi = 1 the in-coverage part of (L phi)(w) plus the masked weight must
  // reproduce the full branch sum.
  for (std::size_t i = 0; i < cloud.size(); i += 97) {
    const PreimageSet ps = preimage_set(m, cloud.points[i], TruncationPolicy{}, kDesk);
    CHECK(res.out.values[i] <= ps.weight_sum + 1e-12);
    CHECK(res.out.values[i] >= ps.weight_sum - res.tail_error - 1e-12);
  }
}

TEST_CASE("iterated averages of the normalized operator settle on a density") {
  const TangentMap& m = desk_map();
  const JuliaCloud cloud = sample_julia(m, cplx(4.5, 0.0), 6, 800, 20260822);
  const CloudContext ctx(cloud);

  // Reference pressure from the tree (n = 8 is plenty for a smoke-scale run).
  const auto est = estimate_pressure(m, kDesk, kMain, 8, TruncationPolicy{});
  const CesaroResult res =
      cesaro_density(m, ctx, kDesk, TruncationPolicy{}, est.value, 8);

  REQUIRE(res.h.values.size() == cloud.size());
  for (double v : res.h.values) CHECK(v > 0.0);
  CHECK(res.residual < 0.2);
  REQUIRE(res.history_terms.size() >= 2);
  CHECK(res.history_terms.front() < res.history_terms.back());

  // Determinism: the whole computation is reproducible bit for bit.
  const CesaroResult again =
      cesaro_density(m, ctx, kDesk, TruncationPolicy{}, est.value, 8);
  for (std::size_t i = 0; i < res.h.values.size(); ++i)
    CHECK(res.h.values[i] == again.h.values[i]);
  CHECK(res.residual == again.residual);
}

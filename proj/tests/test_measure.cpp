#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "merotherm/cloud.hpp"
#include "merotherm/measure.hpp"
#include "merotherm/pressure.hpp"
#include "support/fixtures.hpp"
#include "support/frozen.hpp"

using namespace merotherm;
using merotherm::testing::CycleMap;
using merotherm::testing::DoublingMap;
namespace frozen = merotherm::testing::frozen;

namespace {

const TangentMap& desk_map() {
  static const TangentMap m(0.5);
  return m;
}
const PotentialParams kDesk{1.5, 3.0};
const cplx kMain(frozen::kFixedPointMain, 0.0);

AtomicMeasure measure_from(const std::vector<cplx>& pts,
                           const std::vector<double>& w, const char* tag) {
  AtomicMeasure mu;
  mu.points = pts;
  mu.weights = w;
  mu.provenance = tag;
  mu.recompute_total();
  return mu;
}

}  // namespace

TEST_CASE("exact eigenmeasure passes the residual check; perturbations do not") {
  const CycleMap cyc({4.0, 2.5, 1.5});
  const PotentialParams p{1.5, 1.7};
  const double P = cyc.pressure(p.t);
  const auto fns = default_test_functions(10.0);

  AtomicMeasure nu = measure_from(cyc.points(), cyc.eigenmeasure(p.t), "exact");
  REQUIRE(nu.total_mass == Catch::Approx(1.0).epsilon(1e-12));

  CHECK(eigen_residual(cyc, nu, p, fns, TruncationPolicy{}, P) < 1e-12);
  // Sensitivity: a wrong eigenvalue must be flagged, not absorbed.
  CHECK(eigen_residual(cyc, nu, p, fns, TruncationPolicy{}, P + 0.05) > 0.01);

  // A wrong measure at the right eigenvalue must also be flagged.
  AtomicMeasure uniform = measure_from(
      cyc.points(), std::vector<double>(3, 1.0 / 3.0), "uniform");
  CHECK(eigen_residual(cyc, uniform, p, fns, TruncationPolicy{}, P) > 0.01);
}

TEST_CASE("adjoint power on the cycle matches the closed form") {
  const CycleMap cyc({4.0, 2.5, 1.5});
  const PotentialParams p{1.5, 1.7};
  const AtomicMeasure mu =
      adjoint_delta(cyc, cyc.points()[0], 3, p, TruncationPolicy{});
  // One backward chain of length three; its weight is e^{3P} exactly.
  CHECK(mu.points.size() == 1);
  CHECK(mu.total_mass ==
        Catch::Approx(std::exp(3.0 * cyc.pressure(p.t))).epsilon(1e-12));
  CHECK(mu.provenance == "adjoint_power");
}

TEST_CASE("push-forward invariance separates the invariant state from the eigenmeasure") {
  const CycleMap cyc({4.0, 2.5, 1.5});
  const auto fns = default_test_functions(10.0);

  AtomicMeasure uniform = measure_from(
      cyc.points(), std::vector<double>(3, 1.0 / 3.0), "uniform");
  CHECK(invariance_residual(cyc, uniform, fns, TruncationPolicy{}) < 1e-12);

  AtomicMeasure nu = measure_from(cyc.points(), cyc.eigenmeasure(1.7), "exact");
  CHECK(invariance_residual(cyc, nu, fns, TruncationPolicy{}) > 0.01);
}

TEST_CASE("density reweighting turns the eigenmeasure into the invariant state") {
  const CycleMap cyc({4.0, 2.5, 1.5});
  const PotentialParams p{1.5, 1.7};

  JuliaCloud cloud;
  cloud.points = cyc.points();
  cloud.depths.assign(3, 0);
  cloud.seed = cloud.points[0];
  refresh_cloud_stats(cloud);
  const GridFunction h(cloud, cyc.eigenfunction(p.t));

  AtomicMeasure nu = measure_from(cyc.points(), cyc.eigenmeasure(p.t), "exact");
  const AtomicMeasure inv = gibbs_from_density(cyc, nu, h);
  REQUIRE(inv.points.size() == 3);
  for (double w : inv.weights) CHECK(w == Catch::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(inv.provenance == "gibbs");

  // A density that is not strictly positive on the support must be rejected.
  const GridFunction bad(cloud, -1.0);
  CHECK_THROWS_AS(gibbs_from_density(cyc, nu, bad), domain_error);
}

TEST_CASE("resolvent mixture validates its inputs and reports its series tail") {
  DoublingMap dbl;
  const PotentialParams p{1.5, 1.7};
  const double P = DoublingMap::pressure(p.t);

  CHECK_THROWS_AS(nu_s(dbl, cplx(1.0, 0.0), P, p, 4, TruncationPolicy{}, P),
                  domain_error);
  CHECK_THROWS_AS(nu_s(dbl, cplx(1.0, 0.0), P - 0.1, p, 4, TruncationPolicy{}, P),
                  domain_error);
  CHECK_THROWS_AS(nu_s(dbl, cplx(1.0, 0.0), P + 0.3, p, 0, TruncationPolicy{}, P),
                  config_error);

  // Where every level value is exact the reported tail has a closed form:
  // with q = e^{P-s}, tail = q^{n_max+1} / (1-q) / sum_{1..n_max} q^n.
  const double s = P + 0.3;
  const AtomicMeasure mu = nu_s(dbl, cplx(1.0, 0.0), s, p, 6, TruncationPolicy{}, P);
  CHECK(mu.total_mass == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(mu.provenance == "nu_s");
  const double q = std::exp(P - s);
  double geo = 0.0;
  for (int n = 1; n <= 6; ++n) geo += std::pow(q, n);
  const double expect_tail = std::pow(q, 7) / (1.0 - q) / geo;
  CHECK(mu.series_tail == Catch::Approx(expect_tail).epsilon(1e-10));
}

TEST_CASE("adjoint power mass at depth three tracks the reference iterated sum") {
  const AtomicMeasure mu = adjoint_delta(desk_map(), kMain, 3, kDesk, TruncationPolicy{});
  const double expect = frozen::kIteratedSums[2];
  CHECK(mu.total_mass <= expect * (1.0 + 1e-9));  // pruning only undercounts
  CHECK(mu.total_mass >= expect * (1.0 - 1e-3));
  CHECK(mu.tree_backed());
  CHECK(mu.levels_used == 3);
}

TEST_CASE("conformal estimate records its stabilization schedule") {
  const auto est = estimate_pressure(desk_map(), kDesk, kMain, 5, TruncationPolicy{});
  const ConformalResult res =
      conformal_estimate(desk_map(), kMain, kDesk, 4, TruncationPolicy{},
                         ConformalStrategy::nu_s_limit, est.value);
  REQUIRE(res.schedule.size() == 3);
  for (const auto& row : res.schedule) {
    CHECK(row.s > est.value);
    CHECK(row.test_integrals.size() == default_test_functions(10.0).size());
  }
  // The schedule approaches the pressure from above, tightening each step.
  CHECK(res.schedule[0].s > res.schedule[1].s);
  CHECK(res.schedule[1].s > res.schedule[2].s);
  CHECK(res.schedule_drift >= 0.0);
  CHECK(res.measure.total_mass == Catch::Approx(1.0).epsilon(1e-9));

  const ConformalResult adj =
      conformal_estimate(desk_map(), kMain, kDesk, 4, TruncationPolicy{},
                         ConformalStrategy::adjoint_power, est.value);
  CHECK(adj.schedule.empty());
  CHECK(adj.measure.provenance == "adjoint_power");
  CHECK(adj.measure.total_mass == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("tail mass is exact on a hand-built atom list") {
  const AtomicMeasure mu = measure_from(
      {cplx(1.0, 0.0), cplx(0.0, 5.0), cplx(-20.0, 0.0)}, {0.5, 0.3, 0.2}, "synthetic");
  CHECK(tail_mass(mu, 2.0) == Catch::Approx(0.5).epsilon(1e-15));
  CHECK(tail_mass(mu, 10.0) == Catch::Approx(0.2).epsilon(1e-15));
  CHECK(tail_mass(mu, 30.0) == 0.0);
  CHECK_THROWS_AS(tail_mass(mu, 0.0), config_error);
}

TEST_CASE("reference boxes partition the annulus (R, 8R]") {
  const double R = 5.0;
  const auto boxes = default_borel_boxes(R);
  REQUIRE(boxes.size() == 6);

  // The outer closed boundary 8R is excluded: hypot(r cos a, r sin a) can
  // round a hair above r, which would drop an exact-boundary point outside
  // the annulus.  Interior shell boundaries are safe (a point lands in one
  // of the two adjacent shells either way).
  const std::vector<double> moduli{5.0001, 7.0, 10.0, 19.9, 20.1, 39.9, 39.999};
  const std::vector<double> angles{0.1, 1.3, 2.9, 3.3, 4.6, 6.0};
  for (double r : moduli)
    for (double a : angles) {
      const cplx z(r * std::cos(a), r * std::sin(a));
      int hits = 0;
      for (const auto& b : boxes) hits += b.contains(z) ? 1 : 0;
      CHECK(hits == 1);
    }
  // Outside the annulus nothing matches.
  for (cplx z : {cplx(4.9, 0.0), cplx(0.0, 41.0), cplx(0.0, 0.0)}) {
    int hits = 0;
    for (const auto& b : boxes) hits += b.contains(z) ? 1 : 0;
    CHECK(hits == 0);
  }
}

TEST_CASE("iterated exterior mass hits its endpoint cases on the circle") {
  const CycleMap cyc({4.0, 2.5, 1.5});
  const PotentialParams p{1.5, 1.7};
  const double P = cyc.pressure(p.t);
  const AtomicMeasure mu =
      nu_s(cyc, cyc.points()[0], P + 0.3, p, 4, TruncationPolicy{}, P);
  REQUIRE(mu.tree_backed());

  // Every atom and every forward image sits on the unit circle.
  const auto all_out = iterated_exterior_mass(cyc, mu, 0.5, {1, 2, 3});
  for (double v : all_out) CHECK(v == Catch::Approx(1.0).epsilon(1e-12));
  const auto none_out = iterated_exterior_mass(cyc, mu, 2.0, {1, 2, 3});
  for (double v : none_out) CHECK(v == 0.0);

  AtomicMeasure flat = measure_from(cyc.points(), cyc.eigenmeasure(p.t), "exact");
  CHECK_THROWS_AS(iterated_exterior_mass(cyc, flat, 0.5, {1}), workbench_error);
}

TEST_CASE("bounded-orbit filter keeps exactly the points that return inside") {
  const CycleMap cyc({4.0, 2.5, 1.5});
  CHECK(filter_bounded_orbit(cyc, cyc.points(), 5, 2.0).size() == 3);
  CHECK(filter_bounded_orbit(cyc, cyc.points(), 5, 0.5).empty());
}

TEST_CASE("tree-backed and flattened views integrate identically") {
  const auto est = estimate_pressure(desk_map(), kDesk, kMain, 5, TruncationPolicy{});
  const AtomicMeasure mu =
      nu_s(desk_map(), kMain, est.value + 0.4, kDesk, 4, TruncationPolicy{}, est.value);
  REQUIRE(mu.tree_backed());

  AtomicMeasure flat = mu;
  flat.tree.reset();
  flat.levels_used = 0;
  flat.recompute_total();

  const auto phi = [](cplx z) { return std::abs(z); };
  const double a = mu.integrate(phi);
  const double b = flat.integrate(phi);
  CHECK(a == Catch::Approx(b).epsilon(1e-10));
  CHECK(mu.total_mass == Catch::Approx(flat.total_mass).epsilon(1e-12));
}

TEST_CASE("normalization refuses an empty measure") {
  AtomicMeasure mu;
  CHECK_THROWS_AS(mu.normalize(), workbench_error);
}

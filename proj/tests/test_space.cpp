#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "azema/scenario.hpp"
#include "azema/space.hpp"

using namespace azema;

namespace {

Rat r(long long num, long long den = 1) { return rat(num, den); }

// Row-shifted copy: value at n is x at n-1 (x_0 at 0), the predictable lag.
Process lagged(const FiniteFilteredSpace& sp, const Process& x) {
  Process out = x;
  for (int n = sp.horizon; n >= 1; --n) out.v[n] = x.v[n - 1];
  return out;
}

}  // namespace

TEST_CASE("space construction validates structure", "[space]") {
  std::vector<Rat> probs{r(1, 2), r(1, 2)};
  std::vector<Partition> ok_levels{{{0, 1}}, {{0}, {1}}};
  REQUIRE_NOTHROW(make_space(2, probs, 1, ok_levels));

  SECTION("probabilities must sum to one") {
    REQUIRE_THROWS_AS(make_space(2, {r(1, 2), r(1, 3)}, 1, ok_levels), std::invalid_argument);
  }
  SECTION("probabilities must be positive") {
    REQUIRE_THROWS_AS(make_space(2, {r(1), r(0)}, 1, ok_levels), std::invalid_argument);
  }
  SECTION("atoms may not overlap") {
    std::vector<Partition> bad{{{0, 1}}, {{0, 1}, {1}}};
    REQUIRE_THROWS_AS(make_space(2, probs, 1, bad), std::invalid_argument);
  }
  SECTION("partitions must cover every outcome") {
    std::vector<Partition> bad{{{0, 1}}, {{0}}};
    REQUIRE_THROWS_AS(make_space(2, probs, 1, bad), std::invalid_argument);
  }
  SECTION("later levels must refine earlier ones") {
    std::vector<Rat> p3{r(1, 3), r(1, 3), r(1, 3)};
    std::vector<Partition> bad{{{0, 1}, {2}}, {{0}, {1, 2}}};
    REQUIRE_THROWS_AS(make_space(3, p3, 1, bad), std::invalid_argument);
  }
  SECTION("horizon bounds are enforced") {
    REQUIRE_THROWS_AS(make_space(2, probs, 0, {{{0, 1}}}), std::invalid_argument);
    std::vector<Partition> deep(FiniteFilteredSpace::kMaxHorizon + 2, Partition{{0, 1}});
    REQUIRE_THROWS_AS(make_space(2, probs, FiniteFilteredSpace::kMaxHorizon + 1, deep),
                      std::invalid_argument);
  }
  SECTION("level count must match the horizon") {
    REQUIRE_THROWS_AS(make_space(2, probs, 1, {{{0, 1}}}), std::invalid_argument);
  }
}

TEST_CASE("conditional expectation on the four-outcome fixture", "[space]") {
  Scenario sc = fixture("S1");
  std::vector<Rat> x{r(1), r(2), r(3), r(4)};
  std::vector<Rat> e1 = cond_expect(sc.sp, sc.sp.F, x, 1);
  REQUIRE(e1 == std::vector<Rat>{r(3, 2), r(3, 2), r(7, 2), r(7, 2)});
  std::vector<Rat> e0 = cond_expect(sc.sp, sc.sp.F, x, 0);
  REQUIRE(e0[0] == r(5, 2));
  // Tower property through the levels.
  std::vector<Rat> e10 = cond_expect(sc.sp, sc.sp.F, e1, 0);
  REQUIRE(e10 == e0);
}

TEST_CASE("conditional expectation skips weightless atoms", "[space]") {
  Scenario sc = fixture("S1");
  std::vector<Rat> w{r(0), r(0), r(1, 2), r(1, 2)};
  std::vector<Rat> x{r(7), r(9), r(3), r(5)};
  std::vector<Rat> e = cond_expect_w(sc.sp, sc.sp.F, x, 1, w);
  REQUIRE(e[0] == r(0));  // zero-mass atom pinned to zero
  REQUIRE(e[2] == r(4));
}

TEST_CASE("projections of the death indicator", "[space]") {
  Scenario sc = fixture("S1");
  std::vector<std::vector<Rat>> rows(3, std::vector<Rat>(4));
  for (int n = 0; n <= 2; ++n)
    for (int omega = 0; omega < 4; ++omega) rows[n][omega] = sc.tau[omega] <= n ? 1 : 0;

  Process dof = dual_optional_projection(sc.sp, sc.sp.F, rows);
  REQUIRE(dof.v[1] == std::vector<Rat>{r(1, 2), r(1, 2), r(0), r(0)});
  REQUIRE(dof.v[2] == std::vector<Rat>{r(1, 2), r(3, 2), r(1), r(1)});

  Process dpf = dual_predictable_projection(sc.sp, sc.sp.F, rows);
  REQUIRE(dpf.v[1] == std::vector<Rat>(4, r(1, 4)));
  REQUIRE(dpf.v[2] == std::vector<Rat>{r(3, 4), r(3, 4), r(5, 4), r(5, 4)});

  // Predictable projection of I{tau >= 2} at date 2 conditions on date-1 atoms.
  std::vector<std::vector<Rat>> alive(3, std::vector<Rat>(4));
  for (int n = 0; n <= 2; ++n)
    for (int omega = 0; omega < 4; ++omega) alive[n][omega] = sc.tau[omega] >= n ? 1 : 0;
  Process pp = predictable_projection(sc.sp, sc.sp.F, alive);
  REQUIRE(pp.v[2] == std::vector<Rat>{r(1, 2), r(1, 2), r(1), r(1)});
}

TEST_CASE("martingale verdicts and witnesses", "[space]") {
  Scenario sc = fixture("S1");

  Process mart = zero_process(sc.sp, Tag::F);
  mart.v[0] = std::vector<Rat>(4, r(1));
  mart.v[1] = {r(3, 2), r(3, 2), r(1, 2), r(1, 2)};
  mart.v[2] = {r(2), r(1), r(1), r(0)};
  REQUIRE(is_martingale(sc.sp, sc.sp.F, mart).ok);

  SECTION("mean violation reports time, atom, and both sides") {
    Process bad = mart;
    bad.v[2] = {r(2), r(2), r(1), r(0)};
    MartingaleReport rep = is_martingale(sc.sp, sc.sp.F, bad);
    REQUIRE_FALSE(rep.ok);
    REQUIRE(rep.adapted);
    REQUIRE(rep.time == 2);
    REQUIRE(rep.atom == 0);
    REQUIRE(rep.lhs == r(2));
    REQUIRE(rep.rhs == r(3, 2));
  }
  SECTION("adaptedness is checked first") {
    Process bad = mart;
    bad.v[1] = {r(1), r(2), r(1), r(1)};
    MartingaleReport rep = is_martingale(sc.sp, sc.sp.F, bad);
    REQUIRE_FALSE(rep.ok);
    REQUIRE_FALSE(rep.adapted);
    REQUIRE(rep.what == "not adapted");
  }
  SECTION("null atoms under the weights are exempt") {
    Process bad = mart;
    bad.v[2] = {r(2), r(2), r(1), r(0)};  // mean violation confined to the null atom
    bad.v[0] = std::vector<Rat>(4, r(1, 2));  // weighted mean of the time-1 row
    std::vector<Rat> w{r(0), r(0), r(1, 2), r(1, 2)};
    REQUIRE(is_martingale_w(sc.sp, sc.sp.F, bad, w).ok);
    REQUIRE_FALSE(is_martingale(sc.sp, sc.sp.F, bad).ok);
  }
}

TEST_CASE("pathwise calculus identities", "[space]") {
  std::mt19937_64 g(424242);
  for (int trial = 0; trial < 25; ++trial) {
    FiniteFilteredSpace sp = random_space(g, 10, 4);
    Process x = zero_process(sp, Tag::F), y = zero_process(sp, Tag::F);
    for (int n = 0; n <= sp.horizon; ++n)
      for (int omega = 0; omega < sp.n(); ++omega) {
        x.v[n][omega] = rng_rat(g);
        y.v[n][omega] = rng_rat(g);
      }
    // Integration by parts: XY - X0 Y0 = X_- . Y + Y . X with the left lag.
    Process xl = lagged(sp, x);
    Process a = stoch_integral(sp, xl, y);
    Process b = stoch_integral(sp, y, x);
    for (int n = 0; n <= sp.horizon; ++n)
      for (int omega = 0; omega < sp.n(); ++omega) {
        Rat lhs = x.v[n][omega] * y.v[n][omega] - x.v[0][omega] * y.v[0][omega];
        REQUIRE(lhs == a.v[n][omega] + b.v[n][omega]);
      }
    // Polarization: [X+Y,X+Y] = [X,X] + 2[X,Y] + [Y,Y].
    Process xy = quadratic_covariation(sp, x, y);
    Process xx = quadratic_covariation(sp, x, x);
    Process yy = quadratic_covariation(sp, y, y);
    Process sum = x;
    for (int n = 0; n <= sp.horizon; ++n)
      for (int omega = 0; omega < sp.n(); ++omega) sum.v[n][omega] += y.v[n][omega];
    Process ss = quadratic_covariation(sp, sum, sum);
    for (int n = 0; n <= sp.horizon; ++n)
      for (int omega = 0; omega < sp.n(); ++omega)
        REQUIRE(ss.v[n][omega] ==
                xx.v[n][omega] + 2 * xy.v[n][omega] + yy.v[n][omega]);
    // Exponential of a sum of increments: E(L)_n = prod (1 + dL).
    Process el = stoch_exponential(sp, x);
    for (int omega = 0; omega < sp.n(); ++omega) {
      Rat prod = 1;
      for (int n = 1; n <= sp.horizon; ++n) {
        prod *= Rat(1) + x.v[n][omega] - x.v[n - 1][omega];
        REQUIRE(el.v[n][omega] == prod);
      }
    }
  }
}

TEST_CASE("multiplicative decomposition of a positive supermartingale", "[space]") {
  Scenario sc = fixture("S1");
  // Z = E(N) E(-V) with dN1 = (1/2,-1/2,0,0)-style martingale steps and dV = 1/4.
  Process z = constant_process(sc.sp, Tag::F, r(1));
  z.v[1] = {r(9, 8), r(9, 8), r(3, 8), r(3, 8)};  // mean 3/4 = 1 - 1/4 drift
  z.v[2] = {r(3, 2), r(3, 4), r(1, 4), r(1, 2)};
  MartingaleReport direct = is_martingale(sc.sp, sc.sp.F, z);
  REQUIRE_FALSE(direct.ok);  // strict supermartingale

  MultiplicativeDecomposition md = multiplicative_decomposition(sc.sp, sc.sp.F, z);
  REQUIRE(is_martingale(sc.sp, sc.sp.F, stoch_exponential(sc.sp, md.N)).ok);
  REQUIRE(is_predictable(sc.sp, sc.sp.F, md.V));
  for (int n = 1; n <= 2; ++n)
    for (int omega = 0; omega < 4; ++omega)
      REQUIRE(md.V.v[n][omega] >= md.V.v[n - 1][omega]);
  // Roundtrip: Z = E(N) E(-V).
  Process en = stoch_exponential(sc.sp, md.N);
  Process negv = md.V;
  for (int n = 0; n <= 2; ++n)
    for (int omega = 0; omega < 4; ++omega) negv.v[n][omega] = -md.V.v[n][omega];
  Process ev = stoch_exponential(sc.sp, negv);
  for (int n = 0; n <= 2; ++n)
    for (int omega = 0; omega < 4; ++omega)
      REQUIRE(z.v[n][omega] == en.v[n][omega] * ev.v[n][omega]);

  SECTION("revival from zero is rejected") {
    Process bad = constant_process(sc.sp, Tag::F, r(1));
    bad.v[1] = {r(0), r(0), r(2), r(2)};
    bad.v[2] = {r(1), r(0), r(2), r(2)};
    REQUIRE_THROWS_AS(multiplicative_decomposition(sc.sp, sc.sp.F, bad), std::invalid_argument);
  }
  SECTION("predictable absorption is rejected") {
    Process bad = constant_process(sc.sp, Tag::F, r(1));
    bad.v[1] = {r(0), r(0), r(0), r(0)};
    bad.v[2] = {r(0), r(0), r(0), r(0)};
    REQUIRE_THROWS_AS(multiplicative_decomposition(sc.sp, sc.sp.F, bad), std::invalid_argument);
  }
  SECTION("absorption after a genuine zero hit is allowed") {
    Process okz = constant_process(sc.sp, Tag::F, r(1));
    okz.v[1] = {r(0), r(0), r(2), r(2)};  // zero hit covers a full atom
    okz.v[2] = {r(0), r(0), r(2), r(2)};
    REQUIRE_NOTHROW(multiplicative_decomposition(sc.sp, sc.sp.F, okz));
  }
}

TEST_CASE("optional projection is adapted and consistent", "[space]") {
  std::mt19937_64 g(7);
  for (int trial = 0; trial < 20; ++trial) {
    FiniteFilteredSpace sp = random_space(g, 12, 4);
    std::vector<std::vector<Rat>> rows(sp.horizon + 1, std::vector<Rat>(sp.n()));
    for (auto& row : rows)
      for (auto& vv : row) vv = rng_rat(g);
    Process p = optional_projection(sp, sp.F, rows);
    REQUIRE(is_adapted(sp, sp.F, p));
    // Unconditional means agree row by row.
    for (int n = 0; n <= sp.horizon; ++n) REQUIRE(expect(sp, p.v[n]) == expect(sp, rows[n]));
  }
}

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <stdexcept>

#include "azema/scenario.hpp"
#include "azema/transforms.hpp"

using namespace azema;

namespace {

Rat r(long long num, long long den = 1) { return rat(num, den); }

// Three outcomes, death of the first two at time zero: honest but not a stopping time.
struct SmallHonest {
  FiniteFilteredSpace sp;
  std::vector<int> tau;
};

SmallHonest small_honest() {
  std::vector<Rat> prob{r(1, 2), r(1, 4), r(1, 4)};
  std::vector<Partition> levels{{{0, 1, 2}}, {{0, 1}, {2}}, {{0}, {1}, {2}}};
  return {make_space(3, prob, 2, levels), {0, 0, 1}};
}

Process closed_by(const FiniteFilteredSpace& sp, const std::vector<Rat>& terminal) {
  Process m = zero_process(sp, Tag::F);
  for (int n = 0; n <= sp.horizon; ++n) m.v[n] = cond_expect(sp, sp.F, terminal, n);
  return m;
}

}  // namespace

TEST_CASE("transform pins on the four-outcome honest fixture", "[transforms]") {
  Scenario sc = fixture("S1");
  SurvivalBundle b = survival_bundle(sc.sp, sc.tau);
  Process basis = closed_by(sc.sp, {r(1), r(0), r(0), r(0)});
  REQUIRE(basis.v[1] == std::vector<Rat>{r(1, 2), r(1, 2), r(0), r(0)});

  Process zero = zero_process(sc.sp, Tag::G);
  REQUIRE(t_after(sc.sp, sc.tau, b.m).v == zero.v);
  REQUIRE(t_before(sc.sp, sc.tau, b.m).v == zero.v);
  REQUIRE(t_after(sc.sp, sc.tau, basis).v == zero.v);
  REQUIRE(m_hat_after(sc.sp, sc.tau, basis).v == zero.v);

  Process tb = t_before(sc.sp, sc.tau, basis);
  REQUIRE(tb.v[1] == std::vector<Rat>{r(1, 4), r(1, 4), r(-1, 4), r(-1, 4)});
  REQUIRE(tb.v[2] == tb.v[1]);
  REQUIRE(is_martingale(sc.sp, enlarge(sc.sp, sc.tau), tb).ok);
}

TEST_CASE("transform pins on the three-outcome honest time", "[transforms]") {
  SmallHonest sh = small_honest();
  AssumptionReport rep = check_assumptions(sh.sp, sh.tau);
  REQUIRE(rep.flags.honest);
  REQUIRE_FALSE(rep.flags.no_gtilde_one_gminus_lt_one);

  SurvivalBundle b = survival_bundle(sh.sp, sh.tau);
  REQUIRE(b.G.v[0] == std::vector<Rat>(3, r(1, 4)));
  REQUIRE(b.Gtilde.v[1] == std::vector<Rat>{r(0), r(0), r(1)});

  Process m = closed_by(sh.sp, {r(1), r(0), r(0)});
  Process ta = t_after(sh.sp, sh.tau, m);
  REQUIRE(ta.v[0] == std::vector<Rat>(3, r(0)));
  REQUIRE(ta.v[1] == std::vector<Rat>(3, r(0)));
  REQUIRE(ta.v[2] == std::vector<Rat>{r(1, 3), r(-2, 3), r(0)});

  Filtration gf = enlarge(sh.sp, sh.tau);
  REQUIRE(is_martingale(sh.sp, gf, ta).ok);
  REQUIRE(is_martingale(sh.sp, gf, t_before(sh.sp, sh.tau, m)).ok);
  REQUIRE(is_martingale(sh.sp, gf, m_hat_after(sh.sp, sh.tau, m)).ok);
}

TEST_CASE("transforms yield martingales for the enlarged filtration", "[transforms]") {
  std::mt19937_64 g(23);
  for (int trial = 0; trial < 100; ++trial) {
    FiniteFilteredSpace sp = random_space(g, 10, 4);
    std::vector<int> tau = random_honest_time(g, sp);
    Filtration gf = enlarge(sp, tau);
    SurvivalBundle b = survival_bundle(sp, tau);

    const int terminal_cells = static_cast<int>(sp.F.levels[sp.horizon].size());
    std::vector<Process> inputs{b.m, basis_martingale(sp, 0),
                                basis_martingale(sp, (terminal_cells - 1) / 2),
                                random_g_martingale(g, sp, sp.F)};
    for (const Process& mart : inputs) {
      REQUIRE(is_martingale(sp, gf, t_after(sp, tau, mart)).ok);
      REQUIRE(is_martingale(sp, gf, t_before(sp, tau, mart)).ok);
      REQUIRE(is_martingale(sp, gf, m_hat_after(sp, tau, mart)).ok);
    }
  }
}

TEST_CASE("before-death transform needs no honesty", "[transforms]") {
  Scenario s3 = fixture("S3");
  REQUIRE_FALSE(is_honest(s3.sp, s3.tau).honest);
  Filtration gf = enlarge(s3.sp, s3.tau);
  std::mt19937_64 g(29);
  for (int trial = 0; trial < 25; ++trial) {
    Process mart = random_g_martingale(g, s3.sp, s3.sp.F);
    REQUIRE(is_martingale(s3.sp, gf, t_before(s3.sp, s3.tau, mart)).ok);
  }
}

TEST_CASE("bracket form fails without the terminal mass condition", "[transforms]") {
  Scenario sc = fixture("S1");
  Process basis = closed_by(sc.sp, {r(1), r(0), r(0), r(0)});
  Process tb = t_after_bracket(sc.sp, sc.tau, basis);
  REQUIRE(tb.v[2] == std::vector<Rat>{r(1, 4), r(0), r(0), r(0)});
  MartingaleReport rep = is_martingale(sc.sp, enlarge(sc.sp, sc.tau), tb);
  REQUIRE_FALSE(rep.ok);
  REQUIRE(rep.time == 2);
  REQUIRE(rep.lhs - rep.rhs == r(1, 4));

  // On a genuine stopping time both after-death forms agree.
  Scenario s2 = fixture("S2");
  REQUIRE(s2.price.has_value());
  REQUIRE(t_after_bracket(s2.sp, s2.tau, *s2.price).v == t_after(s2.sp, s2.tau, *s2.price).v);
}

TEST_CASE("bracket of a transformed pair rescales the bracket", "[transforms]") {
  std::mt19937_64 g(31);
  for (int trial = 0; trial < 60; ++trial) {
    FiniteFilteredSpace sp = random_space(g, 10, 4);
    std::vector<int> tau = random_honest_time(g, sp);
    SurvivalBundle b = survival_bundle(sp, tau);
    Process x = random_g_martingale(g, sp, sp.F);
    Process y = random_g_martingale(g, sp, sp.F);
    Process tx = t_after_bracket(sp, tau, x);
    Process ty = t_after_bracket(sp, tau, y);
    Process lhs1 = quadratic_covariation(sp, tx, y);
    Process lhs2 = quadratic_covariation(sp, x, ty);
    Process xy = quadratic_covariation(sp, x, y);
    for (int k = 1; k <= sp.horizon; ++k)
      for (int omega = 0; omega < sp.n(); ++omega) {
        Rat expected = 0;
        if (tau[omega] < k)
          expected = (Rat(1) - b.G.v[k - 1][omega]) / (Rat(1) - b.Gtilde.v[k][omega]) *
                     (xy.v[k][omega] - xy.v[k - 1][omega]);
        REQUIRE(lhs1.v[k][omega] - lhs1.v[k - 1][omega] == expected);
        REQUIRE(lhs2.v[k][omega] - lhs2.v[k - 1][omega] == expected);
      }
  }
}

TEST_CASE("bracket identity report honors its gate", "[transforms]") {
  Scenario s1 = fixture("S1");
  REQUIRE(s1.price.has_value());
  Process basis1 = closed_by(s1.sp, {r(1), r(0), r(0), r(0)});
  BracketIdentityReport refused = bracket_identities(s1.sp, s1.tau, *s1.price, basis1);
  REQUIRE(refused.refused);
  REQUIRE(refused.flags.honest);
  REQUIRE_FALSE(refused.flags.no_gtilde_one_gminus_lt_one);
  REQUIRE_FALSE(refused.ok());

  Scenario s2 = fixture("S2");
  REQUIRE(s2.price.has_value());
  Process basis2 = closed_by(s2.sp, {r(1), r(0), r(0), r(0)});
  BracketIdentityReport rep = bracket_identities(s2.sp, s2.tau, *s2.price, basis2);
  REQUIRE(rep.ok());
  REQUIRE_FALSE(rep.witness.has_value());

  std::mt19937_64 g(37);
  for (int trial = 0; trial < 40; ++trial) {
    FiniteFilteredSpace sp = random_space(g, 10, 4);
    std::vector<int> tau = random_stopping_time(g, sp);
    Process x = random_g_martingale(g, sp, sp.F);
    Process y = random_g_martingale(g, sp, sp.F);
    BracketIdentityReport rr = bracket_identities(sp, tau, x, y);
    REQUIRE_FALSE(rr.refused);
    REQUIRE(rr.ok());
  }
}

TEST_CASE("summability functional of the survival martingale", "[transforms]") {
  Scenario sc = fixture("S1");
  SurvivalBundle b = survival_bundle(sc.sp, sc.tau);
  REQUIRE(mm_ftau_functional(sc.sp, sc.tau, b.m) == r(1, 24));

  std::mt19937_64 g(41);
  for (int trial = 0; trial < 30; ++trial) {
    FiniteFilteredSpace sp = random_space(g, 10, 4);
    std::vector<int> tau = random_honest_time(g, sp);
    REQUIRE(mm_ftau_functional(sp, tau, survival_bundle(sp, tau).m) >= 0);
  }
}

TEST_CASE("transforms reject inputs that are not martingales", "[transforms]") {
  Scenario sc = fixture("S1");
  Process drift = zero_process(sc.sp, Tag::F);
  for (int n = 0; n <= 2; ++n)
    for (int omega = 0; omega < 4; ++omega) drift.v[n][omega] = Rat(n);
  REQUIRE_THROWS_AS(t_after(sc.sp, sc.tau, drift), std::invalid_argument);
  REQUIRE_THROWS_AS(t_before(sc.sp, sc.tau, drift), std::invalid_argument);
  REQUIRE_THROWS_AS(m_hat_after(sc.sp, sc.tau, drift), std::invalid_argument);
  REQUIRE_THROWS_AS(t_after_bracket(sc.sp, sc.tau, drift), std::invalid_argument);
}

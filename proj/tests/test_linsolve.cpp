#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "azema/linsolve.hpp"

using namespace azema;

namespace {

Rat r(long long num, long long den = 1) { return rat(num, den); }

using Mat = std::vector<std::vector<Rat>>;
using Vec = std::vector<Rat>;

Vec matvec(const Mat& a, const Vec& x) {
  Vec out(a.size(), Rat(0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) out[i] += a[i][j] * x[j];
  return out;
}

Rat dot(const Vec& a, const Vec& b) {
  Rat out = 0;
  for (std::size_t i = 0; i < a.size(); ++i) out += a[i] * b[i];
  return out;
}

}  // namespace

TEST_CASE("determined systems solve uniquely", "[linsolve]") {
  Mat a{{r(2), r(1)}, {r(1), r(3)}};
  LinearSolveResult res = solve_exact(a, {r(5), r(10)});
  REQUIRE(res.consistent);
  REQUIRE(res.rank == 2);
  REQUIRE(res.kernel.empty());
  REQUIRE(res.x == Vec{r(1), r(3)});
}

TEST_CASE("inconsistent systems are flagged", "[linsolve]") {
  Mat a{{r(1), r(1)}, {r(1), r(1)}};
  LinearSolveResult res = solve_exact(a, {r(1), r(2)});
  REQUIRE_FALSE(res.consistent);
  REQUIRE(res.rank == 1);
}

TEST_CASE("underdetermined systems return the minimal-norm solution", "[linsolve]") {
  Mat a{{r(1), r(1)}};
  LinearSolveResult res = solve_exact(a, {r(2)});
  REQUIRE(res.consistent);
  REQUIRE(res.rank == 1);
  REQUIRE(res.kernel.size() == 1);
  REQUIRE(res.x == Vec{r(1), r(1)});
  REQUIRE(dot(res.x, res.kernel[0]) == r(0));

  // A weighted variant: x + 2y = 5 has minimal-norm solution (1, 2).
  LinearSolveResult res2 = solve_exact({{r(1), r(2)}}, {r(5)});
  REQUIRE(res2.x == Vec{r(1), r(2)});
}

TEST_CASE("degenerate shapes", "[linsolve]") {
  LinearSolveResult empty = solve_exact({}, {});
  REQUIRE(empty.consistent);
  REQUIRE(empty.rank == 0);

  Mat zero{{r(0), r(0), r(0)}, {r(0), r(0), r(0)}};
  LinearSolveResult zres = solve_exact(zero, {r(0), r(0)});
  REQUIRE(zres.consistent);
  REQUIRE(zres.rank == 0);
  REQUIRE(zres.kernel.size() == 3);
  REQUIRE(zres.x == Vec{r(0), r(0), r(0)});
  REQUIRE_FALSE(solve_exact(zero, {r(1), r(0)}).consistent);

  REQUIRE(nullity({{r(1), r(2), r(3)}, {r(2), r(4), r(6)}}) == 2);
  REQUIRE(nullity({{r(1), r(0)}, {r(0), r(1)}}) == 0);
}

TEST_CASE("random systems round-trip", "[linsolve]") {
  std::mt19937_64 g(43);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_int_distribution<long long> num(-6, 6);
  std::uniform_int_distribution<long long> den(1, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = dim(g), cols = dim(g);
    Mat a(rows, Vec(cols));
    Vec x0(cols);
    for (auto& row : a)
      for (auto& e : row) e = r(num(g), den(g));
    for (auto& e : x0) e = r(num(g), den(g));
    Vec b = matvec(a, x0);

    LinearSolveResult res = solve_exact(a, b);
    REQUIRE(res.consistent);
    REQUIRE(matvec(a, res.x) == b);
    REQUIRE(static_cast<int>(res.kernel.size()) + res.rank == cols);
    for (const Vec& k : res.kernel) {
      REQUIRE(matvec(a, k) == Vec(rows, Rat(0)));
      REQUIRE(dot(res.x, k) == r(0));
    }
  }
}

#include <catch2/catch_amalgamated.hpp>

#include <azema/mc/jumpdiff.hpp>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

using azema::mc::McCheck;
using azema::mc::McParams;
using azema::mc::McReport;
using azema::mc::norm_cdf;
using azema::mc::norm_pdf;
using azema::mc::run_validation;
using azema::mc::solve_orthogonal_tilt;
using azema::mc::SurvivalTable;

namespace {

// Small grid keeping the unit run under a second while leaving every check
// with comfortable Monte Carlo resolution.
McParams small_params() {
  McParams p;
  p.n_paths = 16000;
  p.n_steps = 64;
  p.n_prime = 42;
  p.table_nodes = 1024;
  return p;
}

}  // namespace

TEST_CASE("survival table matches closed forms", "[mc]") {
  SurvivalTable t;
  t.build(16, 1.0 / 64, 512);

  // Grid geometry is exact in binary for these powers of two.
  REQUIRE(t.step_sd == 0.125);
  REQUIRE(t.umax == 5.0);
  REQUIRE(t.du == 5.0 / 512);

  // Conventions at the edges: no steps left, clamped cushion, far cushion.
  REQUIRE(t.query(0, 0.7) == 0.0);
  REQUIRE(t.query(-3, 0.2) == 0.0);
  REQUIRE(t.query(5, -2.0) == t.query(5, 0.0));
  REQUIRE(t.query(7, 5.0) == 0.0);
  REQUIRE(t.query(7, 99.0) == 0.0);

  // The one-step row is the Gaussian tail: exact at the zero node, within a
  // few ulp at interior nodes (the reference here may be constant-folded to
  // the correctly rounded value while the table goes through the runtime
  // libm), and to the piecewise-linear tolerance between nodes.
  REQUIRE(t.query(1, 0.0) == 0.5);
  REQUIRE_THAT(t.query(1, 0.625), Catch::Matchers::WithinULP(norm_cdf(-5.0), 4));
  REQUIRE_THAT(t.query(1, 2.5), Catch::Matchers::WithinULP(norm_cdf(-20.0), 4));
  for (double u : {0.031, 0.111, 0.23, 0.49})
    REQUIRE(std::fabs(t.query(1, u) - norm_cdf(-u / 0.125)) < 2e-4);

  // No-exceed probabilities of a symmetric continuous walk at zero cushion
  // are distribution free: 1 - C(2m, m) / 4^m.
  REQUIRE(std::fabs(t.query(2, 0.0) - 0.625) < 2e-6);
  REQUIRE(std::fabs(t.query(3, 0.0) - 0.6875) < 3e-6);
  REQUIRE(std::fabs(t.query(16, 0.0) - (1.0 - 601080390.0 / 4294967296.0)) < 1e-5);

  // Monotone in the cushion, monotone in the horizon, valued in [0, 1].
  for (int m : {1, 4, 9, 16}) {
    double prev = 1.0;
    for (int j = 0; j <= 40; ++j) {
      const double q = t.query(m, 0.12 * j);
      REQUIRE(q >= 0.0);
      REQUIRE(q <= prev);
      prev = q;
    }
  }
  for (double u : {0.0, 0.2, 0.8}) {
    for (int m = 1; m < 16; ++m) REQUIRE(t.query(m + 1, u) >= t.query(m, u));
    REQUIRE(t.query(16, u) > t.query(1, u));
  }

  // Odd node counts cannot carry the Simpson weights.
  SurvivalTable bad;
  REQUIRE_THROWS_AS(bad.build(4, 1.0 / 64, 511), std::invalid_argument);
}

TEST_CASE("orthogonal tilt satisfies its defining identity", "[mc]") {
  const double dt = 1.5 / 256;
  const double s = std::sqrt(dt);
  const double mu = 0.05, sigma = 0.2;

  for (double u : {0.5 * s, 0.75 * s, s, 2 * s, 4 * s, 0.3, 1.0, 3.0}) {
    double res = 0;
    const double p = solve_orthogonal_tilt(u, mu, sigma, dt, &res);
    REQUIRE(res <= 1e-9);
    const double v = (u - p * dt) / s;
    const double g = (mu + sigma * p) * dt * norm_cdf(v) - sigma * s * norm_pdf(v);
    REQUIRE(std::fabs(g) < 1e-12);
    // Truncation below the cushion pushes the tilt above the free value; far
    // beyond the step scale the correction underflows onto the free value.
    REQUIRE(p >= -mu / sigma);
    if (u <= 4 * s) REQUIRE(p > -mu / sigma);
  }

  // The residual pointer keeps the worst case across calls.
  double worst = 0;
  solve_orthogonal_tilt(0.5 * s, mu, sigma, dt, &worst);
  const double kept = worst;
  solve_orthogonal_tilt(3.0, mu, sigma, dt, &worst);
  REQUIRE(worst >= kept);

  // A cushion far beyond the step scale makes the truncation invisible.
  REQUIRE(solve_orthogonal_tilt(6.0, mu, sigma, dt, nullptr) == -0.25);

  // The tilt decays toward the free value as the cushion grows.
  double prev = 1e9;
  for (double u : {0.5 * s, s, 2 * s, 4 * s, 8 * s}) {
    const double p = solve_orthogonal_tilt(u, mu, sigma, dt, nullptr);
    REQUIRE(p < prev);
    prev = p;
  }
}

TEST_CASE("validation harness rejects grids without room for the censor", "[mc]") {
  McParams p = small_params();
  p.n_prime = 3;
  REQUIRE_THROWS_AS(run_validation(p), std::invalid_argument);
  p = small_params();
  p.n_prime = p.n_steps;
  REQUIRE_THROWS_AS(run_validation(p), std::invalid_argument);
  p = small_params();
  p.n_prime = p.n_steps + 9;
  REQUIRE_THROWS_AS(run_validation(p), std::invalid_argument);
  p = small_params();
  p.table_nodes = 1023;
  REQUIRE_THROWS_AS(run_validation(p), std::invalid_argument);
}

TEST_CASE("validation harness passes its null and control checks", "[mc]") {
  const McReport rep = run_validation(small_params());

  const std::vector<std::string> expected_ids{
      "survival_level",
      "survival_level_weighted",
      "survival_entry",
      "crossing_level",
      "crossing_level_weighted",
      "after_transform_w",
      "after_transform_w_tail",
      "after_transform_jump",
      "after_transform_jump_tail",
      "deflator_martingale_window",
      "deflator_martingale_window_tail",
      "deflated_price_window",
      "orthogonal_tilt_increments",
      "deflated_price_supermartingale",
      "control_after_transform_uncorrected",
      "control_deflator_unnormalized",
      "control_trade_unnormalized",
      "control_wrong_sign_tilt",
      "tilt_solver_residual",
      "exclusions_fraction",
      "positivity_violations",
      "determinism",
  };
  REQUIRE(rep.checks.size() == expected_ids.size());
  for (std::size_t i = 0; i < expected_ids.size(); ++i)
    REQUIRE(rep.checks[i].id == expected_ids[i]);

  int two_sided = 0, one_sided = 0, control = 0, bound = 0, flag = 0;
  for (const McCheck& c : rep.checks) {
    INFO(c.id << ": kind " << c.kind << ", stat " << c.stat << ", se " << c.se);
    REQUIRE(c.ok);
    if (c.kind == "two_sided") {
      REQUIRE(c.threshold == 3.0 * c.se);
      ++two_sided;
    } else if (c.kind == "one_sided") {
      REQUIRE(c.threshold == 3.0 * c.se);
      REQUIRE(c.stat <= c.threshold);
      ++one_sided;
    } else if (c.kind == "control") {
      REQUIRE(std::fabs(c.stat) > c.threshold);
      ++control;
    } else if (c.kind == "bound") {
      ++bound;
    } else {
      REQUIRE(c.kind == "flag");
      ++flag;
    }
  }
  REQUIRE(two_sided == 13);
  REQUIRE(one_sided == 1);
  REQUIRE(control == 4);
  REQUIRE(bound == 3);
  REQUIRE(flag == 1);
  REQUIRE(rep.all_ok());

  REQUIRE(rep.excluded_paths == 0);
  REQUIRE(rep.excluded_fraction == 0.0);
  REQUIRE(rep.positivity_violations == 0);
  REQUIRE(rep.deterministic);
  REQUIRE(rep.tilt_residual_worst <= 1e-9);
  REQUIRE(rep.psi1 == -0.25);
  // The table survival at the check date differs from the continuous closed
  // form by a genuine discrete-monitoring gap; it is reported, not tested.
  REQUIRE(rep.grid_vs_closed_form_gap > 0.0);
  REQUIRE(rep.grid_vs_closed_form_gap < 0.1);
  REQUIRE(rep.elapsed_seconds >= 0.0);

  const nlohmann::json j = rep.to_json();
  REQUIRE(j["schema"] == 1);
  REQUIRE(j["command"] == "mc");
  REQUIRE(j["params"].size() == 11);
  REQUIRE(j["params"]["n_paths"] == 16000);
  REQUIRE(j["params"]["n_prime"] == 42);
  REQUIRE(j["checks"].is_array());
  REQUIRE(j["checks"].size() == expected_ids.size());
  for (const auto& c : j["checks"]) {
    REQUIRE(c.contains("id"));
    REQUIRE(c.contains("kind"));
    REQUIRE(c.contains("stat"));
    REQUIRE(c.contains("se"));
    REQUIRE(c.contains("threshold"));
    REQUIRE(c["status"] == "pass");
  }
  REQUIRE(j["counters"]["excluded_paths"] == 0);
  REQUIRE(j["counters"]["positivity_violations"] == 0);
  REQUIRE(j["diagnostics"]["deterministic"] == true);
  REQUIRE(j["all_ok"] == true);
}

TEST_CASE("validation harness is bitwise reproducible", "[mc]") {
  const McReport a = run_validation(small_params());
  const McReport b = run_validation(small_params());
  REQUIRE(a.checks.size() == b.checks.size());
  for (std::size_t i = 0; i < a.checks.size(); ++i) {
    REQUIRE(a.checks[i].id == b.checks[i].id);
    REQUIRE(a.checks[i].stat == b.checks[i].stat);
    REQUIRE(a.checks[i].se == b.checks[i].se);
    REQUIRE(a.checks[i].ok == b.checks[i].ok);
  }
  REQUIRE(a.excluded_paths == b.excluded_paths);
  REQUIRE(a.grid_vs_closed_form_gap == b.grid_vs_closed_form_gap);

  // A different seed moves at least one sampled statistic.
  McParams q = small_params();
  q.seed += 1;
  const McReport c = run_validation(q);
  bool moved = false;
  for (std::size_t i = 0; i < a.checks.size(); ++i)
    if (a.checks[i].kind == "two_sided" && a.checks[i].stat != c.checks[i].stat) moved = true;
  REQUIRE(moved);
}

TEST_CASE("driftless coefficients reduce to closed forms", "[mc]") {
  McParams p = small_params();
  p.mu = 0.0;
  p.zeta = 0.0;
  p.sigma = 1.0;
  p.phi_slope = 0.02;  // unit volatility swells |dS|, so the trade leans gently
  const McReport rep = run_validation(p);
  REQUIRE(rep.psi1 == 0.0);

  // Zero drift makes the per-step price factor mean-one exactly, so the
  // terminal sample mean must sit inside its own confidence band.
  REQUIRE(std::fabs(rep.s_terminal_mean - 1.0) <= 3.0 * rep.s_terminal_se);

  // Without jumps the log price is a sum of independent increments with
  // variance sigma^2 dt + O(dt^2) per step; the band covers the sampling
  // error and the discretization correction together.
  REQUIRE(std::fabs(rep.log_s_variance - 1.5) < 0.15);

  // At mu = 0 the sign-flipped tilt coincides with the free tilt, yet it
  // still omits the truncation correction, so every control keeps firing.
  for (const McCheck& c : rep.checks) {
    INFO(c.id << ": kind " << c.kind << ", stat " << c.stat << ", se " << c.se);
    REQUIRE(c.ok);
  }
}

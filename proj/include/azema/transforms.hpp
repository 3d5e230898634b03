#pragma once

#include <optional>
#include <string>
#include <vector>

#include "azema/enlargement.hpp"
#include "azema/space.hpp"

namespace azema {

inline void require_f_martingale(const FiniteFilteredSpace& sp, const Process& m, const char* who) {
  MartingaleReport rep = is_martingale(sp, sp.F, m);
  require(rep.ok, std::string(who) + ": input is not an F-martingale");
}

namespace detail {

// After-death transform body, shared with the decomposition module.
inline Process t_after_core(const FiniteFilteredSpace& sp, const SurvivalBundle& b,
                            const std::vector<int>& tau, const Process& mart) {
  Process out = zero_process(sp, Tag::G);
  for (int k = 1; k <= sp.horizon; ++k) {
    std::vector<Rat> charged(sp.n());
    for (int omega = 0; omega < sp.n(); ++omega) {
      Rat dm = mart.v[k][omega] - mart.v[k - 1][omega];
      charged[omega] = (b.Gtilde.v[k][omega] == 1) ? dm : Rat(0);
    }
    std::vector<Rat> corr = cond_expect(sp, sp.F, charged, k - 1);
    for (int omega = 0; omega < sp.n(); ++omega) {
      Rat inc = 0;
      if (tau[omega] < k) {
        Rat dm = mart.v[k][omega] - mart.v[k - 1][omega];
        inc = (Rat(1) - b.G.v[k - 1][omega]) / (Rat(1) - b.G.v[k][omega]) * dm + corr[omega];
      }
      out.v[k][omega] = out.v[k - 1][omega] + inc;
    }
  }
  return out;
}

// Bracket form body: dT_k = I{tau<k} (dM_k + dM_k dm_k / (1-Gtilde_k)).
inline Process t_after_bracket_core(const FiniteFilteredSpace& sp, const SurvivalBundle& b,
                                    const std::vector<int>& tau, const Process& mart) {
  Process out = zero_process(sp, Tag::G);
  for (int k = 1; k <= sp.horizon; ++k)
    for (int omega = 0; omega < sp.n(); ++omega) {
      Rat inc = 0;
      if (tau[omega] < k) {
        Rat dm_in = mart.v[k][omega] - mart.v[k - 1][omega];
        Rat dm_m = b.m.v[k][omega] - b.m.v[k - 1][omega];
        inc = dm_in + dm_in * dm_m / (Rat(1) - b.Gtilde.v[k][omega]);
      }
      out.v[k][omega] = out.v[k - 1][omega] + inc;
    }
  return out;
}

// Before-death transform body.
inline Process t_before_core(const FiniteFilteredSpace& sp, const SurvivalBundle& b,
                             const std::vector<int>& tau, const Process& mart) {
  Process out = zero_process(sp, Tag::G);
  for (int k = 1; k <= sp.horizon; ++k) {
    std::vector<Rat> charged(sp.n());
    for (int omega = 0; omega < sp.n(); ++omega) {
      Rat dm = mart.v[k][omega] - mart.v[k - 1][omega];
      charged[omega] = (b.Gtilde.v[k][omega] == 0 && b.G.v[k - 1][omega] > 0) ? dm : Rat(0);
    }
    std::vector<Rat> corr = cond_expect(sp, sp.F, charged, k - 1);
    for (int omega = 0; omega < sp.n(); ++omega) {
      Rat inc = 0;
      if (k <= tau[omega]) {
        Rat dm_in = mart.v[k][omega] - mart.v[k - 1][omega];
        Rat dm_m = b.m.v[k][omega] - b.m.v[k - 1][omega];
        inc = dm_in - dm_in * dm_m / b.Gtilde.v[k][omega] + corr[omega];
      }
      out.v[k][omega] = out.v[k - 1][omega] + inc;
    }
  }
  return out;
}

}  // namespace detail

// After-death transform: dT_k = (1-G_{k-1})/(1-G_k) I{tau<k} dM_k
//                               + I{tau<k} E[dM_k I{Gtilde_k=1} | F_{k-1}].
// 1-G_k > 0 on {tau < k} since those atoms contain a dead outcome. The conditional term
// restores the martingale property when dM charges {Gtilde_k = 1}.
inline Process t_after(const FiniteFilteredSpace& sp, const std::vector<int>& tau, const Process& mart) {
  require_f_martingale(sp, mart, "t_after");
  SurvivalBundle b = survival_bundle(sp, tau);
  return detail::t_after_core(sp, b, tau, mart);
}

// Bracket form of the after-death transform: dT_k = I{tau<k} (dM_k + dM_k dm_k / (1-Gtilde_k)).
// 1-Gtilde_k > 0 on {tau < k} always. Coincides with t_after for honest tau when dM does not
// charge {Gtilde = 1} strictly past G_{-} = 1.
inline Process t_after_bracket(const FiniteFilteredSpace& sp, const std::vector<int>& tau, const Process& mart) {
  require_f_martingale(sp, mart, "t_after_bracket");
  SurvivalBundle b = survival_bundle(sp, tau);
  return detail::t_after_bracket_core(sp, b, tau, mart);
}

// Before-death transform: dT_k = I{k<=tau} (dM_k - dM_k dm_k / Gtilde_k
//                                           + E[dM_k I{Gtilde_k=0 < G_{k-1}} | F_{k-1}]).
// Gtilde_k > 0 on {k <= tau} always. No honesty needed.
inline Process t_before(const FiniteFilteredSpace& sp, const std::vector<int>& tau, const Process& mart) {
  require_f_martingale(sp, mart, "t_before");
  SurvivalBundle b = survival_bundle(sp, tau);
  return detail::t_before_core(sp, b, tau, mart);
}

// Drift-corrected after-death martingale: dT_k = I{tau<k} (dM_k + d<m,M>_k / (1-G_{k-1}))
// with <m,M> the compensator of [m,M]. Exact for honest tau.
inline Process m_hat_after(const FiniteFilteredSpace& sp, const std::vector<int>& tau, const Process& mart) {
  require_f_martingale(sp, mart, "m_hat_after");
  SurvivalBundle b = survival_bundle(sp, tau);
  Process out = zero_process(sp, Tag::G);
  for (int k = 1; k <= sp.horizon; ++k) {
    std::vector<Rat> cross(sp.n());
    for (int omega = 0; omega < sp.n(); ++omega)
      cross[omega] = (b.m.v[k][omega] - b.m.v[k - 1][omega]) * (mart.v[k][omega] - mart.v[k - 1][omega]);
    std::vector<Rat> comp = cond_expect(sp, sp.F, cross, k - 1);
    for (int omega = 0; omega < sp.n(); ++omega) {
      Rat inc = 0;
      if (tau[omega] < k)
        inc = mart.v[k][omega] - mart.v[k - 1][omega] + comp[omega] / (Rat(1) - b.G.v[k - 1][omega]);
      out.v[k][omega] = out.v[k - 1][omega] + inc;
    }
  }
  return out;
}

struct BracketIdentityReport {
  bool refused = false;     // assumption flags not satisfied
  AssumptionFlags flags;
  bool bracket_ok = false;      // [T(X),Y] = [X,T(Y)] = (1-G_-)/(1-Gtilde) I dot [X,Y]
  bool exponential_ok = false;  // E(I.X)/E(killed m) = E(T(X) + (1-G_-)^{-1} I . T(m))
  bool ratio_mart_ok = false;   // (I.X)/E(killed m) is a G-martingale
  std::optional<IdentityWitness> witness;
  bool ok() const { return !refused && bracket_ok && exponential_ok && ratio_mart_ok; }
};

// Identities tying the after-death transform to the exponential of the killed m integral.
// Requires the full assumption set; refuse otherwise.
inline BracketIdentityReport bracket_identities(const FiniteFilteredSpace& sp, const std::vector<int>& tau,
                                                const Process& x, const Process& y) {
  require_f_martingale(sp, x, "bracket_identities");
  require_f_martingale(sp, y, "bracket_identities");
  BracketIdentityReport rep;
  AssumptionReport flags = check_assumptions(sp, tau);
  rep.flags = flags.flags;
  if (!flags.flags.core()) {
    rep.refused = true;
    return rep;
  }
  SurvivalBundle b = survival_bundle(sp, tau);
  Filtration enlarged = enlarge(sp, tau);
  Process ind = indicator_after(sp, tau);
  Process tx = detail::t_after_bracket_core(sp, b, tau, x);
  Process ty = detail::t_after_bracket_core(sp, b, tau, y);
  Process tm = detail::t_after_bracket_core(sp, b, tau, b.m);

  Process lhs1 = quadratic_covariation(sp, tx, y);
  Process lhs2 = quadratic_covariation(sp, x, ty);
  Process xy = quadratic_covariation(sp, x, y);
  Process rhs = zero_process(sp, Tag::G);
  for (int k = 1; k <= sp.horizon; ++k)
    for (int omega = 0; omega < sp.n(); ++omega) {
      Rat inc = 0;
      if (tau[omega] < k)
        inc = (Rat(1) - b.G.v[k - 1][omega]) / (Rat(1) - b.Gtilde.v[k][omega]) *
              (xy.v[k][omega] - xy.v[k - 1][omega]);
      rhs.v[k][omega] = rhs.v[k - 1][omega] + inc;
    }
  rep.bracket_ok = true;
  for (int n = 0; n <= sp.horizon && rep.bracket_ok; ++n)
    for (int omega = 0; omega < sp.n(); ++omega)
      if (lhs1.v[n][omega] != rhs.v[n][omega] || lhs2.v[n][omega] != rhs.v[n][omega]) {
        rep.bracket_ok = false;
        rep.witness = IdentityWitness{n, omega, lhs1.v[n][omega], rhs.v[n][omega]};
        break;
      }

  // Killed m integral: steps 1 - I{tau<k} dm_k/(1-G_{k-1}); positive on {tau<k}.
  Process killed = zero_process(sp, Tag::G);
  for (int k = 1; k <= sp.horizon; ++k)
    for (int omega = 0; omega < sp.n(); ++omega) {
      Rat inc = 0;
      if (tau[omega] < k)
        inc = -(b.m.v[k][omega] - b.m.v[k - 1][omega]) / (Rat(1) - b.G.v[k - 1][omega]);
      killed.v[k][omega] = killed.v[k - 1][omega] + inc;
    }
  Process denom = stoch_exponential(sp, killed);

  Process ix = stoch_integral(sp, ind, x);
  Process lhs_exp = stoch_exponential(sp, ix);
  Process arg = zero_process(sp, Tag::G);
  for (int k = 1; k <= sp.horizon; ++k)
    for (int omega = 0; omega < sp.n(); ++omega) {
      Rat inc = tx.v[k][omega] - tx.v[k - 1][omega];
      if (tau[omega] < k)
        inc += (tm.v[k][omega] - tm.v[k - 1][omega]) / (Rat(1) - b.G.v[k - 1][omega]);
      arg.v[k][omega] = arg.v[k - 1][omega] + inc;
    }
  Process rhs_exp = stoch_exponential(sp, arg);
  rep.exponential_ok = true;
  for (int n = 0; n <= sp.horizon && rep.exponential_ok; ++n)
    for (int omega = 0; omega < sp.n(); ++omega) {
      Rat lhs = lhs_exp.v[n][omega] / denom.v[n][omega];
      if (lhs != rhs_exp.v[n][omega]) {
        rep.exponential_ok = false;
        rep.witness = IdentityWitness{n, omega, lhs, rhs_exp.v[n][omega]};
        break;
      }
    }

  Process ratio = zero_process(sp, Tag::G);
  for (int n = 0; n <= sp.horizon; ++n)
    for (int omega = 0; omega < sp.n(); ++omega) ratio.v[n][omega] = ix.v[n][omega] / denom.v[n][omega];
  rep.ratio_mart_ok = is_martingale(sp, enlarged, ratio).ok;
  return rep;
}

// Summability functional sum_omega P(omega) sum_k I{Gtilde_k<1} dM_k^2 / (1-Gtilde_k + |dM_k|).
inline Rat mm_ftau_functional(const FiniteFilteredSpace& sp, const std::vector<int>& tau, const Process& mart) {
  SurvivalBundle b = survival_bundle(sp, tau);
  Rat acc = 0;
  for (int omega = 0; omega < sp.n(); ++omega) {
    Rat path = 0;
    for (int k = 1; k <= sp.horizon; ++k) {
      if (b.Gtilde.v[k][omega] >= 1) continue;
      Rat dm = mart.v[k][omega] - mart.v[k - 1][omega];
      path += dm * dm / (Rat(1) - b.Gtilde.v[k][omega] + rat_abs(dm));
    }
    acc += sp.prob[omega] * path;
  }
  return acc;
}

}  // namespace azema

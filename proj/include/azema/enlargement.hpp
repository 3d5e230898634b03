#pragma once

#include <optional>
#include <string>
#include <vector>

#include "azema/space.hpp"

namespace azema {

inline void validate_tau(const FiniteFilteredSpace& sp, const std::vector<int>& tau) {
  require(tau.size() == static_cast<std::size_t>(sp.n()), "tau size mismatch");
  for (int t : tau) require(t >= 0 && t <= sp.horizon, "tau value out of range");
}

// Progressive enlargement: each level-n atom splits into its {tau=j} slices (j<=n) and
// its {tau>n} remainder, so the death time is observable as it happens.
inline Filtration enlarge(const FiniteFilteredSpace& sp, const std::vector<int>& tau) {
  validate_tau(sp, tau);
  std::vector<Partition> levels(sp.horizon + 1);
  for (int n = 0; n <= sp.horizon; ++n) {
    for (const Atom& a : sp.F.levels[n]) {
      std::vector<Atom> cells(n + 2);  // cells[j] = {tau=j}, cells[n+1] = {tau>n}
      for (int omega : a) {
        int j = tau[omega];
        if (j <= n)
          cells[j].push_back(omega);
        else
          cells[n + 1].push_back(omega);
      }
      for (auto& c : cells)
        if (!c.empty()) levels[n].push_back(std::move(c));
    }
  }
  return make_filtration(Tag::G, std::move(levels), sp.n());
}

inline Process stopped_process(const FiniteFilteredSpace& sp, const Process& x, const std::vector<int>& tau) {
  validate_tau(sp, tau);
  Process out = x;
  for (int n = 0; n <= sp.horizon; ++n)
    for (int omega = 0; omega < sp.n(); ++omega) out.v[n][omega] = x.v[std::min(n, tau[omega])][omega];
  return out;
}

// Indicator of ]]tau, infty[[ at time n, i.e. I{tau < n}. Predictable in the enlarged filtration.
inline Process indicator_after(const FiniteFilteredSpace& sp, const std::vector<int>& tau) {
  Process out = zero_process(sp, Tag::G);
  for (int n = 0; n <= sp.horizon; ++n)
    for (int omega = 0; omega < sp.n(); ++omega) out.v[n][omega] = (tau[omega] < n) ? 1 : 0;
  return out;
}

// Indicator of [[0, tau]] at time n, i.e. I{n <= tau}.
inline Process indicator_upto(const FiniteFilteredSpace& sp, const std::vector<int>& tau) {
  Process out = zero_process(sp, Tag::G);
  for (int n = 0; n <= sp.horizon; ++n)
    for (int omega = 0; omega < sp.n(); ++omega) out.v[n][omega] = (n <= tau[omega]) ? 1 : 0;
  return out;
}

struct SurvivalBundle {
  Process D;       // I{tau <= n}, adapted to the enlarged filtration
  Process G;       // P(tau > n | F_n)
  Process Gtilde;  // P(tau >= n | F_n)
  Process DoF;     // dual optional projection of D onto F
  Process DpF;     // dual predictable projection of D onto F (the compensator)
  Process m;       // G + DoF, an F-martingale
  Process NG;      // D compensated on [[0, tau]], a G-martingale
};

inline SurvivalBundle survival_bundle(const FiniteFilteredSpace& sp, const std::vector<int>& tau) {
  validate_tau(sp, tau);
  SurvivalBundle b;
  b.D = zero_process(sp, Tag::G);
  std::vector<std::vector<Rat>> gt(sp.horizon + 1, std::vector<Rat>(sp.n()));
  std::vector<std::vector<Rat>> ge(sp.horizon + 1, std::vector<Rat>(sp.n()));
  for (int n = 0; n <= sp.horizon; ++n)
    for (int omega = 0; omega < sp.n(); ++omega) {
      b.D.v[n][omega] = (tau[omega] <= n) ? 1 : 0;
      gt[n][omega] = (tau[omega] > n) ? 1 : 0;
      ge[n][omega] = (tau[omega] >= n) ? 1 : 0;
    }
  b.G = optional_projection(sp, sp.F, gt);
  b.Gtilde = optional_projection(sp, sp.F, ge);
  b.DoF = dual_optional_projection(sp, sp.F, b.D.v);
  b.DoF.tag = Tag::F;
  b.DpF = dual_predictable_projection(sp, sp.F, b.D.v);
  b.DpF.tag = Tag::F;
  b.m = zero_process(sp, Tag::F);
  for (int n = 0; n <= sp.horizon; ++n)
    for (int omega = 0; omega < sp.n(); ++omega) b.m.v[n][omega] = b.G.v[n][omega] + b.DoF.v[n][omega];
  // Compensate D on [[0, tau]]: dNG_n = dD_n - I{n <= tau} dDoF_n / Gtilde_n.
  // Gtilde_n > 0 holds on {n <= tau} because each atom there contains a surviving outcome.
  b.NG = zero_process(sp, Tag::G);
  for (int omega = 0; omega < sp.n(); ++omega) b.NG.v[0][omega] = b.D.v[0][omega];
  for (int n = 1; n <= sp.horizon; ++n)
    for (int omega = 0; omega < sp.n(); ++omega) {
      Rat inc = b.D.v[n][omega] - b.D.v[n - 1][omega];
      if (n <= tau[omega]) {
        Rat ddof = b.DoF.v[n][omega] - b.DoF.v[n - 1][omega];
        inc -= ddof / b.Gtilde.v[n][omega];
      }
      b.NG.v[n][omega] = b.NG.v[n - 1][omega] + inc;
    }
  return b;
}

struct HonestyWitness {
  int time = -1;
  int atom = -1;  // F-atom index at that time
  int o1 = -1, o2 = -1;  // outcomes in the atom with distinct past tau values
};

struct HonestyReport {
  bool honest = false;
  std::optional<HonestyWitness> witness;
};

// Honest means: on each level-n atom, the outcomes already dead by n agree on when they died.
// The verdict scans {tau <= n}; the reported witness prefers the first strict-past
// disagreement ({tau < n}), which is how a disagreement first becomes visible.
inline HonestyReport is_honest(const FiniteFilteredSpace& sp, const std::vector<int>& tau) {
  validate_tau(sp, tau);
  HonestyReport rep;
  rep.honest = true;
  std::optional<HonestyWitness> le_witness;
  for (int n = 1; n <= sp.horizon && !le_witness; ++n) {
    const Partition& part = sp.F.levels[n];
    for (std::size_t a = 0; a < part.size() && !le_witness; ++a) {
      int first = -1;
      for (int omega : part[a]) {
        if (tau[omega] > n) continue;
        if (first == -1) {
          first = omega;
        } else if (tau[omega] != tau[first]) {
          le_witness = HonestyWitness{n, static_cast<int>(a), first, omega};
          break;
        }
      }
    }
  }
  rep.honest = !le_witness.has_value();
  if (rep.honest) return rep;
  for (int n = 1; n <= sp.horizon; ++n) {
    const Partition& part = sp.F.levels[n];
    for (std::size_t a = 0; a < part.size(); ++a) {
      int first = -1;
      for (int omega : part[a]) {
        if (tau[omega] >= n) continue;
        if (first == -1)
          first = omega;
        else if (tau[omega] != tau[first]) {
          rep.witness = HonestyWitness{n, static_cast<int>(a), first, omega};
          return rep;
        }
      }
    }
  }
  rep.witness = le_witness;
  return rep;
}

struct AssumptionWitness {
  int time = -1;
  int outcome = -1;
};

struct AssumptionFlags {
  bool finite = true;
  bool honest = false;
  bool g_tau_lt_1 = false;
  bool no_gtilde_one_gminus_lt_one = false;  // no time with Gtilde_n = 1 > G_{n-1}
  bool g_positive = false;                   // G_n > 0 for n < horizon

  bool all() const { return finite && honest && g_tau_lt_1 && no_gtilde_one_gminus_lt_one && g_positive; }
  bool core() const { return finite && honest && g_tau_lt_1 && no_gtilde_one_gminus_lt_one; }
};

struct AssumptionReport {
  AssumptionFlags flags;
  HonestyReport honesty;
  std::optional<AssumptionWitness> g_tau_witness;
  std::optional<AssumptionWitness> gtilde_witness;
  std::optional<AssumptionWitness> g_positive_witness;
};

inline AssumptionReport check_assumptions(const FiniteFilteredSpace& sp, const std::vector<int>& tau) {
  AssumptionReport rep;
  SurvivalBundle b = survival_bundle(sp, tau);
  rep.honesty = is_honest(sp, tau);
  rep.flags.honest = rep.honesty.honest;
  rep.flags.g_tau_lt_1 = true;
  for (int omega = 0; omega < sp.n() && rep.flags.g_tau_lt_1; ++omega)
    if (b.G.v[tau[omega]][omega] >= 1) {
      rep.flags.g_tau_lt_1 = false;
      rep.g_tau_witness = AssumptionWitness{tau[omega], omega};
    }
  rep.flags.no_gtilde_one_gminus_lt_one = true;
  for (int n = 1; n <= sp.horizon && rep.flags.no_gtilde_one_gminus_lt_one; ++n)
    for (int omega = 0; omega < sp.n(); ++omega)
      if (b.Gtilde.v[n][omega] == 1 && b.G.v[n - 1][omega] < 1) {
        rep.flags.no_gtilde_one_gminus_lt_one = false;
        rep.gtilde_witness = AssumptionWitness{n, omega};
        break;
      }
  rep.flags.g_positive = true;
  for (int n = 0; n < sp.horizon && rep.flags.g_positive; ++n)
    for (int omega = 0; omega < sp.n(); ++omega)
      if (b.G.v[n][omega] == 0) {
        rep.flags.g_positive = false;
        rep.g_positive_witness = AssumptionWitness{n, omega};
        break;
      }
  return rep;
}

struct IdentityWitness {
  int time = -1;
  int outcome = -1;
  Rat lhs, rhs;
};

struct XgReport {
  bool ok = false;
  bool after_death_mass_ok = false;  // dual optional projection of D flat after tau
  bool ratio_ok = false;             // (1-G)/(1-G^tau) equals the exponential of the killed m integral
  std::optional<IdentityWitness> mass_witness;
  std::optional<IdentityWitness> ratio_witness;
  std::string cause;  // "not honest" when honesty is the reason a check failed
};

// Two signatures of honesty: the survival mass D^{o,F} never grows strictly after tau, and
// (1-G)/(1-G^tau) is the stochastic exponential of -(1-G_-)^{-1} I_{]]tau,oo[[} . m.
// 1-G_k > 0 on {tau <= k} always holds, so the ratio is well defined.
inline XgReport xg_identity(const FiniteFilteredSpace& sp, const std::vector<int>& tau) {
  SurvivalBundle b = survival_bundle(sp, tau);
  HonestyReport hon = is_honest(sp, tau);
  XgReport rep;
  rep.after_death_mass_ok = true;
  for (int n = 1; n <= sp.horizon && rep.after_death_mass_ok; ++n)
    for (int omega = 0; omega < sp.n(); ++omega) {
      if (tau[omega] >= n) continue;
      Rat inc = b.DoF.v[n][omega] - b.DoF.v[n - 1][omega];
      if (inc != 0) {
        rep.after_death_mass_ok = false;
        rep.mass_witness = IdentityWitness{n, omega, inc, Rat(0)};
        break;
      }
    }
  rep.ratio_ok = true;
  for (int omega = 0; omega < sp.n() && rep.ratio_ok; ++omega) {
    Rat g_at_tau = b.G.v[tau[omega]][omega];
    Rat prod = 1;
    for (int n = 0; n <= sp.horizon; ++n) {
      if (n >= 1 && tau[omega] < n) {
        Rat dm = b.m.v[n][omega] - b.m.v[n - 1][omega];
        prod *= Rat(1) - dm / (Rat(1) - b.G.v[n - 1][omega]);
      }
      Rat lhs = (tau[omega] <= n) ? Rat((Rat(1) - b.G.v[n][omega]) / (Rat(1) - g_at_tau)) : Rat(1);
      if (lhs != prod) {
        rep.ratio_ok = false;
        rep.ratio_witness = IdentityWitness{n, omega, lhs, prod};
        break;
      }
    }
  }
  rep.ok = rep.after_death_mass_ok && rep.ratio_ok;
  if (!rep.ok && !hon.honest) rep.cause = "not honest";
  return rep;
}

struct ReductionResult {
  bool ok = false;
  Process reduced;  // F-adapted agreement on {tau < n}; zero off that set
  std::optional<IdentityWitness> witness;
};

// Finds the F-adapted process agreeing with H on ]]tau, infty[[. Exists when the dead part
// of each atom carries a single value of H, which honesty guarantees for G-adapted inputs.
inline ReductionResult optional_reduction(const FiniteFilteredSpace& sp, const std::vector<int>& tau,
                                          const Process& h) {
  validate_tau(sp, tau);
  ReductionResult res;
  res.reduced = zero_process(sp, Tag::F);
  for (int n = 0; n <= sp.horizon; ++n) {
    for (const Atom& a : sp.F.levels[n]) {
      int first = -1;
      for (int omega : a) {
        if (tau[omega] >= n) continue;
        if (first == -1)
          first = omega;
        else if (h.v[n][omega] != h.v[n][first]) {
          res.witness = IdentityWitness{n, omega, h.v[n][omega], h.v[n][first]};
          return res;
        }
      }
      if (first != -1)
        for (int omega : a) res.reduced.v[n][omega] = h.v[n][first];
    }
  }
  res.ok = true;
  return res;
}

struct PredictableSplit {
  bool ok = false;
  Process before;  // F-predictable, agrees with H on [[0, tau]]
  Process after;   // F-predictable, agrees with H on ]]tau, infty[[
  std::optional<IdentityWitness> witness;
};

// Splits a G-predictable H into F-predictable reductions on the two sides of tau.
// The before part always exists; the after part needs the dead slice of each level-(n-1)
// atom to carry one value, which honesty guarantees.
inline PredictableSplit predictable_split(const FiniteFilteredSpace& sp, const std::vector<int>& tau,
                                          const Process& h) {
  validate_tau(sp, tau);
  PredictableSplit res;
  res.before = zero_process(sp, Tag::F);
  res.after = zero_process(sp, Tag::F);
  for (int n = 0; n <= sp.horizon; ++n) {
    int lvl = std::max(0, n - 1);
    for (const Atom& a : sp.F.levels[lvl]) {
      int alive = -1, dead = -1;
      for (int omega : a) {
        if (tau[omega] >= n) {
          if (alive == -1) alive = omega;
          if (h.v[n][omega] != h.v[n][alive]) {
            res.witness = IdentityWitness{n, omega, h.v[n][omega], h.v[n][alive]};
            return res;
          }
        } else {
          if (dead == -1) dead = omega;
          if (h.v[n][omega] != h.v[n][dead]) {
            res.witness = IdentityWitness{n, omega, h.v[n][omega], h.v[n][dead]};
            return res;
          }
        }
      }
      for (int omega : a) {
        if (alive != -1) res.before.v[n][omega] = h.v[n][alive];
        if (dead != -1) res.after.v[n][omega] = h.v[n][dead];
      }
    }
  }
  res.ok = true;
  return res;
}

struct CompensatorTransferReport {
  bool ok = false;
  std::optional<IdentityWitness> witness;
  std::string cause;
};

// After tau, the G-compensator of an F-adapted V has increments
// (1-G_{n-1})^{-1} E[(1-Gtilde_n) dV_n | F_{n-1}]. Holds for honest tau.
inline CompensatorTransferReport g2f_compensator(const FiniteFilteredSpace& sp, const std::vector<int>& tau,
                                                 const Process& v) {
  SurvivalBundle b = survival_bundle(sp, tau);
  Filtration enlarged = enlarge(sp, tau);
  Process vpg = dual_predictable_projection(sp, enlarged, v.v);
  CompensatorTransferReport rep;
  rep.ok = true;
  for (int n = 1; n <= sp.horizon && rep.ok; ++n) {
    std::vector<Rat> weighted(sp.n());
    for (int omega = 0; omega < sp.n(); ++omega)
      weighted[omega] = (Rat(1) - b.Gtilde.v[n][omega]) * (v.v[n][omega] - v.v[n - 1][omega]);
    std::vector<Rat> proj = cond_expect(sp, sp.F, weighted, n - 1);
    for (int omega = 0; omega < sp.n(); ++omega) {
      if (tau[omega] >= n) continue;
      Rat lhs = vpg.v[n][omega] - vpg.v[n - 1][omega];
      Rat rhs = proj[omega] / (Rat(1) - b.G.v[n - 1][omega]);
      if (lhs != rhs) {
        rep.ok = false;
        rep.witness = IdentityWitness{n, omega, lhs, rhs};
        break;
      }
    }
  }
  if (!rep.ok && !is_honest(sp, tau).honest) rep.cause = "not honest";
  return rep;
}

}  // namespace azema

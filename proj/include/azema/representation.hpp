#pragma once

#include <optional>
#include <vector>

#include "azema/enlargement.hpp"
#include "azema/linsolve.hpp"
#include "azema/space.hpp"
#include "azema/transforms.hpp"

namespace azema {

inline void require_g_martingale(const FiniteFilteredSpace& sp, const Filtration& enlarged, const Process& mg,
                                 const char* who) {
  MartingaleReport rep = is_martingale(sp, enlarged, mg);
  require(rep.ok, std::string(who) + ": input is not a martingale for the enlarged filtration");
}

// The F-projection of the post-death part: dMF_k = E[d(MG - MG^tau)_k | F_k].
inline Process after_tau_component(const FiniteFilteredSpace& sp, const std::vector<int>& tau, const Process& mg) {
  validate_tau(sp, tau);
  Process after = zero_process(sp, Tag::G);
  for (int n = 0; n <= sp.horizon; ++n)
    for (int omega = 0; omega < sp.n(); ++omega)
      after.v[n][omega] = mg.v[n][omega] - mg.v[std::min(n, tau[omega])][omega];
  Process out = zero_process(sp, Tag::F);
  for (int k = 1; k <= sp.horizon; ++k) {
    std::vector<Rat> inc(sp.n());
    for (int omega = 0; omega < sp.n(); ++omega) inc[omega] = after.v[k][omega] - after.v[k - 1][omega];
    std::vector<Rat> proj = cond_expect(sp, sp.F, inc, k);
    for (int omega = 0; omega < sp.n(); ++omega) out.v[k][omega] = out.v[k - 1][omega] + proj[omega];
  }
  return out;
}

struct AfterIdentityReport {
  bool ok = false;
  bool first_ok = false;   // MG - MG^tau = sum I{tau<k} dMF_k / (1-Gtilde_k)
  bool second_ok = false;  // MG - MG^tau = sum I{tau<k} dT(MF)_k / (1-G_{k-1})
  std::optional<IdentityWitness> witness;
};

// Both closed forms of the post-death representation, checked exactly.
inline AfterIdentityReport representation_after_identity(const FiniteFilteredSpace& sp,
                                                         const std::vector<int>& tau, const Process& mg) {
  SurvivalBundle b = survival_bundle(sp, tau);
  Process mf = after_tau_component(sp, tau, mg);
  Process ta = detail::t_after_core(sp, b, tau, mf);
  AfterIdentityReport rep;
  rep.first_ok = true;
  rep.second_ok = true;
  for (int omega = 0; omega < sp.n(); ++omega) {
    Rat target = 0, acc1 = 0, acc2 = 0;
    for (int n = 1; n <= sp.horizon; ++n) {
      target = mg.v[n][omega] - mg.v[std::min(n, tau[omega])][omega];
      if (tau[omega] < n) {
        acc1 += (mf.v[n][omega] - mf.v[n - 1][omega]) / (Rat(1) - b.Gtilde.v[n][omega]);
        acc2 += (ta.v[n][omega] - ta.v[n - 1][omega]) / (Rat(1) - b.G.v[n - 1][omega]);
      }
      if (rep.first_ok && acc1 != target) {
        rep.first_ok = false;
        rep.witness = IdentityWitness{n, omega, acc1, target};
      }
      if (rep.second_ok && acc2 != target) {
        rep.second_ok = false;
        if (!rep.witness) rep.witness = IdentityWitness{n, omega, acc2, target};
      }
    }
  }
  rep.ok = rep.first_ok && rep.second_ok;
  return rep;
}

struct Decomposition {
  bool refused = false;
  AssumptionFlags flags;
  std::vector<Rat> initial;  // MG_0 per outcome
  Process MFb;               // F-martingale driving the stopped part
  Process MFa;               // F-martingale driving the post-death part
  Process phi_o;             // optional integrand against NG; zero off {dDoF>0, G>0}
  Process phi_pr;            // predictable integrand against D; identically zero here
  Process part_before;       // T^b(MFb)
  Process part_jump;         // phi_o . NG + phi_pr . D
  Process part_after;        // T^a(MFa)
  bool exact = false;        // reconstruction matches the input everywhere
  std::optional<IdentityWitness> residual;
  // Summability functionals, reported as exact rationals.
  Rat diag_mf;     // sum E[ dMF^2 I{Gtilde<1} / (1-Gtilde) ]
  Rat diag_mb;     // sum E[ dMFb^2 I{Gtilde>0} / Gtilde ]
  Rat diag_ma;     // sum E[ dMFa^2 I{Gtilde<1} / (1-Gtilde) ]
  Rat diag_mixed;  // jump-size functional of (MFb, phi_o) against dDoF
};

// Exact constructive decomposition of a G-martingale into stopped, jump, and post-death parts.
// Honesty (plus finiteness and G_tau < 1, which finiteness implies) is required; G_n > 0 is
// advisory and only reported through the flags.
inline Decomposition decompose_full(const FiniteFilteredSpace& sp, const std::vector<int>& tau,
                                    const Process& mg) {
  Filtration enlarged = enlarge(sp, tau);
  require_g_martingale(sp, enlarged, mg, "decompose_full");
  Decomposition dec;
  AssumptionReport flags = check_assumptions(sp, tau);
  dec.flags = flags.flags;
  if (!(dec.flags.finite && dec.flags.honest && dec.flags.g_tau_lt_1)) {
    dec.refused = true;
    return dec;
  }
  SurvivalBundle b = survival_bundle(sp, tau);
  dec.initial = mg.v[0];

  // Post-death pieces.
  Process mf = after_tau_component(sp, tau, mg);
  dec.MFa = zero_process(sp, Tag::F);
  for (int k = 1; k <= sp.horizon; ++k)
    for (int omega = 0; omega < sp.n(); ++omega) {
      Rat inc = 0;
      if (b.G.v[k - 1][omega] < 1)
        inc = (mf.v[k][omega] - mf.v[k - 1][omega]) / (Rat(1) - b.G.v[k - 1][omega]);
      dec.MFa.v[k][omega] = dec.MFa.v[k - 1][omega] + inc;
    }
  dec.part_after = detail::t_after_core(sp, b, tau, dec.MFa);

  // Stopped pieces: solve per level-(k-1) atom and level-k child on the two death cells.
  dec.MFb = zero_process(sp, Tag::F);
  dec.phi_o = zero_process(sp, Tag::F);
  dec.phi_pr = zero_process(sp, Tag::F);
  for (int k = 1; k <= sp.horizon; ++k) {
    for (const Atom& child : sp.F.levels[k]) {
      int parent_rep = child[0];
      Rat gm = b.G.v[k - 1][parent_rep];   // G_{k-1} on the parent atom
      Rat gt = b.Gtilde.v[k][child[0]];    // Gtilde_k on the child
      Rat g = b.G.v[k][child[0]];          // G_k on the child
      Rat ddof = b.DoF.v[k][child[0]] - b.DoF.v[k - 1][child[0]];
      Rat dmfb = 0, phio = 0;
      if (gt > 0) {
        // Representatives of the two cells, when present.
        std::optional<Rat> r_eq, r_gt;
        for (int omega : child) {
          Rat dmg = mg.v[k][omega] - mg.v[k - 1][omega];
          if (tau[omega] == k) r_eq = dmg;
          if (tau[omega] > k) r_gt = dmg;
        }
        if (r_eq && r_gt) {
          // ddof > 0 and g > 0: two equations, two unknowns; Gtilde = g + ddof.
          phio = *r_eq - *r_gt;
          dmfb = (*r_gt * gt + phio * ddof) / gm;
        } else if (r_gt) {
          dmfb = *r_gt * gt / gm;
        } else if (r_eq) {
          dmfb = *r_eq * gt / gm;
        }
      }
      for (int omega : child) {
        dec.MFb.v[k][omega] = dec.MFb.v[k - 1][omega] + dmfb;
        dec.phi_o.v[k][omega] = phio;
      }
    }
  }
  dec.part_before = detail::t_before_core(sp, b, tau, dec.MFb);
  dec.part_jump = stoch_integral(sp, dec.phi_o, b.NG);

  // Reconstruction residual.
  dec.exact = true;
  for (int n = 0; n <= sp.horizon && dec.exact; ++n)
    for (int omega = 0; omega < sp.n(); ++omega) {
      Rat rebuilt = dec.initial[omega] + dec.part_before.v[n][omega] + dec.part_jump.v[n][omega] +
                    dec.part_after.v[n][omega];
      if (rebuilt != mg.v[n][omega]) {
        dec.exact = false;
        dec.residual = IdentityWitness{n, omega, rebuilt, mg.v[n][omega]};
        break;
      }
    }

  for (int omega = 0; omega < sp.n(); ++omega) {
    Rat acc_mf = 0, acc_mb = 0, acc_ma = 0;
    for (int k = 1; k <= sp.horizon; ++k) {
      Rat gt = b.Gtilde.v[k][omega];
      Rat dmf = mf.v[k][omega] - mf.v[k - 1][omega];
      Rat dmb = dec.MFb.v[k][omega] - dec.MFb.v[k - 1][omega];
      Rat dma = dec.MFa.v[k][omega] - dec.MFa.v[k - 1][omega];
      if (gt < 1) {
        acc_mf += dmf * dmf / (Rat(1) - gt);
        acc_ma += dma * dma / (Rat(1) - gt);
      }
      if (gt > 0) acc_mb += dmb * dmb / gt;
    }
    dec.diag_mf += sp.prob[omega] * acc_mf;
    dec.diag_mb += sp.prob[omega] * acc_mb;
    dec.diag_ma += sp.prob[omega] * acc_ma;
  }
  // Mixed jump functional: E sum_k I{Gtilde_k>0, G_{k-1}>0} dDoF_k *
  //   ( |dMFb_k/G_{k-1} + phi_o_k G_k/Gtilde_k ... | collapsed to the two cell deviations ).
  for (int omega = 0; omega < sp.n(); ++omega) {
    Rat acc = 0;
    for (int k = 1; k <= sp.horizon; ++k) {
      Rat gt = b.Gtilde.v[k][omega];
      Rat gm = b.G.v[k - 1][omega];
      if (gt == 0 || gm == 0) continue;
      Rat ddof = b.DoF.v[k][omega] - b.DoF.v[k - 1][omega];
      Rat g = b.G.v[k][omega];
      Rat dmb = dec.MFb.v[k][omega] - dec.MFb.v[k - 1][omega];
      Rat phio = dec.phi_o.v[k][omega];
      acc += ddof / gt * rat_abs(dmb / gm + g * phio) + g / gt * rat_abs(dmb / gm - phio * ddof);
    }
    dec.diag_mixed += sp.prob[omega] * acc;
  }
  return dec;
}

inline Process reconstruct(const FiniteFilteredSpace& sp, const Decomposition& dec) {
  Process out = zero_process(sp, Tag::G);
  for (int n = 0; n <= sp.horizon; ++n)
    for (int omega = 0; omega < sp.n(); ++omega)
      out.v[n][omega] = dec.initial[omega] + dec.part_before.v[n][omega] + dec.part_jump.v[n][omega] +
                        dec.part_after.v[n][omega];
  return out;
}

struct UniquenessReport {
  int kernel_dim = 0;
  int n_variables = 0;
  int n_equations = 0;
};

// Dimension of the space of component choices (MFb, phi_o, phi_pr, MFa) that satisfy all the
// side conditions and reconstruct the zero martingale. Zero means the decomposition is unique.
inline UniquenessReport uniqueness_check(const FiniteFilteredSpace& sp, const std::vector<int>& tau) {
  SurvivalBundle b = survival_bundle(sp, tau);
  UniquenessReport rep;

  // Variables: per level-k atom, one dMFb (unless Gtilde=0, where the support condition pins
  // it to zero), one dMFa (unless pinned by its support conditions), one phi_o on
  // {dDoF>0, G>0}, one phi_pr cell value on {dDoF>0}.
  struct Var {
    int kind;  // 0=dMFb, 1=dMFa, 2=phi_o, 3=phi_pr
    int k;
    int atom;
  };
  std::vector<Var> vars;
  std::vector<std::vector<std::vector<int>>> var_at(4);
  for (int kind = 0; kind < 4; ++kind)
    var_at[kind].assign(sp.horizon + 1, {});
  for (int k = 1; k <= sp.horizon; ++k)
    for (int kind = 0; kind < 4; ++kind) var_at[kind][k].assign(sp.F.levels[k].size(), -1);

  for (int k = 1; k <= sp.horizon; ++k) {
    const Partition& part = sp.F.levels[k];
    for (std::size_t a = 0; a < part.size(); ++a) {
      int rep_o = part[a][0];
      Rat gt = b.Gtilde.v[k][rep_o];
      Rat g = b.G.v[k][rep_o];
      Rat gm = b.G.v[k - 1][rep_o];
      Rat ddof = b.DoF.v[k][rep_o] - b.DoF.v[k - 1][rep_o];
      if (gt > 0) {
        var_at[0][k][a] = static_cast<int>(vars.size());
        vars.push_back({0, k, static_cast<int>(a)});
      }
      if (gt < 1 && gm < 1) {
        var_at[1][k][a] = static_cast<int>(vars.size());
        vars.push_back({1, k, static_cast<int>(a)});
      }
      if (ddof > 0 && g > 0) {
        var_at[2][k][a] = static_cast<int>(vars.size());
        vars.push_back({2, k, static_cast<int>(a)});
      }
      if (ddof > 0) {
        var_at[3][k][a] = static_cast<int>(vars.size());
        vars.push_back({3, k, static_cast<int>(a)});
      }
    }
  }
  rep.n_variables = static_cast<int>(vars.size());
  if (vars.empty()) return rep;

  std::vector<std::vector<Rat>> rows;
  auto add_row = [&]() -> std::vector<Rat>& {
    rows.emplace_back(vars.size(), Rat(0));
    return rows.back();
  };

  for (int k = 1; k <= sp.horizon; ++k) {
    const Partition& part = sp.F.levels[k];
    // Martingale rows for MFb and MFa on each level-(k-1) atom.
    for (const Atom& parent : sp.F.levels[k - 1]) {
      std::vector<int> children;
      for (std::size_t a = 0; a < part.size(); ++a)
        if (sp.F.atom_of[k - 1][part[a][0]] == sp.F.atom_of[k - 1][parent[0]]) children.push_back(static_cast<int>(a));
      for (int kind = 0; kind < 2; ++kind) {
        bool any = false;
        for (int a : children) any = any || var_at[kind][k][a] >= 0;
        if (!any) continue;
        auto& row = add_row();
        for (int a : children) {
          int vi = var_at[kind][k][a];
          if (vi < 0) continue;
          Rat mass = 0;
          for (int omega : part[a]) mass += sp.prob[omega];
          row[vi] = mass;
        }
      }
    }
    // Reconstruction rows: one per enlarged-filtration cell at time k with a live parent.
    for (std::size_t a = 0; a < part.size(); ++a) {
      int rep_o = part[a][0];
      Rat gt = b.Gtilde.v[k][rep_o];
      Rat g = b.G.v[k][rep_o];
      Rat gm = b.G.v[k - 1][rep_o];
      Rat ddof = b.DoF.v[k][rep_o] - b.DoF.v[k - 1][rep_o];
      if (gt > 0) {
        // Cell {tau > k}: dMFb G_{k-1}/Gtilde - phi_o dDoF/Gtilde = 0.
        if (g > 0) {
          auto& row = add_row();
          row[var_at[0][k][a]] = gm / gt;
          if (var_at[2][k][a] >= 0) row[var_at[2][k][a]] = -ddof / gt;
        }
        // Cell {tau = k}: dMFb G_{k-1}/Gtilde + phi_o G/Gtilde + phi_pr = 0.
        if (ddof > 0) {
          auto& row = add_row();
          row[var_at[0][k][a]] = gm / gt;
          if (var_at[2][k][a] >= 0) row[var_at[2][k][a]] = g / gt;
          row[var_at[3][k][a]] = 1;
        }
      }
      // Post-death cells: dMFa/(1 - G_{k-1}) scaled through the after transform is
      // dMFa (1-G_{k-1})/(1-G_k) per unit; zero reconstruction forces dMFa = 0 whenever the
      // atom meets {tau < k}; dMFa elsewhere is constrained by support and martingale rows.
      if (var_at[1][k][a] >= 0) {
        bool meets_dead = false;
        for (int omega : part[a])
          if (tau[omega] < k) meets_dead = true;
        if (meets_dead) {
          auto& row = add_row();
          row[var_at[1][k][a]] = (Rat(1) - gm) / (Rat(1) - g);
        }
      }
    }
    // phi_pr zero-mean rows: on each level-(k-1) atom, E[phi_pr dDoF] = 0 with phi_pr
    // predictable means phi_pr itself vanishes; encode the predictability by tying all cells
    // under one parent together with their dDoF weights.
    for (const Atom& parent : sp.F.levels[k - 1]) {
      std::vector<int> children;
      for (std::size_t a = 0; a < part.size(); ++a)
        if (sp.F.atom_of[k - 1][part[a][0]] == sp.F.atom_of[k - 1][parent[0]]) children.push_back(static_cast<int>(a));
      bool any = false;
      for (int a : children) any = any || var_at[3][k][a] >= 0;
      if (!any) continue;
      // Predictability: all phi_pr cells under this parent are equal.
      int first = -1;
      for (int a : children) {
        if (var_at[3][k][a] < 0) continue;
        if (first == -1) {
          first = var_at[3][k][a];
          continue;
        }
        auto& row = add_row();
        row[first] = 1;
        row[var_at[3][k][a]] = -1;
      }
      // Zero conditional mean at tau: the common value integrates dDoF mass to zero.
      auto& row = add_row();
      for (int a : children) {
        if (var_at[3][k][a] < 0) continue;
        Rat mass = 0;
        for (int omega : part[a]) mass += sp.prob[omega];
        Rat ddof = b.DoF.v[k][part[a][0]] - b.DoF.v[k - 1][part[a][0]];
        row[var_at[3][k][a]] += mass * ddof;
      }
    }
  }
  rep.n_equations = static_cast<int>(rows.size());
  rep.kernel_dim = nullity(rows);
  return rep;
}

}  // namespace azema

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "azema/enlargement.hpp"
#include "azema/space.hpp"

namespace azema {

// Admissible integrand slopes c must satisfy c * d >= -1 for every increment value d.
struct CInterval {
  std::optional<Rat> lo, hi;  // nullopt means unbounded on that side
};

inline CInterval admissible_interval(const std::optional<Rat>& dmin, const std::optional<Rat>& dmax) {
  CInterval iv;
  if (dmax && *dmax > 0) iv.lo = Rat(-1) / *dmax;
  if (dmin && *dmin < 0) iv.hi = Rat(-1) / *dmin;
  return iv;
}

struct DeflatorWitness {
  int time = -1;
  int atom = -1;
  std::optional<Rat> c;  // violating slope; nullopt when the violation is structural or at infinity
  Rat lhs, rhs;
  std::string what;
};

struct DeflatorReport {
  bool structural_ok = false;  // positive, starts at one, adapted on charged outcomes
  bool deflator = false;
  bool martingale = false;   // Z itself a martingale under the weights
  bool orthogonal = false;   // E[Z_k dS_k | atom] = 0 everywhere
  bool lmd = false;          // martingale and orthogonal
  std::string verdict;       // "both", "deflator", "neither"
  std::optional<DeflatorWitness> witness;
};

// Supermartingale test of Z E(c S-increments) over every admissible constant slope per atom:
// with e = E[Z_k|B], s = E[Z_k dS_k|B], the requirement is e + c s <= Z_{k-1}(B) on the whole
// admissible interval, which reduces to the endpoints and a sign condition at infinity.
// Atoms with zero mass under the weights are skipped.
inline DeflatorReport is_deflator(const FiniteFilteredSpace& sp, const Filtration& f, const Process& s,
                                  const Process& z, const std::vector<Rat>& w) {
  require(z.tag == f.tag && s.tag == f.tag, "process/filtration tag mismatch");
  require(w.size() == static_cast<std::size_t>(sp.n()), "weight size mismatch");
  DeflatorReport rep;
  // Structural checks on charged outcomes.
  for (int omega = 0; omega < sp.n(); ++omega) {
    if (w[omega] == 0) continue;
    if (z.v[0][omega] != 1) {
      rep.witness = DeflatorWitness{0, -1, std::nullopt, z.v[0][omega], Rat(1), "must start at one"};
      rep.verdict = "neither";
      return rep;
    }
    for (int n = 0; n <= sp.horizon; ++n)
      if (z.v[n][omega] <= 0) {
        rep.witness = DeflatorWitness{n, -1, std::nullopt, z.v[n][omega], Rat(0), "not strictly positive"};
        rep.verdict = "neither";
        return rep;
      }
  }
  for (int n = 0; n <= sp.horizon; ++n)
    for (std::size_t a = 0; a < f.levels[n].size(); ++a) {
      const Atom& atom = f.levels[n][a];
      int ref = -1;
      for (int omega : atom) {
        if (w[omega] == 0) continue;
        if (ref == -1) ref = omega;
        if (z.v[n][omega] != z.v[n][ref] || s.v[n][omega] != s.v[n][ref]) {
          rep.witness = DeflatorWitness{n, static_cast<int>(a), std::nullopt, z.v[n][omega], z.v[n][ref],
                                        "not adapted"};
          rep.verdict = "neither";
          return rep;
        }
      }
    }
  rep.structural_ok = true;

  rep.deflator = true;
  rep.martingale = true;
  rep.orthogonal = true;
  for (int k = 1; k <= sp.horizon && !rep.witness; ++k) {
    const Partition& part = f.levels[k - 1];
    for (std::size_t a = 0; a < part.size(); ++a) {
      const Atom& atom = part[a];
      Rat mass = 0;
      for (int omega : atom) mass += w[omega];
      if (mass == 0) continue;
      Rat e = 0, sl = 0;
      std::optional<Rat> dmin, dmax;
      for (int omega : atom) {
        if (w[omega] == 0) continue;
        Rat ds = s.v[k][omega] - s.v[k - 1][omega];
        e += w[omega] * z.v[k][omega];
        sl += w[omega] * z.v[k][omega] * ds;
        if (!dmin || ds < *dmin) dmin = ds;
        if (!dmax || ds > *dmax) dmax = ds;
      }
      int ref = -1;
      for (int omega : atom)
        if (w[omega] != 0) {
          ref = omega;
          break;
        }
      e /= mass;
      sl /= mass;
      Rat zprev = z.v[k - 1][ref];
      if (e != zprev) rep.martingale = false;
      if (sl != 0) rep.orthogonal = false;

      CInterval iv = admissible_interval(dmin, dmax);
      auto fail = [&](std::optional<Rat> c, const Rat& lhs) {
        if (rep.deflator) {
          rep.deflator = false;
          rep.witness = DeflatorWitness{k, static_cast<int>(a), c, lhs, zprev, "supermartingale bound violated"};
        }
      };
      if (e > zprev) fail(Rat(0), e);
      if (sl > 0) {
        if (!iv.hi)
          fail(std::nullopt, e);  // unbounded above with positive slope
        else if (e + *iv.hi * sl > zprev)
          fail(*iv.hi, e + *iv.hi * sl);
      } else if (sl < 0) {
        if (!iv.lo)
          fail(std::nullopt, e);  // unbounded below with negative slope
        else if (e + *iv.lo * sl > zprev)
          fail(*iv.lo, e + *iv.lo * sl);
      }
    }
  }
  rep.lmd = rep.martingale && rep.orthogonal;
  rep.verdict = rep.lmd ? "both" : (rep.deflator ? "deflator" : "neither");
  return rep;
}

inline DeflatorReport is_deflator(const FiniteFilteredSpace& sp, const Filtration& f, const Process& s,
                                  const Process& z) {
  return is_deflator(sp, f, s, z, sp.prob);
}

struct HatModel {
  bool refused = false;
  AssumptionFlags flags;
  Process Zhat;            // F-martingale density process
  std::vector<Rat> qhat;   // tilted terminal weights, nonnegative, sum one
  Process Shat;            // price increments censored on {G_{k-1} = 1}
};

// Density Zhat_n = prod_{k<=n} (1-Gtilde_k)/(1-G_{k-1}) on {G_{k-1}<1} (factor one elsewhere),
// the tilted measure it generates, and the censored price. Requires honesty and the absence
// of fresh mass on {Gtilde=1 > G_-}, under which Zhat stays nonnegative with unit mean.
inline HatModel hat_model(const FiniteFilteredSpace& sp, const std::vector<int>& tau, const Process& price) {
  HatModel out;
  AssumptionReport flags = check_assumptions(sp, tau);
  out.flags = flags.flags;
  if (!flags.flags.core()) {
    out.refused = true;
    return out;
  }
  SurvivalBundle b = survival_bundle(sp, tau);
  out.Zhat = constant_process(sp, Tag::F, Rat(1));
  for (int k = 1; k <= sp.horizon; ++k)
    for (int omega = 0; omega < sp.n(); ++omega) {
      Rat factor = 1;
      if (b.G.v[k - 1][omega] < 1)
        factor = (Rat(1) - b.Gtilde.v[k][omega]) / (Rat(1) - b.G.v[k - 1][omega]);
      out.Zhat.v[k][omega] = out.Zhat.v[k - 1][omega] * factor;
    }
  out.qhat.resize(sp.n());
  for (int omega = 0; omega < sp.n(); ++omega) out.qhat[omega] = out.Zhat.v[sp.horizon][omega] * sp.prob[omega];
  out.Shat = zero_process(sp, Tag::F);
  for (int omega = 0; omega < sp.n(); ++omega) out.Shat.v[0][omega] = price.v[0][omega];
  for (int k = 1; k <= sp.horizon; ++k)
    for (int omega = 0; omega < sp.n(); ++omega) {
      Rat inc = 0;
      if (b.G.v[k - 1][omega] < 1) inc = price.v[k][omega] - price.v[k - 1][omega];
      out.Shat.v[k][omega] = out.Shat.v[k - 1][omega] + inc;
    }
  return out;
}

struct TransferResult {
  Process ZG;         // Z / Z^tau, constant one up to tau
  Process recovered;  // canonical F-adapted preimage of ZG
  bool image_roundtrip = false;      // forward(recovered) equals ZG everywhere
  bool canonical_roundtrip = false;  // recovered equals the input Z everywhere
  std::optional<IdentityWitness> witness;
};

// Forward: divide out the stopped path. Backward: rebuild the F-adapted representative whose
// one-step ratios agree with ZG on the dead part of each atom and are one elsewhere; honesty
// makes the dead-part ratio well defined. Inputs must be strictly positive.
inline TransferResult transfer_after(const FiniteFilteredSpace& sp, const std::vector<int>& tau,
                                     const Process& z) {
  for (int n = 0; n <= sp.horizon; ++n)
    for (int omega = 0; omega < sp.n(); ++omega) require(z.v[n][omega] > 0, "transfer needs positive input");
  TransferResult res;
  res.ZG = zero_process(sp, Tag::G);
  for (int n = 0; n <= sp.horizon; ++n)
    for (int omega = 0; omega < sp.n(); ++omega)
      res.ZG.v[n][omega] = z.v[n][omega] / z.v[std::min(n, tau[omega])][omega];

  res.recovered = constant_process(sp, Tag::F, Rat(1));
  for (int k = 1; k <= sp.horizon; ++k) {
    for (const Atom& atom : sp.F.levels[k]) {
      Rat factor = 1;
      int dead = -1;
      for (int omega : atom)
        if (tau[omega] < k) {
          dead = omega;
          break;
        }
      if (dead != -1) factor = res.ZG.v[k][dead] / res.ZG.v[k - 1][dead];
      for (int omega : atom) res.recovered.v[k][omega] = res.recovered.v[k - 1][omega] * factor;
    }
  }
  res.image_roundtrip = true;
  res.canonical_roundtrip = true;
  for (int n = 0; n <= sp.horizon; ++n)
    for (int omega = 0; omega < sp.n(); ++omega) {
      Rat again = res.recovered.v[n][omega] / res.recovered.v[std::min(n, tau[omega])][omega];
      if (again != res.ZG.v[n][omega]) {
        res.image_roundtrip = false;
        if (!res.witness) res.witness = IdentityWitness{n, omega, again, res.ZG.v[n][omega]};
      }
      if (res.recovered.v[n][omega] != z.v[n][omega]) res.canonical_roundtrip = false;
    }
  return res;
}

struct AssembleResult {
  bool refused = false;   // assumption flags failed
  AssumptionFlags flags;
  bool rejected = false;  // integrand boundary or mean condition failed
  std::string reject_reason;
  std::optional<IdentityWitness> witness;  // (time, outcome, value, bound)
  Process ZG;
};

// Four-factor assembly of an enlarged-filtration deflator from: a deflator for the original
// model (stopped part), a deflator for the censored model (post-death part), and the two jump
// integrands. Positivity of the jump factors is checked first, then the vanishing conditional
// mean of phi_pr at tau. Requires honesty and G_n > 0 before the horizon; the fresh-mass flag
// is reported but not enforced.
inline AssembleResult assemble_general(const FiniteFilteredSpace& sp, const std::vector<int>& tau,
                                       const Process& zfb, const Process& zfa, const Process& phi_o,
                                       const Process& phi_pr) {
  AssembleResult res;
  AssumptionReport flags = check_assumptions(sp, tau);
  res.flags = flags.flags;
  if (!(res.flags.finite && res.flags.honest && res.flags.g_tau_lt_1 && res.flags.g_positive)) {
    res.refused = true;
    return res;
  }
  for (int n = 0; n <= sp.horizon; ++n)
    for (int omega = 0; omega < sp.n(); ++omega) {
      require(zfb.v[n][omega] > 0 && zfa.v[n][omega] > 0, "assembly needs positive inputs");
      require(n > 0 || (zfb.v[0][omega] == 1 && zfa.v[0][omega] == 1), "inputs must start at one");
    }
  SurvivalBundle b = survival_bundle(sp, tau);

  // Boundary conditions on the death support {dDoF_k > 0}.
  for (int k = 1; k <= sp.horizon; ++k) {
    for (const Atom& atom : sp.F.levels[k]) {
      int ref = atom[0];
      Rat ddof = b.DoF.v[k][ref] - b.DoF.v[k - 1][ref];
      if (ddof == 0) continue;
      Rat gt = b.Gtilde.v[k][ref];
      Rat g = b.G.v[k][ref];
      Rat ppr = phi_pr.v[k][ref];
      Rat po = phi_o.v[k][ref];
      if (ppr <= -1) {
        res.rejected = true;
        res.reject_reason = "phi_pr must stay above minus one on the death support";
        res.witness = IdentityWitness{k, ref, ppr, Rat(-1)};
        return res;
      }
      if (g > 0 && po <= -gt / g) {
        res.rejected = true;
        res.reject_reason = "phi_o must stay above -Gtilde/G on the death support";
        res.witness = IdentityWitness{k, ref, po, Rat(-gt / g)};
        return res;
      }
      if (po * (gt - g) >= gt) {
        res.rejected = true;
        res.reject_reason = "phi_o (Gtilde - G) must stay below Gtilde on the death support";
        res.witness = IdentityWitness{k, ref, po * (gt - g), gt};
        return res;
      }
    }
  }
  for (int k = 1; k <= sp.horizon; ++k)
    for (const Atom& atom : sp.F.levels[k]) {
      int ref = atom[0];
      Rat ddof = b.DoF.v[k][ref] - b.DoF.v[k - 1][ref];
      if (ddof == 0) continue;
      if (phi_pr.v[k][ref] != 0) {
        res.rejected = true;
        res.reject_reason = "phi_pr must have zero conditional mean at tau";
        res.witness = IdentityWitness{k, ref, phi_pr.v[k][ref], Rat(0)};
        return res;
      }
    }

  res.ZG = constant_process(sp, Tag::G, Rat(1));
  for (int n = 1; n <= sp.horizon; ++n)
    for (int omega = 0; omega < sp.n(); ++omega) {
      Rat factor = 1;
      if (n <= tau[omega]) {
        // Stopped factor: (dZFb ratio) / (Gtilde_n / G_{n-1}).
        factor = (zfb.v[n][omega] / zfb.v[n - 1][omega]) * (b.G.v[n - 1][omega] / b.Gtilde.v[n][omega]);
        // Jump factors.
        Rat ddof = b.DoF.v[n][omega] - b.DoF.v[n - 1][omega];
        Rat gt = b.Gtilde.v[n][omega];
        if (tau[omega] == n)
          factor *= (Rat(1) + phi_o.v[n][omega] * b.G.v[n][omega] / gt) * (Rat(1) + phi_pr.v[n][omega]);
        else
          factor *= Rat(1) - phi_o.v[n][omega] * ddof / gt;
      } else {
        // Post-death factor: (dZFa ratio) / ((1-Gtilde_n)/(1-G_{n-1})).
        factor = (zfa.v[n][omega] / zfa.v[n - 1][omega]) * (Rat(1) - b.G.v[n - 1][omega]) /
                 (Rat(1) - b.Gtilde.v[n][omega]);
      }
      res.ZG.v[n][omega] = res.ZG.v[n - 1][omega] * factor;
    }
  return res;
}

}  // namespace azema

#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "azema/rational.hpp"

namespace azema {

using Atom = std::vector<int>;        // sorted outcome indices
using Partition = std::vector<Atom>;  // disjoint cover of all outcomes

// Which filtration a process claims to be adapted to.
enum class Tag : char { F = 'F', G = 'G' };

inline Tag join(Tag a, Tag b) { return (a == Tag::G || b == Tag::G) ? Tag::G : Tag::F; }

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument("azema: " + msg);
}

struct Filtration {
  Tag tag = Tag::F;
  std::vector<Partition> levels;          // levels[n], n = 0..T
  std::vector<std::vector<int>> atom_of;  // atom_of[n][omega] -> atom index in levels[n]

  int horizon() const { return static_cast<int>(levels.size()) - 1; }
  int atom_at(int n, int omega) const { return atom_of[n][omega]; }
};

// Validates partition structure and refinement, and builds the atom lookup.
inline Filtration make_filtration(Tag tag, std::vector<Partition> levels, int n_outcomes) {
  require(!levels.empty(), "filtration needs at least one level");
  Filtration f;
  f.tag = tag;
  f.levels = std::move(levels);
  f.atom_of.assign(f.levels.size(), std::vector<int>(n_outcomes, -1));
  for (std::size_t n = 0; n < f.levels.size(); ++n) {
    const Partition& part = f.levels[n];
    require(!part.empty(), "empty partition at level " + std::to_string(n));
    for (std::size_t a = 0; a < part.size(); ++a) {
      require(!part[a].empty(), "empty atom at level " + std::to_string(n));
      for (std::size_t i = 0; i < part[a].size(); ++i) {
        int omega = part[a][i];
        require(omega >= 0 && omega < n_outcomes, "outcome index out of range at level " + std::to_string(n));
        require(i == 0 || part[a][i - 1] < omega, "atom indices must be strictly increasing");
        require(f.atom_of[n][omega] == -1, "overlapping atoms at level " + std::to_string(n));
        f.atom_of[n][omega] = static_cast<int>(a);
      }
    }
    for (int omega = 0; omega < n_outcomes; ++omega)
      require(f.atom_of[n][omega] != -1, "partition does not cover outcome " + std::to_string(omega));
  }
  // Refinement: atoms at n+1 never straddle two atoms at n.
  for (std::size_t n = 0; n + 1 < f.levels.size(); ++n) {
    for (const Atom& a : f.levels[n + 1]) {
      int parent = f.atom_of[n][a[0]];
      for (int omega : a)
        require(f.atom_of[n][omega] == parent, "refinement violated between levels " + std::to_string(n) +
                                                   " and " + std::to_string(n + 1));
    }
  }
  return f;
}

struct FiniteFilteredSpace {
  static constexpr int kMaxOutcomes = 4096;
  static constexpr int kMaxHorizon = 12;

  std::vector<std::string> outcomes;
  std::vector<Rat> prob;  // strictly positive, sums to one
  int horizon = 0;
  Filtration F;

  int n() const { return static_cast<int>(outcomes.size()); }
};

inline FiniteFilteredSpace make_space(std::vector<std::string> outcomes, std::vector<Rat> prob, int horizon,
                                      std::vector<Partition> partitions) {
  FiniteFilteredSpace sp;
  require(!outcomes.empty(), "need at least one outcome");
  require(static_cast<int>(outcomes.size()) <= FiniteFilteredSpace::kMaxOutcomes, "too many outcomes");
  require(horizon >= 1 && horizon <= FiniteFilteredSpace::kMaxHorizon, "horizon out of range");
  require(prob.size() == outcomes.size(), "probability vector size mismatch");
  Rat total = 0;
  for (const Rat& p : prob) {
    require(p > 0, "probabilities must be strictly positive");
    total += p;
  }
  require(total == 1, "probabilities must sum to one");
  require(static_cast<int>(partitions.size()) == horizon + 1, "need horizon+1 partition levels");
  sp.outcomes = std::move(outcomes);
  sp.prob = std::move(prob);
  sp.horizon = horizon;
  sp.F = make_filtration(Tag::F, std::move(partitions), sp.n());
  return sp;
}

// Convenience overload with generated outcome names w0, w1, ...
inline FiniteFilteredSpace make_space(int n_outcomes, std::vector<Rat> prob, int horizon,
                                      std::vector<Partition> partitions) {
  require(n_outcomes > 0, "need at least one outcome");
  std::vector<std::string> outcomes(n_outcomes);
  for (int i = 0; i < n_outcomes; ++i) outcomes[i] = "w" + std::to_string(i);
  return make_space(std::move(outcomes), std::move(prob), horizon, std::move(partitions));
}

struct Process {
  Tag tag = Tag::F;
  std::vector<std::vector<Rat>> v;  // (horizon+1) rows by n_outcomes columns

  int horizon() const { return static_cast<int>(v.size()) - 1; }
  const Rat& at(int n, int omega) const { return v[n][omega]; }
  Rat& at(int n, int omega) { return v[n][omega]; }
};

inline Process make_process(const FiniteFilteredSpace& sp, Tag tag, std::vector<std::vector<Rat>> rows) {
  require(static_cast<int>(rows.size()) == sp.horizon + 1, "process needs horizon+1 rows");
  for (const auto& row : rows) require(static_cast<int>(row.size()) == sp.n(), "process row size mismatch");
  return Process{tag, std::move(rows)};
}

inline Process zero_process(const FiniteFilteredSpace& sp, Tag tag) {
  return Process{tag, std::vector<std::vector<Rat>>(sp.horizon + 1, std::vector<Rat>(sp.n(), Rat(0)))};
}

inline Process constant_process(const FiniteFilteredSpace& sp, Tag tag, const Rat& c) {
  return Process{tag, std::vector<std::vector<Rat>>(sp.horizon + 1, std::vector<Rat>(sp.n(), c))};
}

inline bool constant_on(const std::vector<Rat>& row, const Atom& atom) {
  for (int omega : atom)
    if (row[omega] != row[atom[0]]) return false;
  return true;
}

// First (time, atom) where a row fails measurability wrt the given level, or nullopt.
inline std::optional<std::pair<int, int>> measurability_violation(const Filtration& f,
                                                                  const std::vector<std::vector<Rat>>& rows,
                                                                  int level_shift) {
  for (int n = 0; n < static_cast<int>(rows.size()); ++n) {
    int lvl = std::max(0, n - level_shift);
    const Partition& part = f.levels[lvl];
    for (std::size_t a = 0; a < part.size(); ++a)
      if (!constant_on(rows[n], part[a])) return std::make_pair(n, static_cast<int>(a));
  }
  return std::nullopt;
}

inline bool is_adapted(const FiniteFilteredSpace& sp, const Filtration& f, const Process& x) {
  (void)sp;
  return !measurability_violation(f, x.v, 0).has_value();
}

// Row n constant on level n-1 atoms (row 0 on level 0).
inline bool is_predictable(const FiniteFilteredSpace& sp, const Filtration& f, const Process& x) {
  (void)sp;
  return !measurability_violation(f, x.v, 1).has_value();
}

// Conditional expectation of a per-outcome vector given the level-n partition, under weights w.
// Atoms with zero total weight get value zero.
inline std::vector<Rat> cond_expect_w(const FiniteFilteredSpace& sp, const Filtration& f,
                                      const std::vector<Rat>& x, int n, const std::vector<Rat>& w) {
  require(n >= 0 && n <= f.horizon(), "conditioning level out of range");
  require(x.size() == static_cast<std::size_t>(sp.n()), "vector size mismatch");
  require(w.size() == static_cast<std::size_t>(sp.n()), "weight size mismatch");
  std::vector<Rat> out(sp.n(), Rat(0));
  for (const Atom& atom : f.levels[n]) {
    Rat mass = 0, acc = 0;
    for (int omega : atom) {
      mass += w[omega];
      acc += w[omega] * x[omega];
    }
    Rat val = (mass == 0) ? Rat(0) : Rat(acc / mass);
    for (int omega : atom) out[omega] = val;
  }
  return out;
}

inline std::vector<Rat> cond_expect(const FiniteFilteredSpace& sp, const Filtration& f,
                                    const std::vector<Rat>& x, int n) {
  return cond_expect_w(sp, f, x, n, sp.prob);
}

// Unconditional expectation under weights.
inline Rat expect_w(const FiniteFilteredSpace& sp, const std::vector<Rat>& x, const std::vector<Rat>& w) {
  require(x.size() == static_cast<std::size_t>(sp.n()), "vector size mismatch");
  Rat acc = 0;
  for (int omega = 0; omega < sp.n(); ++omega) acc += w[omega] * x[omega];
  return acc;
}

inline Rat expect(const FiniteFilteredSpace& sp, const std::vector<Rat>& x) { return expect_w(sp, x, sp.prob); }

// Row-wise projections of a raw (horizon+1) x n matrix; the result is adapted by construction.
inline Process optional_projection(const FiniteFilteredSpace& sp, const Filtration& f,
                                   const std::vector<std::vector<Rat>>& rows) {
  require(rows.size() == static_cast<std::size_t>(sp.horizon + 1), "row count mismatch");
  Process out = zero_process(sp, f.tag);
  for (int n = 0; n <= sp.horizon; ++n) out.v[n] = cond_expect(sp, f, rows[n], n);
  return out;
}

inline Process predictable_projection(const FiniteFilteredSpace& sp, const Filtration& f,
                                      const std::vector<std::vector<Rat>>& rows) {
  require(rows.size() == static_cast<std::size_t>(sp.horizon + 1), "row count mismatch");
  Process out = zero_process(sp, f.tag);
  for (int n = 0; n <= sp.horizon; ++n) out.v[n] = cond_expect(sp, f, rows[n], std::max(0, n - 1));
  return out;
}

// Dual projections: increments are conditioned at time n (optional) or n-1 (predictable);
// the time-0 value is conditioned at level 0 in both cases.
inline Process dual_optional_projection(const FiniteFilteredSpace& sp, const Filtration& f,
                                        const std::vector<std::vector<Rat>>& rows) {
  require(rows.size() == static_cast<std::size_t>(sp.horizon + 1), "row count mismatch");
  Process out = zero_process(sp, f.tag);
  out.v[0] = cond_expect(sp, f, rows[0], 0);
  for (int n = 1; n <= sp.horizon; ++n) {
    std::vector<Rat> inc(sp.n());
    for (int omega = 0; omega < sp.n(); ++omega) inc[omega] = rows[n][omega] - rows[n - 1][omega];
    std::vector<Rat> proj = cond_expect(sp, f, inc, n);
    for (int omega = 0; omega < sp.n(); ++omega) out.v[n][omega] = out.v[n - 1][omega] + proj[omega];
  }
  return out;
}

inline Process dual_predictable_projection(const FiniteFilteredSpace& sp, const Filtration& f,
                                           const std::vector<std::vector<Rat>>& rows) {
  require(rows.size() == static_cast<std::size_t>(sp.horizon + 1), "row count mismatch");
  Process out = zero_process(sp, f.tag);
  out.v[0] = cond_expect(sp, f, rows[0], 0);
  for (int n = 1; n <= sp.horizon; ++n) {
    std::vector<Rat> inc(sp.n());
    for (int omega = 0; omega < sp.n(); ++omega) inc[omega] = rows[n][omega] - rows[n - 1][omega];
    std::vector<Rat> proj = cond_expect(sp, f, inc, n - 1);
    for (int omega = 0; omega < sp.n(); ++omega) out.v[n][omega] = out.v[n - 1][omega] + proj[omega];
  }
  return out;
}

struct MartingaleReport {
  bool ok = false;
  bool adapted = false;
  int time = -1;   // first violation time
  int atom = -1;   // atom index at the conditioning level
  Rat lhs, rhs;    // conditional mean vs previous value, for mean violations
  std::string what;
};

inline MartingaleReport is_martingale_w(const FiniteFilteredSpace& sp, const Filtration& f, const Process& x,
                                        const std::vector<Rat>& w) {
  require(x.tag == f.tag, "process/filtration tag mismatch");
  MartingaleReport rep;
  if (auto bad = measurability_violation(f, x.v, 0)) {
    rep.adapted = false;
    rep.time = bad->first;
    rep.atom = bad->second;
    rep.what = "not adapted";
    return rep;
  }
  rep.adapted = true;
  for (int n = 1; n <= sp.horizon; ++n) {
    std::vector<Rat> mean = cond_expect_w(sp, f, x.v[n], n - 1, w);
    const Partition& part = f.levels[n - 1];
    for (std::size_t a = 0; a < part.size(); ++a) {
      int omega = part[a][0];
      Rat mass = 0;
      for (int o : part[a]) mass += w[o];
      if (mass == 0) continue;  // null atom under these weights
      if (mean[omega] != x.v[n - 1][omega]) {
        rep.time = n;
        rep.atom = static_cast<int>(a);
        rep.lhs = mean[omega];
        rep.rhs = x.v[n - 1][omega];
        rep.what = "mean mismatch";
        return rep;
      }
    }
  }
  rep.ok = true;
  return rep;
}

inline MartingaleReport is_martingale(const FiniteFilteredSpace& sp, const Filtration& f, const Process& x) {
  return is_martingale_w(sp, f, x, sp.prob);
}

// (H . X)_n = sum_{k<=n} H_k (X_k - X_{k-1}); the time-0 value is zero.
inline Process stoch_integral(const FiniteFilteredSpace& sp, const Process& h, const Process& x) {
  require(h.v.size() == x.v.size(), "integrand/integrator length mismatch");
  Process out = zero_process(sp, join(h.tag, x.tag));
  for (int n = 1; n <= sp.horizon; ++n)
    for (int omega = 0; omega < sp.n(); ++omega)
      out.v[n][omega] = out.v[n - 1][omega] + h.v[n][omega] * (x.v[n][omega] - x.v[n - 1][omega]);
  return out;
}

// [X,Y]_n = sum_{k<=n} dX_k dY_k, zero at time 0.
inline Process quadratic_covariation(const FiniteFilteredSpace& sp, const Process& x, const Process& y) {
  require(x.v.size() == y.v.size(), "length mismatch");
  Process out = zero_process(sp, join(x.tag, y.tag));
  for (int n = 1; n <= sp.horizon; ++n)
    for (int omega = 0; omega < sp.n(); ++omega)
      out.v[n][omega] = out.v[n - 1][omega] + (x.v[n][omega] - x.v[n - 1][omega]) * (y.v[n][omega] - y.v[n - 1][omega]);
  return out;
}

// E(L)_n = prod_{k<=n} (1 + dL_k), one at time 0.
inline Process stoch_exponential(const FiniteFilteredSpace& sp, const Process& l) {
  Process out = constant_process(sp, l.tag, Rat(1));
  for (int n = 1; n <= sp.horizon; ++n)
    for (int omega = 0; omega < sp.n(); ++omega)
      out.v[n][omega] = out.v[n - 1][omega] * (Rat(1) + l.v[n][omega] - l.v[n - 1][omega]);
  return out;
}

struct MultiplicativeDecomposition {
  Process N;  // martingale part, zero at time 0
  Process V;  // predictable nondecreasing part, zero at time 0; Z = E(N) E(-V)
};

// Z must start at one, stay nonnegative, and be a supermartingale. Atoms absorbed at zero
// contribute trivial factors. Predictable absorption (conditional mean zero from a positive
// level) has no multiplicative decomposition and is rejected.
inline MultiplicativeDecomposition multiplicative_decomposition(const FiniteFilteredSpace& sp,
                                                                const Filtration& f, const Process& z) {
  require(z.tag == f.tag, "process/filtration tag mismatch");
  require(!measurability_violation(f, z.v, 0).has_value(), "not adapted");
  for (int omega = 0; omega < sp.n(); ++omega) require(z.v[0][omega] == 1, "must start at one");
  for (int n = 0; n <= sp.horizon; ++n)
    for (int omega = 0; omega < sp.n(); ++omega) require(z.v[n][omega] >= 0, "negative value");
  MultiplicativeDecomposition out{zero_process(sp, f.tag), zero_process(sp, f.tag)};
  for (int n = 1; n <= sp.horizon; ++n) {
    std::vector<Rat> mean = cond_expect(sp, f, z.v[n], n - 1);
    for (const Atom& atom : f.levels[n - 1]) {
      Rat zprev = z.v[n - 1][atom[0]];
      if (zprev == 0) {
        for (int omega : atom) require(z.v[n][omega] == 0, "revival from zero is not a supermartingale");
        for (int omega : atom) {
          out.N.v[n][omega] = out.N.v[n - 1][omega];
          out.V.v[n][omega] = out.V.v[n - 1][omega];
        }
        continue;
      }
      Rat drift = mean[atom[0]] - zprev;  // must be <= 0
      require(drift <= 0, "not a supermartingale");
      Rat dv = -drift / zprev;
      require(dv < 1, "predictable absorption");
      for (int omega : atom) {
        Rat dm = z.v[n][omega] - mean[atom[0]];
        out.V.v[n][omega] = out.V.v[n - 1][omega] + dv;
        out.N.v[n][omega] = out.N.v[n - 1][omega] + dm / (zprev * (Rat(1) - dv));
      }
    }
  }
  return out;
}

}  // namespace azema

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "azema/enlargement.hpp"
#include "azema/space.hpp"

namespace azema {

// ---------------------------------------------------------------------------
// Deterministic sampling helpers. Only the raw mt19937_64 stream is used so
// that sampled corpora are reproducible across standard library versions.
// ---------------------------------------------------------------------------

inline std::uint64_t rng_u64(std::mt19937_64& g) { return g(); }

// Unbiased integer in [lo, hi] via rejection.
inline int rng_int(std::mt19937_64& g, int lo, int hi) {
  require(lo <= hi, "rng_int empty range");
  std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() / span * span;
  std::uint64_t v;
  do {
    v = g();
  } while (v >= limit);
  return lo + static_cast<int>(v % span);
}

inline bool rng_coin(std::mt19937_64& g) { return (g() & 1u) != 0; }

// Small positive rational, bounded numerator and denominator.
inline Rat rng_pos_rat(std::mt19937_64& g, int max_num = 16, int max_den = 4) {
  return Rat(rng_int(g, 1, max_num)) / Rat(rng_int(g, 1, max_den));
}

// Small signed rational, possibly zero.
inline Rat rng_rat(std::mt19937_64& g, int max_abs_num = 8, int max_den = 4) {
  return Rat(rng_int(g, -max_abs_num, max_abs_num)) / Rat(rng_int(g, 1, max_den));
}

// ---------------------------------------------------------------------------
// Scenario: a filtered space, a random time, and optional market data.
// ---------------------------------------------------------------------------

struct Scenario {
  FiniteFilteredSpace sp;
  std::vector<int> tau;
  std::vector<std::string> labels;
  std::optional<Process> price;                 // F-adapted when present
  std::map<std::string, Process> candidates;    // F-adapted positive processes
};

inline std::vector<std::string> fixture_names() { return {"S1", "S2", "S3"}; }

// Three frozen fixtures exercising: an honest non-stopping time (S1), a plain
// stopping time with vanishing survival before the horizon (S2), and a time
// that fails honesty at the terminal date (S3).
inline Scenario fixture(const std::string& name) {
  Scenario sc;
  if (name == "S1" || name == "S2") {
    sc.labels = {"a", "b", "c", "d"};
    std::vector<Rat> prob(4, Rat(1) / 4);
    std::vector<Partition> levels = {
        {{0, 1, 2, 3}},
        {{0, 1}, {2, 3}},
        {{0}, {1}, {2}, {3}},
    };
    sc.sp = make_space(4, prob, 2, levels);
    sc.tau = (name == "S1") ? std::vector<int>{1, 2, 2, 2} : std::vector<int>{1, 1, 2, 2};
    Process s = zero_process(sc.sp, Tag::F);
    for (int omega = 0; omega < 4; ++omega) s.v[0][omega] = 1;
    s.v[1] = {Rat(3) / 2, Rat(3) / 2, Rat(1) / 2, Rat(1) / 2};
    s.v[2] = {Rat(2), Rat(1), Rat(1), Rat(0)};
    sc.price = s;
    return sc;
  }
  if (name == "S3") {
    sc.labels = {"a", "b", "c", "d"};
    std::vector<Rat> prob(4, Rat(1) / 4);
    std::vector<Partition> levels = {
        {{0, 1, 2, 3}},
        {{0, 1, 2, 3}},
        {{0, 1, 2, 3}},
        {{0, 1}, {2, 3}},
    };
    sc.sp = make_space(4, prob, 3, levels);
    sc.tau = {1, 2, 1, 1};
    return sc;
  }
  throw std::invalid_argument("azema: unknown fixture " + name);
}

// ---------------------------------------------------------------------------
// JSON input. Rationals are exact integer pairs {"num":..,"den":..} where the
// entries are JSON integers or decimal strings; floats are rejected.
// ---------------------------------------------------------------------------

struct ScenarioError : std::runtime_error {
  std::string path;
  ScenarioError(std::string p, const std::string& msg)
      : std::runtime_error("invalid scenario at " + p + ": " + msg), path(std::move(p)) {}
};

namespace detail {

inline Int parse_int(const nlohmann::json& j, const std::string& path) {
  if (j.is_number_integer()) return Int(j.get<std::int64_t>());
  if (j.is_number_unsigned()) return Int(j.get<std::uint64_t>());
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s.empty()) throw ScenarioError(path, "empty integer string");
    std::size_t start = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (start == s.size()) throw ScenarioError(path, "sign without digits");
    for (std::size_t i = start; i < s.size(); ++i)
      if (s[i] < '0' || s[i] > '9') throw ScenarioError(path, "not a decimal integer: " + s);
    return Int(s);
  }
  if (j.is_number_float()) throw ScenarioError(path, "floating point values are not accepted");
  throw ScenarioError(path, "expected an integer or integer string");
}

inline Rat parse_rat(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) {
    if (j.is_number_float()) throw ScenarioError(path, "floating point values are not accepted");
    throw ScenarioError(path, "expected an object {\"num\":..,\"den\":..}");
  }
  if (!j.contains("num")) throw ScenarioError(path + ".num", "missing");
  if (!j.contains("den")) throw ScenarioError(path + ".den", "missing");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "num" && it.key() != "den") throw ScenarioError(path + "." + it.key(), "unknown field");
  Int num = parse_int(j.at("num"), path + ".num");
  Int den = parse_int(j.at("den"), path + ".den");
  if (den == 0) throw ScenarioError(path + ".den", "zero denominator");
  return Rat(num) / Rat(den);
}

}  // namespace detail

inline nlohmann::json rat_to_json(const Rat& r) {
  nlohmann::json j;
  const Int num = boost::multiprecision::numerator(r);
  const Int den = boost::multiprecision::denominator(r);
  j["num"] = num.str();
  j["den"] = den.str();
  return j;
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ScenarioError("$", "top level must be an object");
  for (const char* key : {"outcomes", "horizon", "partitions", "tau"})
    if (!j.contains(key)) throw ScenarioError(std::string("$.") + key, "missing");

  Scenario sc;
  const auto& jout = j.at("outcomes");
  if (!jout.is_array() || jout.empty()) throw ScenarioError("$.outcomes", "expected a nonempty array");
  std::map<std::string, int> index_of;
  std::vector<Rat> prob;
  for (std::size_t i = 0; i < jout.size(); ++i) {
    const std::string path = "$.outcomes[" + std::to_string(i) + "]";
    const auto& o = jout[i];
    if (!o.is_object() || !o.contains("label") || !o.contains("prob"))
      throw ScenarioError(path, "expected {\"label\":..,\"prob\":..}");
    if (!o.at("label").is_string()) throw ScenarioError(path + ".label", "expected a string");
    std::string label = o.at("label").get<std::string>();
    if (index_of.count(label)) throw ScenarioError(path + ".label", "duplicate label " + label);
    index_of[label] = static_cast<int>(i);
    sc.labels.push_back(label);
    Rat p = detail::parse_rat(o.at("prob"), path + ".prob");
    if (p <= 0) throw ScenarioError(path + ".prob", "probabilities must be positive");
    prob.push_back(p);
  }
  const int n = static_cast<int>(sc.labels.size());

  const auto& jh = j.at("horizon");
  if (!jh.is_number_integer() && !jh.is_number_unsigned())
    throw ScenarioError("$.horizon", "expected an integer");
  const int horizon = jh.get<int>();
  if (horizon < 1 || horizon > FiniteFilteredSpace::kMaxHorizon)
    throw ScenarioError("$.horizon", "must be between 1 and " + std::to_string(FiniteFilteredSpace::kMaxHorizon));
  if (n > FiniteFilteredSpace::kMaxOutcomes)
    throw ScenarioError("$.outcomes", "at most " + std::to_string(FiniteFilteredSpace::kMaxOutcomes) + " outcomes");

  const auto& jpart = j.at("partitions");
  if (!jpart.is_array() || jpart.size() != static_cast<std::size_t>(horizon + 1))
    throw ScenarioError("$.partitions", "expected an array of horizon+1 partitions");
  std::vector<Partition> levels;
  for (std::size_t t = 0; t < jpart.size(); ++t) {
    const std::string tpath = "$.partitions[" + std::to_string(t) + "]";
    const auto& jp = jpart[t];
    if (!jp.is_array() || jp.empty()) throw ScenarioError(tpath, "expected a nonempty array of blocks");
    Partition part;
    for (std::size_t b = 0; b < jp.size(); ++b) {
      const std::string bpath = tpath + "[" + std::to_string(b) + "]";
      const auto& jb = jp[b];
      if (!jb.is_array() || jb.empty()) throw ScenarioError(bpath, "expected a nonempty array of labels");
      Atom atom;
      for (std::size_t m = 0; m < jb.size(); ++m) {
        if (!jb[m].is_string()) throw ScenarioError(bpath + "[" + std::to_string(m) + "]", "expected a label");
        std::string label = jb[m].get<std::string>();
        auto it = index_of.find(label);
        if (it == index_of.end())
          throw ScenarioError(bpath + "[" + std::to_string(m) + "]", "unknown label " + label);
        atom.push_back(it->second);
      }
      std::sort(atom.begin(), atom.end());
      part.push_back(atom);
    }
    std::sort(part.begin(), part.end());
    levels.push_back(part);
  }
  try {
    sc.sp = make_space(n, prob, horizon, levels);
  } catch (const std::invalid_argument& e) {
    throw ScenarioError("$.partitions", e.what());
  }

  const auto& jtau = j.at("tau");
  if (!jtau.is_object()) throw ScenarioError("$.tau", "expected an object label -> time");
  sc.tau.assign(n, -1);
  for (auto it = jtau.begin(); it != jtau.end(); ++it) {
    auto f = index_of.find(it.key());
    if (f == index_of.end()) throw ScenarioError("$.tau." + it.key(), "unknown label");
    if (!it.value().is_number_integer() && !it.value().is_number_unsigned())
      throw ScenarioError("$.tau." + it.key(), "expected an integer");
    int t = it.value().get<int>();
    if (t < 0 || t > horizon) throw ScenarioError("$.tau." + it.key(), "must be between 0 and the horizon");
    sc.tau[f->second] = t;
  }
  for (int omega = 0; omega < n; ++omega)
    if (sc.tau[omega] < 0) throw ScenarioError("$.tau." + sc.labels[omega], "missing");

  auto parse_rows = [&](const nlohmann::json& rows, const std::string& rpath) {
    if (!rows.is_array() || rows.size() != static_cast<std::size_t>(horizon + 1))
      throw ScenarioError(rpath, "expected an array of horizon+1 rows");
    Process p = zero_process(sc.sp, Tag::F);
    for (std::size_t t = 0; t < rows.size(); ++t) {
      const std::string tpath = rpath + "[" + std::to_string(t) + "]";
      if (!rows[t].is_object()) throw ScenarioError(tpath, "expected an object label -> rational");
      std::vector<bool> seen(n, false);
      for (auto it = rows[t].begin(); it != rows[t].end(); ++it) {
        auto f = index_of.find(it.key());
        if (f == index_of.end()) throw ScenarioError(tpath + "." + it.key(), "unknown label");
        p.v[t][f->second] = detail::parse_rat(it.value(), tpath + "." + it.key());
        seen[f->second] = true;
      }
      for (int omega = 0; omega < n; ++omega)
        if (!seen[omega]) throw ScenarioError(tpath + "." + sc.labels[omega], "missing");
    }
    if (auto bad = measurability_violation(sc.sp.F, p.v, 0))
      throw ScenarioError(rpath, "row " + std::to_string(bad->first) + " is not measurable at its date");
    return p;
  };
  if (j.contains("price")) sc.price = parse_rows(j.at("price"), "$.price");
  if (j.contains("candidates")) {
    const auto& jc = j.at("candidates");
    if (!jc.is_object()) throw ScenarioError("$.candidates", "expected an object name -> rows");
    for (auto it = jc.begin(); it != jc.end(); ++it)
      sc.candidates[it.key()] = parse_rows(it.value(), "$.candidates." + it.key());
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    if (k != "outcomes" && k != "horizon" && k != "partitions" && k != "tau" && k != "price" &&
        k != "candidates" && k != "schema")
      throw ScenarioError("$." + k, "unknown field");
  }
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("$", "cannot open file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError("$", std::string("JSON parse error: ") + e.what());
  }
  return scenario_from_json(j);
}

inline nlohmann::json scenario_to_json(const Scenario& sc) {
  nlohmann::json j;
  j["schema"] = 1;
  j["horizon"] = sc.sp.horizon;
  for (int omega = 0; omega < sc.sp.n(); ++omega) {
    nlohmann::json o;
    o["label"] = sc.labels[omega];
    o["prob"] = rat_to_json(sc.sp.prob[omega]);
    j["outcomes"].push_back(o);
  }
  for (int t = 0; t <= sc.sp.horizon; ++t) {
    nlohmann::json part = nlohmann::json::array();
    for (const Atom& atom : sc.sp.F.levels[t]) {
      nlohmann::json block = nlohmann::json::array();
      for (int omega : atom) block.push_back(sc.labels[omega]);
      part.push_back(block);
    }
    j["partitions"].push_back(part);
  }
  for (int omega = 0; omega < sc.sp.n(); ++omega) j["tau"][sc.labels[omega]] = sc.tau[omega];
  auto rows_to_json = [&](const Process& p) {
    nlohmann::json rows = nlohmann::json::array();
    for (int t = 0; t <= sc.sp.horizon; ++t) {
      nlohmann::json row;
      for (int omega = 0; omega < sc.sp.n(); ++omega) row[sc.labels[omega]] = rat_to_json(p.v[t][omega]);
      rows.push_back(row);
    }
    return rows;
  };
  if (sc.price) j["price"] = rows_to_json(*sc.price);
  for (const auto& [name, p] : sc.candidates) j["candidates"][name] = rows_to_json(p);
  return j;
}

// ---------------------------------------------------------------------------
// Random corpus generators.
// ---------------------------------------------------------------------------

// Random refinement chain: blocks split recursively with fair coin flips.
inline FiniteFilteredSpace random_space(std::mt19937_64& g, int max_outcomes, int max_horizon) {
  const int n = rng_int(g, 2, max_outcomes);
  const int horizon = rng_int(g, 1, max_horizon);
  std::vector<Rat> prob(n);
  Rat total = 0;
  for (int omega = 0; omega < n; ++omega) {
    prob[omega] = Rat(rng_int(g, 1, 8));
    total += prob[omega];
  }
  for (auto& p : prob) p /= total;

  std::vector<Partition> levels(horizon + 1);
  Atom all(n);
  for (int omega = 0; omega < n; ++omega) all[omega] = omega;
  levels[0] = {all};
  for (int t = 1; t <= horizon; ++t) {
    Partition next;
    for (const Atom& atom : levels[t - 1]) {
      if (atom.size() == 1 || !rng_coin(g)) {
        next.push_back(atom);
        continue;
      }
      // Split into two nonempty parts at a random cut of a random rotation.
      Atom shuffled = atom;
      for (std::size_t i = shuffled.size() - 1; i > 0; --i)
        std::swap(shuffled[i], shuffled[rng_int(g, 0, static_cast<int>(i))]);
      const int cut = rng_int(g, 1, static_cast<int>(shuffled.size()) - 1);
      Atom left(shuffled.begin(), shuffled.begin() + cut);
      Atom right(shuffled.begin() + cut, shuffled.end());
      std::sort(left.begin(), left.end());
      std::sort(right.begin(), right.end());
      next.push_back(left);
      next.push_back(right);
    }
    std::sort(next.begin(), next.end());
    levels[t] = next;
  }
  return make_space(n, prob, horizon, levels);
}

// End of an adapted random optional set: tau(omega) is the last marked date on
// omega's atom chain (zero when nothing is marked). Such times are honest.
inline std::vector<int> random_honest_time(std::mt19937_64& g, const FiniteFilteredSpace& sp) {
  std::vector<int> tau(sp.n(), 0);
  for (int t = 0; t <= sp.horizon; ++t)
    for (const Atom& atom : sp.F.levels[t])
      if (rng_coin(g))
        for (int omega : atom) tau[omega] = t;
  return tau;
}

// Atom-wise declared stopping time: {tau <= n} is a union of F_n atoms.
inline std::vector<int> random_stopping_time(std::mt19937_64& g, const FiniteFilteredSpace& sp) {
  std::vector<int> tau(sp.n(), -1);
  for (int t = 0; t <= sp.horizon; ++t)
    for (const Atom& atom : sp.F.levels[t]) {
      if (tau[atom[0]] >= 0) continue;
      const bool stop_now = (t == sp.horizon) || rng_int(g, 0, 3) == 0;
      if (stop_now)
        for (int omega : atom) tau[omega] = t;
    }
  return tau;
}

// Conditional-probability martingale of one terminal atom.
inline Process basis_martingale(const FiniteFilteredSpace& sp, int terminal_atom_index) {
  const Atom& target = sp.F.levels[sp.horizon][terminal_atom_index];
  std::vector<Rat> ind(sp.n(), 0);
  for (int omega : target) ind[omega] = 1;
  Process m = zero_process(sp, Tag::F);
  for (int t = 0; t <= sp.horizon; ++t) m.v[t] = cond_expect(sp, sp.F, ind, t);
  return m;
}

// Martingale with random terminal value, closed by conditioning on the given
// filtration; the output carries that filtration's tag.
inline Process random_g_martingale(std::mt19937_64& g, const FiniteFilteredSpace& sp, const Filtration& gf) {
  std::vector<Rat> terminal(sp.n());
  for (int omega = 0; omega < sp.n(); ++omega) terminal[omega] = rng_rat(g);
  Process m = zero_process(sp, gf.tag);
  for (int t = 0; t <= sp.horizon; ++t) m.v[t] = cond_expect(sp, gf, terminal, t);
  return m;
}

namespace detail {

// Assign increments to the children of one parent so that the listed subsets
// each see both signs (or all zeros); unlisted children get zero.
inline void assign_straddle(std::mt19937_64& g, std::vector<Rat>& inc, const std::vector<int>& members) {
  if (members.size() < 2) {
    for (int j : members) inc[j] = 0;
    return;
  }
  for (std::size_t i = 0; i < members.size(); ++i) {
    Rat v = rng_pos_rat(g, 8, 4);
    inc[members[i]] = (i % 2 == 0) ? v : -v;
  }
}

}  // namespace detail

// Price whose one-step increments take both signs among the children of every
// parent atom with at least two children (single children move by zero).
inline Process random_price(std::mt19937_64& g, const FiniteFilteredSpace& sp) {
  Process s = constant_process(sp, Tag::F, Rat(rng_int(g, 1, 4)));
  for (int k = 1; k <= sp.horizon; ++k) {
    for (const Atom& parent : sp.F.levels[k - 1]) {
      std::vector<int> children;
      for (std::size_t j = 0; j < sp.F.levels[k].size(); ++j)
        if (sp.F.atom_of[k - 1][sp.F.levels[k][j][0]] == sp.F.atom_of[k - 1][parent[0]])
          children.push_back(static_cast<int>(j));
      std::vector<Rat> inc(sp.F.levels[k].size(), 0);
      detail::assign_straddle(g, inc, children);
      for (int j : children)
        for (int omega : sp.F.levels[k][j]) s.v[k][omega] = s.v[k - 1][omega] + inc[j];
    }
  }
  return s;
}

// Price tailored to the two-phase assembly: increments straddle inside the set
// of mixed children (both alive and dead mass), so that both the stopped and
// the post-death balance conditions below stay solvable with positive values.
inline Process assembly_price(std::mt19937_64& g, const FiniteFilteredSpace& sp, const std::vector<int>& tau) {
  SurvivalBundle b = survival_bundle(sp, tau);
  Process s = constant_process(sp, Tag::F, Rat(rng_int(g, 1, 4)));
  for (int k = 1; k <= sp.horizon; ++k) {
    for (const Atom& parent : sp.F.levels[k - 1]) {
      std::vector<int> children, mixed;
      bool all_alive = true, all_dead = true;
      for (std::size_t j = 0; j < sp.F.levels[k].size(); ++j) {
        const Atom& child = sp.F.levels[k][j];
        if (sp.F.atom_of[k - 1][child[0]] != sp.F.atom_of[k - 1][parent[0]]) continue;
        children.push_back(static_cast<int>(j));
        const Rat gt = b.Gtilde.v[k][child[0]];
        if (gt > 0 && gt < 1) mixed.push_back(static_cast<int>(j));
        if (gt < 1) all_alive = false;
        if (gt > 0) all_dead = false;
      }
      std::vector<Rat> inc(sp.F.levels[k].size(), 0);
      if (all_alive || all_dead)
        detail::assign_straddle(g, inc, children);  // one-phase parent: plain straddle
      else
        detail::assign_straddle(g, inc, mixed);  // two-phase parent: balance inside the overlap
      for (int j : children)
        for (int omega : sp.F.levels[k][j]) s.v[k][omega] = s.v[k - 1][omega] + inc[j];
    }
  }
  return s;
}

namespace detail {

// Positive z_i with sum(w_i z_i) = m0 and sum(w_i z_i d_i) = 0 on one parent
// cell; empty when increments have only one sign but not all vanish.
inline std::vector<Rat> balanced_positive(std::mt19937_64& g, const std::vector<Rat>& w,
                                          const std::vector<Rat>& d, const Rat& m0) {
  const std::size_t m = w.size();
  std::vector<Rat> y(m);
  for (auto& v : y) v = rng_pos_rat(g, 16, 4);
  Rat splus = 0, sminus = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (d[i] > 0) splus += w[i] * y[i] * d[i];
    if (d[i] < 0) sminus -= w[i] * y[i] * d[i];
  }
  if ((splus > 0) != (sminus > 0)) return {};
  if (splus > 0)
    for (std::size_t i = 0; i < m; ++i)
      if (d[i] < 0) y[i] *= splus / sminus;
  Rat mass = 0;
  for (std::size_t i = 0; i < m; ++i) mass += w[i] * y[i];
  std::vector<Rat> z(m);
  for (std::size_t i = 0; i < m; ++i) z[i] = y[i] * m0 / mass;
  return z;
}

}  // namespace detail

// Positive process with prescribed one-step conditional behavior under the
// given weights: mean equal to the running value (or strictly below it on some
// atoms when allowed) and zero conditional covariance with the increments of s.
// Atoms with zero weight mass keep the parent value.
inline std::optional<Process> sample_orthogonal_deflator(std::mt19937_64& g, const FiniteFilteredSpace& sp,
                                                         const Process& s, const std::vector<Rat>& w,
                                                         bool allow_strict) {
  Process z = constant_process(sp, Tag::F, Rat(1));
  for (int k = 1; k <= sp.horizon; ++k) {
    for (const Atom& parent : sp.F.levels[k - 1]) {
      std::vector<int> charged;  // children with positive weight mass
      std::vector<int> rest;
      for (std::size_t j = 0; j < sp.F.levels[k].size(); ++j) {
        const Atom& child = sp.F.levels[k][j];
        if (sp.F.atom_of[k - 1][child[0]] != sp.F.atom_of[k - 1][parent[0]]) continue;
        Rat mass = 0;
        for (int omega : child) mass += w[omega];
        (mass > 0 ? charged : rest).push_back(static_cast<int>(j));
      }
      for (int j : rest)
        for (int omega : sp.F.levels[k][j]) z.v[k][omega] = z.v[k - 1][omega];
      if (charged.empty()) continue;
      const Rat zprev = z.v[k - 1][sp.F.levels[k][charged[0]][0]];
      Rat target = zprev;
      if (allow_strict && rng_int(g, 0, 3) == 0) target = zprev * Rat(rng_int(g, 1, 7)) / 8;
      std::vector<Rat> cw, cd;
      for (int j : charged) {
        const Atom& child = sp.F.levels[k][j];
        Rat mass = 0;
        for (int omega : child) mass += w[omega];
        cw.push_back(mass);
        cd.push_back(s.v[k][child[0]] - s.v[k - 1][child[0]]);
      }
      Rat total = 0;
      for (const Rat& v : cw) total += v;
      std::vector<Rat> vals = detail::balanced_positive(g, cw, cd, target * total);
      if (vals.empty()) return std::nullopt;
      for (std::size_t i = 0; i < charged.size(); ++i)
        for (int omega : sp.F.levels[k][charged[i]]) z.v[k][omega] = vals[i];
    }
  }
  return z;
}

struct AssemblyInputs {
  Process zfb, zfa, phi_o, phi_pr;
};

// Inputs that make the four-factor assembly an exact enlarged-filtration LMD
// for the given price. The stopped input balances mean one and zero slope over
// children that still carry alive mass; the post-death input does the same over
// children that carry dead mass; both are free (set to one-step ratio one)
// where the constraint set is empty. phi_o is sampled inside its open bounds.
inline std::optional<AssemblyInputs> sample_assembly_inputs(std::mt19937_64& g, const FiniteFilteredSpace& sp,
                                                            const std::vector<int>& tau, const Process& s) {
  SurvivalBundle b = survival_bundle(sp, tau);
  AssemblyInputs in;
  in.zfb = constant_process(sp, Tag::F, Rat(1));
  in.zfa = constant_process(sp, Tag::F, Rat(1));
  in.phi_o = zero_process(sp, Tag::F);
  in.phi_pr = zero_process(sp, Tag::F);

  for (int k = 1; k <= sp.horizon; ++k) {
    for (const Atom& parent : sp.F.levels[k - 1]) {
      std::vector<int> children;
      for (std::size_t j = 0; j < sp.F.levels[k].size(); ++j)
        if (sp.F.atom_of[k - 1][sp.F.levels[k][j][0]] == sp.F.atom_of[k - 1][parent[0]])
          children.push_back(static_cast<int>(j));
      const Rat gm = b.G.v[k - 1][parent[0]];
      Rat parent_mass = 0;
      for (int omega : parent) parent_mass += sp.prob[omega];

      // Stopped side: constrained when the parent still carries alive mass.
      // The balance uses the full parent mass, so children outside the active
      // set are compensated by the others (the survival-weighted collapse
      // only sees active children).
      {
        std::vector<int> active;  // children with Gtilde_k > 0
        for (int j : children)
          if (b.Gtilde.v[k][sp.F.levels[k][j][0]] > 0) active.push_back(j);
        if (gm > 0 && !active.empty()) {
          std::vector<Rat> cw, cd;
          for (int j : active) {
            const Atom& child = sp.F.levels[k][j];
            Rat mass = 0;
            for (int omega : child) mass += sp.prob[omega];
            cw.push_back(mass);
            cd.push_back(s.v[k][child[0]] - s.v[k - 1][child[0]]);
          }
          const Rat zprev = in.zfb.v[k - 1][parent[0]];
          std::vector<Rat> vals = detail::balanced_positive(g, cw, cd, zprev * parent_mass);
          if (vals.empty()) return std::nullopt;
          for (std::size_t i = 0; i < active.size(); ++i)
            for (int omega : sp.F.levels[k][active[i]]) in.zfb.v[k][omega] = vals[i];
          for (int j : children)
            if (b.Gtilde.v[k][sp.F.levels[k][j][0]] == 0)
              for (int omega : sp.F.levels[k][j]) in.zfb.v[k][omega] = zprev;
        } else {
          for (int j : children)
            for (int omega : sp.F.levels[k][j]) in.zfb.v[k][omega] = in.zfb.v[k - 1][omega];
        }
      }

      // Post-death side: constrained when the parent carries dead mass.
      {
        std::vector<int> active;  // children with Gtilde_k < 1
        for (int j : children)
          if (b.Gtilde.v[k][sp.F.levels[k][j][0]] < 1) active.push_back(j);
        if (gm < 1 && !active.empty()) {
          std::vector<Rat> cw, cd;
          for (int j : active) {
            const Atom& child = sp.F.levels[k][j];
            Rat mass = 0;
            for (int omega : child) mass += sp.prob[omega];
            cw.push_back(mass);
            cd.push_back(s.v[k][child[0]] - s.v[k - 1][child[0]]);
          }
          const Rat zprev = in.zfa.v[k - 1][parent[0]];
          std::vector<Rat> vals = detail::balanced_positive(g, cw, cd, zprev * parent_mass);
          if (vals.empty()) return std::nullopt;
          for (std::size_t i = 0; i < active.size(); ++i)
            for (int omega : sp.F.levels[k][active[i]]) in.zfa.v[k][omega] = vals[i];
          for (int j : children)
            if (b.Gtilde.v[k][sp.F.levels[k][j][0]] == 1)
              for (int omega : sp.F.levels[k][j]) in.zfa.v[k][omega] = zprev;
        } else {
          for (int j : children)
            for (int omega : sp.F.levels[k][j]) in.zfa.v[k][omega] = in.zfa.v[k - 1][omega];
        }
      }

      // Jump integrand on the death support, sampled strictly inside its bounds.
      for (int j : children) {
        const Atom& child = sp.F.levels[k][j];
        const Rat gt = b.Gtilde.v[k][child[0]];
        const Rat gk = b.G.v[k][child[0]];
        const Rat ddof = gt - gk;
        if (ddof == 0) continue;
        Rat lo = (gk > 0) ? -gt / gk : Rat(-3);
        Rat hi = gt / ddof;
        if (lo < -3) lo = Rat(-3);
        if (hi > 3) hi = Rat(3);
        const Rat t = Rat(rng_int(g, 1, 7)) / 8;
        for (int omega : child) in.phi_o.v[k][omega] = lo + (hi - lo) * t;
      }
    }
  }
  return in;
}

}  // namespace azema

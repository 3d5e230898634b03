#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "azema/rational.hpp"

namespace azema {

// One named verification with a three-state outcome. Skipped checks carry the
// reason they were inapplicable and do not count against the exit code.
struct Check {
  std::string id;
  std::string status;  // "pass", "fail", "skip"
  std::string cause;
  nlohmann::json detail;
};

struct Report {
  std::string command;
  std::string source;  // fixture name or scenario path
  bool has_seed = false;
  std::uint64_t seed = 0;
  nlohmann::json assumptions;  // informational flags and witnesses
  std::vector<Check> checks;

  void add(const std::string& id, bool ok, nlohmann::json detail = {}) {
    checks.push_back({id, ok ? "pass" : "fail", "", std::move(detail)});
  }
  void add_skip(const std::string& id, const std::string& cause) {
    checks.push_back({id, "skip", cause, {}});
  }

  int n_with(const std::string& status) const {
    int c = 0;
    for (const auto& ch : checks)
      if (ch.status == status) ++c;
    return c;
  }
  int exit_code() const { return n_with("fail") > 0 ? 1 : 0; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["schema"] = 1;
    j["command"] = command;
    j["source"] = source;
    if (has_seed) j["seed"] = seed;
    if (!assumptions.is_null()) j["assumptions"] = assumptions;
    j["checks"] = nlohmann::json::array();
    for (const auto& ch : checks) {
      nlohmann::json c;
      c["id"] = ch.id;
      c["status"] = ch.status;
      if (!ch.cause.empty()) c["cause"] = ch.cause;
      if (!ch.detail.is_null() && !ch.detail.empty()) c["detail"] = ch.detail;
      j["checks"].push_back(c);
    }
    j["summary"] = {{"pass", n_with("pass")}, {"fail", n_with("fail")}, {"skip", n_with("skip")}};
    return j;
  }

  std::string to_text() const {
    std::string out;
    out += command + " " + source + "\n";
    if (!assumptions.is_null())
      for (auto it = assumptions.begin(); it != assumptions.end(); ++it)
        out += "  " + it.key() + " = " + it.value().dump() + "\n";
    for (const auto& ch : checks) {
      std::string line = (ch.status == "pass") ? "PASS " : (ch.status == "fail") ? "FAIL " : "SKIP ";
      line += ch.id;
      if (!ch.cause.empty()) line += " (" + ch.cause + ")";
      if (ch.status == "fail" && !ch.detail.is_null() && !ch.detail.empty())
        line += " " + ch.detail.dump();
      out += line + "\n";
    }
    out += "pass " + std::to_string(n_with("pass")) + ", fail " + std::to_string(n_with("fail")) +
           ", skip " + std::to_string(n_with("skip")) + "\n";
    return out;
  }
};

}  // namespace azema

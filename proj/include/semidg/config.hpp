#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "semidg/studies.hpp"

namespace semidg {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Key/value tables in INI form: [section] headers, key = value lines, comments
/// with '#' or ';'. Keys are stored as "section.key".
inline std::map<std::string, std::string> parse_ini(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": malformed section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    kv[section.empty() ? key : section + "." + key] = val;
  }
  return kv;
}

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {}

  bool has(const std::string& k) const { return kv_.count(k) > 0; }

  std::string str(const std::string& k, const std::string& dflt) {
    used_.insert(k);
    auto it = kv_.find(k);
    return it == kv_.end() ? dflt : it->second;
  }

  double num(const std::string& k, double dflt) {
    used_.insert(k);
    auto it = kv_.find(k);
    if (it == kv_.end()) return dflt;
    try {
      size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      errs_.push_back("key '" + k + "': cannot parse number from '" + it->second + "'");
      return dflt;
    }
  }

  std::vector<double> num_list(const std::string& k, std::vector<double> dflt) {
    used_.insert(k);
    auto it = kv_.find(k);
    if (it == kv_.end()) return dflt;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok = trim(tok);
      if (tok.empty()) continue;
      try {
        out.push_back(std::stod(tok));
      } catch (const std::exception&) {
        errs_.push_back("key '" + k + "': cannot parse list entry '" + tok + "'");
      }
    }
    if (out.empty()) errs_.push_back("key '" + k + "': empty list");
    return out;
  }

  std::vector<int> int_list(const std::string& k, std::vector<int> dflt) {
    std::vector<double> ds = num_list(k, {});
    if (ds.empty()) return dflt;
    std::vector<int> out;
    for (double v : ds) out.push_back(static_cast<int>(std::llround(v)));
    return out;
  }

  /// Profile syntax: "<preset> <c0> <c1> [mode]".
  Profile profile(const std::string& k, Profile dflt) {
    used_.insert(k);
    auto it = kv_.find(k);
    if (it == kv_.end()) return dflt;
    std::stringstream ss(it->second);
    Profile p = dflt;
    std::string preset;
    ss >> preset;
    if (preset != "constant" && preset != "linear" && preset != "sinusoid") {
      errs_.push_back("key '" + k + "': unknown profile preset '" + preset + "'");
      return dflt;
    }
    p.preset = preset;
    if (!(ss >> p.c0)) errs_.push_back("key '" + k + "': missing base value");
    ss >> p.c1;
    ss >> p.mode;
    return p;
  }

  void finish() {
    for (const auto& [k, v] : kv_)
      if (!used_.count(k)) errs_.push_back("unknown key '" + k + "' (value '" + v + "')");
    if (!errs_.empty()) {
      std::string msg = "invalid configuration file:";
      for (const auto& e : errs_) msg += "\n  - " + e;
      throw std::invalid_argument(msg);
    }
  }

 private:
  std::map<std::string, std::string> kv_;
  std::set<std::string> used_;
  std::vector<std::string> errs_;
};

}  // namespace detail

inline StudyConfig config_from_ini(std::istream& in) {
  detail::ConfigReader rd(parse_ini(in));
  StudyConfig c;
  c.kind = rd.str("study.kind", "");
  c.T = rd.num("study.T", c.T);
  c.seed = static_cast<std::uint64_t>(rd.num("study.seed", static_cast<double>(c.seed)));
  c.threads = static_cast<int>(rd.num("study.threads", c.threads));
  c.n_random = static_cast<int>(rd.num("study.n_random", c.n_random));

  c.theta = rd.num("physics.theta", c.theta);
  c.L = rd.num("physics.L", c.L);
  c.omega = rd.profile("physics.omega", c.omega);
  c.E_space = rd.profile("physics.E", c.E_space);
  c.rho0 = rd.profile("physics.rho0", c.rho0);
  c.E_time = rd.str("physics.E_time", c.E_time);
  c.E_time_freq = rd.num("physics.E_time_freq", c.E_time_freq);
  c.lambda = rd.num("physics.lambda", c.lambda);
  c.mode = static_cast<int>(rd.num("physics.mode", c.mode));

  c.nx_list = rd.int_list("grid.nx", c.nx_list);
  c.nv = static_cast<int>(rd.num("grid.nv", c.nv));
  c.kx = static_cast<int>(rd.num("grid.kx", c.kx));
  c.kv = static_cast<int>(rd.num("grid.kv", c.kv));
  c.beta_list = rd.int_list("grid.beta", c.beta_list);
  c.eps_list = rd.num_list("grid.eps", c.eps_list);
  c.dt_safety = rd.num("grid.dt_safety", c.dt_safety);
  c.dt_list = rd.num_list("grid.dt_list", c.dt_list);
  c.theta_list = rd.num_list("grid.theta_list", c.theta_list);
  c.hv_factors = rd.num_list("grid.hv_factors", c.hv_factors);
  c.eps_hx_max_ratio = rd.num("grid.eps_hx_max_ratio", c.eps_hx_max_ratio);
  c.theta_mode = rd.str("grid.theta_mode", c.theta_mode);

  c.out_dir = rd.str("output.dir", c.out_dir);
  rd.finish();
  return c;
}

inline StudyConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  return config_from_ini(in);
}

}  // namespace semidg

#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "scb/errors.hpp"
#include "scb/glm.hpp"

namespace scb {

// ---------------------------------------------------------------------------
// INI-style config text. Format (documented for users in the README):
//   - `[section]` headers; `key = value` lines inside them
//   - blank lines and lines starting with '#' or ';' are ignored
//   - values run to the end of the line (lists are whitespace/comma separated)
//   - unknown sections or keys are errors, as are duplicates
// ---------------------------------------------------------------------------

using IniSections = std::map<std::string, std::map<std::string, std::string>>;

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& tok, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("expected a number in " + where + ", got '" + tok + "'");
  }
}

inline std::uint64_t parse_u64(const std::string& tok, const std::string& where) {
  try {
    std::size_t pos = 0;
    if (!tok.empty() && tok[0] == '-') throw std::invalid_argument(tok);
    const unsigned long long v = std::stoull(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("expected a nonnegative integer in " + where + ", got '" +
                      tok + "'");
  }
}

inline bool parse_bool(const std::string& tok, const std::string& where) {
  if (tok == "true") return true;
  if (tok == "false") return false;
  throw ConfigError("expected true or false in " + where + ", got '" + tok + "'");
}

inline std::vector<double> parse_double_list(const std::string& value,
                                             const std::string& where) {
  std::vector<double> out;
  for (const std::string& tok : split_list(value)) {
    out.push_back(parse_double(tok, where));
  }
  if (out.empty()) throw ConfigError("empty list in " + where);
  return out;
}

}  // namespace detail

inline IniSections parse_ini(const std::string& text) {
  IniSections sections;
  std::istringstream in(text);
  std::string line;
  std::string current;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw ConfigError("line " + std::to_string(lineno) +
                          ": unterminated section header");
      }
      current = detail::trim(t.substr(1, t.size() - 2));
      if (current.empty()) {
        throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
      }
      if (sections.count(current)) {
        throw ConfigError("duplicate section [" + current + "]");
      }
      sections[current];
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    if (current.empty()) {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": key outside any [section]");
    }
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    }
    if (!sections[current].emplace(key, value).second) {
      throw ConfigError("duplicate key '" + key + "' in [" + current + "]");
    }
  }
  return sections;
}

// ---------------------------------------------------------------------------
// Typed experiment configuration
// ---------------------------------------------------------------------------

// A per-instance vector: either drawn uniformly per coordinate from [lo, hi)
// or given explicitly.
struct ValueSpec {
  bool uniform = false;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> values;  // explicit form

  static ValueSpec parse(const std::string& text, const std::string& where) {
    const std::vector<std::string> toks = detail::split_list(text);
    ValueSpec spec;
    if (!toks.empty() && toks[0] == "uniform") {
      if (toks.size() != 3) {
        throw ConfigError(where + ": uniform takes exactly two bounds");
      }
      spec.uniform = true;
      spec.lo = detail::parse_double(toks[1], where);
      spec.hi = detail::parse_double(toks[2], where);
      if (spec.lo > spec.hi) {
        throw ConfigError(where + ": uniform bounds must satisfy lo <= hi");
      }
      return spec;
    }
    spec.values = detail::parse_double_list(text, where);
    return spec;
  }
};

enum class PolicyKind { kAlgorithm1, kBenchmark1, kBenchmark2, kAlgorithm2 };

inline const char* policy_kind_name(PolicyKind k) {
  switch (k) {
    case PolicyKind::kAlgorithm1: return "algorithm1";
    case PolicyKind::kBenchmark1: return "benchmark1";
    case PolicyKind::kBenchmark2: return "benchmark2";
    case PolicyKind::kAlgorithm2: return "algorithm2";
  }
  return "?";
}

struct PolicySpec {
  PolicyKind kind = PolicyKind::kAlgorithm1;
  std::string name;    // section suffix; appears in output CSVs
  double gamma = 1.0;  // benchmark exploration rate
  GlmConfig glm;       // contextual fitting knobs
};

struct CatalogSpec {
  int n = 0;
  ValueSpec revenues;
};

struct FlatEnvSpec {
  ValueSpec valuations;
  double p = 0.0;
  double c = 0.0;
};

struct ContextSpec {
  std::vector<double> alpha;        // continuation coefficients, intercept first
  std::vector<double> beta_low;     // per-coordinate box for message coefficients
  std::vector<double> beta_high;
  std::vector<double> feature_low;  // raw feature box (intercept not included)
  std::vector<double> feature_high;
  double c = 0.0;

  int dim() const { return static_cast<int>(alpha.size()); }
};

struct ExperimentConfig {
  CatalogSpec catalog;
  std::optional<FlatEnvSpec> flat;
  std::optional<ContextSpec> contextual;
  std::uint64_t horizon = 0;
  int replications = 0;
  std::uint64_t seed = 0;
  bool shared_instance = false;  // one instance for all replications?
  std::uint64_t record_stride = 1;
  int parallelism = 0;  // worker threads; 0 = hardware concurrency
  std::vector<PolicySpec> policies;

  bool is_contextual() const { return contextual.has_value(); }
};

namespace detail {

// Pull a key out of a section's remaining-keys map, enforcing presence.
class KeyReader {
 public:
  KeyReader(const std::string& section, std::map<std::string, std::string> kv)
      : section_(section), kv_(std::move(kv)) {}

  std::optional<std::string> take(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    std::string v = it->second;
    kv_.erase(it);
    return v;
  }

  std::string require(const std::string& key) {
    auto v = take(key);
    if (!v) throw ConfigError("[" + section_ + "] is missing key '" + key + "'");
    return *v;
  }

  // Call last: anything still unclaimed is a typo or an unsupported option.
  void finish() const {
    if (!kv_.empty()) {
      throw ConfigError("[" + section_ + "] has unknown key '" +
                        kv_.begin()->first + "'");
    }
  }

  const std::string& section() const { return section_; }

 private:
  std::string section_;
  std::map<std::string, std::string> kv_;
};

inline void read_glm_keys(KeyReader& r, GlmConfig& glm) {
  if (auto v = r.take("lambda")) {
    glm.lambda = parse_double(*v, r.section() + ".lambda");
    if (!(glm.lambda >= 0.0) || !std::isfinite(glm.lambda)) {
      throw ConfigError(r.section() + ": lambda must be nonnegative");
    }
  }
  if (auto v = r.take("lambda_abandon")) {
    glm.lambda_abandon = parse_double(*v, r.section() + ".lambda_abandon");
    if (!(glm.lambda_abandon >= 0.0) || !std::isfinite(glm.lambda_abandon)) {
      throw ConfigError(r.section() + ": lambda_abandon must be nonnegative");
    }
  }
  if (auto v = r.take("refit_dense_until")) {
    glm.refit_dense_until = parse_u64(*v, r.section() + ".refit_dense_until");
  }
  if (auto v = r.take("refit_every_frac")) {
    glm.refit_every_frac = parse_u64(*v, r.section() + ".refit_every_frac");
    if (glm.refit_every_frac == 0) {
      throw ConfigError(r.section() + ": refit_every_frac must be positive");
    }
  }
  if (auto v = r.take("force_per_step_refit")) {
    glm.force_per_step_refit =
        parse_bool(*v, r.section() + ".force_per_step_refit");
  }
}

}  // namespace detail

inline ExperimentConfig parse_config_text(const std::string& text) {
  const IniSections sections = parse_ini(text);
  ExperimentConfig cfg;
  bool saw_catalog = false;
  bool saw_experiment = false;

  for (const auto& [name, kv] : sections) {
    detail::KeyReader r(name, kv);
    if (name == "catalog") {
      saw_catalog = true;
      cfg.catalog.n = static_cast<int>(detail::parse_u64(r.require("n"), "catalog.n"));
      if (cfg.catalog.n < 1) throw ConfigError("catalog.n must be at least 1");
      if (auto v = r.take("revenues")) {
        cfg.catalog.revenues = ValueSpec::parse(*v, "catalog.revenues");
      } else {
        cfg.catalog.revenues.uniform = true;
        cfg.catalog.revenues.lo = 0.0;
        cfg.catalog.revenues.hi = 1.0;
      }
    } else if (name == "environment") {
      FlatEnvSpec env;
      env.valuations = ValueSpec::parse(r.require("valuations"), "environment.valuations");
      env.p = detail::parse_double(r.require("p"), "environment.p");
      env.c = detail::parse_double(r.require("c"), "environment.c");
      cfg.flat = std::move(env);
    } else if (name == "contextual") {
      ContextSpec ctx;
      ctx.alpha = detail::parse_double_list(r.require("alpha"), "contextual.alpha");
      ctx.beta_low = detail::parse_double_list(r.require("beta_low"), "contextual.beta_low");
      ctx.beta_high = detail::parse_double_list(r.require("beta_high"), "contextual.beta_high");
      ctx.feature_low = detail::parse_double_list(r.require("feature_low"), "contextual.feature_low");
      ctx.feature_high = detail::parse_double_list(r.require("feature_high"), "contextual.feature_high");
      ctx.c = detail::parse_double(r.require("c"), "contextual.c");
      cfg.contextual = std::move(ctx);
    } else if (name == "experiment") {
      saw_experiment = true;
      cfg.horizon = detail::parse_u64(r.require("horizon"), "experiment.horizon");
      cfg.replications = static_cast<int>(
          detail::parse_u64(r.require("replications"), "experiment.replications"));
      if (auto v = r.take("seed")) cfg.seed = detail::parse_u64(*v, "experiment.seed");
      if (auto v = r.take("shared_instance")) {
        cfg.shared_instance = detail::parse_bool(*v, "experiment.shared_instance");
      }
      if (auto v = r.take("record_stride")) {
        cfg.record_stride = detail::parse_u64(*v, "experiment.record_stride");
        if (cfg.record_stride == 0) {
          throw ConfigError("experiment.record_stride must be positive");
        }
      }
      if (auto v = r.take("parallelism")) {
        cfg.parallelism =
            static_cast<int>(detail::parse_u64(*v, "experiment.parallelism"));
      }
    } else if (name.rfind("policy.", 0) == 0) {
      PolicySpec pol;
      pol.name = name.substr(7);
      if (pol.name == "algorithm1") {
        pol.kind = PolicyKind::kAlgorithm1;
      } else if (pol.name == "benchmark1") {
        pol.kind = PolicyKind::kBenchmark1;
      } else if (pol.name == "benchmark2") {
        pol.kind = PolicyKind::kBenchmark2;
      } else if (pol.name == "algorithm2") {
        pol.kind = PolicyKind::kAlgorithm2;
      } else {
        throw ConfigError("unknown policy section [" + name + "]");
      }
      if (pol.kind == PolicyKind::kBenchmark1 || pol.kind == PolicyKind::kBenchmark2) {
        if (auto v = r.take("gamma")) {
          pol.gamma = detail::parse_double(*v, name + ".gamma");
          if (!std::isfinite(pol.gamma) || pol.gamma <= 0.0) {
            throw ConfigError(name + ": gamma must be positive");
          }
        }
        detail::read_glm_keys(r, pol.glm);  // used only in contextual mode
      } else if (pol.kind == PolicyKind::kAlgorithm2) {
        detail::read_glm_keys(r, pol.glm);
      }
      cfg.policies.push_back(std::move(pol));
    } else {
      throw ConfigError("unknown section [" + name + "]");
    }
    r.finish();
  }

  if (!saw_catalog) throw ConfigError("config needs a [catalog] section");
  if (!saw_experiment) throw ConfigError("config needs an [experiment] section");
  if (cfg.flat.has_value() == cfg.contextual.has_value()) {
    throw ConfigError("config needs exactly one of [environment] and [contextual]");
  }
  if (cfg.horizon < 1) throw ConfigError("experiment.horizon must be at least 1");
  if (cfg.replications < 1) {
    throw ConfigError("experiment.replications must be at least 1");
  }
  if (cfg.policies.empty()) {
    throw ConfigError("config needs at least one [policy.*] section");
  }

  // Value-spec sanity against the catalog and mode.
  auto check_values = [&](const ValueSpec& v, std::size_t want,
                          const std::string& where, bool prob) {
    if (v.uniform) {
      if (prob && (v.lo < 0.0 || v.hi > 1.0 || (v.lo == v.hi && v.lo >= 1.0))) {
        throw ConfigError(where + ": uniform bounds must stay within [0, 1]");
      }
      if (!prob && v.lo < 0.0) {
        throw ConfigError(where + ": values must be nonnegative");
      }
      return;
    }
    if (v.values.size() != want) {
      throw ConfigError(where + ": expected " + std::to_string(want) + " values");
    }
    for (double d : v.values) {
      if (prob && (d < 0.0 || d >= 1.0)) {
        throw ConfigError(where + ": values must lie in [0, 1)");
      }
      if (!prob && d < 0.0) {
        throw ConfigError(where + ": values must be nonnegative");
      }
    }
  };
  const std::size_t n = static_cast<std::size_t>(cfg.catalog.n);
  check_values(cfg.catalog.revenues, n, "catalog.revenues", false);

  if (cfg.flat) {
    check_values(cfg.flat->valuations, n, "environment.valuations", true);
    if (!std::isfinite(cfg.flat->p) || cfg.flat->p < 0.0 || cfg.flat->p > 1.0) {
      throw ConfigError("environment.p must lie in [0, 1]");
    }
    if (!std::isfinite(cfg.flat->c) || cfg.flat->c < 0.0) {
      throw ConfigError("environment.c must be nonnegative");
    }
  } else {
    const ContextSpec& ctx = *cfg.contextual;
    const std::size_t d = ctx.alpha.size();
    if (d < 1) throw ConfigError("contextual.alpha must be nonempty");
    if (ctx.beta_low.size() != d || ctx.beta_high.size() != d) {
      throw ConfigError("contextual beta bounds must match alpha's length");
    }
    if (ctx.feature_low.size() != d - 1 || ctx.feature_high.size() != d - 1) {
      throw ConfigError(
          "contextual feature bounds must have one entry per non-intercept "
          "coordinate (alpha length minus one)");
    }
    for (std::size_t k = 0; k < d; ++k) {
      if (ctx.beta_low[k] > ctx.beta_high[k]) {
        throw ConfigError("contextual beta bounds must satisfy low <= high");
      }
    }
    for (std::size_t k = 0; k + 1 < d; ++k) {
      if (ctx.feature_low[k] > ctx.feature_high[k]) {
        throw ConfigError("contextual feature bounds must satisfy low <= high");
      }
    }
    if (!std::isfinite(ctx.c) || ctx.c < 0.0) {
      throw ConfigError("contextual.c must be nonnegative");
    }
  }

  // Mode restrictions per policy, and unique names.
  for (std::size_t i = 0; i < cfg.policies.size(); ++i) {
    const PolicySpec& pol = cfg.policies[i];
    if (pol.kind == PolicyKind::kAlgorithm1 && cfg.is_contextual()) {
      throw ConfigError("policy.algorithm1 needs a flat [environment]");
    }
    if (pol.kind == PolicyKind::kAlgorithm2 && !cfg.is_contextual()) {
      throw ConfigError("policy.algorithm2 needs a [contextual] environment");
    }
    for (std::size_t j = i + 1; j < cfg.policies.size(); ++j) {
      if (cfg.policies[j].name == pol.name) {
        throw ConfigError("duplicate policy section [policy." + pol.name + "]");
      }
    }
  }
  return cfg;
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace scb

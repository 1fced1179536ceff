#include "rlqaoa/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rlqaoa/quantum.hpp"

namespace rlqaoa {
namespace {

constexpr const char* kSections[] = {"run", "system", "noise", "training",
                                     "sweep"};
const std::set<std::string> kAlgorithms = {"rl_qaoa", "cd_qaoa", "pg_qaoa",
                                           "qaoa", "adiabatic"};
const std::set<std::string> kKnownLabels = {"H1", "H2", "Y", "X|Y", "Y|Z"};

[[noreturn]] void fail_at(const std::string& file, int line,
                          const std::string& msg) {
  throw ConfigError(file + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  if (trim(value).empty()) return items;
  size_t start = 0;
  while (true) {
    size_t comma = value.find(',', start);
    std::string item = trim(comma == std::string::npos
                                ? value.substr(start)
                                : value.substr(start, comma - start));
    if (item.empty()) throw std::invalid_argument("empty list element");
    items.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return items;
}

// Shortest digit strings that parse back to the identical value.
std::string format_value(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}
std::string format_value(int v) { return std::to_string(v); }
std::string format_value(std::uint64_t v) { return std::to_string(v); }
std::string format_value(const std::string& v) { return v; }
template <class T>
std::string format_value(const std::vector<T>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_value(v[i]);
  }
  return out;
}

void parse_value(const std::string& text, double& out) {
  auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw std::invalid_argument("expected a real number, got '" + text + "'");
}
void parse_value(const std::string& text, int& out) {
  long long v = 0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() ||
      v < std::numeric_limits<int>::min() ||
      v > std::numeric_limits<int>::max())
    throw std::invalid_argument("expected an integer, got '" + text + "'");
  out = static_cast<int>(v);
}
void parse_value(const std::string& text, std::uint64_t& out) {
  auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw std::invalid_argument("expected an unsigned integer, got '" + text +
                                "'");
}
void parse_value(const std::string& text, std::string& out) { out = text; }
template <class T>
void parse_value(const std::string& text, std::vector<T>& out) {
  std::vector<T> items;
  for (const std::string& piece : split_list(text)) {
    T v;
    parse_value(piece, v);
    items.push_back(std::move(v));
  }
  out = std::move(items);
}

struct FieldDef {
  std::string section;
  std::string key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
FieldDef make_field(const char* section, const char* key,
                    std::function<T&(ExperimentConfig&)> access) {
  FieldDef f;
  f.section = section;
  f.key = key;
  f.set = [access](ExperimentConfig& cfg, const std::string& value) {
    parse_value(value, access(cfg));
  };
  f.get = [access](const ExperimentConfig& cfg) {
    return format_value(access(const_cast<ExperimentConfig&>(cfg)));
  };
  return f;
}

#define RLQAOA_FIELD(section, key, expr)                        \
  make_field<decltype(ExperimentConfig{}.expr)>(                \
      section, key,                                             \
      [](ExperimentConfig& c) -> decltype(ExperimentConfig{}.expr)& { \
        return c.expr;                                          \
      })

const std::vector<FieldDef>& field_table() {
  static const std::vector<FieldDef> table = {
      RLQAOA_FIELD("run", "algorithm", algorithm),
      RLQAOA_FIELD("run", "seed", seed),
      RLQAOA_FIELD("run", "out_dir", out_dir),
      RLQAOA_FIELD("run", "workers", workers),

      RLQAOA_FIELD("system", "n_sites", n_sites),
      RLQAOA_FIELD("system", "coupling", coupling),
      RLQAOA_FIELD("system", "h_z", h_z),
      RLQAOA_FIELD("system", "h_x", h_x),
      RLQAOA_FIELD("system", "total_t", total_T),
      RLQAOA_FIELD("system", "q", q),
      RLQAOA_FIELD("system", "actions", action_labels),

      RLQAOA_FIELD("noise", "kind", noise_kind),
      RLQAOA_FIELD("noise", "strength", noise_strength),

      RLQAOA_FIELD("training", "batch_size", hp.batch_size),
      RLQAOA_FIELD("training", "lr", hp.lr),
      RLQAOA_FIELD("training", "lr_decay", hp.lr_decay),
      RLQAOA_FIELD("training", "lr_decay_every", hp.lr_decay_every),
      RLQAOA_FIELD("training", "eps_c", hp.eps_c),
      RLQAOA_FIELD("training", "eps_d", hp.eps_d),
      RLQAOA_FIELD("training", "ppo_epochs", hp.ppo_epochs),
      RLQAOA_FIELD("training", "ema", hp.ema),
      RLQAOA_FIELD("training", "entropy_temp", hp.entropy_temp),
      RLQAOA_FIELD("training", "temp_decay", hp.temp_decay),
      RLQAOA_FIELD("training", "temp_decay_every", hp.temp_decay_every),
      RLQAOA_FIELD("training", "total_iters", hp.total_iters),
      RLQAOA_FIELD("training", "grad_clip", hp.grad_clip),
      RLQAOA_FIELD("training", "d_h", d_h),
      RLQAOA_FIELD("training", "n_hidden", n_hidden),
      RLQAOA_FIELD("training", "family", family),
      RLQAOA_FIELD("training", "qaoa_restarts", qaoa_restarts),
      RLQAOA_FIELD("training", "eval_restarts", eval_restarts),
      RLQAOA_FIELD("training", "inner_line_searches", inner_line_searches),
      RLQAOA_FIELD("training", "dt", dt),

      RLQAOA_FIELD("sweep", "algorithms", sweep.algorithms),
      RLQAOA_FIELD("sweep", "n_sites", sweep.n_sites),
      RLQAOA_FIELD("sweep", "total_t", sweep.total_T),
      RLQAOA_FIELD("sweep", "noise_kinds", sweep.noise_kinds),
      RLQAOA_FIELD("sweep", "noise_strengths", sweep.noise_strengths),
      RLQAOA_FIELD("sweep", "seeds", sweep.seeds),
  };
  return table;
}

#undef RLQAOA_FIELD

const FieldDef* find_field(const std::string& section, const std::string& key) {
  for (const FieldDef& f : field_table())
    if (f.section == section && f.key == key) return &f;
  return nullptr;
}

bool known_section(const std::string& name) {
  for (const char* s : kSections)
    if (name == s) return true;
  return false;
}

void check_range(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

PPOHyperparams default_training_hyperparams() {
  PPOHyperparams hp;
  hp.total_iters = 5000;
  return hp;
}

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "none") return NoiseKind::none;
  if (name == "classical") return NoiseKind::classical_gaussian;
  if (name == "quantum") return NoiseKind::quantum;
  if (name == "gate_rotation") return NoiseKind::gate_rotation;
  throw ConfigError("unknown noise kind '" + name +
                    "' (expected none, classical, quantum, gate_rotation)");
}

std::string noise_kind_name(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::none: return "none";
    case NoiseKind::classical_gaussian: return "classical";
    case NoiseKind::quantum: return "quantum";
    case NoiseKind::gate_rotation: return "gate_rotation";
  }
  throw ConfigError("invalid noise kind enum value");
}

ContinuousFamily parse_family(const std::string& name) {
  if (name == "sigmoid_gaussian") return ContinuousFamily::sigmoid_gaussian;
  if (name == "beta") return ContinuousFamily::beta;
  throw ConfigError("unknown continuous family '" + name +
                    "' (expected sigmoid_gaussian, beta)");
}

std::string family_name(ContinuousFamily family) {
  return family == ContinuousFamily::beta ? "beta" : "sigmoid_gaussian";
}

ExperimentConfig parse_config(std::istream& in, const std::string& filename) {
  ExperimentConfig cfg;
  std::string line;
  std::string section;
  std::set<std::pair<std::string, std::string>> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == ';') continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        fail_at(filename, lineno, "malformed section header '" + s + "'");
      section = trim(s.substr(1, s.size() - 2));
      if (!known_section(section))
        fail_at(filename, lineno, "unknown section [" + section + "]");
      continue;
    }
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      fail_at(filename, lineno, "expected 'key = value', got '" + s + "'");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (section.empty())
      fail_at(filename, lineno, "key '" + key + "' appears before any section");
    if (key.empty()) fail_at(filename, lineno, "empty key");
    const FieldDef* f = find_field(section, key);
    if (!f)
      fail_at(filename, lineno,
              "unknown key '" + key + "' in section [" + section + "]");
    if (!seen.insert({section, key}).second)
      fail_at(filename, lineno,
              "duplicate key '" + key + "' in section [" + section + "]");
    try {
      f->set(cfg, value);
    } catch (const std::invalid_argument& e) {
      fail_at(filename, lineno, std::string(e.what()) + " (key '" + key + "')");
    }
  }
  return cfg;
}

ExperimentConfig parse_config_string(const std::string& text,
                                     const std::string& filename) {
  std::istringstream in(text);
  return parse_config(in, filename);
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  std::string current;
  for (const FieldDef& f : field_table()) {
    if (f.section != current) {
      if (!out.empty()) out += "\n";
      out += "[" + f.section + "]\n";
      current = f.section;
    }
    std::string value = f.get(cfg);
    out += f.key + (value.empty() ? " =" : " = " + value) + "\n";
  }
  return out;
}

void apply_override(ExperimentConfig& cfg, const std::string& spec) {
  size_t eq = spec.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + spec + "': expected key=value");
  std::string lhs = trim(spec.substr(0, eq));
  std::string value = trim(spec.substr(eq + 1));
  const FieldDef* f = nullptr;
  size_t dot = lhs.find('.');
  if (dot != std::string::npos) {
    f = find_field(lhs.substr(0, dot), lhs.substr(dot + 1));
    if (!f) throw ConfigError("override '" + spec + "': unknown field '" +
                              lhs + "'");
  } else {
    std::vector<const FieldDef*> matches;
    for (const FieldDef& cand : field_table())
      if (cand.key == lhs) matches.push_back(&cand);
    if (matches.empty())
      throw ConfigError("override '" + spec + "': unknown key '" + lhs + "'");
    if (matches.size() > 1) {
      std::string names;
      for (const FieldDef* m : matches) {
        if (!names.empty()) names += ", ";
        names += m->section + "." + m->key;
      }
      throw ConfigError("override '" + spec + "': ambiguous key '" + lhs +
                        "' (matches " + names + ")");
    }
    f = matches.front();
  }
  try {
    f->set(cfg, value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("override '" + spec + "': " + e.what());
  }
}

void validate_config(const ExperimentConfig& cfg) {
  check_range(kAlgorithms.count(cfg.algorithm) > 0,
              "unknown algorithm '" + cfg.algorithm +
                  "' (expected rl_qaoa, cd_qaoa, pg_qaoa, qaoa, adiabatic)");
  check_range(cfg.n_sites >= 2 && cfg.n_sites <= kMaxSites,
              "n_sites must be in [2, " + std::to_string(kMaxSites) + "]");
  check_range(cfg.q >= 1, "q must be >= 1");
  check_range(cfg.total_T > 0, "total_t must be positive");
  check_range(cfg.dt > 0, "dt must be positive");
  check_range(!cfg.action_labels.empty(), "actions must be non-empty");
  for (const std::string& label : cfg.action_labels)
    check_range(kKnownLabels.count(label) > 0,
                "unknown action label '" + label +
                    "' (expected H1, H2, Y, X|Y, Y|Z)");
  parse_noise_kind(cfg.noise_kind);
  check_range(cfg.noise_strength >= 0, "noise strength must be >= 0");
  parse_family(cfg.family);
  check_range(cfg.d_h >= 1, "d_h must be >= 1");
  check_range(cfg.n_hidden >= 1, "n_hidden must be >= 1");
  check_range(cfg.qaoa_restarts >= 1, "qaoa_restarts must be >= 1");
  check_range(cfg.eval_restarts >= 1, "eval_restarts must be >= 1");
  check_range(cfg.inner_line_searches >= 0,
              "inner_line_searches must be >= 0");
  check_range(cfg.workers >= 0, "workers must be >= 0");
  try {
    validate_hyperparams(cfg.hp);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  for (const std::string& alg : cfg.sweep.algorithms)
    check_range(kAlgorithms.count(alg) > 0,
                "unknown sweep algorithm '" + alg + "'");
  for (int n : cfg.sweep.n_sites)
    check_range(n >= 2 && n <= kMaxSites, "sweep n_sites must be in [2, " +
                                              std::to_string(kMaxSites) + "]");
  for (double t : cfg.sweep.total_T)
    check_range(t > 0, "sweep total_t entries must be positive");
  for (const std::string& kind : cfg.sweep.noise_kinds) parse_noise_kind(kind);
  for (double s : cfg.sweep.noise_strengths)
    check_range(s >= 0, "sweep noise strengths must be >= 0");
}

EnvConfig make_env_config(const ExperimentConfig& cfg) {
  EnvConfig env;
  env.ising.n_sites = cfg.n_sites;
  env.ising.coupling = cfg.coupling;
  env.ising.h_z = cfg.h_z;
  env.ising.h_x = cfg.h_x;
  env.total_T = cfg.total_T;
  env.q = cfg.q;
  env.action_labels = cfg.action_labels;
  env.noise.kind = parse_noise_kind(cfg.noise_kind);
  env.noise.strength = cfg.noise_strength;
  return env;
}

}  // namespace rlqaoa

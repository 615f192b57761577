#include "causaldq/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace causaldq::harness {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw std::invalid_argument("config: bad value '" + value + "' for key '" + key + "'");
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* b = v.data();
  if (!v.empty() && *b == '+') ++b;
  auto res = std::from_chars(b, v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) bad_value(key, v);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v);
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_int(key, trim(item)));
  return out;
}

std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Field {
  const char* section;
  const char* key;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define CDQ_INT(sec, name)                                                                \
  Field {                                                                                 \
    sec, #name, [](ExperimentConfig& c, const std::string& v) { c.name = to_int(#name, v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.name); }                  \
  }
#define CDQ_DBL(sec, name)                                                                     \
  Field {                                                                                      \
    sec, #name, [](ExperimentConfig& c, const std::string& v) { c.name = to_double(#name, v); }, \
        [](const ExperimentConfig& c) { return fmt(c.name); }                                  \
  }
#define CDQ_STR(sec, name)                                                          \
  Field {                                                                           \
    sec, #name, [](ExperimentConfig& c, const std::string& v) { c.name = v; },      \
        [](const ExperimentConfig& c) { return c.name; }                            \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      CDQ_INT("scenario", p),
      CDQ_INT("scenario", m),
      CDQ_INT("scenario", k),
      CDQ_STR("scenario", pattern),
      CDQ_DBL("scenario", delta_train),
      CDQ_DBL("scenario", delta_test),
      CDQ_DBL("scenario", noise_sigma),
      CDQ_INT("scenario", horizon),
      CDQ_DBL("scenario", edge_prob),
      CDQ_DBL("scenario", weight_low),
      CDQ_DBL("scenario", weight_high),
      CDQ_STR("train", mode),
      CDQ_INT("train", episodes),
      Field{"train", "hidden",
            [](ExperimentConfig& c, const std::string& v) { c.hidden = to_int_list("hidden", v); },
            [](const ExperimentConfig& c) {
              std::string s;
              for (std::size_t i = 0; i < c.hidden.size(); ++i) s += (i ? "," : "") + std::to_string(c.hidden[i]);
              return s;
            }},
      CDQ_DBL("train", lr),
      CDQ_DBL("train", gamma),
      CDQ_INT("train", batch),
      CDQ_DBL("train", alpha_ent),
      CDQ_DBL("train", alpha_decay),
      CDQ_DBL("train", tau0),
      CDQ_DBL("train", tau_decay),
      CDQ_DBL("train", tau_floor),
      CDQ_INT("train", sync_period),
      CDQ_STR("train", sync_mode),
      CDQ_DBL("train", polyak_rate),
      CDQ_INT("train", replay_capacity),
      CDQ_INT("train", updates_per_step),
      Field{"train", "scaled_reward",
            [](ExperimentConfig& c, const std::string& v) { c.scaled_reward = to_bool("scaled_reward", v); },
            [](const ExperimentConfig& c) { return std::string(c.scaled_reward ? "true" : "false"); }},
      CDQ_STR("train", features),
      CDQ_DBL("monitor", lambda),
      CDQ_DBL("monitor", zeta),
      CDQ_INT("monitor", alarm_dof),
      CDQ_STR("monitor", monitor_sigma),
      CDQ_STR("discovery", cpe_source),
      CDQ_STR("discovery", cpe_refresh),
      CDQ_STR("discovery", discovery_scope),
      CDQ_DBL("discovery", alpha_sig),
      CDQ_INT("discovery", max_cond),
      CDQ_INT("discovery", context_rows),
      CDQ_DBL("reward", reward_y),
      CDQ_DBL("reward", reward_w),
      CDQ_DBL("reward", penalty),
      CDQ_DBL("reward", reward_before),
      CDQ_DBL("reward", reward_after),
      CDQ_INT("eval", replications),
      CDQ_INT("eval", eval_onset),
      Field{"run", "seed", [](ExperimentConfig& c, const std::string& v) { c.seed = to_u64("seed", v); },
            [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      CDQ_INT("run", workers),
  };
  return table;
}

#undef CDQ_INT
#undef CDQ_DBL
#undef CDQ_STR

const Field* find_field(const std::string& key) {
  for (const auto& f : fields())
    if (key == f.key) return &f;
  return nullptr;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument("config: " + msg);
}

bool one_of(const std::string& v, std::initializer_list<const char*> options) {
  for (const char* o : options)
    if (v == o) return true;
  return false;
}

}  // namespace

void validate(const ExperimentConfig& c) {
  require(c.p >= 1, "p must be >= 1");
  require(c.m >= 1 && c.m <= c.p, "m must lie in [1, p]");
  require(c.k >= 0 && c.k <= c.p, "k must lie in [0, p]");
  require(one_of(c.pattern, {"a", "b"}), "pattern must be a or b");
  require(c.delta_train >= 0.0 && c.delta_test >= 0.0, "delta must be >= 0");
  require(c.noise_sigma >= 0.0, "noise_sigma must be >= 0");
  require(c.horizon >= 4, "horizon must be >= 4");
  require(c.edge_prob >= 0.0 && c.edge_prob <= 1.0, "edge_prob must lie in [0, 1]");
  require(c.weight_low >= 0.0 && c.weight_high >= c.weight_low, "need 0 <= weight_low <= weight_high");
  require(one_of(c.mode, {"causal", "non_causal"}), "mode must be causal or non_causal");
  require(c.episodes >= 0, "episodes must be >= 0");
  for (int h : c.hidden) require(h >= 1, "hidden widths must be positive");
  require(c.lr > 0.0, "lr must be positive");
  require(c.gamma >= 0.0 && c.gamma < 1.0, "gamma must lie in [0, 1)");
  require(c.batch >= 1, "batch must be >= 1");
  require(c.alpha_ent >= 0.0, "alpha_ent must be >= 0");
  require(c.alpha_decay > 0.0 && c.alpha_decay <= 1.0, "alpha_decay must lie in (0, 1]");
  require(c.tau0 > 0.0 && c.tau_floor > 0.0, "temperatures must be positive");
  require(c.tau_decay > 0.0 && c.tau_decay <= 1.0, "tau_decay must lie in (0, 1]");
  require(c.sync_period >= 1, "sync_period must be >= 1");
  require(one_of(c.sync_mode, {"hard", "polyak"}), "sync_mode must be hard or polyak");
  require(c.polyak_rate >= 0.0 && c.polyak_rate <= 1.0, "polyak_rate must lie in [0, 1]");
  require(c.replay_capacity >= c.batch, "replay_capacity must be >= batch");
  require(c.updates_per_step >= 1, "updates_per_step must be >= 1");
  require(one_of(c.features, {"log1p", "raw"}), "features must be log1p or raw");
  require(c.lambda >= 0.0 && c.lambda < 1.0, "lambda must lie in [0, 1)");
  require(c.zeta > 0.0 && c.zeta < 1.0, "zeta must lie in (0, 1)");
  require(c.alarm_dof >= 0, "alarm_dof must be >= 0");
  require(one_of(c.monitor_sigma, {"identity", "sem"}), "monitor_sigma must be identity or sem");
  require(one_of(c.cpe_source, {"discovered", "ground_truth", "none", "low_quality", "adversarial"}),
          "cpe_source must be discovered, ground_truth, none, low_quality or adversarial");
  require(one_of(c.cpe_refresh, {"episode", "once"}), "cpe_refresh must be episode or once");
  require(one_of(c.discovery_scope, {"selected", "all"}), "discovery_scope must be selected or all");
  require(c.alpha_sig > 0.0 && c.alpha_sig < 1.0, "alpha_sig must lie in (0, 1)");
  require(c.max_cond >= 0, "max_cond must be >= 0");
  require(c.context_rows >= c.max_cond + 5, "context_rows must exceed max_cond + 4");
  require(c.reward_y >= 0.0 && c.reward_w >= 0.0, "reward weights must be >= 0");
  require(c.replications >= 1, "replications must be >= 1");
  require(c.eval_onset >= 1 && c.eval_onset <= c.horizon, "eval_onset must lie in [1, horizon]");
  require(c.workers >= 1, "workers must be >= 1");
}

void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const Field* f = find_field(key);
  if (!f) throw std::invalid_argument("config: unknown key '" + key + "'");
  f->set(cfg, trim(value));
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw std::invalid_argument("config: malformed section at line " + std::to_string(line_no));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value at line " + std::to_string(line_no));
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    const Field* f = find_field(key);
    if (!f) throw std::invalid_argument("config: unknown key '" + key + "' at line " + std::to_string(line_no));
    if (!section.empty() && section != f->section)
      throw std::invalid_argument("config: key '" + key + "' belongs to section [" + f->section + "], found in [" +
                                  section + "]");
    f->set(base, value);
  }
  return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (section != f.section) {
      section = f.section;
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
    }
    out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  }
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.emplace_back(f.key);
  return keys;
}

void apply_size_defaults(ExperimentConfig& cfg) {
  const bool noisy = cfg.noise_sigma > 0.0;
  if (cfg.p <= 10) {
    cfg.alpha_ent = 0.05;
    cfg.lr = 5e-3;
    cfg.gamma = 0.9;
    cfg.batch = noisy ? 64 : 32;
    cfg.tau_decay = 0.65;
  } else if (cfg.p <= 50) {
    cfg.alpha_ent = 0.1;
    cfg.lr = 1e-3;
    cfg.gamma = 0.8;
    cfg.batch = noisy ? 128 : 64;
    cfg.tau_decay = 0.75;
  } else {
    cfg.alpha_ent = 0.1;
    cfg.lr = 1e-3;
    cfg.gamma = 0.8;
    cfg.batch = noisy ? 128 : 64;
    cfg.tau_decay = 0.9;
  }
}

}  // namespace causaldq::harness

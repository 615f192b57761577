#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace causaldq::harness {

enum class Mode { Causal, NonCausal };

/// Every experiment knob. Keys in config files match the field names.
struct ExperimentConfig {
  // [scenario]
  int p = 10;
  int m = 6;
  int k = 5;
  std::string pattern = "a";  // a: all +delta, b: alternating signs
  double delta_train = 1.0;
  double delta_test = 1.0;
  double noise_sigma = 0.0;
  int horizon = 200;
  double edge_prob = 0.3;
  double weight_low = 0.3;
  double weight_high = 0.8;

  // [train]
  std::string mode = "causal";
  int episodes = 600;
  std::vector<int> hidden = {256, 256, 256};
  double lr = 5e-3;
  double gamma = 0.9;
  int batch = 32;
  double alpha_ent = 0.05;
  double alpha_decay = 1.0;  // per-episode factor on alpha_ent; 1 keeps it constant
  double tau0 = 1.0;
  double tau_decay = 0.65;
  double tau_floor = 0.05;
  int sync_period = 100;
  std::string sync_mode = "hard";
  double polyak_rate = 0.005;
  int replay_capacity = 10000;
  int updates_per_step = 1;
  bool scaled_reward = true;
  std::string features = "log1p";

  // [monitor]
  double lambda = 0.1;
  double zeta = 0.05;
  int alarm_dof = 0;  // 0 means p
  std::string monitor_sigma = "identity";

  // [discovery]
  std::string cpe_source = "discovered";
  std::string cpe_refresh = "episode";
  std::string discovery_scope = "selected";
  double alpha_sig = 0.05;
  int max_cond = 3;
  int context_rows = 100;

  // [reward]
  double reward_y = 1.0;
  double reward_w = 0.5;
  double penalty = -20.0;
  double reward_before = 0.0;
  double reward_after = 0.0;

  // [eval]
  int replications = 100;
  int eval_onset = 1;

  // [run]
  std::uint64_t seed = 1;
  int workers = 1;

  Mode run_mode() const { return mode == "non_causal" ? Mode::NonCausal : Mode::Causal; }
  int dof() const { return alarm_dof > 0 ? alarm_dof : p; }
};

/// Throws std::invalid_argument describing the first bad field.
void validate(const ExperimentConfig& cfg);

/// Sets one field from its text form. Throws on unknown keys or bad values.
void apply_override(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Parses "key = value" lines with optional [section] headers and '#' comments
/// on top of `base`.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

std::string to_config_text(const ExperimentConfig& cfg);

std::vector<std::string> config_keys();

/// Hyperparameters per problem size from the published settings table.
void apply_size_defaults(ExperimentConfig& cfg);

}  // namespace causaldq::harness

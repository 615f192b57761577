#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "causaldq/config.hpp"
#include "causaldq/discovery.hpp"
#include "causaldq/envir.hpp"
#include "causaldq/monitor.hpp"
#include "causaldq/qnet.hpp"
#include "causaldq/streams.hpp"

namespace causaldq::harness {

/// The monitored system: a fixed SEM drawn from the config seed, shared by
/// training and evaluation.
struct Scenario {
  streams::WeightedDag dag;
  Matrix sigma;  // monitor covariance
};

Scenario make_scenario(const ExperimentConfig& cfg);

streams::ShiftPattern shift_pattern(const ExperimentConfig& cfg);

/// Network input for a causal state. "log1p" maps every entry x to
/// sign(x) log(1 + |x|); "raw" passes the flattened state through.
Vector encode_state(const monitor::CausalState& state, const std::string& features);

std::vector<int> net_layout(const ExperimentConfig& cfg);

/// Graph used as the CPE source, over all p streams.
discovery::Cpdag source_graph(const ExperimentConfig& cfg, const Scenario& scenario, const Matrix& context,
                              const IndexSet& scope, std::uint64_t seed);

/// CPE for one episode. `scope` lists the streams the CPE may relate; the
/// rest keep identity rows.
discovery::CpeMatrix build_cpe(const ExperimentConfig& cfg, const Scenario& scenario, const IndexSet& scope,
                               std::uint64_t seed);

/// In-control rows used for discovery.
Matrix context_window(const ExperimentConfig& cfg, const Scenario& scenario, std::uint64_t seed);

struct TrainResult {
  qnet::NetParams params;
  std::vector<double> curve;  // cumulative reward per episode
};

using ProgressFn = std::function<void(int episode, double reward)>;

TrainResult train(const ExperimentConfig& cfg, const ProgressFn& progress = {});

struct AddReport {
  double mean_add = 0.0;
  double stderr_add = 0.0;
  int replications = 0;
  std::vector<double> per_rep;
  std::vector<char> false_alarm;
  double false_alarm_rate = 0.0;
};

using Policy = std::function<IndexSet(const monitor::CausalState&)>;

/// Greedy top-m policy of a trained network.
Policy greedy_policy(const qnet::NetParams& params, const ExperimentConfig& cfg);

/**
 * Runs `replications` monitoring episodes with onset cfg.eval_onset and shift
 * cfg.delta_test. Delay is first alarm time minus onset, censored at the
 * horizon; alarms before onset (or any alarm when delta_test is 0) count
 * as false alarms. Replication i depends only on (seed, i).
 */
AddReport evaluate_policy(const Policy& policy, const ExperimentConfig& cfg, int replications);
AddReport evaluate_add(const qnet::NetParams& params, const ExperimentConfig& cfg, int replications);

/// Step-by-step record of one evaluation replication.
std::vector<envir::TraceRow> trace_replication(const Policy& policy, const ExperimentConfig& cfg, int rep);

double sample_mean(const std::vector<double>& v);
/// Sample standard deviation over sqrt(n); 0 for n < 2.
double standard_error(const std::vector<double>& v);

/// Trailing moving average.
std::vector<double> smooth_curve(const std::vector<double>& curve, int window);

/// First episode whose smoothed reward reaches `level`; curve size if never.
int plateau_episode(const std::vector<double>& curve, double level, int window);

struct PresetRun {
  std::string method;
  ExperimentConfig cfg;  // training config; delta_test is overwritten per grid point
  std::vector<double> test_deltas;
};

struct PresetPlan {
  std::string name;
  std::vector<PresetRun> runs;
};

std::vector<std::string> preset_names();

/// Throws std::invalid_argument on unknown names. `overrides` are applied
/// to every run after the preset's own settings.
PresetPlan preset_plan(const std::string& name, const ExperimentConfig& base,
                       const std::vector<std::pair<std::string, std::string>>& overrides = {});

/// Trains and evaluates every run of a preset; writes results.csv,
/// curves.csv and curves.svg into out_dir.
void run_preset(const PresetPlan& plan, const std::string& out_dir, const ProgressFn& progress = {});

}  // namespace causaldq::harness

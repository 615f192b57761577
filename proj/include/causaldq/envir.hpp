#pragma once

#include <string>

#include "causaldq/discovery.hpp"
#include "causaldq/monitor.hpp"
#include "causaldq/streams.hpp"

namespace causaldq::envir {

/// Reward parameters. y and w are nonzero only on shifted streams.
struct RewardConfig {
  Vector y;
  Vector w;
  double penalty = -20.0;  // U
  double before = 0.0;     // r1, t < onset
  double after = 0.0;      // r2, t > onset + duration
  int onset = 1;
  int duration = 0;
  bool has_shift = false;
  bool scaled = false;

  /// Sum(y + w) - U; rewards are divided by this in scaled mode.
  double scale() const;
  double upper() const { return (y + w).sum(); }
};

struct RewardWeights {
  double y = 1.0;
  double w = 0.5;
  double penalty = -20.0;
  double before = 0.0;
  double after = 0.0;
  bool scaled = false;
};

RewardConfig make_reward_config(const streams::ShiftSpec& shift, int p, const RewardWeights& weights);
/// Reward configuration for a batch without a change.
RewardConfig make_null_reward_config(int p, const RewardWeights& weights);

/// Shifted streams that carry a nonzero shift at time t (1-based), as 0/1.
Vector truth_mask(const streams::StreamBatch& batch, int t);

/// U if the action misses every shifted stream, else sum_i a_i y_i + w_i s_i.
double causal_reward(const IndexSet& action, const Vector& truth_mask, const Vector& selected_indicator,
                     const RewardConfig& cfg);

/// Reward at time t given the in-window causal reward.
double reward_schedule(int t, const RewardConfig& cfg, double in_window_reward);

struct MonitorConfig {
  Matrix sigma;
  double lambda = 0.1;
  /// When false the phi row is held at zero.
  bool causal_statistic = true;
};

struct StepOutcome {
  Vector observation;  // values of the m selected streams
  double reward = 0.0;
  monitor::CausalState causal_state;
  bool done = false;
  Vector truth_mask;
  /// Sum of lam over the selected streams.
  double selected_statistic = 0.0;
  /// Sum of lam over all streams.
  double total_statistic = 0.0;
};

/// One episode over a stream batch. Only selected values are revealed to the caller.
class Environment {
 public:
  Environment(streams::StreamBatch batch, RewardConfig reward, const MonitorConfig& mon,
              discovery::CpeMatrix cpe, int m);

  const monitor::CausalState& state() const { return state_; }
  const monitor::MonitorState& monitor_state() const { return monitor_; }
  /// Time of the next step (1-based).
  int time() const { return t_; }
  int horizon() const { return batch_.horizon(); }
  int p() const { return batch_.p(); }
  int m() const { return m_; }
  bool done() const { return t_ > batch_.horizon(); }
  void set_cpe(discovery::CpeMatrix cpe);

  StepOutcome step(const IndexSet& action);

 private:
  streams::StreamBatch batch_;
  RewardConfig reward_;
  bool causal_;
  discovery::CpeMatrix cpe_;
  int m_;
  int t_ = 1;
  monitor::MonitorState monitor_;
  Eigen::VectorXi staleness_;
  monitor::CausalState state_;
};

struct TraceRow {
  int t = 0;
  IndexSet selected;
  double reward = 0.0;
  double lambda_total = 0.0;
  double statistic = 0.0;  // alarm statistic over the selected streams
  bool alarm = false;
};

/// CSV with columns t,selected,reward,lambda_total,statistic,alarm; indices 1-based, ';'-separated.
void write_trace_csv(const std::vector<TraceRow>& rows, const std::string& path);

}  // namespace causaldq::envir

#include "causaldq/envir.hpp"

#include <charconv>
#include <fstream>
#include <string>
#include <stdexcept>

namespace causaldq::envir {

double RewardConfig::scale() const { return upper() - penalty; }

RewardConfig make_reward_config(const streams::ShiftSpec& shift, int p, const RewardWeights& weights) {
  RewardConfig cfg;
  cfg.y = Vector::Zero(p);
  cfg.w = Vector::Zero(p);
  for (int i : shift.shifted) {
    if (i < 0 || i >= p) throw std::invalid_argument("make_reward_config: shifted index out of range");
    cfg.y(i) = weights.y;
    cfg.w(i) = weights.w;
  }
  cfg.penalty = weights.penalty;
  cfg.before = weights.before;
  cfg.after = weights.after;
  cfg.onset = shift.onset;
  cfg.duration = shift.duration;
  cfg.has_shift = shift.delta != 0.0 && !shift.shifted.empty();
  cfg.scaled = weights.scaled;
  if (cfg.scaled && !(cfg.scale() > 0.0)) throw std::invalid_argument("make_reward_config: reward scale must be positive");
  return cfg;
}

RewardConfig make_null_reward_config(int p, const RewardWeights& weights) {
  streams::ShiftSpec none;
  return make_reward_config(none, p, weights);
}

Vector truth_mask(const streams::StreamBatch& batch, int t) {
  Vector mask = Vector::Zero(batch.p());
  if (!batch.truth) return mask;
  const auto& s = batch.truth->shift;
  if (s.delta == 0.0 || !s.active(t)) return mask;
  for (int i : s.shifted) mask(i) = 1.0;
  return mask;
}

double causal_reward(const IndexSet& action, const Vector& mask, const Vector& selected_indicator,
                     const RewardConfig& cfg) {
  bool hit = false;
  for (int i : action) hit = hit || mask(i) > 0.0;
  if (!hit) return cfg.penalty;
  double g = 0.0;
  for (int i : action) g += cfg.y(i);
  g += cfg.w.dot(selected_indicator);
  return g;
}

double reward_schedule(int t, const RewardConfig& cfg, double in_window_reward) {
  double r = cfg.before;
  if (cfg.has_shift) {
    if (t > cfg.onset + cfg.duration)
      r = cfg.after;
    else if (t >= cfg.onset)
      r = in_window_reward;
  }
  return cfg.scaled ? r / cfg.scale() : r;
}

Environment::Environment(streams::StreamBatch batch, RewardConfig reward, const MonitorConfig& mon,
                         discovery::CpeMatrix cpe, int m)
    : batch_(std::move(batch)),
      reward_(std::move(reward)),
      causal_(mon.causal_statistic),
      cpe_(std::move(cpe)),
      m_(m) {
  const int p = batch_.p();
  if (m < 1 || m > p) throw std::invalid_argument("Environment: need 1 <= m <= p");
  if (cpe_.p() != p) throw std::invalid_argument("Environment: CPE size mismatch");
  if (reward_.y.size() != p || reward_.w.size() != p)
    throw std::invalid_argument("Environment: reward vectors must have length p");
  monitor_ = monitor::init_monitor(p, mon.sigma, mon.lambda);
  staleness_ = Eigen::VectorXi::Zero(p);
  state_ = monitor::CausalState::zeros(p);
}

void Environment::set_cpe(discovery::CpeMatrix cpe) {
  if (cpe.p() != p()) throw std::invalid_argument("Environment::set_cpe: size mismatch");
  cpe_ = std::move(cpe);
}

StepOutcome Environment::step(const IndexSet& action) {
  if (done()) throw std::logic_error("Environment::step: episode already finished");
  if (static_cast<int>(action.size()) != m_)
    throw std::invalid_argument("Environment::step: action must select exactly m streams");
  const int p = batch_.p();
  for (std::size_t k = 0; k < action.size(); ++k)
    if (action[k] < 0 || action[k] >= p || (k > 0 && action[k] <= action[k - 1]))
      throw std::invalid_argument("Environment::step: action must be sorted, distinct, in range");

  Vector x = Vector::Zero(p);
  StepOutcome out;
  out.observation.resize(m_);
  for (int k = 0; k < m_; ++k) {
    x(action[k]) = batch_.values(t_ - 1, action[k]);
    out.observation(k) = x(action[k]);
  }
  monitor_ = monitor::update_monitor(monitor_, x, action);
  const auto contrib = monitor::local_contributions(monitor_);
  Vector phi = causal_ ? monitor::causal_statistic(monitor_, cpe_) : Vector::Zero(p);
  staleness_ = monitor::update_staleness(staleness_, action);
  state_ = monitor::assemble_state(contrib.per_var, phi, staleness_);

  out.truth_mask = truth_mask(batch_, t_);
  Vector indicator = Vector::Zero(p);
  for (int i : action) indicator(i) = 1.0;
  out.reward = reward_schedule(t_, reward_, causal_reward(action, out.truth_mask, indicator, reward_));
  out.causal_state = state_;
  out.selected_statistic = monitor::selected_statistic(contrib.per_var, action);
  out.total_statistic = contrib.total;
  ++t_;
  out.done = done();
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_trace_csv(const std::vector<TraceRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open " + path);
  out << "t,selected,reward,lambda_total,statistic,alarm\n";
  for (const auto& r : rows) {
    out << r.t << ',';
    for (std::size_t k = 0; k < r.selected.size(); ++k) out << (k ? ";" : "") << r.selected[k] + 1;
    out << ',' << fmt(r.reward) << ',' << fmt(r.lambda_total) << ',' << fmt(r.statistic) << ',' << (r.alarm ? 1 : 0)
        << '\n';
  }
  if (!out) throw std::runtime_error("write_trace_csv: write failed for " + path);
}

}  // namespace causaldq::envir

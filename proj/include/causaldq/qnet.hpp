#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "causaldq/rng.hpp"
#include "causaldq/types.hpp"

namespace causaldq::qnet {

struct Layer {
  Matrix weight;  // out x in
  Vector bias;
};

/// Multilayer perceptron with ReLU hidden layers and a linear output layer.
struct NetParams {
  std::vector<Layer> layers;

  int input_width() const { return static_cast<int>(layers.front().weight.cols()); }
  int output_width() const { return static_cast<int>(layers.back().weight.rows()); }
  std::vector<int> layout() const;
  std::size_t parameter_count() const;
};

/// layout = {in, hidden..., out}. Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init.
NetParams init_params(const std::vector<int>& layout, std::uint64_t seed);

/// Zero-valued parameters with the same shapes.
NetParams zeros_like(const NetParams& params);

Vector forward(const NetParams& params, const Vector& state);
/// Columns of `states` are samples.
Matrix forward_batch(const NetParams& params, const Matrix& states);

struct PolicyDistribution {
  Vector probs;
  double tau = 1.0;
};

/// softmax(q / tau), computed with max subtraction.
PolicyDistribution boltzmann(const Vector& q, double tau);

/// H_c = -sum_i mask_i pi_i ln pi_i.
double causal_entropy(const PolicyDistribution& pi, const Vector& mask);

/// dH_c/dq for pi = boltzmann(q, tau).
Vector causal_entropy_grad(const PolicyDistribution& pi, const Vector& mask);

double td_target(double reward, double gamma, double q_next_best, double h_c);

struct Transition {
  Vector state;
  IndexSet action;
  double reward = 0.0;
  Vector next_state;
  Vector causal_mask;
};

struct LossOptions {
  double alpha_ent = 0.0;
  double tau = 1.0;
  double gamma = 0.9;
};

struct LossAndGrad {
  double loss = 0.0;
  NetParams grad;
};

/**
 * Squared TD error on the set-valued action minus the weighted causal
 * entropy of the online policy, averaged over the batch.
 *
 * The target uses double-Q selection (online net picks the top-m set at
 * s', target net scores it) plus the causal entropy of the target policy at
 * s'. It does not depend on the online parameters except through that
 * piecewise-constant selection, so the returned gradient is exact.
 */
LossAndGrad loss_and_grad(const NetParams& online, const NetParams& target,
                          std::span<const Transition* const> batch, const LossOptions& opts);
LossAndGrad loss_and_grad(const NetParams& online, const NetParams& target,
                          std::span<const Transition> batch, const LossOptions& opts);

NetParams sgd_step(const NetParams& params, const NetParams& grad, double lr);
void sgd_step_inplace(NetParams& params, const NetParams& grad, double lr);

enum class SyncMode { Hard, Polyak };

struct SyncRule {
  SyncMode mode = SyncMode::Hard;
  double rate = 0.005;  // Polyak only
};

NetParams sync_target(const NetParams& online, const NetParams& target, const SyncRule& rule);

/// The m largest entries, ties broken toward the lower index. Returned sorted.
IndexSet select_top_m(const Vector& q, int m);

/// m distinct indices drawn sequentially from pi without replacement. Sorted.
IndexSet sample_without_replacement(const PolicyDistribution& pi, int m, Rng& rng);

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 10000);

  void push(Transition t);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return items_.at(i); }

  /// Uniform batch drawn without replacement.
  std::vector<const Transition*> sample(std::size_t batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

/// Text checkpoint; doubles are written in shortest round-trip form.
void save_checkpoint(const NetParams& params, const std::string& path);
NetParams load_checkpoint(const std::string& path);

}  // namespace causaldq::qnet

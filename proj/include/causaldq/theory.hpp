#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "causaldq/types.hpp"

namespace causaldq::theory {

/// Finite MDP with a causal mask and a reference policy.
struct ToyMdp {
  int n_states = 0;
  int n_actions = 0;
  /// transition[s](a, s') = P(s' | s, a).
  std::vector<Matrix> transition;
  Matrix reward;  // S x A, |r| <= 1
  double gamma = 0.9;
  Matrix mask;    // S x A, entries 0/1, at least one 1 per state
  Matrix policy;  // S x A, rows sum to 1
  double tau = 1.0;
  /// Policy evaluation recomputes pi as softmax(Q(s', .) / tau) when set.
  bool softmax_policy = false;

  double max_mask_sum() const;
};

struct ToyOptions {
  double gamma = 0.9;
  double tau = 1.0;
  double mask_prob = 0.5;
  double r_max = 1.0;
  bool softmax_policy = false;
};

ToyMdp random_toy_mdp(int n_states, int n_actions, std::uint64_t seed, const ToyOptions& opts = {});

/// Throws std::invalid_argument when a structural invariant fails.
void validate_mdp(const ToyMdp& mdp);

/// Policy-evaluation operator with the causal entropy penalty:
/// r + gamma E_{s'}[sum_a' pi Q(s', a') - tau H_c(pi(.|s'))].
Matrix causal_bellman(const Matrix& q, const ToyMdp& mdp);

/**
 * Optimal causal soft value of one state: the best of a deterministic
 * choice among unmasked actions and an entropy-smoothed choice among masked
 * actions, max(max_{a not in C} q_a, (1/tau) log sum_{a in C} exp(tau q_a)).
 * It lies in [max q, max q + ln(sum C)/tau].
 */
double soft_value(const Eigen::Ref<const Vector>& q, const Eigen::Ref<const Vector>& mask, double tau);

Vector soft_values(const Matrix& q, const ToyMdp& mdp);

/// r + gamma E_{s'}[V_c(s')].
Matrix soft_operator(const Matrix& q, const ToyMdp& mdp);

/// V_c from the entropy identity [H_c + tau sum C pi Q] / (tau w), w = sum C pi,
/// with pi the masked softmax. NaN where the unmasked branch is optimal (w = 0).
Vector identity_values(const Matrix& q, const ToyMdp& mdp);

struct QStar {
  Matrix q;
  Vector v;
  int iterations = 0;
  std::vector<double> residuals;
};

/// Fixed-point iteration of soft_operator from Q = 0. Throws std::runtime_error
/// if the sup-change stays above tol after max_iter sweeps.
QStar solve_qstar(const ToyMdp& mdp, double tol = 1e-12, int max_iter = 100000);

struct BoundReport {
  std::string name;
  long long checked = 0;
  long long violations = 0;
  /// Largest observed (lhs - rhs); negative means every check held with margin.
  double max_slack = -1e300;
  std::string note;

  bool passed() const { return checked > 0 && violations == 0; }
  void record(double lhs, double rhs, double tol);
  void merge(const BoundReport& other);
};

/// gamma / (1 - gamma) * ln(max_s sum_a C) / tau.
double entropy_bias(const ToyMdp& mdp);

BoundReport check_contraction(const ToyMdp& mdp, int trials, std::uint64_t seed);

BoundReport check_qstar_bounds(const ToyMdp& mdp, const QStar& qstar);

/// Error decay of value iteration from Q_0 = 0 for 1 <= t <= t_max.
BoundReport check_error_decay(const ToyMdp& mdp, const QStar& qstar, int t_max);

/// Limit error against min{gamma ln C / (tau (1 - gamma)), 2 g / (1 - gamma)^3}.
/// The note records whether the (1 - gamma)^2 form also holds.
BoundReport check_error_cap(const ToyMdp& mdp, const QStar& qstar);

/// max(ceil(log((eps - bias) / d0) / log gamma), 0) + 1.
int convergence_time_cap(double eps, double bias, double d0, double gamma);

BoundReport check_convergence_time(const ToyMdp& mdp, const QStar& qstar, const std::vector<double>& eps_grid);

struct FiniteTimeTerms {
  double t1 = 0, t2 = 0, t3 = 0, t4 = 0;
  double total() const { return t1 + t2 + t3 + t4; }
};

FiniteTimeTerms finite_time_rhs(int t, double alpha, double gamma, double omega_min, double omega_max, int n_actions,
                                double mask_sum, double tau);

/// Asynchronous tabular soft Q-learning with uniform i.i.d. sampling of (s, a).
/// Compares mean + 2 stderr of ||Q_t - Q*|| against the four-term bound at
/// each t in sample_ts.
BoundReport check_finite_time_bound(const ToyMdp& mdp, const QStar& qstar, double alpha_lr,
                                    const std::vector<int>& sample_ts, int trials, std::uint64_t seed);

/// f(pi) = sum C pi ln pi is convex in pi.
BoundReport check_entropy_convexity(int trials, std::uint64_t seed);

/// 0 <= H_c <= ln(sum C) for policies supported on the masked actions.
BoundReport check_entropy_bound(int trials, std::uint64_t seed);

struct VerifyOptions {
  int n_mdps = 20;
  int max_states = 8;
  int max_actions = 4;
  int contraction_trials = 1000;
  int decay_t_max = 200;
  int finite_trials = 200;
  std::vector<int> finite_ts = {10, 100, 1000};
  double finite_alpha = 0.1;
  int fuzz_trials = 10000;
  std::uint64_t seed = 1;
};

/// Runs every check over n_mdps random MDPs; one merged report per check.
std::vector<BoundReport> verify_suite(const VerifyOptions& opts);

}  // namespace causaldq::theory

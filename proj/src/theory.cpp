#include "causaldq/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "causaldq/rng.hpp"

namespace causaldq::theory {

double ToyMdp::max_mask_sum() const { return mask.rowwise().sum().maxCoeff(); }

ToyMdp random_toy_mdp(int n_states, int n_actions, std::uint64_t seed, const ToyOptions& opts) {
  if (n_states < 1 || n_actions < 1) throw std::invalid_argument("random_toy_mdp: sizes must be positive");
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> ur(-opts.r_max, opts.r_max);
  std::bernoulli_distribution coin(opts.mask_prob);
  std::uniform_int_distribution<int> pick(0, n_actions - 1);

  ToyMdp mdp;
  mdp.n_states = n_states;
  mdp.n_actions = n_actions;
  mdp.gamma = opts.gamma;
  mdp.tau = opts.tau;
  mdp.softmax_policy = opts.softmax_policy;
  mdp.reward.resize(n_states, n_actions);
  mdp.mask.resize(n_states, n_actions);
  mdp.policy.resize(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    Matrix p(n_actions, n_states);
    for (int a = 0; a < n_actions; ++a) {
      for (int s2 = 0; s2 < n_states; ++s2) p(a, s2) = -std::log(1.0 - u01(rng));  // Dirichlet(1)
      p.row(a) /= p.row(a).sum();
    }
    mdp.transition.push_back(p);
    bool any = false;
    for (int a = 0; a < n_actions; ++a) {
      mdp.reward(s, a) = ur(rng);
      mdp.mask(s, a) = coin(rng) ? 1.0 : 0.0;
      any = any || mdp.mask(s, a) > 0.0;
      mdp.policy(s, a) = -std::log(1.0 - u01(rng));
    }
    if (!any) mdp.mask(s, pick(rng)) = 1.0;
    mdp.policy.row(s) /= mdp.policy.row(s).sum();
  }
  return mdp;
}

void validate_mdp(const ToyMdp& mdp) {
  const int S = mdp.n_states, A = mdp.n_actions;
  if (S < 1 || A < 1) throw std::invalid_argument("ToyMdp: sizes must be positive");
  if (static_cast<int>(mdp.transition.size()) != S) throw std::invalid_argument("ToyMdp: transition size");
  if (!(mdp.gamma >= 0.0 && mdp.gamma < 1.0)) throw std::invalid_argument("ToyMdp: gamma must lie in [0, 1)");
  if (!(mdp.tau > 0.0)) throw std::invalid_argument("ToyMdp: tau must be positive");
  if (mdp.reward.rows() != S || mdp.reward.cols() != A || mdp.mask.rows() != S || mdp.mask.cols() != A ||
      mdp.policy.rows() != S || mdp.policy.cols() != A)
    throw std::invalid_argument("ToyMdp: matrix shapes");
  if (mdp.reward.cwiseAbs().maxCoeff() > 1.0) throw std::invalid_argument("ToyMdp: |r| must be <= 1");
  for (int s = 0; s < S; ++s) {
    const Matrix& p = mdp.transition[static_cast<std::size_t>(s)];
    if (p.rows() != A || p.cols() != S) throw std::invalid_argument("ToyMdp: transition block shape");
    for (int a = 0; a < A; ++a)
      if (std::fabs(p.row(a).sum() - 1.0) > 1e-12 || p.row(a).minCoeff() < 0.0)
        throw std::invalid_argument("ToyMdp: transition rows must be distributions");
    if (std::fabs(mdp.policy.row(s).sum() - 1.0) > 1e-12 || mdp.policy.row(s).minCoeff() < 0.0)
      throw std::invalid_argument("ToyMdp: policy rows must be distributions");
    bool any = false;
    for (int a = 0; a < A; ++a) {
      double c = mdp.mask(s, a);
      if (c != 0.0 && c != 1.0) throw std::invalid_argument("ToyMdp: mask must be binary");
      any = any || c == 1.0;
    }
    if (!any) throw std::invalid_argument("ToyMdp: every state needs a masked action");
  }
}

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

Vector softmax_row(const Eigen::Ref<const Vector>& q, double tau) {
  Vector e = ((q.array() - q.maxCoeff()) / tau).exp();
  return e / e.sum();
}

double masked_entropy(const Vector& pi, const Eigen::Ref<const Vector>& mask) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < pi.size(); ++i) h -= mask(i) * xlogx(pi(i));
  return h;
}

double sup_norm(const Matrix& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace

Matrix causal_bellman(const Matrix& q, const ToyMdp& mdp) {
  const int S = mdp.n_states;
  Vector next_value(S);
  for (int s = 0; s < S; ++s) {
    Vector qs = q.row(s).transpose();
    Vector pi = mdp.softmax_policy ? softmax_row(qs, mdp.tau) : Vector(mdp.policy.row(s).transpose());
    next_value(s) = pi.dot(qs) - mdp.tau * masked_entropy(pi, mdp.mask.row(s).transpose());
  }
  Matrix out(S, mdp.n_actions);
  for (int s = 0; s < S; ++s)
    out.row(s) = mdp.reward.row(s) + mdp.gamma * (mdp.transition[static_cast<std::size_t>(s)] * next_value).transpose();
  return out;
}

double soft_value(const Eigen::Ref<const Vector>& q, const Eigen::Ref<const Vector>& mask, double tau) {
  double best_unmasked = -std::numeric_limits<double>::infinity();
  double best_masked = -std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < q.size(); ++a) {
    if (mask(a) > 0.0)
      best_masked = std::max(best_masked, q(a));
    else
      best_unmasked = std::max(best_unmasked, q(a));
  }
  double sum = 0.0;
  for (Eigen::Index a = 0; a < q.size(); ++a)
    if (mask(a) > 0.0) sum += std::exp(tau * (q(a) - best_masked));
  const double lse = best_masked + std::log(sum) / tau;
  return std::max(best_unmasked, lse);
}

Vector soft_values(const Matrix& q, const ToyMdp& mdp) {
  Vector v(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) v(s) = soft_value(q.row(s).transpose(), mdp.mask.row(s).transpose(), mdp.tau);
  return v;
}

Matrix soft_operator(const Matrix& q, const ToyMdp& mdp) {
  const Vector v = soft_values(q, mdp);
  Matrix out(mdp.n_states, mdp.n_actions);
  for (int s = 0; s < mdp.n_states; ++s)
    out.row(s) = mdp.reward.row(s) + mdp.gamma * (mdp.transition[static_cast<std::size_t>(s)] * v).transpose();
  return out;
}

Vector identity_values(const Matrix& q, const ToyMdp& mdp) {
  Vector out(mdp.n_states);
  for (int s = 0; s < mdp.n_states; ++s) {
    Vector qs = q.row(s).transpose();
    Vector c = mdp.mask.row(s).transpose();
    double best_unmasked = -std::numeric_limits<double>::infinity();
    double best_masked = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < mdp.n_actions; ++a)
      (c(a) > 0.0 ? best_masked : best_unmasked) = std::max(c(a) > 0.0 ? best_masked : best_unmasked, qs(a));
    Vector pi = Vector::Zero(mdp.n_actions);
    for (int a = 0; a < mdp.n_actions; ++a)
      if (c(a) > 0.0) pi(a) = std::exp(mdp.tau * (qs(a) - best_masked));
    pi /= pi.sum();
    const double lse = best_masked + std::log((c.array() * (mdp.tau * (qs.array() - best_masked)).exp()).sum()) / mdp.tau;
    if (best_unmasked > lse) {
      out(s) = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    const double w = c.dot(pi);
    const double h = masked_entropy(pi, c);
    out(s) = (h + mdp.tau * (c.array() * pi.array() * qs.array()).sum()) / (mdp.tau * w);
  }
  return out;
}

QStar solve_qstar(const ToyMdp& mdp, double tol, int max_iter) {
  validate_mdp(mdp);
  QStar out;
  out.q = Matrix::Zero(mdp.n_states, mdp.n_actions);
  for (int it = 1; it <= max_iter; ++it) {
    Matrix next = soft_operator(out.q, mdp);
    const double change = sup_norm(next - out.q);
    out.q = std::move(next);
    out.residuals.push_back(change);
    out.iterations = it;
    if (change < tol) {
      out.v = soft_values(out.q, mdp);
      return out;
    }
  }
  throw std::runtime_error("solve_qstar: no convergence within " + std::to_string(max_iter) + " sweeps");
}

void BoundReport::record(double lhs, double rhs, double tol) {
  ++checked;
  const double gap = lhs - rhs;
  max_slack = std::max(max_slack, gap);
  if (gap > tol || std::isnan(gap)) ++violations;
}

void BoundReport::merge(const BoundReport& other) {
  checked += other.checked;
  violations += other.violations;
  max_slack = std::max(max_slack, other.max_slack);
  if (!other.note.empty()) note = note.empty() ? other.note : note + "; " + other.note;
}

double entropy_bias(const ToyMdp& mdp) {
  return mdp.gamma / (1.0 - mdp.gamma) * std::log(mdp.max_mask_sum()) / mdp.tau;
}

BoundReport check_contraction(const ToyMdp& mdp, int trials, std::uint64_t seed) {
  validate_mdp(mdp);
  if (mdp.softmax_policy) throw std::invalid_argument("check_contraction: requires a fixed policy");
  BoundReport rep;
  rep.name = "contraction";
  Rng rng = make_rng(seed);
  const double scale = 1.0 / (1.0 - mdp.gamma);
  std::uniform_real_distribution<double> u(-scale, scale);
  double max_ratio = 0.0;
  for (int k = 0; k < trials; ++k) {
    Matrix a(mdp.n_states, mdp.n_actions), b(mdp.n_states, mdp.n_actions);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      a(i) = u(rng);
      b(i) = u(rng);
    }
    const double lhs = sup_norm(causal_bellman(a, mdp) - causal_bellman(b, mdp));
    const double dist = sup_norm(a - b);
    rep.record(lhs, mdp.gamma * dist, 1e-12);
    if (dist > 0.0) max_ratio = std::max(max_ratio, lhs / dist);
  }
  std::ostringstream note;
  note << "max ratio " << max_ratio << " (gamma " << mdp.gamma << ")";
  rep.note = note.str();
  return rep;
}

namespace {

Vector expected_max(const Matrix& q, const ToyMdp& mdp, int s) {
  Vector vmax = q.rowwise().maxCoeff();
  return mdp.transition[static_cast<std::size_t>(s)] * vmax;
}

}  // namespace

BoundReport check_qstar_bounds(const ToyMdp& mdp, const QStar& qstar) {
  BoundReport rep;
  rep.name = "qstar_bounds";
  const double bias = entropy_bias(mdp);
  for (int s = 0; s < mdp.n_states; ++s) {
    const Vector em = expected_max(qstar.q, mdp, s);
    for (int a = 0; a < mdp.n_actions; ++a) {
      const double lower = mdp.reward(s, a) + mdp.gamma * em(a);
      rep.record(lower, qstar.q(s, a), 1e-8);
      rep.record(qstar.q(s, a), lower + bias, 1e-8);
    }
  }
  rep.note = "Q taken as Q* on both sides";
  return rep;
}

BoundReport check_error_decay(const ToyMdp& mdp, const QStar& qstar, int t_max) {
  BoundReport rep;
  rep.name = "error_decay";
  const double bias = entropy_bias(mdp);
  Matrix q = Matrix::Zero(mdp.n_states, mdp.n_actions);
  const double d0 = (soft_values(q, mdp) - qstar.v).cwiseAbs().maxCoeff();
  const double e0 = sup_norm(q - qstar.q);
  double g = 1.0;
  for (int t = 1; t <= t_max; ++t) {
    q = soft_operator(q, mdp);
    g *= mdp.gamma;
    rep.record(sup_norm(q - qstar.q), g * d0 + bias, 1e-8);
  }
  std::ostringstream note;
  note << "t=0: error " << e0 << " vs bound " << d0 + bias;
  rep.note = note.str();
  return rep;
}

BoundReport check_error_cap(const ToyMdp& mdp, const QStar& qstar) {
  BoundReport rep;
  rep.name = "error_cap";
  const double gm = mdp.gamma;
  const double g = mdp.reward.cwiseAbs().maxCoeff();
  const double entropy_cap = gm * std::log(mdp.max_mask_sum()) / (mdp.tau * (1.0 - gm));
  const double cap3 = std::min(entropy_cap, 2.0 * g / std::pow(1.0 - gm, 3));
  const double cap2 = std::min(entropy_cap, 2.0 * g / std::pow(1.0 - gm, 2));
  // Limit of value iteration from zero.
  Matrix q = Matrix::Zero(mdp.n_states, mdp.n_actions);
  for (int t = 0; t < 100000; ++t) {
    Matrix next = soft_operator(q, mdp);
    const double change = sup_norm(next - q);
    q = std::move(next);
    if (change < 1e-13) break;
  }
  const double limit_err = sup_norm(q - qstar.q);
  rep.record(limit_err, cap3, 1e-8);
  rep.note = limit_err <= cap2 + 1e-8 ? "squared form holds" : "squared form fails";
  return rep;
}

int convergence_time_cap(double eps, double bias, double d0, double gamma) {
  if (!(eps > bias)) throw std::invalid_argument("convergence_time_cap: eps must exceed the bias floor");
  if (d0 <= 0.0 || gamma <= 0.0) return 1;
  const double steps = std::ceil(std::log((eps - bias) / d0) / std::log(gamma));
  return static_cast<int>(std::max(steps, 0.0)) + 1;
}

BoundReport check_convergence_time(const ToyMdp& mdp, const QStar& qstar, const std::vector<double>& eps_grid) {
  BoundReport rep;
  rep.name = "convergence_time";
  const double bias = entropy_bias(mdp);
  for (double eps : eps_grid)
    if (!(eps > bias))
      throw std::invalid_argument("check_convergence_time: eps " + std::to_string(eps) + " at or below bias floor " +
                                  std::to_string(bias));
  Matrix q0 = Matrix::Zero(mdp.n_states, mdp.n_actions);
  const double d0 = (soft_values(q0, mdp) - qstar.v).cwiseAbs().maxCoeff();
  std::vector<double> errors{sup_norm(q0 - qstar.q)};
  Matrix q = q0;
  const double eps_min = *std::min_element(eps_grid.begin(), eps_grid.end());
  while (errors.back() > eps_min && errors.size() < 200000) {
    q = soft_operator(q, mdp);
    errors.push_back(sup_norm(q - qstar.q));
  }
  for (double eps : eps_grid) {
    int t_emp = 0;
    while (t_emp < static_cast<int>(errors.size()) && errors[static_cast<std::size_t>(t_emp)] > eps) ++t_emp;
    rep.record(t_emp, convergence_time_cap(eps, bias, d0, mdp.gamma), 0.0);
  }
  return rep;
}

FiniteTimeTerms finite_time_rhs(int t, double alpha, double gamma, double omega_min, double omega_max, int n_actions,
                                double mask_sum, double tau) {
  if (!(omega_min > 0.0)) throw std::invalid_argument("finite_time_rhs: omega_min must be positive");
  const double A = n_actions;
  const double rho = 1.0 - alpha * omega_min * (1.0 - gamma);
  const double omg = 1.0 - gamma;
  FiniteTimeTerms r;
  r.t1 = 4.0 * alpha * gamma * omega_max * A / omg * t * std::pow(rho, t - 1);
  r.t2 = 2.0 * std::sqrt(6.0) * std::sqrt(alpha) * gamma * omega_max * std::sqrt(A) /
         (std::pow(omega_min, 1.5) * std::pow(omg, 2.5));
  double geo = 0.0;
  for (int i = 0; i < t; ++i) geo += std::pow(rho, t - i - 1);
  r.t3 = std::log(mask_sum) / tau *
         (2.0 * gamma * gamma * omega_max * omega_max / (omega_min * omega_min * omg * omg) + 1.0 / (omega_min * omg) +
          alpha * gamma * omega_max * std::sqrt(A) * geo);
  r.t4 = std::sqrt(std::pow(A, 2.0 / 3.0) * std::pow(2.0 / omg, 2) * std::pow(rho, 2.0 * t) +
                   6.0 * alpha * A / (omega_min * std::pow(omg, 3)));
  return r;
}

BoundReport check_finite_time_bound(const ToyMdp& mdp, const QStar& qstar, double alpha_lr,
                                    const std::vector<int>& sample_ts, int trials, std::uint64_t seed) {
  validate_mdp(mdp);
  if (trials < 2) throw std::invalid_argument("check_finite_time_bound: need at least two trials");
  const int S = mdp.n_states, A = mdp.n_actions;
  const int t_max = *std::max_element(sample_ts.begin(), sample_ts.end());
  std::vector<std::vector<double>> err(sample_ts.size());
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(S, A);

  for (int trial = 0; trial < trials; ++trial) {
    Rng rng = make_rng(derive_seed(seed, SeedTag::Theory, static_cast<std::uint64_t>(trial)));
    std::uniform_int_distribution<int> pick_s(0, S - 1), pick_a(0, A - 1);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    Matrix q = Matrix::Zero(S, A);
    Eigen::MatrixXd trial_counts = Eigen::MatrixXd::Zero(S, A);
    for (int t = 1; t <= t_max; ++t) {
      const int s = pick_s(rng), a = pick_a(rng);
      trial_counts(s, a) += 1.0;
      double r = u01(rng);
      int s2 = 0;
      const Matrix& p = mdp.transition[static_cast<std::size_t>(s)];
      while (s2 < S - 1 && r >= p(a, s2)) r -= p(a, s2++);
      const double target =
          mdp.reward(s, a) + mdp.gamma * soft_value(q.row(s2).transpose(), mdp.mask.row(s2).transpose(), mdp.tau);
      q(s, a) += alpha_lr * (target - q(s, a));
      for (std::size_t k = 0; k < sample_ts.size(); ++k)
        if (sample_ts[k] == t) err[k].push_back(sup_norm(q - qstar.q));
    }
    if (trial_counts.minCoeff() == 0.0) {
      Eigen::Index rs = 0, ra = 0;
      trial_counts.minCoeff(&rs, &ra);
      throw std::runtime_error("check_finite_time_bound: pair (" + std::to_string(rs) + ", " + std::to_string(ra) +
                               ") never sampled in trial " + std::to_string(trial) + "; omega_min = 0");
    }
    counts += trial_counts;
  }
  const double total = counts.sum();
  const double omega_min = counts.minCoeff() / total;
  const double omega_max = counts.maxCoeff() / total;

  BoundReport rep;
  rep.name = "finite_time";
  for (std::size_t k = 0; k < sample_ts.size(); ++k) {
    const auto& e = err[k];
    double mean = 0.0;
    for (double x : e) mean += x;
    mean /= static_cast<double>(e.size());
    double ss = 0.0;
    for (double x : e) ss += (x - mean) * (x - mean);
    const double se = std::sqrt(ss / static_cast<double>(e.size() - 1)) / std::sqrt(static_cast<double>(e.size()));
    const auto rhs = finite_time_rhs(sample_ts[k], alpha_lr, mdp.gamma, omega_min, omega_max, A, mdp.max_mask_sum(),
                                     mdp.tau);
    rep.record(mean + 2.0 * se, rhs.total(), 0.0);
  }
  std::ostringstream note;
  note << "omega in [" << omega_min << ", " << omega_max << "]";
  rep.note = note.str();
  return rep;
}

namespace {

Vector random_simplex(int n, Rng& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = -std::log(1.0 - u01(rng));
  return v / v.sum();
}

Vector random_mask(int n, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> pick(0, n - 1);
  Vector c(n);
  for (int i = 0; i < n; ++i) c(i) = coin(rng) ? 1.0 : 0.0;
  if (c.sum() == 0.0) c(pick(rng)) = 1.0;
  return c;
}

}  // namespace

BoundReport check_entropy_convexity(int trials, std::uint64_t seed) {
  BoundReport rep;
  rep.name = "entropy_convexity";
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<int> size(2, 8);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int k = 0; k < trials; ++k) {
    const int n = size(rng);
    const Vector c = random_mask(n, rng);
    const Vector a = random_simplex(n, rng), b = random_simplex(n, rng);
    const double lam = u01(rng);
    auto f = [&](const Vector& pi) { return -masked_entropy(pi, c); };
    rep.record(f(lam * a + (1.0 - lam) * b), lam * f(a) + (1.0 - lam) * f(b), 1e-10);
  }
  return rep;
}

BoundReport check_entropy_bound(int trials, std::uint64_t seed) {
  BoundReport rep;
  rep.name = "entropy_bound";
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<int> size(1, 8);
  for (int k = 0; k < trials; ++k) {
    const int n = size(rng);
    const Vector c = random_mask(n, rng);
    Vector pi = random_simplex(n, rng).cwiseProduct(c);
    pi /= pi.sum();
    const double h = masked_entropy(pi, c);
    rep.record(0.0, h, 1e-12);
    rep.record(h, std::log(c.sum()), 1e-12);
  }
  rep.note = "policies supported on masked actions";
  return rep;
}

std::vector<BoundReport> verify_suite(const VerifyOptions& opts) {
  BoundReport contraction, bounds, decay, cap, conv, finite;
  contraction.name = "contraction";
  bounds.name = "qstar_bounds";
  decay.name = "error_decay";
  cap.name = "error_cap";
  conv.name = "convergence_time";
  finite.name = "finite_time";
  int squared_fail = 0;
  for (int k = 0; k < opts.n_mdps; ++k) {
    const std::uint64_t seed = derive_seed(opts.seed, SeedTag::Theory, 1000 + static_cast<std::uint64_t>(k));
    Rng rng = make_rng(seed);
    std::uniform_int_distribution<int> ns(2, opts.max_states), na(2, opts.max_actions);
    std::uniform_real_distribution<double> gam(0.5, 0.95), tau(0.5, 5.0);
    ToyOptions to;
    to.gamma = gam(rng);
    to.tau = tau(rng);
    const ToyMdp mdp = random_toy_mdp(ns(rng), na(rng), seed, to);
    const QStar qs = solve_qstar(mdp);

    auto c = check_contraction(mdp, opts.contraction_trials, seed + 1);
    c.note.clear();
    contraction.merge(c);
    bounds.merge(check_qstar_bounds(mdp, qs));
    auto d = check_error_decay(mdp, qs, opts.decay_t_max);
    d.note.clear();
    decay.merge(d);
    auto cp = check_error_cap(mdp, qs);
    if (cp.note == "squared form fails") ++squared_fail;
    cp.note.clear();
    cap.merge(cp);

    const double bias = entropy_bias(mdp);
    const double d0 = (soft_values(Matrix::Zero(mdp.n_states, mdp.n_actions), mdp) - qs.v).cwiseAbs().maxCoeff();
    std::vector<double> eps;
    for (double f : {1.0, 0.5, 0.1, 1e-2, 1e-4, 1e-8}) eps.push_back(bias + f * std::max(d0, 1e-3));
    conv.merge(check_convergence_time(mdp, qs, eps));

    auto ft = check_finite_time_bound(mdp, qs, opts.finite_alpha, opts.finite_ts, opts.finite_trials, seed + 2);
    ft.note.clear();
    finite.merge(ft);
  }
  bounds.note = "Q taken as Q* on both sides";
  cap.note = "squared form fails on " + std::to_string(squared_fail) + " of " + std::to_string(opts.n_mdps);
  std::vector<BoundReport> out{contraction, bounds, decay, cap, conv, finite};
  out.push_back(check_entropy_convexity(opts.fuzz_trials, derive_seed(opts.seed, SeedTag::Theory, 7)));
  out.push_back(check_entropy_bound(opts.fuzz_trials, derive_seed(opts.seed, SeedTag::Theory, 8)));
  return out;
}

}  // namespace causaldq::theory

#pragma once

#include "causaldq/discovery.hpp"
#include "causaldq/types.hpp"

namespace causaldq::monitor {

/// Exponentially weighted Bayesian tracker of the stream mean under
/// partial observation.
struct MonitorState {
  Vector mu;
  Matrix precision;  // V^{-1}
  Matrix sigma;      // in-control observation covariance
  double lambda = 0.1;
  int step = 0;

  int p() const { return static_cast<int>(mu.size()); }
};

/// mu = 0, precision = I. Throws if sigma is not SPD or lambda is outside [0, 1).
MonitorState init_monitor(int p, const Matrix& sigma, double lambda);

/// One update with the entries of x at `selected` (x is a p-vector; other
/// entries are ignored).
MonitorState update_monitor(const MonitorState& state, const Vector& x, const IndexSet& selected);

struct Contributions {
  Vector per_var;  // Lambda_i = mu_i * (V^{-1} mu)_i
  double total = 0.0;
};

Contributions local_contributions(const MonitorState& state);

/// phi_i = mu_i * sum_j eta_ij mu_j.
Vector causal_statistic(const MonitorState& state, const discovery::CpeMatrix& cpe);

/// Sets selected entries to 0 and increments the rest.
Eigen::VectorXi update_staleness(const Eigen::VectorXi& staleness, const IndexSet& selected);

struct CausalState {
  Vector lam;
  Vector phi;
  Vector staleness;

  int p() const { return static_cast<int>(lam.size()); }
  static CausalState zeros(int p);
  /// Rows (lam, phi, staleness) flattened row-major, length 3p.
  Vector flatten() const;
  static CausalState unflatten(const Vector& flat);
};

CausalState assemble_state(const Vector& lam, const Vector& phi, const Eigen::VectorXi& staleness);

/// Sum of lam over `selected`.
double selected_statistic(const Vector& lam, const IndexSet& selected);

/// Upper 1 - zeta quantile of chi-square with `dof` degrees of freedom.
double alarm_threshold(int dof, double zeta);

bool alarm_check(double lam_selected_sum, int dof, double zeta);

}  // namespace causaldq::monitor

#include "causaldq/monitor.hpp"

#include <cmath>
#include <stdexcept>

#include "causaldq/chi_square.hpp"

namespace causaldq::monitor {

MonitorState init_monitor(int p, const Matrix& sigma, double lambda) {
  if (p < 1) throw std::invalid_argument("init_monitor: p must be >= 1");
  if (!(lambda >= 0.0 && lambda < 1.0)) throw std::invalid_argument("init_monitor: lambda must lie in [0, 1)");
  if (sigma.rows() != p || sigma.cols() != p) throw std::invalid_argument("init_monitor: sigma must be p x p");
  if (!sigma.isApprox(sigma.transpose(), 1e-12))
    throw std::invalid_argument("init_monitor: sigma must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 0.0))
    throw std::invalid_argument("init_monitor: sigma must be positive definite");
  MonitorState s;
  s.mu = Vector::Zero(p);
  s.precision = Matrix::Identity(p, p);
  s.sigma = sigma;
  s.lambda = lambda;
  return s;
}

MonitorState update_monitor(const MonitorState& state, const Vector& x, const IndexSet& selected) {
  const int p = state.p();
  if (x.size() != p) throw std::invalid_argument("update_monitor: observation must be a p-vector");
  const int m = static_cast<int>(selected.size());
  for (int k = 0; k < m; ++k) {
    if (selected[k] < 0 || selected[k] >= p) throw std::invalid_argument("update_monitor: index out of range");
    if (k > 0 && selected[k] <= selected[k - 1])
      throw std::invalid_argument("update_monitor: selection must be sorted and distinct");
  }

  const double keep = 1.0 - state.lambda;
  MonitorState next = state;
  Vector info = keep * (state.precision * state.mu);
  next.precision *= keep;

  if (m > 0) {
    Matrix sigma_s(m, m);
    Vector x_s(m);
    for (int a = 0; a < m; ++a) {
      x_s(a) = x(selected[a]);
      for (int b = 0; b < m; ++b) sigma_s(a, b) = state.sigma(selected[a], selected[b]);
    }
    Eigen::LLT<Matrix> llt(sigma_s);
    if (llt.info() != Eigen::Success) throw std::runtime_error("update_monitor: observed covariance not SPD");
    Matrix sigma_s_inv = llt.solve(Matrix::Identity(m, m));
    Vector w = sigma_s_inv * x_s;
    for (int a = 0; a < m; ++a) {
      info(selected[a]) += w(a);
      for (int b = 0; b < m; ++b) next.precision(selected[a], selected[b]) += sigma_s_inv(a, b);
    }
  }
  Eigen::LLT<Matrix> llt(next.precision);
  if (llt.info() != Eigen::Success) throw std::runtime_error("update_monitor: precision lost definiteness");
  next.mu = llt.solve(info);
  next.step = state.step + 1;
  return next;
}

Contributions local_contributions(const MonitorState& state) {
  Contributions c;
  c.per_var = state.mu.cwiseProduct(state.precision * state.mu);
  c.total = c.per_var.sum();
  return c;
}

Vector causal_statistic(const MonitorState& state, const discovery::CpeMatrix& cpe) {
  if (cpe.p() != state.p()) throw std::invalid_argument("causal_statistic: CPE size mismatch");
  return state.mu.cwiseProduct(cpe.eta * state.mu);
}

Eigen::VectorXi update_staleness(const Eigen::VectorXi& staleness, const IndexSet& selected) {
  Eigen::VectorXi next = staleness.array() + 1;
  for (int i : selected) {
    if (i < 0 || i >= next.size()) throw std::invalid_argument("update_staleness: index out of range");
    next(i) = 0;
  }
  return next;
}

CausalState CausalState::zeros(int p) { return {Vector::Zero(p), Vector::Zero(p), Vector::Zero(p)}; }

Vector CausalState::flatten() const {
  const int n = p();
  Vector out(3 * n);
  out << lam, phi, staleness;
  return out;
}

CausalState CausalState::unflatten(const Vector& flat) {
  if (flat.size() % 3 != 0) throw std::invalid_argument("CausalState::unflatten: length must be 3p");
  const Eigen::Index n = flat.size() / 3;
  return {flat.segment(0, n), flat.segment(n, n), flat.segment(2 * n, n)};
}

CausalState assemble_state(const Vector& lam, const Vector& phi, const Eigen::VectorXi& staleness) {
  if (phi.size() != lam.size() || staleness.size() != lam.size())
    throw std::invalid_argument("assemble_state: rows differ in length");
  return {lam, phi, staleness.cast<double>()};
}

double selected_statistic(const Vector& lam, const IndexSet& selected) {
  double s = 0.0;
  for (int i : selected) s += lam(i);
  return s;
}

double alarm_threshold(int dof, double zeta) {
  if (dof < 1) throw std::invalid_argument("alarm_threshold: dof must be >= 1");
  if (!(zeta > 0.0 && zeta < 1.0)) throw std::invalid_argument("alarm_threshold: zeta must lie in (0, 1)");
  return stats::chi_square_quantile(dof, 1.0 - zeta);
}

bool alarm_check(double lam_selected_sum, int dof, double zeta) {
  return lam_selected_sum > alarm_threshold(dof, zeta);
}

}  // namespace causaldq::monitor

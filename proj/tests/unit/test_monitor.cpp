#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "causaldq/monitor.hpp"
#include "causaldq/rng.hpp"
#include "oracles.hpp"

using namespace causaldq;
using namespace causaldq::monitor;

namespace {

Matrix random_spd(int p, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Matrix a(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) a(i, j) = z(rng);
  return a * a.transpose() / p + 0.5 * Matrix::Identity(p, p);
}

IndexSet random_subset(int p, int m, Rng& rng) {
  std::vector<int> idx(p);
  for (int i = 0; i < p; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  IndexSet s(idx.begin(), idx.begin() + m);
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

TEST(Monitor, InitBaseCase) {
  auto s = init_monitor(3, Matrix::Identity(3, 3), 0.1);
  EXPECT_EQ(s.mu, Vector::Zero(3));
  EXPECT_EQ(s.precision, Matrix::Identity(3, 3));
  EXPECT_THROW(init_monitor(3, Matrix::Identity(3, 3), 1.0), std::invalid_argument);
  Matrix bad = Matrix::Identity(2, 2);
  bad(1, 1) = -1.0;
  EXPECT_THROW(init_monitor(2, bad, 0.1), std::invalid_argument);
}

TEST(Monitor, OneStepByHand) {
  auto s = init_monitor(1, Matrix::Identity(1, 1), 0.0);
  Vector x(1);
  x << 1.0;
  s = update_monitor(s, x, {0});
  EXPECT_DOUBLE_EQ(s.precision(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(s.mu(0), 0.5);
  EXPECT_DOUBLE_EQ(local_contributions(s).total, 0.5);
}

TEST(Monitor, ZeroObservationsStayAtZero) {
  auto s = init_monitor(4, Matrix::Identity(4, 4), 0.2);
  for (int t = 0; t < 50; ++t) s = update_monitor(s, Vector::Zero(4), {0, 2});
  EXPECT_EQ(s.mu, Vector::Zero(4));
}

TEST(Monitor, MatchesHistoryReplay) {
  Rng rng = make_rng(42);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_int_distribution<int> pdist(1, 20);
  std::uniform_real_distribution<double> ldist(0.0, 0.3);
  for (int trial = 0; trial < 6; ++trial) {
    const int p = pdist(rng);
    const Matrix sigma = random_spd(p, rng);
    const double lambda = trial == 0 ? 0.0 : ldist(rng);
    const bool full = trial % 2 == 0;
    auto s = init_monitor(p, sigma, lambda);
    std::vector<Vector> xs;
    std::vector<IndexSet> sels;
    std::uniform_int_distribution<int> mdist(1, p);
    for (int t = 0; t < 1000; ++t) {
      Vector x(p);
      for (int i = 0; i < p; ++i) x(i) = z(rng) + 0.3;
      IndexSet sel = full ? random_subset(p, p, rng) : random_subset(p, mdist(rng), rng);
      s = update_monitor(s, x, sel);
      xs.push_back(x);
      sels.push_back(sel);
      if (t % 97 == 0 || t == 999) {
        auto r = oracle::replay_monitor(xs, sels, sigma, lambda);
        const double scale = std::max(1.0, r.precision.cwiseAbs().maxCoeff());
        EXPECT_LT((s.precision - r.precision).cwiseAbs().maxCoeff() / scale, 1e-10);
        EXPECT_LT((s.mu - r.mu).cwiseAbs().maxCoeff(), 1e-10);
      }
    }
  }
}

TEST(Monitor, PrecisionStaysSpd) {
  Rng rng = make_rng(3);
  std::normal_distribution<double> z(0.0, 1.0);
  const int p = 6;
  auto s = init_monitor(p, random_spd(p, rng), 0.3);
  std::uniform_int_distribution<int> mdist(0, p);
  for (int t = 0; t < 100000; ++t) {
    Vector x(p);
    for (int i = 0; i < p; ++i) x(i) = 3.0 * z(rng);
    s = update_monitor(s, x, random_subset(p, mdist(rng), rng));
    if (t % 1000 == 0) {
      Eigen::SelfAdjointEigenSolver<Matrix> eig(s.precision, Eigen::EigenvaluesOnly);
      ASSERT_GT(eig.eigenvalues().minCoeff(), 0.0) << "step " << t;
    }
  }
}

TEST(Contributions, HandExampleAndSumIdentity) {
  auto s = init_monitor(2, Matrix::Identity(2, 2), 0.1);
  s.mu << 1, 2;
  s.precision << 2, 0, 0, 3;
  auto c = local_contributions(s);
  EXPECT_EQ(c.per_var, Eigen::Vector2d(2, 12));
  EXPECT_EQ(c.total, 14.0);

  Rng rng = make_rng(8);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto r = init_monitor(5, Matrix::Identity(5, 5), 0.1);
    r.precision = random_spd(5, rng);
    for (int i = 0; i < 5; ++i) r.mu(i) = z(rng);
    auto cc = local_contributions(r);
    const double quad = r.mu.dot(r.precision * r.mu);
    EXPECT_NEAR(cc.per_var.sum(), quad, 1e-12 * std::max(1.0, std::fabs(quad)));
  }
}

TEST(CausalStatistic, IdentityAndHandExample) {
  auto s = init_monitor(2, Matrix::Identity(2, 2), 0.1);
  EXPECT_EQ(causal_statistic(s, discovery::identity_cpe(2)), Vector::Zero(2));
  s.mu << 1, 2;
  EXPECT_EQ(causal_statistic(s, discovery::identity_cpe(2)), Eigen::Vector2d(1, 4));
  discovery::CpeMatrix eta{Matrix::Identity(2, 2)};
  eta.eta(0, 1) = 0.5;
  EXPECT_EQ(causal_statistic(s, eta), Eigen::Vector2d(2, 4));
}

TEST(Staleness, Rules) {
  Eigen::VectorXi y(3);
  y << 2, 0, 5;
  Eigen::VectorXi want(3);
  want << 3, 0, 6;
  EXPECT_EQ(update_staleness(y, {1}), want);
  EXPECT_EQ(update_staleness(y, {0, 1, 2}), Eigen::VectorXi::Zero(3));
  Eigen::VectorXi z = Eigen::VectorXi::Zero(4);
  for (int k = 0; k < 7; ++k) z = update_staleness(z, {});
  EXPECT_EQ(z, Eigen::VectorXi::Constant(4, 7));
}

TEST(CausalStateLayout, FlattenRowMajor) {
  EXPECT_EQ(CausalState::zeros(3).flatten(), Vector::Zero(9));
  Vector lam(10), phi(10);
  Eigen::VectorXi y(10);
  for (int i = 0; i < 10; ++i) {
    lam(i) = i;
    phi(i) = 10 + i;
    y(i) = 20 + i;
  }
  auto st = assemble_state(lam, phi, y);
  Vector flat = st.flatten();
  ASSERT_EQ(flat.size(), 30);
  for (int i = 0; i < 30; ++i) EXPECT_EQ(flat(i), i);
  auto back = CausalState::unflatten(flat);
  EXPECT_EQ(back.lam, lam);
  EXPECT_EQ(back.phi, phi);
}

TEST(Monitor, NullStatisticMatchesChiSquareMean) {
  // delta = 0, full observation, lambda = 0: Lambda(n) is approximately chi-square with p dof.
  const int p = 5, n = 200, reps = 400;
  Rng rng = make_rng(17);
  std::normal_distribution<double> z(0.0, 1.0);
  double total = 0.0;
  for (int r = 0; r < reps; ++r) {
    auto s = init_monitor(p, Matrix::Identity(p, p), 0.0);
    for (int t = 0; t < n; ++t) {
      Vector x(p);
      for (int i = 0; i < p; ++i) x(i) = z(rng);
      s = update_monitor(s, x, {0, 1, 2, 3, 4});
    }
    total += local_contributions(s).total;
  }
  EXPECT_NEAR(total / reps, p, 0.1 * p);
}

TEST(Monitor, SelectedStatistic) {
  Vector lam(4);
  lam << 1, 2, 3, 4;
  EXPECT_EQ(selected_statistic(lam, {0, 3}), 5.0);
  EXPECT_EQ(selected_statistic(lam, {}), 0.0);
}

TEST(Monitor, RejectsBadSelection) {
  auto s = init_monitor(3, Matrix::Identity(3, 3), 0.1);
  EXPECT_THROW(update_monitor(s, Vector::Zero(3), {2, 1}), std::invalid_argument);
  EXPECT_THROW(update_monitor(s, Vector::Zero(3), {3}), std::invalid_argument);
  EXPECT_THROW(update_monitor(s, Vector::Zero(2), {0}), std::invalid_argument);
}

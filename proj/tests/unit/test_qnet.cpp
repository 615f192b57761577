#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "causaldq/qnet.hpp"
#include "causaldq/rng.hpp"
#include "oracles.hpp"

using namespace causaldq;
using namespace causaldq::qnet;

namespace {

std::vector<Transition> random_batch(int p, int m, int n, Rng& rng, bool with_mask) {
  std::normal_distribution<double> z(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<Transition> out;
  for (int b = 0; b < n; ++b) {
    Transition t;
    t.state = Vector(3 * p);
    t.next_state = Vector(3 * p);
    for (int i = 0; i < 3 * p; ++i) {
      t.state(i) = z(rng);
      t.next_state(i) = z(rng);
    }
    std::vector<int> idx(p);
    for (int i = 0; i < p; ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    t.action.assign(idx.begin(), idx.begin() + m);
    std::sort(t.action.begin(), t.action.end());
    t.reward = z(rng);
    t.causal_mask = Vector::Zero(p);
    if (with_mask)
      for (int i = 0; i < p; ++i) t.causal_mask(i) = coin(rng) ? 1.0 : 0.0;
    out.push_back(t);
  }
  return out;
}

/// Max relative error between the analytic gradient and central differences of the oracle loss.
double gradient_error(const NetParams& online, const NetParams& target, const std::vector<Transition>& batch,
                      const LossOptions& opts) {
  auto lg = loss_and_grad(online, target, std::span<const Transition>(batch), opts);
  const double h = 1e-5;
  double worst = 0.0;
  NetParams probe = online;
  for (std::size_t l = 0; l < online.layers.size(); ++l) {
    auto visit = [&](double& slot, double analytic) {
      const double keep = slot;
      slot = keep + h;
      const double up = oracle::td_loss(probe, target, batch, opts.alpha_ent, opts.tau, opts.gamma);
      slot = keep - h;
      const double down = oracle::td_loss(probe, target, batch, opts.alpha_ent, opts.tau, opts.gamma);
      slot = keep;
      const double fd = (up - down) / (2 * h);
      worst = std::max(worst, std::fabs(fd - analytic) / std::max(1e-3, std::fabs(fd) + std::fabs(analytic)));
    };
    for (Eigen::Index i = 0; i < probe.layers[l].weight.size(); ++i)
      visit(probe.layers[l].weight.data()[i], lg.grad.layers[l].weight.data()[i]);
    for (Eigen::Index i = 0; i < probe.layers[l].bias.size(); ++i)
      visit(probe.layers[l].bias.data()[i], lg.grad.layers[l].bias.data()[i]);
  }
  return worst;
}

}  // namespace

TEST(Forward, ZeroNetGivesZero) {
  auto net = zeros_like(init_params({9, 4, 3}, 1));
  EXPECT_EQ(forward(net, Vector::Ones(9)), Vector::Zero(3));
}

TEST(Forward, SingleLayerIsAffine) {
  auto net = init_params({6, 2}, 3);
  Vector x(6);
  x << 1, -2, 0.5, 3, 0, -1;
  Vector want = net.layers[0].weight * x + net.layers[0].bias;
  auto got = forward(net, x);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(got(i), want(i), 1e-14);
  auto o = oracle::mlp(net, oracle::to_std(x));
  EXPECT_NEAR(got(1), o[1], 1e-14);
}

TEST(Forward, MatchesOracleAndBatch) {
  auto net = init_params({30, 16, 16, 10}, 5);
  Rng rng = make_rng(6);
  std::normal_distribution<double> z;
  Matrix xs(30, 8);
  for (Eigen::Index i = 0; i < xs.size(); ++i) xs(i) = z(rng);
  Matrix qb = forward_batch(net, xs);
  for (int c = 0; c < 8; ++c) {
    Vector q = forward(net, xs.col(c));
    ASSERT_EQ(q.size(), 10);
    auto o = oracle::mlp(net, oracle::to_std(xs.col(c)));
    for (int i = 0; i < 10; ++i) {
      EXPECT_NEAR(q(i), o[i], 1e-12);
      EXPECT_NEAR(qb(i, c), q(i), 1e-12);
    }
  }
  EXPECT_THROW(forward(net, Vector::Zero(29)), std::invalid_argument);
}

TEST(Boltzmann, ClosedFormAndLimits) {
  auto u = boltzmann(Vector::Constant(4, 2.5), 0.7);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(u.probs(i), 0.25, 1e-15);
  auto two = boltzmann(Eigen::Vector2d(1, 2), 1.0);
  EXPECT_NEAR(two.probs(0), 0.2689, 1e-4);
  EXPECT_NEAR(two.probs(1), 0.7311, 1e-4);
  auto cold = boltzmann(Eigen::Vector3d(0.1, 0.3, 0.2), 1e-6);
  EXPECT_GT(cold.probs(1), 0.999);
  auto big = boltzmann(Eigen::Vector2d(1e6, -1e6), 0.5);
  EXPECT_TRUE(big.probs.allFinite());
}

TEST(Boltzmann, ShiftInvariant) {
  Rng rng = make_rng(2);
  std::normal_distribution<double> z(0.0, 3.0);
  for (int k = 0; k < 200; ++k) {
    Vector q(7);
    for (int i = 0; i < 7; ++i) q(i) = z(rng);
    const double c = z(rng) * 10;
    auto a = boltzmann(q, 0.8).probs;
    auto b = boltzmann((q.array() + c).matrix(), 0.8).probs;
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(a.sum(), 1.0, 1e-10);
  }
}

TEST(CausalEntropy, Values) {
  auto u = boltzmann(Vector::Zero(5), 1.0);
  EXPECT_EQ(causal_entropy(u, Vector::Zero(5)), 0.0);
  EXPECT_NEAR(causal_entropy(u, Vector::Ones(5)), std::log(5.0), 1e-14);
  PolicyDistribution half{Eigen::Vector2d(0.5, 0.5), 1.0};
  EXPECT_NEAR(causal_entropy(half, Eigen::Vector2d(1, 0)), 0.3466, 1e-4);
}

TEST(CausalEntropy, BoundsForMaskedSupport) {
  // 0 <= H_c <= ln(sum mask) holds when pi puts its mass on masked entries, or when sum mask >= 3.
  Rng rng = make_rng(4);
  std::normal_distribution<double> z(0.0, 2.0);
  std::bernoulli_distribution coin(0.5);
  for (int k = 0; k < 5000; ++k) {
    const int p = 2 + k % 7;
    Vector q(p), mask(p);
    for (int i = 0; i < p; ++i) {
      q(i) = z(rng);
      mask(i) = coin(rng) ? 1.0 : 0.0;
    }
    const double c = mask.sum();
    if (c == 0.0) continue;
    auto pi = boltzmann(q, 1.0);
    const double h = causal_entropy(pi, mask);
    EXPECT_GE(h, 0.0);
    if (c >= 3.0) EXPECT_LE(h, std::log(c) + 1e-12);
    Vector qm = q;
    for (int i = 0; i < p; ++i)
      if (mask(i) == 0.0) qm(i) = -1e3;
    EXPECT_LE(causal_entropy(boltzmann(qm, 1.0), mask), std::log(c) + 1e-12);
  }
}

TEST(CausalEntropy, LogBoundFailsForSmallMaskOutsideSupport) {
  // One masked entry with pi = 1/e there gives H_c = 1/e > ln 1 = 0.
  PolicyDistribution pi{Eigen::Vector2d(std::exp(-1.0), 1.0 - std::exp(-1.0)), 1.0};
  EXPECT_NEAR(causal_entropy(pi, Eigen::Vector2d(1, 0)), std::exp(-1.0), 1e-15);
  EXPECT_GT(causal_entropy(pi, Eigen::Vector2d(1, 0)), std::log(1.0));
}

TEST(CausalEntropy, GradientMatchesClosedForm) {
  // dH/dq_j = -(1/tau) sum_i C_i pi_i (ln pi_i + 1)(delta_ij - pi_j).
  Rng rng = make_rng(12);
  std::normal_distribution<double> z;
  for (int k = 0; k < 100; ++k) {
    const int p = 2 + k % 6;
    Vector q(p), mask(p);
    for (int i = 0; i < p; ++i) {
      q(i) = z(rng);
      mask(i) = (k + i) % 2;
    }
    const double tau = 0.3 + 0.1 * (k % 5);
    auto pi = boltzmann(q, tau);
    Vector g = causal_entropy_grad(pi, mask);
    for (int j = 0; j < p; ++j) {
      double want = 0.0;
      for (int i = 0; i < p; ++i)
        want -= mask(i) * pi.probs(i) * (std::log(pi.probs(i)) + 1.0) * ((i == j ? 1.0 : 0.0) - pi.probs(j)) / tau;
      EXPECT_NEAR(g(j), want, 1e-12);
    }
  }
}

TEST(TdTarget, Substitution) {
  EXPECT_NEAR(td_target(1.0, 0.9, 2.0, 0.5), 3.3, 1e-15);
  EXPECT_EQ(td_target(0.0, 0.0, 123.0, 0.0), 0.0);
  EXPECT_EQ(td_target(0.5, 0.8, 1.5, 0.0), 0.5 + 0.8 * 1.5);
}

TEST(Loss, ZeroNetZeroLoss) {
  auto net = zeros_like(init_params({9, 5, 3}, 1));
  Rng rng = make_rng(1);
  auto batch = random_batch(3, 2, 4, rng, false);
  for (auto& t : batch) t.reward = 0.0;
  auto lg = loss_and_grad(net, net, std::span<const Transition>(batch), {0.0, 1.0, 0.0});
  EXPECT_EQ(lg.loss, 0.0);
  for (const auto& l : lg.grad.layers) {
    EXPECT_EQ(l.weight.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(l.bias.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Loss, MatchesOracleValue) {
  Rng rng = make_rng(21);
  for (int k = 0; k < 20; ++k) {
    const int p = 3 + k % 4;
    auto online = init_params({3 * p, 8, 8, p}, 100 + k);
    auto target = init_params({3 * p, 8, 8, p}, 200 + k);
    auto batch = random_batch(p, 1 + k % p, 5, rng, true);
    LossOptions o{0.1, 0.7, 0.9};
    auto lg = loss_and_grad(online, target, std::span<const Transition>(batch), o);
    EXPECT_NEAR(lg.loss, oracle::td_loss(online, target, batch, o.alpha_ent, o.tau, o.gamma), 1e-10);
  }
}

TEST(Loss, GradientMatchesFiniteDifferences) {
  Rng rng = make_rng(31);
  for (int k = 0; k < 30; ++k) {
    const int p = std::vector<int>{3, 5, 10}[k % 3];
    auto online = init_params({3 * p, 6, 5, p}, 300 + k);
    auto target = init_params({3 * p, 6, 5, p}, 400 + k);
    auto batch = random_batch(p, 1 + k % p, 3, rng, true);
    EXPECT_LT(gradient_error(online, target, batch, {0.2, 0.5 + 0.1 * (k % 4), 0.9}), 1e-4) << "case " << k;
  }
}

TEST(Loss, DuplicatedBatchSameLoss) {
  Rng rng = make_rng(41);
  auto online = init_params({12, 7, 4}, 1);
  auto target = init_params({12, 7, 4}, 2);
  auto batch = random_batch(4, 2, 6, rng, true);
  auto twice = batch;
  twice.insert(twice.end(), batch.begin(), batch.end());
  LossOptions o{0.05, 1.0, 0.9};
  auto a = loss_and_grad(online, target, std::span<const Transition>(batch), o);
  auto b = loss_and_grad(online, target, std::span<const Transition>(twice), o);
  EXPECT_NEAR(a.loss, b.loss, 1e-12);
}

TEST(Loss, ZeroMaskIgnoresAlpha) {
  Rng rng = make_rng(51);
  auto online = init_params({15, 6, 5}, 3);
  auto target = init_params({15, 6, 5}, 4);
  auto batch = random_batch(5, 3, 8, rng, false);
  auto a = loss_and_grad(online, target, std::span<const Transition>(batch), {0.0, 1.0, 0.9});
  auto b = loss_and_grad(online, target, std::span<const Transition>(batch), {0.7, 0.3, 0.9});
  EXPECT_EQ(a.loss, b.loss);
  for (std::size_t l = 0; l < a.grad.layers.size(); ++l) EXPECT_EQ(a.grad.layers[l].weight, b.grad.layers[l].weight);
}

TEST(Loss, TargetPerturbationKeepsSelection) {
  // The online net alone picks a*: changing the target net changes the value but not which heads are read.
  Rng rng = make_rng(61);
  auto online = init_params({12, 8, 4}, 5);
  auto target = init_params({12, 8, 4}, 6);
  auto batch = random_batch(4, 2, 1, rng, false);
  batch[0].reward = 0.0;
  const IndexSet best = select_top_m(forward(online, batch[0].next_state), 2);
  auto perturbed = target;
  perturbed.layers.back().bias(best[0]) += 1.0;
  LossOptions o{0.0, 1.0, 0.9};
  auto base = loss_and_grad(online, target, std::span<const Transition>(batch), o);
  auto moved = loss_and_grad(online, perturbed, std::span<const Transition>(batch), o);
  Vector q = forward(online, batch[0].state);
  const double qsa = (q(batch[0].action[0]) + q(batch[0].action[1])) / 2;
  Vector qt = forward(target, batch[0].next_state);
  Vector qp = forward(perturbed, batch[0].next_state);
  const double v0 = 0.9 * (qt(best[0]) + qt(best[1])) / 2, v1 = 0.9 * (qp(best[0]) + qp(best[1])) / 2;
  EXPECT_NEAR(base.loss, (v0 - qsa) * (v0 - qsa), 1e-12);
  EXPECT_NEAR(moved.loss, (v1 - qsa) * (v1 - qsa), 1e-12);
}

TEST(Loss, RejectsMalformed) {
  auto net = init_params({6, 3, 2}, 1);
  std::vector<Transition> empty;
  EXPECT_THROW(loss_and_grad(net, net, std::span<const Transition>(empty), {}), std::invalid_argument);
  Rng rng = make_rng(1);
  auto batch = random_batch(2, 1, 1, rng, false);
  batch[0].action = {1, 1};
  EXPECT_THROW(loss_and_grad(net, net, std::span<const Transition>(batch), {}), std::invalid_argument);
}

TEST(Loss, NonFiniteReportsIndex) {
  auto net = init_params({6, 3, 2}, 1);
  Rng rng = make_rng(1);
  auto batch = random_batch(2, 1, 3, rng, false);
  batch[2].reward = std::numeric_limits<double>::quiet_NaN();
  try {
    loss_and_grad(net, net, std::span<const Transition>(batch), {});
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("batch index 2"), std::string::npos);
  }
}

TEST(Sgd, Steps) {
  auto net = init_params({3, 2}, 1);
  auto same = sgd_step(net, zeros_like(net), 0.1);
  EXPECT_EQ(same.layers[0].weight, net.layers[0].weight);
  // f(theta) = theta^2 at theta = 1, lr 0.1 -> 0.8.
  NetParams one;
  one.layers.push_back({Matrix::Constant(1, 1, 1.0), Vector::Zero(1)});
  NetParams g = zeros_like(one);
  g.layers[0].weight(0, 0) = 2.0;
  EXPECT_DOUBLE_EQ(sgd_step(one, g, 0.1).layers[0].weight(0, 0), 0.8);
}

TEST(Sgd, ConvexQuadraticDescends) {
  // Fit a linear layer to a fixed target with the TD loss at gamma = 0 and no entropy.
  Rng rng = make_rng(71);
  auto net = init_params({6, 2}, 9);
  auto batch = random_batch(2, 1, 16, rng, false);
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 100; ++it) {
    auto lg = loss_and_grad(net, net, std::span<const Transition>(batch), {0.0, 1.0, 0.0});
    EXPECT_LE(lg.loss, prev + 1e-12);
    prev = lg.loss;
    sgd_step_inplace(net, lg.grad, 0.01);
  }
}

TEST(Sync, HardAndPolyak) {
  auto a = init_params({4, 3, 2}, 1);
  auto b = init_params({4, 3, 2}, 2);
  EXPECT_EQ(sync_target(a, b, {SyncMode::Hard}).layers[1].weight, a.layers[1].weight);
  EXPECT_EQ(sync_target(a, b, {SyncMode::Polyak, 1.0}).layers[0].weight, a.layers[0].weight);
  EXPECT_EQ(sync_target(a, b, {SyncMode::Polyak, 0.0}).layers[0].weight, b.layers[0].weight);
  auto mid = sync_target(a, b, {SyncMode::Polyak, 0.25});
  EXPECT_NEAR(mid.layers[0].bias(0), 0.25 * a.layers[0].bias(0) + 0.75 * b.layers[0].bias(0), 1e-15);
}

TEST(TopM, BasicsAndTieRule) {
  EXPECT_EQ(select_top_m(Eigen::Vector3d(3, 1, 3), 2), (IndexSet{0, 2}));
  EXPECT_EQ(select_top_m(Eigen::Vector3d(5, 5, 5), 2), (IndexSet{0, 1}));
  EXPECT_EQ(select_top_m(Eigen::Vector4d(1, 2, 3, 4), 4), (IndexSet{0, 1, 2, 3}));
  EXPECT_THROW(select_top_m(Eigen::Vector3d(1, 2, 3), 0), std::invalid_argument);
  EXPECT_THROW(select_top_m(Eigen::Vector3d(1, 2, 3), 4), std::invalid_argument);
}

TEST(TopM, MatchesEnumeration) {
  Rng rng = make_rng(81);
  std::uniform_int_distribution<int> small(0, 3);
  std::normal_distribution<double> z;
  for (int p = 1; p <= 9; ++p)
    for (int m = 1; m <= p; ++m)
      for (int rep = 0; rep < 5; ++rep) {
        std::vector<double> q(p);
        for (auto& v : q) v = rep % 2 ? small(rng) : z(rng);
        Vector qv = Eigen::Map<Vector>(q.data(), p);
        EXPECT_EQ(select_top_m(qv, m), oracle::best_subset(q, m));
      }
}

TEST(TopM, PermutationEquivariant) {
  Rng rng = make_rng(91);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 100; ++rep) {
    Vector q(8);
    for (int i = 0; i < 8; ++i) q(i) = z(rng);
    std::vector<int> perm(8);
    for (int i = 0; i < 8; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    Vector qp(8);
    for (int i = 0; i < 8; ++i) qp(perm[i]) = q(i);
    IndexSet a = select_top_m(q, 3), b = select_top_m(qp, 3), mapped;
    for (int i : a) mapped.push_back(perm[i]);
    std::sort(mapped.begin(), mapped.end());
    EXPECT_EQ(mapped, b);
  }
}

TEST(Sampling, DistinctAndProportional) {
  Rng rng = make_rng(101);
  Vector probs(4);
  probs << 0.1, 0.2, 0.3, 0.4;
  PolicyDistribution pi{probs, 1.0};
  std::vector<int> first(4, 0);
  for (int k = 0; k < 20000; ++k) {
    auto s = sample_without_replacement(pi, 2, rng);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_LT(s[0], s[1]);
    auto one = sample_without_replacement(pi, 1, rng);
    ++first[one[0]];
  }
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(first[i] / 20000.0, probs(i), 0.015);
}

TEST(Replay, CapacityAndSampling) {
  ReplayBuffer buf(5);
  for (int i = 0; i < 12; ++i) {
    Transition t;
    t.reward = i;
    buf.push(t);
    EXPECT_LE(buf.size(), 5u);
  }
  std::set<double> kept;
  for (std::size_t i = 0; i < buf.size(); ++i) kept.insert(buf.at(i).reward);
  EXPECT_EQ(kept, (std::set<double>{7, 8, 9, 10, 11}));
  Rng rng = make_rng(1);
  for (int k = 0; k < 100; ++k) {
    auto s = buf.sample(5, rng);
    std::set<const Transition*> uniq(s.begin(), s.end());
    EXPECT_EQ(uniq.size(), 5u);
  }
  EXPECT_THROW(buf.sample(6, rng), std::invalid_argument);
}

TEST(Checkpoint, RoundTripBitExact) {
  auto net = init_params({30, 17, 9, 10}, 77);
  const auto path = (std::filesystem::temp_directory_path() / "causaldq_ckpt.txt").string();
  save_checkpoint(net, path);
  auto back = load_checkpoint(path);
  ASSERT_EQ(back.layout(), net.layout());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    EXPECT_EQ(back.layers[l].weight, net.layers[l].weight);
    EXPECT_EQ(back.layers[l].bias, net.layers[l].bias);
  }
}

TEST(Init, DeterministicAndScaled) {
  auto a = init_params({20, 10, 5}, 3), b = init_params({20, 10, 5}, 3);
  EXPECT_EQ(a.layers[0].weight, b.layers[0].weight);
  EXPECT_LE(a.layers[0].weight.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(20.0));
  EXPECT_EQ(a.parameter_count(), 20u * 10 + 10 + 10 * 5 + 5);
}

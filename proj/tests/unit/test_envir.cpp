#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "causaldq/envir.hpp"
#include "causaldq/rng.hpp"

using namespace causaldq;
using namespace causaldq::envir;

namespace {

streams::StreamBatch make_batch(int p, int k, double delta, int onset, int horizon, std::uint64_t seed,
                                int duration = -1) {
  auto dag = streams::assign_sem_weights(streams::sample_er_dag(p, 0.3, seed), 0.3, 0.8, seed + 1);
  auto spec = streams::make_shift(k, streams::ShiftPattern::AllPositive, delta, onset, horizon, 0.0, duration);
  return streams::generate_streams(dag, spec, horizon, seed + 2);
}

MonitorConfig mon(int p, double lambda = 0.1, bool causal = true) {
  return {Matrix::Identity(p, p), lambda, causal};
}

}  // namespace

TEST(Reward, PenaltyWhenMissing) {
  auto spec = streams::make_shift(2, streams::ShiftPattern::AllPositive, 1.0, 1, 10);
  auto cfg = make_reward_config(spec, 5, {});
  Vector mask(5);
  mask << 1, 1, 0, 0, 0;
  Vector ind = Vector::Zero(5);
  ind(3) = ind(4) = 1;
  EXPECT_EQ(causal_reward({3, 4}, mask, ind, cfg), -20.0);
}

TEST(Reward, BothShiftedSelected) {
  auto spec = streams::make_shift(2, streams::ShiftPattern::AllPositive, 1.0, 1, 10);
  auto cfg = make_reward_config(spec, 5, {});
  Vector mask(5);
  mask << 1, 1, 0, 0, 0;
  Vector ind = Vector::Zero(5);
  ind(0) = ind(1) = ind(4) = 1;
  EXPECT_DOUBLE_EQ(causal_reward({0, 1, 4}, mask, ind, cfg), 3.0);
}

TEST(Reward, MonotoneInHits) {
  auto spec = streams::make_shift(4, streams::ShiftPattern::AllPositive, 1.0, 1, 10);
  auto cfg = make_reward_config(spec, 8, {});
  Vector mask = Vector::Zero(8);
  mask.head(4).setOnes();
  auto r = [&](IndexSet a) {
    Vector ind = Vector::Zero(8);
    for (int i : a) ind(i) = 1;
    return causal_reward(a, mask, ind, cfg);
  };
  EXPECT_LE(r({0, 5, 6}), r({0, 1, 6}));
  EXPECT_LE(r({0, 1, 6}), r({0, 1, 2}));
  // Rewards stay in [U, sum(y + w)].
  EXPECT_GE(r({5, 6, 7}), cfg.penalty);
  EXPECT_LE(r({0, 1, 2}), cfg.upper());
}

TEST(Reward, ScheduleBoundaries) {
  auto spec = streams::make_shift(1, streams::ShiftPattern::AllPositive, 1.0, 5, 20, 0.0, 3);
  RewardWeights w;
  w.before = -1.0;
  w.after = -2.0;
  auto cfg = make_reward_config(spec, 3, w);
  EXPECT_EQ(reward_schedule(4, cfg, 7.0), -1.0);
  EXPECT_EQ(reward_schedule(5, cfg, 7.0), 7.0);
  EXPECT_EQ(reward_schedule(8, cfg, 7.0), 7.0);
  EXPECT_EQ(reward_schedule(9, cfg, 7.0), -2.0);
  auto null = make_null_reward_config(3, w);
  for (int t = 1; t < 30; ++t) EXPECT_EQ(reward_schedule(t, null, 7.0), -1.0);
}

TEST(Reward, ScaledIntoUnitRange) {
  auto spec = streams::make_shift(3, streams::ShiftPattern::AllPositive, 1.0, 1, 10);
  RewardWeights w;
  w.scaled = true;
  auto cfg = make_reward_config(spec, 6, w);
  EXPECT_DOUBLE_EQ(cfg.scale(), 3 * 1.5 + 20.0);
  EXPECT_LE(std::fabs(reward_schedule(1, cfg, cfg.penalty)), 1.0);
  EXPECT_LE(std::fabs(reward_schedule(1, cfg, cfg.upper())), 1.0);
}

TEST(TruthMask, MatchesSpecWindow) {
  auto b = make_batch(6, 3, 1.5, 10, 40, 1, 5);
  for (int t = 1; t <= 40; ++t) {
    Vector m = truth_mask(b, t);
    const bool on = t >= 10 && t <= 15;
    for (int i = 0; i < 6; ++i) EXPECT_EQ(m(i), on && i < 3 ? 1.0 : 0.0) << "t=" << t;
  }
  auto zero = make_batch(6, 3, 0.0, 10, 40, 1);
  for (int t = 1; t <= 40; ++t) EXPECT_EQ(truth_mask(zero, t).sum(), 0.0);
}

TEST(Env, InitialStateAndErrors) {
  auto b = make_batch(4, 2, 1.0, 3, 10, 5);
  auto cfg = make_reward_config(b.truth->shift, 4, {});
  Environment env(b, cfg, mon(4), discovery::identity_cpe(4), 2);
  EXPECT_EQ(env.state().flatten(), Vector::Zero(12));
  EXPECT_EQ(env.time(), 1);
  EXPECT_THROW(Environment(b, cfg, mon(4), discovery::identity_cpe(5), 2), std::invalid_argument);
  EXPECT_THROW(env.step({0}), std::invalid_argument);
  EXPECT_THROW(env.step({1, 0}), std::invalid_argument);
}

TEST(Env, StepAfterDone) {
  auto b = make_batch(3, 1, 1.0, 1, 4, 6);
  Environment env(b, make_reward_config(b.truth->shift, 3, {}), mon(3), discovery::identity_cpe(3), 1);
  for (int t = 0; t < 4; ++t) {
    auto out = env.step({0});
    EXPECT_EQ(out.done, t == 3);
  }
  EXPECT_THROW(env.step({0}), std::logic_error);
}

TEST(Env, StalenessUnderFixedSelection) {
  auto b = make_batch(5, 2, 1.0, 3, 10, 7);
  Environment env(b, make_reward_config(b.truth->shift, 5, {}), mon(5), discovery::identity_cpe(5), 2);
  for (int t = 1; t <= 6; ++t) {
    auto out = env.step({1, 3});
    EXPECT_EQ(out.causal_state.staleness(1), 0.0);
    EXPECT_EQ(out.causal_state.staleness(3), 0.0);
    EXPECT_EQ(out.causal_state.staleness(0), t);
    EXPECT_EQ(out.causal_state.staleness(4), t);
  }
}

TEST(Env, NullBatchRewardsAreBaseline) {
  auto b = make_batch(4, 2, 0.0, 1, 20, 8);
  RewardWeights w;
  w.before = 0.25;
  Environment env(b, make_reward_config(b.truth->shift, 4, w), mon(4), discovery::identity_cpe(4), 2);
  while (!env.done()) EXPECT_EQ(env.step({0, 1}).reward, 0.25);
}

TEST(Env, ObservationOnlySelected) {
  auto b = make_batch(5, 2, 1.0, 1, 5, 9);
  Environment env(b, make_reward_config(b.truth->shift, 5, {}), mon(5), discovery::identity_cpe(5), 2);
  auto out = env.step({2, 4});
  ASSERT_EQ(out.observation.size(), 2);
  EXPECT_EQ(out.observation(0), b.values(0, 2));
  EXPECT_EQ(out.observation(1), b.values(0, 4));
}

TEST(Env, CompositionEqualsManualChain) {
  auto b = make_batch(3, 1, 2.0, 2, 12, 10);
  discovery::CpeMatrix cpe{Matrix::Identity(3, 3)};
  cpe.eta(0, 1) = 0.4;
  cpe.eta(1, 2) = 0.3;
  Environment env(b, make_reward_config(b.truth->shift, 3, {}), mon(3, 0.2), cpe, 2);
  auto ms = monitor::init_monitor(3, Matrix::Identity(3, 3), 0.2);
  Eigen::VectorXi y = Eigen::VectorXi::Zero(3);
  Rng rng = make_rng(3);
  for (int t = 1; t <= 12; ++t) {
    IndexSet a = t % 2 ? IndexSet{0, 1} : IndexSet{1, 2};
    auto out = env.step(a);
    Vector x = Vector::Zero(3);
    for (int i : a) x(i) = b.values(t - 1, i);
    ms = monitor::update_monitor(ms, x, a);
    auto c = monitor::local_contributions(ms);
    Vector phi = monitor::causal_statistic(ms, cpe);
    y = monitor::update_staleness(y, a);
    auto st = monitor::assemble_state(c.per_var, phi, y);
    EXPECT_EQ(out.causal_state.flatten(), st.flatten());
    EXPECT_EQ(out.selected_statistic, monitor::selected_statistic(c.per_var, a));
    EXPECT_EQ(out.total_statistic, c.total);
  }
}

TEST(Env, NonCausalZeroesPhi) {
  auto b = make_batch(4, 2, 1.0, 1, 8, 11);
  Environment env(b, make_reward_config(b.truth->shift, 4, {}), mon(4, 0.1, false), discovery::identity_cpe(4), 2);
  while (!env.done()) EXPECT_EQ(env.step({0, 2}).causal_state.phi, Vector::Zero(4));
}

TEST(Env, MarkovReplay) {
  // Re-running the recorded actions on a fresh environment reproduces every state.
  auto b = make_batch(5, 2, 1.0, 4, 15, 12);
  auto cfg = make_reward_config(b.truth->shift, 5, {});
  Environment a(b, cfg, mon(5), discovery::identity_cpe(5), 3);
  Rng rng = make_rng(4);
  std::vector<IndexSet> actions;
  std::vector<Vector> states;
  while (!a.done()) {
    std::vector<int> idx{0, 1, 2, 3, 4};
    std::shuffle(idx.begin(), idx.end(), rng);
    IndexSet act(idx.begin(), idx.begin() + 3);
    std::sort(act.begin(), act.end());
    actions.push_back(act);
    states.push_back(a.step(act).causal_state.flatten());
  }
  Environment r(b, cfg, mon(5), discovery::identity_cpe(5), 3);
  for (std::size_t k = 0; k < actions.size(); ++k) EXPECT_EQ(r.step(actions[k]).causal_state.flatten(), states[k]);
}

TEST(Trace, CsvColumns) {
  const auto path = (std::filesystem::temp_directory_path() / "causaldq_trace.csv").string();
  write_trace_csv({{1, {0, 2}, -20.0, 3.5, 1.25, false}, {2, {1, 2}, 3.0, 30.0, 19.5, true}}, path);
  std::ifstream in(path);
  std::string header, row1, row2;
  std::getline(in, header);
  std::getline(in, row1);
  std::getline(in, row2);
  EXPECT_EQ(header, "t,selected,reward,lambda_total,statistic,alarm");
  EXPECT_EQ(row1, "1,1;3,-20,3.5,1.25,0");
  EXPECT_EQ(row2, "2,2;3,3,30,19.5,1");
}

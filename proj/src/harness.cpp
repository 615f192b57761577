#include "causaldq/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <thread>

#include "causaldq/report.hpp"
#include "causaldq/rng.hpp"

namespace causaldq::harness {

Scenario make_scenario(const ExperimentConfig& cfg) {
  Scenario sc;
  auto graph = streams::sample_er_dag(cfg.p, cfg.edge_prob, derive_seed(cfg.seed, SeedTag::Dag));
  sc.dag = streams::assign_sem_weights(graph, cfg.weight_low, cfg.weight_high, derive_seed(cfg.seed, SeedTag::Weights));
  if (cfg.monitor_sigma == "sem") {
    sc.sigma = streams::sem_covariance(sc.dag);
    sc.sigma.diagonal().array() += cfg.noise_sigma * cfg.noise_sigma;
  } else {
    sc.sigma = Matrix::Identity(cfg.p, cfg.p);
  }
  return sc;
}

streams::ShiftPattern shift_pattern(const ExperimentConfig& cfg) {
  return cfg.pattern == "b" ? streams::ShiftPattern::Alternating : streams::ShiftPattern::AllPositive;
}

Vector encode_state(const monitor::CausalState& state, const std::string& features) {
  Vector x = state.flatten();
  if (features == "raw") return x;
  return x.unaryExpr([](double v) { return std::copysign(std::log1p(std::fabs(v)), v); });
}

std::vector<int> net_layout(const ExperimentConfig& cfg) {
  std::vector<int> layout{3 * cfg.p};
  layout.insert(layout.end(), cfg.hidden.begin(), cfg.hidden.end());
  layout.push_back(cfg.p);
  return layout;
}

Matrix context_window(const ExperimentConfig& cfg, const Scenario& scenario, std::uint64_t seed) {
  auto spec = streams::make_shift(0, streams::ShiftPattern::AllPositive, 0.0, 1, cfg.context_rows, cfg.noise_sigma);
  return streams::generate_streams(scenario.dag, spec, cfg.context_rows, seed).values;
}

namespace {

Matrix select_columns(const Matrix& data, const IndexSet& cols) {
  Matrix out(data.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = data.col(cols[c]);
  return out;
}

bool creates_cycle(const BoolMatrix& adj, int from, int to) {
  // Adding from -> to closes a cycle iff to already reaches from.
  const int p = static_cast<int>(adj.rows());
  std::vector<char> seen(p, 0);
  std::vector<int> stack{to};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    if (v == from) return true;
    if (seen[v]) continue;
    seen[v] = 1;
    for (int c = 0; c < p; ++c)
      if (adj(v, c) && !seen[c]) stack.push_back(c);
  }
  return false;
}

// Keeps about a fifth of the true edges and adds enough wrong ones that most
// reported edges are false.
discovery::Cpdag low_quality_graph(const streams::CausalGraph& truth, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::bernoulli_distribution keep(0.2);
  BoolMatrix adj = BoolMatrix::Constant(truth.p, truth.p, false);
  int kept = 0;
  for (int i = 0; i < truth.p; ++i)
    for (int j = 0; j < truth.p; ++j)
      if (truth.adjacency(i, j) && keep(rng)) {
        adj(i, j) = true;
        ++kept;
      }
  std::vector<std::pair<int, int>> candidates;
  for (int i = 0; i < truth.p; ++i)
    for (int j = 0; j < truth.p; ++j)
      if (i != j && !truth.adjacency(i, j) && !truth.adjacency(j, i)) candidates.emplace_back(i, j);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  const int wanted = std::max(1, static_cast<int>(std::ceil(kept * 0.85 / 0.15)));
  int added = 0;
  for (auto [i, j] : candidates) {
    if (added >= wanted) break;
    if (adj(i, j) || adj(j, i) || creates_cycle(adj, i, j)) continue;
    adj(i, j) = true;
    ++added;
  }
  discovery::Cpdag g = discovery::Cpdag::empty(truth.p);
  g.directed = adj;
  return g;
}

// Every pair oriented against the true topological order: no true edge survives.
discovery::Cpdag adversarial_graph(const streams::CausalGraph& truth) {
  discovery::Cpdag g = discovery::Cpdag::empty(truth.p);
  for (int i = 0; i < truth.p; ++i)
    for (int j = 0; j < truth.p; ++j)
      if (truth.topo_rank[i] > truth.topo_rank[j]) g.directed(i, j) = true;
  return g;
}

}  // namespace

discovery::Cpdag source_graph(const ExperimentConfig& cfg, const Scenario& scenario, const Matrix& context,
                              const IndexSet& scope, std::uint64_t seed) {
  const auto& truth = scenario.dag.graph;
  if (cfg.cpe_source == "none") return discovery::Cpdag::empty(cfg.p);
  if (cfg.cpe_source == "ground_truth") return discovery::Cpdag::from_dag(truth);
  if (cfg.cpe_source == "adversarial") return adversarial_graph(truth);
  if (cfg.cpe_source == "low_quality") return low_quality_graph(truth, seed);
  // discovered: PC on the scoped columns, lifted back to p streams
  discovery::Cpdag sub = discovery::pc_algorithm(select_columns(context, scope), cfg.alpha_sig, cfg.max_cond);
  discovery::Cpdag full = discovery::Cpdag::empty(cfg.p);
  for (std::size_t a = 0; a < scope.size(); ++a)
    for (std::size_t b = 0; b < scope.size(); ++b) {
      auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
      full.directed(scope[a], scope[b]) = sub.directed(ia, ib);
      full.undirected(scope[a], scope[b]) = sub.undirected(ia, ib);
    }
  return full;
}

discovery::CpeMatrix build_cpe(const ExperimentConfig& cfg, const Scenario& scenario, const IndexSet& scope_in,
                               std::uint64_t seed) {
  IndexSet scope = scope_in;
  if (cfg.discovery_scope == "all" || scope.empty()) {
    scope.resize(cfg.p);
    std::iota(scope.begin(), scope.end(), 0);
  }
  if (cfg.cpe_source == "none") return discovery::identity_cpe(cfg.p);
  const Matrix context = context_window(cfg, scenario, seed);
  const discovery::Cpdag graph = source_graph(cfg, scenario, context, scope, derive_seed(seed, SeedTag::CpeCorruption));
  const discovery::CpeMatrix full = discovery::estimate_cpe(context, graph);
  discovery::CpeMatrix out = discovery::identity_cpe(cfg.p);
  for (int a : scope)
    for (int b : scope) out.eta(a, b) = full.eta(a, b);
  return out;
}

namespace {

envir::RewardWeights reward_weights(const ExperimentConfig& cfg) {
  envir::RewardWeights w;
  w.y = cfg.reward_y;
  w.w = cfg.reward_w;
  w.penalty = cfg.penalty;
  w.before = cfg.reward_before;
  w.after = cfg.reward_after;
  w.scaled = cfg.scaled_reward;
  return w;
}

envir::MonitorConfig monitor_config(const ExperimentConfig& cfg, const Scenario& sc) {
  envir::MonitorConfig mon;
  mon.sigma = sc.sigma;
  mon.lambda = cfg.lambda;
  mon.causal_statistic = cfg.run_mode() == Mode::Causal;
  return mon;
}

IndexSet initial_scope(const Policy& policy, int p) { return policy(monitor::CausalState::zeros(p)); }

}  // namespace

Policy greedy_policy(const qnet::NetParams& params, const ExperimentConfig& cfg) {
  const std::string features = cfg.features;
  const int m = cfg.m;
  return [&params, features, m](const monitor::CausalState& s) {
    return qnet::select_top_m(qnet::forward(params, encode_state(s, features)), m);
  };
}

TrainResult train(const ExperimentConfig& cfg, const ProgressFn& progress) {
  validate(cfg);
  const Scenario sc = make_scenario(cfg);
  const bool causal = cfg.run_mode() == Mode::Causal;
  const envir::MonitorConfig mon = monitor_config(cfg, sc);
  const envir::RewardWeights weights = reward_weights(cfg);

  TrainResult out;
  out.params = qnet::init_params(net_layout(cfg), derive_seed(cfg.seed, SeedTag::NetInit));
  qnet::NetParams target = out.params;
  qnet::ReplayBuffer replay(static_cast<std::size_t>(cfg.replay_capacity));
  Rng explore = make_rng(derive_seed(cfg.seed, SeedTag::Explore));
  Rng replay_rng = make_rng(derive_seed(cfg.seed, SeedTag::Replay));
  const qnet::SyncRule sync{cfg.sync_mode == "polyak" ? qnet::SyncMode::Polyak : qnet::SyncMode::Hard,
                            cfg.polyak_rate};
  const Vector no_mask = Vector::Zero(cfg.p);
  long long updates = 0;
  discovery::CpeMatrix cpe = discovery::identity_cpe(cfg.p);

  for (int e = 0; e < cfg.episodes; ++e) {
    Rng onset_rng = make_rng(derive_seed(cfg.seed, SeedTag::TrainOnset, static_cast<std::uint64_t>(e)));
    std::uniform_int_distribution<int> onset_dist(std::max(1, cfg.horizon / 4), std::max(1, cfg.horizon / 2));
    const auto spec = streams::make_shift(cfg.k, shift_pattern(cfg), cfg.delta_train, onset_dist(onset_rng),
                                          cfg.horizon, cfg.noise_sigma);
    auto batch = streams::generate_streams(sc.dag, spec, cfg.horizon,
                                           derive_seed(cfg.seed, SeedTag::TrainStreams, static_cast<std::uint64_t>(e)));
    if (causal && (cfg.cpe_refresh == "episode" || e == 0)) {
      IndexSet scope = initial_scope(greedy_policy(out.params, cfg), cfg.p);
      cpe = build_cpe(cfg, sc, scope, derive_seed(cfg.seed, SeedTag::TrainContext, static_cast<std::uint64_t>(e)));
    }
    envir::Environment env(std::move(batch), envir::make_reward_config(spec, cfg.p, weights), mon, cpe, cfg.m);
    const double tau = std::max(cfg.tau_floor, cfg.tau0 * std::pow(cfg.tau_decay, e));
    const qnet::LossOptions loss_opts{causal ? cfg.alpha_ent * std::pow(cfg.alpha_decay, e) : 0.0, tau, cfg.gamma};

    double total = 0.0;
    Vector s = encode_state(env.state(), cfg.features);
    while (!env.done()) {
      const int t = env.time();
      const Vector q = qnet::forward(out.params, s);
      IndexSet action = qnet::sample_without_replacement(qnet::boltzmann(q, tau), cfg.m, explore);
      envir::StepOutcome step = env.step(action);
      Vector s_next = encode_state(step.causal_state, cfg.features);
      total += step.reward;
      replay.push({s, std::move(action), step.reward, s_next, causal ? step.truth_mask : no_mask});
      s = std::move(s_next);

      if (replay.size() < static_cast<std::size_t>(cfg.batch)) continue;
      for (int u = 0; u < cfg.updates_per_step; ++u) {
        auto sample = replay.sample(static_cast<std::size_t>(cfg.batch), replay_rng);
        qnet::LossAndGrad lg;
        try {
          lg = qnet::loss_and_grad(out.params, target, sample, loss_opts);
        } catch (const std::runtime_error& err) {
          throw std::runtime_error("train: episode " + std::to_string(e) + ", step " + std::to_string(t) + ": " +
                                   err.what());
        }
        qnet::sgd_step_inplace(out.params, lg.grad, cfg.lr);
        ++updates;
        if (sync.mode == qnet::SyncMode::Polyak)
          target = qnet::sync_target(out.params, target, sync);
        else if (updates % cfg.sync_period == 0)
          target = out.params;
      }
    }
    out.curve.push_back(total);
    if (progress) progress(e, total);
  }
  return out;
}

namespace {

struct RepOutcome {
  double delay = 0.0;
  bool false_alarm = false;
};

RepOutcome run_replication(const Policy& policy, const ExperimentConfig& cfg, const Scenario& sc,
                           const discovery::CpeMatrix* shared_cpe, double threshold, int rep,
                           std::vector<envir::TraceRow>* trace) {
  const auto spec = streams::make_shift(cfg.k, shift_pattern(cfg), cfg.delta_test, cfg.eval_onset, cfg.horizon,
                                        cfg.noise_sigma);
  auto batch = streams::generate_streams(sc.dag, spec, cfg.horizon,
                                         derive_seed(cfg.seed, SeedTag::EvalStreams, static_cast<std::uint64_t>(rep)));
  discovery::CpeMatrix cpe = discovery::identity_cpe(cfg.p);
  if (cfg.run_mode() == Mode::Causal) {
    cpe = shared_cpe ? *shared_cpe
                     : build_cpe(cfg, sc, initial_scope(policy, cfg.p),
                                 derive_seed(cfg.seed, SeedTag::EvalContext, static_cast<std::uint64_t>(rep)));
  }
  envir::Environment env(std::move(batch), envir::make_reward_config(spec, cfg.p, reward_weights(cfg)),
                         monitor_config(cfg, sc), std::move(cpe), cfg.m);
  const bool change = cfg.delta_test != 0.0 && cfg.k > 0;
  RepOutcome out;
  out.delay = cfg.horizon;
  bool detected = false;
  while (!env.done()) {
    const int t = env.time();
    IndexSet action = policy(env.state());
    auto step = env.step(action);
    const bool alarm = step.selected_statistic > threshold;
    if (trace) trace->push_back({t, action, step.reward, step.total_statistic, step.selected_statistic, alarm});
    if (!alarm) continue;
    if (!change || t < cfg.eval_onset) {
      out.false_alarm = true;
      continue;
    }
    if (!detected) out.delay = t - cfg.eval_onset;
    detected = true;
    if (!trace) break;
  }
  return out;
}

}  // namespace

AddReport evaluate_policy(const Policy& policy, const ExperimentConfig& cfg, int replications) {
  validate(cfg);
  if (replications < 1) throw std::invalid_argument("evaluate: replications must be >= 1");
  const Scenario sc = make_scenario(cfg);
  const double threshold = monitor::alarm_threshold(cfg.dof(), cfg.zeta);
  std::optional<discovery::CpeMatrix> shared;
  if (cfg.run_mode() == Mode::Causal && cfg.cpe_refresh == "once")
    shared = build_cpe(cfg, sc, initial_scope(policy, cfg.p), derive_seed(cfg.seed, SeedTag::EvalContext, 0));

  std::vector<RepOutcome> results(static_cast<std::size_t>(replications));
  const int workers = std::max(1, std::min(cfg.workers, replications));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  auto work = [&](int w) {
    try {
      for (int r = w; r < replications; r += workers)
        results[static_cast<std::size_t>(r)] =
            run_replication(policy, cfg, sc, shared ? &*shared : nullptr, threshold, r, nullptr);
    } catch (...) {
      errors[static_cast<std::size_t>(w)] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);

  AddReport rep;
  rep.replications = replications;
  int fa = 0;
  for (const auto& r : results) {
    rep.per_rep.push_back(r.delay);
    rep.false_alarm.push_back(r.false_alarm ? 1 : 0);
    fa += r.false_alarm ? 1 : 0;
  }
  rep.mean_add = sample_mean(rep.per_rep);
  rep.stderr_add = standard_error(rep.per_rep);
  rep.false_alarm_rate = static_cast<double>(fa) / replications;
  return rep;
}

AddReport evaluate_add(const qnet::NetParams& params, const ExperimentConfig& cfg, int replications) {
  if (params.layers.empty() || params.input_width() != 3 * cfg.p || params.output_width() != cfg.p)
    throw std::invalid_argument("evaluate_add: network shape does not match p");
  return evaluate_policy(greedy_policy(params, cfg), cfg, replications);
}

std::vector<envir::TraceRow> trace_replication(const Policy& policy, const ExperimentConfig& cfg, int rep) {
  validate(cfg);
  const Scenario sc = make_scenario(cfg);
  std::vector<envir::TraceRow> trace;
  run_replication(policy, cfg, sc, nullptr, monitor::alarm_threshold(cfg.dof(), cfg.zeta), rep, &trace);
  return trace;
}

double sample_mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = sample_mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

std::vector<double> smooth_curve(const std::vector<double>& curve, int window) {
  if (window < 1) throw std::invalid_argument("smooth_curve: window must be >= 1");
  std::vector<double> out(curve.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    sum += curve[i];
    if (i >= static_cast<std::size_t>(window)) sum -= curve[i - static_cast<std::size_t>(window)];
    out[i] = sum / static_cast<double>(std::min<std::size_t>(i + 1, static_cast<std::size_t>(window)));
  }
  return out;
}

int plateau_episode(const std::vector<double>& curve, double level, int window) {
  const auto s = smooth_curve(curve, window);
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i] >= level) return static_cast<int>(i);
  return static_cast<int>(s.size());
}

// ---------------------------------------------------------------------------
// Presets

namespace {

const std::vector<double> kDeltaGrid = {0.25, 0.5, 1.0, 1.5, 2.0};
const std::vector<double> kNoiseDeltaGrid = {0.0, 0.25, 0.5, 1.0, 2.0};
const std::vector<double> kExtremeDeltaGrid = {0.25, 0.5, 1.0, 1.5, 2.0};

ExperimentConfig sized(ExperimentConfig cfg, int p) {
  cfg.p = p;
  // Keep the expected degree of the p = 10 graphs (0.3 * 9) as p grows.
  cfg.edge_prob = std::min(0.3, 2.7 / (p - 1));
  if (p <= 10) {
    cfg.k = 5;
    cfg.m = 6;
  } else if (p <= 50) {
    cfg.k = 10;
    cfg.m = 12;
  } else {
    cfg.k = 20;
    cfg.m = 22;
  }
  apply_size_defaults(cfg);
  return cfg;
}

void add_mode_pair(PresetPlan& plan, const ExperimentConfig& cfg, const std::vector<double>& deltas,
                   const std::string& suffix = "") {
  ExperimentConfig c = cfg;
  c.mode = "causal";
  plan.runs.push_back({"causal" + suffix, c, deltas});
  c.mode = "non_causal";
  plan.runs.push_back({"non_causal" + suffix, c, deltas});
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"p10-case-a",    "p10-case-b",          "p50-case-a",          "p50-case-b",
          "p100-case-a",   "p100-case-b",         "noise-p50",           "noise-p100",
          "mismatch-p10",  "mismatch-p50",        "mismatch-p100",       "extreme-p50",
          "extreme-p100",  "ablation-non-causal", "ablation-no-graph",   "ablation-low-quality",
          "ablation-standard", "ablation-ground-truth", "ablation-adversarial"};
}

PresetPlan preset_plan(const std::string& name, const ExperimentConfig& base,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
  PresetPlan plan;
  plan.name = name;
  auto starts = [&](const char* prefix) { return name.rfind(prefix, 0) == 0; };
  auto size_of = [&](const std::string& tail) -> int {
    if (tail.rfind("p100", 0) == 0) return 100;
    if (tail.rfind("p50", 0) == 0) return 50;
    if (tail.rfind("p10", 0) == 0) return 10;
    return 0;
  };

  if (name == "p10-case-a" || name == "p10-case-b" || name == "p50-case-a" || name == "p50-case-b" ||
      name == "p100-case-a" || name == "p100-case-b") {
    ExperimentConfig c = sized(base, size_of(name));
    c.pattern = name.back() == 'a' ? "a" : "b";
    c.delta_train = 1.0;
    c.noise_sigma = 0.0;
    add_mode_pair(plan, c, kDeltaGrid);
  } else if (name == "noise-p50" || name == "noise-p100") {
    for (double sigma : {0.05, 0.1, 0.15}) {
      ExperimentConfig c = base;
      c.noise_sigma = sigma;
      c = sized(c, size_of(name.substr(6)));
      c.delta_train = 1.0;
      add_mode_pair(plan, c, kNoiseDeltaGrid, "-sigma" + report::format_double(sigma));
    }
  } else if (starts("mismatch-")) {
    const int p = size_of(name.substr(9));
    if (p == 0) throw std::invalid_argument("unknown preset '" + name + "'");
    for (double dt : {0.5, 1.0}) {
      ExperimentConfig c = sized(base, p);
      c.delta_train = dt;
      add_mode_pair(plan, c, kDeltaGrid, "-train" + report::format_double(dt));
    }
  } else if (name == "extreme-p50" || name == "extreme-p100") {
    ExperimentConfig c = sized(base, name == "extreme-p50" ? 50 : 100);
    c.k = c.m = name == "extreme-p50" ? 3 : 6;
    c.horizon = 300;
    c.delta_train = 1.0;
    add_mode_pair(plan, c, kExtremeDeltaGrid);
  } else if (starts("ablation-")) {
    ExperimentConfig c = base;
    c.noise_sigma = 0.1;
    c = sized(c, 50);
    c.delta_train = 1.0;
    const std::string kind = name.substr(9);
    c.mode = "causal";
    if (kind == "non-causal")
      c.mode = "non_causal";
    else if (kind == "no-graph")
      c.cpe_source = "none";
    else if (kind == "low-quality")
      c.cpe_source = "low_quality";
    else if (kind == "standard")
      c.cpe_source = "discovered";
    else if (kind == "ground-truth")
      c.cpe_source = "ground_truth";
    else if (kind == "adversarial")
      c.cpe_source = "adversarial";
    else
      throw std::invalid_argument("unknown preset '" + name + "'");
    plan.runs.push_back({kind, c, {1.0}});
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  for (auto& run : plan.runs) {
    for (const auto& [k, v] : overrides) apply_override(run.cfg, k, v);
    validate(run.cfg);
  }
  return plan;
}

void run_preset(const PresetPlan& plan, const std::string& out_dir, const ProgressFn& progress) {
  std::filesystem::create_directories(out_dir);
  std::vector<report::ResultRow> rows;
  std::vector<report::Series> curves;
  for (const auto& run : plan.runs) {
    TrainResult tr = train(run.cfg, progress);
    curves.push_back({run.method, tr.curve});
    for (double d : run.test_deltas) {
      ExperimentConfig ec = run.cfg;
      ec.delta_test = d;
      AddReport ar = evaluate_add(tr.params, ec, ec.replications);
      rows.push_back({run.method, ec.p, ec.m, d, ec.noise_sigma, ar.mean_add, ar.stderr_add, ar.false_alarm_rate,
                      ar.replications});
    }
  }
  const std::filesystem::path dir(out_dir);
  report::write_results_csv(rows, (dir / "results.csv").string());
  report::write_curves_csv(curves, (dir / "curves.csv").string());
  report::write_svg(curves, (dir / "curves.svg").string(), plan.name);
}

}  // namespace causaldq::harness

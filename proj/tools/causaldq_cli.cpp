// Command-line front end: generate, discover, train, eval, preset, verify, report.

#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "causaldq/config.hpp"
#include "causaldq/discovery.hpp"
#include "causaldq/harness.hpp"
#include "causaldq/qnet.hpp"
#include "causaldq/report.hpp"
#include "causaldq/rng.hpp"
#include "causaldq/streams.hpp"
#include "causaldq/theory.hpp"

namespace fs = std::filesystem;
using namespace causaldq;
using harness::ExperimentConfig;

namespace {

/// Config file plus one `--key value` flag per ExperimentConfig field.
struct ConfigArgs {
  std::string config_path;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    for (const auto& key : harness::config_keys()) app->add_option("--" + key, values[key], "config override");
  }

  std::vector<std::pair<std::string, std::string>> overrides(const CLI::App* app) const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& key : harness::config_keys())
      if (app->count("--" + key) > 0) out.emplace_back(key, values.at(key));
    return out;
  }

  ExperimentConfig resolve(const CLI::App* app) const {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : harness::load_config(config_path);
    for (const auto& [k, v] : overrides(app)) harness::apply_override(cfg, k, v);
    harness::validate(cfg);
    return cfg;
  }
};

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::ofstream open_out(const std::string& path) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

void progress_line(int episode, double reward) {
  std::fprintf(stderr, "episode %d reward %s\n", episode + 1, report::format_double(reward).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causality-informed sensor selection for multi-stream change detection"};
  app.require_subcommand(1);

  // generate
  ConfigArgs gen_args;
  std::string gen_out = "streams.csv", gen_truth;
  int gen_rep = 0;
  auto* gen = app.add_subcommand("generate", "Write one test stream batch as CSV");
  gen_args.attach(gen);
  gen->add_option("--out", gen_out, "stream CSV path");
  gen->add_option("--truth-out", gen_truth, "edge list of the generating DAG");
  gen->add_option("--rep", gen_rep, "replication index for the stream seed")->check(CLI::NonNegativeNumber);

  // discover
  ConfigArgs disc_args;
  std::string disc_in, disc_out = "edges.txt", disc_metrics, disc_truth;
  int disc_rows = 2000, disc_first = 1, disc_last = 0;
  auto* disc = app.add_subcommand("discover", "Run the PC algorithm and emit an edge list");
  disc_args.attach(disc);
  disc->add_option("--input", disc_in, "stream CSV; generated in-control data when omitted");
  disc->add_option("--first-col", disc_first, "first data column (1-based)");
  disc->add_option("--last-col", disc_last, "last data column (1-based, 0 = last)");
  disc->add_option("--rows", disc_rows, "rows to generate when --input is omitted")->check(CLI::PositiveNumber);
  disc->add_option("--out", disc_out, "edge list path");
  disc->add_option("--truth", disc_truth, "true edge list; defaults to the scenario DAG for generated data");
  disc->add_option("--metrics", disc_metrics, "metrics CSV path (shd,tpr,fdr)");

  // train
  ConfigArgs train_args;
  std::string train_dir = "run";
  bool quiet = false;
  auto* tr = app.add_subcommand("train", "Train a Q-network; write checkpoint and reward curve");
  train_args.attach(tr);
  tr->add_option("--out-dir", train_dir, "output directory");
  tr->add_flag("--quiet", quiet, "suppress per-episode progress");

  // eval
  ConfigArgs eval_args;
  std::string eval_ckpt, eval_out = "add.csv", eval_reps_out, eval_trace;
  int eval_trace_rep = 0;
  auto* ev = app.add_subcommand("eval", "Evaluate detection delay of a checkpoint");
  eval_args.attach(ev);
  ev->add_option("--checkpoint", eval_ckpt, "checkpoint from train")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", eval_out, "results CSV path");
  ev->add_option("--per-rep", eval_reps_out, "per-replication CSV path");
  ev->add_option("--trace", eval_trace, "trace CSV of one replication");
  ev->add_option("--trace-rep", eval_trace_rep, "replication index for --trace")->check(CLI::NonNegativeNumber);

  // preset
  ConfigArgs preset_args;
  std::string preset_name, preset_dir;
  bool list_presets = false;
  auto* pre = app.add_subcommand("preset", "Run a named experiment grid");
  preset_args.attach(pre);
  pre->add_option("name", preset_name, "preset name");
  pre->add_option("--out-dir", preset_dir, "output directory (default: preset name)");
  pre->add_flag("--list", list_presets, "print preset names");
  pre->add_flag("--quiet", quiet, "suppress per-episode progress");

  // verify
  theory::VerifyOptions vopt;
  std::string verify_out;
  auto* ver = app.add_subcommand("verify", "Numerically check the soft Bellman results on toy MDPs");
  ver->add_option("--mdps", vopt.n_mdps)->check(CLI::PositiveNumber);
  ver->add_option("--max-states", vopt.max_states)->check(CLI::Range(2, 64));
  ver->add_option("--max-actions", vopt.max_actions)->check(CLI::Range(2, 16));
  ver->add_option("--contraction-trials", vopt.contraction_trials)->check(CLI::PositiveNumber);
  ver->add_option("--decay-steps", vopt.decay_t_max)->check(CLI::PositiveNumber);
  ver->add_option("--finite-trials", vopt.finite_trials)->check(CLI::Range(2, 1000000));
  ver->add_option("--finite-ts", vopt.finite_ts)->check(CLI::PositiveNumber);
  ver->add_option("--finite-alpha", vopt.finite_alpha)->check(CLI::Range(1e-9, 1.0));
  ver->add_option("--fuzz-trials", vopt.fuzz_trials)->check(CLI::PositiveNumber);
  ver->add_option("--seed", vopt.seed);
  ver->add_option("--out", verify_out, "CSV path (default stdout)");

  // report
  std::vector<std::string> rep_results, rep_curves;
  std::string rep_dir = "report", rep_title = "reward curves";
  auto* rep = app.add_subcommand("report", "Merge result CSVs and render curve SVG");
  rep->add_option("--results", rep_results, "results CSV files")->check(CLI::ExistingFile);
  rep->add_option("--curves", rep_curves, "curve CSV files")->check(CLI::ExistingFile);
  rep->add_option("--out-dir", rep_dir, "output directory");
  rep->add_option("--title", rep_title, "chart title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      const ExperimentConfig cfg = gen_args.resolve(gen);
      const auto sc = harness::make_scenario(cfg);
      const auto spec = streams::make_shift(cfg.k, harness::shift_pattern(cfg), cfg.delta_test, cfg.eval_onset,
                                            cfg.horizon, cfg.noise_sigma);
      const auto batch = streams::generate_streams(
          sc.dag, spec, cfg.horizon, derive_seed(cfg.seed, SeedTag::EvalStreams, static_cast<std::uint64_t>(gen_rep)));
      ensure_parent(gen_out);
      streams::write_csv_streams(batch, gen_out);
      if (!gen_truth.empty()) {
        auto out = open_out(gen_truth);
        discovery::write_edge_list(out, discovery::Cpdag::from_dag(sc.dag.graph));
      }
    } else if (*disc) {
      const ExperimentConfig cfg = disc_args.resolve(disc);
      Matrix data;
      std::optional<discovery::Cpdag> truth;
      if (disc_in.empty()) {
        const auto sc = harness::make_scenario(cfg);
        const auto spec = streams::make_shift(0, streams::ShiftPattern::AllPositive, 0.0, 1, disc_rows, cfg.noise_sigma);
        data = streams::generate_streams(sc.dag, spec, disc_rows, derive_seed(cfg.seed, SeedTag::EvalContext)).values;
        truth = discovery::Cpdag::from_dag(sc.dag.graph);
      } else {
        int last = disc_last;
        if (last == 0) {
          std::ifstream in(disc_in);
          std::string line;
          std::getline(in, line);
          last = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
        }
        data = streams::load_csv_streams(disc_in, disc_first, last).values;
      }
      if (!disc_truth.empty()) {
        std::ifstream in(disc_truth);
        if (!in) throw std::runtime_error("cannot read '" + disc_truth + "'");
        truth = discovery::read_edge_list(in, static_cast<int>(data.cols()));
      }
      const auto cpdag = discovery::pc_algorithm(data, cfg.alpha_sig, cfg.max_cond);
      const auto cpe = discovery::estimate_cpe(data, cpdag);
      {
        auto out = open_out(disc_out);
        discovery::write_edge_list(out, cpdag, &cpe);
      }
      if (!disc_metrics.empty()) {
        if (!truth) throw std::invalid_argument("discover: --metrics needs --truth for CSV input");
        const auto g = streams::make_graph(discovery::resolve_dag(*truth));
        const auto gm = discovery::graph_metrics(cpdag, g);
        auto out = open_out(disc_metrics);
        out << "shd,tpr,fdr,fdr_defined,true_positive,false_positive,false_negative\n"
            << gm.shd << ',' << report::format_double(gm.tpr) << ',' << report::format_double(gm.fdr) << ','
            << (gm.fdr_defined ? 1 : 0) << ',' << gm.true_positive << ',' << gm.false_positive << ','
            << gm.false_negative << '\n';
      }
    } else if (*tr) {
      const ExperimentConfig cfg = train_args.resolve(tr);
      fs::create_directories(train_dir);
      const auto result = harness::train(cfg, quiet ? harness::ProgressFn{} : harness::ProgressFn(progress_line));
      const fs::path dir(train_dir);
      qnet::save_checkpoint(result.params, (dir / "checkpoint.txt").string());
      const std::vector<report::Series> series{{cfg.mode, result.curve}};
      report::write_curves_csv(series, (dir / "curve.csv").string());
      report::write_svg(series, (dir / "curve.svg").string(), "training reward");
      auto out = open_out((dir / "config.txt").string());
      out << harness::to_config_text(cfg);
    } else if (*ev) {
      const ExperimentConfig cfg = eval_args.resolve(ev);
      const auto params = qnet::load_checkpoint(eval_ckpt);
      const auto ar = harness::evaluate_add(params, cfg, cfg.replications);
      ensure_parent(eval_out);
      report::write_results_csv({{cfg.mode, cfg.p, cfg.m, cfg.delta_test, cfg.noise_sigma, ar.mean_add,
                                  ar.stderr_add, ar.false_alarm_rate, ar.replications}},
                                eval_out);
      if (!eval_reps_out.empty()) {
        auto out = open_out(eval_reps_out);
        out << "rep,delay,false_alarm\n";
        for (std::size_t i = 0; i < ar.per_rep.size(); ++i)
          out << i << ',' << report::format_double(ar.per_rep[i]) << ',' << int(ar.false_alarm[i]) << '\n';
      }
      if (!eval_trace.empty()) {
        if (eval_trace_rep >= cfg.replications) throw std::invalid_argument("eval: --trace-rep out of range");
        ensure_parent(eval_trace);
        envir::write_trace_csv(harness::trace_replication(harness::greedy_policy(params, cfg), cfg, eval_trace_rep),
                               eval_trace);
      }
    } else if (*pre) {
      if (list_presets) {
        for (const auto& n : harness::preset_names()) std::cout << n << '\n';
        return 0;
      }
      if (preset_name.empty()) throw std::invalid_argument("preset: name required (see --list)");
      ExperimentConfig base =
          preset_args.config_path.empty() ? ExperimentConfig{} : harness::load_config(preset_args.config_path);
      const auto plan = harness::preset_plan(preset_name, base, preset_args.overrides(pre));
      harness::run_preset(plan, preset_dir.empty() ? preset_name : preset_dir,
                          quiet ? harness::ProgressFn{} : harness::ProgressFn(progress_line));
    } else if (*ver) {
      const auto reports = theory::verify_suite(vopt);
      std::ostringstream csv;
      csv << "check,checked,violations,max_slack,passed,note\n";
      bool ok = true;
      for (const auto& r : reports) {
        std::string note = r.note;
        std::replace(note.begin(), note.end(), ',', ';');
        csv << r.name << ',' << r.checked << ',' << r.violations << ',' << report::format_double(r.max_slack) << ','
            << (r.passed() ? 1 : 0) << ',' << note << '\n';
        ok = ok && r.passed();
      }
      if (verify_out.empty()) {
        std::cout << csv.str();
      } else {
        auto out = open_out(verify_out);
        out << csv.str();
      }
      if (!ok) {
        std::cerr << "verify: at least one check reported violations\n";
        return 2;
      }
    } else if (*rep) {
      if (rep_results.empty() && rep_curves.empty()) throw std::invalid_argument("report: nothing to merge");
      fs::create_directories(rep_dir);
      const fs::path dir(rep_dir);
      if (!rep_results.empty()) {
        std::vector<report::ResultRow> rows;
        for (const auto& f : rep_results) {
          auto part = report::read_results_csv(f);
          rows.insert(rows.end(), part.begin(), part.end());
        }
        report::write_results_csv(rows, (dir / "results.csv").string());
      }
      if (!rep_curves.empty()) {
        std::vector<report::Series> series;
        for (const auto& f : rep_curves) {
          auto part = report::read_curves_csv(f);
          series.insert(series.end(), part.begin(), part.end());
        }
        report::write_curves_csv(series, (dir / "curves.csv").string());
        report::write_svg(series, (dir / "curves.svg").string(), rep_title);
      }
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

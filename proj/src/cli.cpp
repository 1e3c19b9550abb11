#include "tscenejal/cli.hpp"

#include <algorithm>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "tscenejal/diagnostics.hpp"
#include "tscenejal/errors.hpp"
#include "tscenejal/kitti_io.hpp"
#include "tscenejal/simulation.hpp"

namespace tscenejal::cli {

namespace fs = std::filesystem;

EngineConfig GlobalOptions::load_config() const {
  if (config_file && !fs::exists(*config_file))
    throw InvalidArgument(fmt::format("config file '{}' does not exist", config_file->string()));
  return load_engine_config(config_file, overrides, use_environment);
}

namespace {

void require_dir(const fs::path& dir, std::string_view what) {
  if (!fs::is_directory(dir)) throw InvalidArgument(fmt::format("{} '{}' is not a directory", what, dir.string()));
}

std::vector<std::string> read_id_list(const fs::path& path) {
  std::vector<std::string> ids;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    line.erase(std::remove_if(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); }), line.end());
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

}  // namespace

void cmd_synth(const GlobalOptions& opts) {
  const EngineConfig cfg = opts.load_config();
  const SyntheticPool pool = make_synthetic_pool(cfg, opts.seed);
  const fs::path pred_dir = opts.out / "predictions";
  const fs::path gt_dir = opts.out / "ground_truth";
  fs::create_directories(pred_dir);
  fs::create_directories(gt_dir);
  for (std::size_t i = 0; i < pool.ground_truth.size(); ++i) {
    const Scene& pred = pool.predictions[i];
    write_file_atomic(pred_dir / (pred.id + ".txt"), serialize_label_file(pred));
    write_file_atomic(pred_dir / (pred.id + ".mdn"), serialize_mixture_sidecar(pred));
    write_file_atomic(gt_dir / (pred.id + ".txt"), serialize_label_file(pool.ground_truth[i]));
  }
  write_file_atomic(opts.out / "config.txt", format_engine_config(cfg));
  spdlog::info("wrote {} synthetic scenes to {}", pool.ground_truth.size(), opts.out.string());
}

void cmd_score(const GlobalOptions& opts, const fs::path& pool_dir, Metric metric) {
  require_dir(pool_dir, "pool");
  const EngineConfig cfg = opts.load_config();
  if (metric == Metric::uncertainty) {
    const auto missing = missing_sidecars(pool_dir);
    if (!missing.empty())
      throw DataError(fmt::format("uncertainty scoring needs mixture sidecars; {} scene(s) lack one, first: {}",
                                  missing.size(), missing.front().string()));
  }
  const auto pool = load_pool_dir(pool_dir, cfg.catalog, metric == Metric::uncertainty, cfg.unknown_class);
  std::string csv;
  fs::path target;
  switch (metric) {
    case Metric::entropy:
      csv = "scene_id,entropy\n";
      for (const auto& s : pool) csv += fmt::format("{},{:.12g}\n", s.id, category_entropy(s, cfg.catalog, cfg.entropy));
      target = opts.out / "scores_entropy.csv";
      break;
    case Metric::uncertainty:
      csv = "scene_id,uncertainty\n";
      for (const auto& s : pool)
        csv += fmt::format("{},{:.12g}\n", s.id, scene_uncertainty(s, cfg.anchors, cfg.uncertainty));
      target = opts.out / "scores_uncertainty.csv";
      break;
    case Metric::similarity: {
      if (pool.empty()) throw DataError("pool is empty");
      const auto m = pairwise_similarity_matrix(pool, cfg.catalog, cfg.kernel, opts.jobs);
      csv = "scene_id";
      for (const auto& s : pool) csv += "," + s.id;
      csv += "\n";
      for (std::size_t i = 0; i < m.size; ++i) {
        csv += pool[i].id;
        for (std::size_t j = 0; j < m.size; ++j) csv += fmt::format(",{:.12g}", m.at(i, j));
        csv += "\n";
      }
      target = opts.out / "similarity_matrix.csv";
      break;
    }
  }
  write_file_atomic(target, csv);
  spdlog::info("scored {} scenes ({}) -> {}", pool.size(), metric_name(metric), target.string());
}

void cmd_select(const GlobalOptions& opts, const SelectOptions& sel) {
  require_dir(sel.pool_dir, "pool");
  const EngineConfig cfg = opts.load_config();
  const bool needs_mixtures =
      std::find(cfg.plan.order.begin(), cfg.plan.order.end(), Metric::uncertainty) != cfg.plan.order.end();

  if (sel.init) {
    const auto pool = load_pool_dir(sel.pool_dir, cfg.catalog, false, cfg.unknown_class);
    std::vector<std::string> ids;
    for (const auto& s : pool) ids.push_back(s.id);
    const std::size_t budget = sel.budget.value_or(cfg.rounds * cfg.plan.n_r);
    const RoundState state = initial_round_state(ids, sel.n0, budget, opts.seed);
    save_round_state(state, sel.state_path);
    spdlog::info("initialized state: {} labeled, {} unlabeled, budget {}", state.labeled_ids.size(),
                 state.unlabeled_ids.size(), state.budget_total);
    return;
  }

  if (!fs::exists(sel.state_path))
    throw InvalidArgument(fmt::format("state file '{}' does not exist (use --init first)", sel.state_path.string()));
  RoundState state = load_round_state(sel.state_path);
  if (needs_mixtures) {
    const auto missing = missing_sidecars(sel.pool_dir);
    if (!missing.empty())
      throw DataError(fmt::format("the uncertainty stage needs mixture sidecars; {} scene(s) lack one, first: {}",
                                  missing.size(), missing.front().string()));
  }
  const auto pool = load_pool_dir(sel.pool_dir, cfg.catalog, needs_mixtures, cfg.unknown_class);
  std::map<std::string, const Scene*> by_id;
  for (const auto& s : pool) by_id[s.id] = &s;
  std::vector<Scene> unlabeled;
  for (const auto& id : state.unlabeled_ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError(fmt::format("state lists '{}' which is not in the pool", id));
    unlabeled.push_back(*it->second);
  }
  if (state.spent() + cfg.plan.n_r > state.budget_total)
    throw DataError(fmt::format("annotation budget exhausted ({} of {} used)", state.spent(), state.budget_total));
  if (unlabeled.size() < cfg.plan.n_r)
    throw DataError(fmt::format("pool exhausted: {} unlabeled scenes left, {} requested", unlabeled.size(),
                                cfg.plan.n_r));

  SelectionContext ctx = cfg.selection_context(opts.jobs);
  ctx.plan = cfg.plan.degraded_for(unlabeled.size());
  SelectionStats stats;
  const auto selected = three_stage_select(unlabeled, ctx.plan, ctx.configs, ctx.catalog, ctx.anchors, &stats);
  const std::size_t round = state.round_index + 1;
  spdlog::info("round {}: stage sizes {} -> {} -> {} ({} kernel evaluations)", round, stats.stage_sizes[0],
               stats.stage_sizes[1], stats.stage_sizes[2], stats.kernel_evaluations);

  const std::set<std::string> chosen(selected.begin(), selected.end());
  std::erase_if(state.unlabeled_ids, [&](const std::string& id) { return chosen.contains(id); });
  state.labeled_ids.insert(state.labeled_ids.end(), selected.begin(), selected.end());
  state.per_round_selected.push_back(selected);
  state.round_index = round;

  std::string list;
  for (const auto& id : selected) list += id + "\n";
  write_file_atomic(opts.out / fmt::format("selected_round_{}.txt", round), list);

  std::vector<Scene> picked;
  for (const auto& id : selected) picked.push_back(*by_id.at(id));
  DiagInputs diag{cfg.catalog, cfg.anchors, cfg.entropy, cfg.kernel, cfg.uncertainty, cfg.diag, opts.seed, opts.jobs};
  const fs::path report_dir = opts.out / fmt::format("round_{}", round);
  write_diag_report(selection_report(picked, pool, diag), cfg.catalog, report_dir.string());
  write_file_atomic(report_dir / "stages.json",
                    fmt::format("{{\"round\": {}, \"stage_sizes\": [{}, {}, {}], \"kernel_evaluations\": {}, "
                                "\"degraded\": {}, \"order\": \"{}\"}}\n",
                                round, stats.stage_sizes[0], stats.stage_sizes[1], stats.stage_sizes[2],
                                stats.kernel_evaluations, ctx.plan.k1 != cfg.plan.k1 ? "true" : "false",
                                format_stage_order(cfg.plan.order)));
  save_round_state(state, sel.state_path);
}

void cmd_simulate(const GlobalOptions& opts, const std::vector<Strategy>& strategies) {
  const EngineConfig cfg = opts.load_config();
  const SyntheticPool pool = make_synthetic_pool(cfg, opts.seed);
  const auto outcomes = simulate_strategies(cfg, pool, strategies, opts.seed, opts.jobs);
  for (const auto& o : outcomes) {
    const fs::path dir = opts.out / std::string(strategy_name(o.strategy));
    fs::create_directories(dir);
    write_file_atomic(dir / "rounds.csv", format_round_reports_csv(o.rounds.reports, cfg.catalog));
    write_file_atomic(dir / "state.json", round_state_to_text(o.rounds.state));
  }
  write_file_atomic(opts.out / "comparison.csv", format_comparison_csv(outcomes, cfg.catalog));
  write_file_atomic(opts.out / "final_summary.csv", format_final_summary_csv(outcomes));
  spdlog::info("simulated {} strategies over {} rounds -> {}", outcomes.size(), cfg.rounds, opts.out.string());
}

void cmd_stats(const GlobalOptions& opts, const fs::path& pool_dir, const std::optional<fs::path>& selection_file) {
  require_dir(pool_dir, "pool");
  const EngineConfig cfg = opts.load_config();
  const auto pool = load_pool_dir(pool_dir, cfg.catalog, true, cfg.unknown_class);
  std::vector<Scene> selected;
  if (selection_file) {
    std::map<std::string, const Scene*> by_id;
    for (const auto& s : pool) by_id[s.id] = &s;
    for (const auto& id : read_id_list(*selection_file)) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw DataError(fmt::format("selected id '{}' is not in the pool", id));
      selected.push_back(*it->second);
    }
  } else {
    selected = pool;
  }
  DiagInputs diag{cfg.catalog, cfg.anchors, cfg.entropy, cfg.kernel, cfg.uncertainty, cfg.diag, opts.seed, opts.jobs};
  write_diag_report(selection_report(selected, pool, diag), cfg.catalog, opts.out.string());
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConvergenceError*>(&e)) return kExitNumeric;
  if (dynamic_cast<const InvalidArgument*>(&e)) return kExitUsage;
  return kExitData;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Active-learning scene selection: score, select, simulate, stats, synth"};
  app.require_subcommand(1);
  GlobalOptions opts;
  std::string config_file;
  std::vector<std::string> sets;
  std::string out = "out";
  app.add_option("--config", config_file, "key = value configuration file");
  app.add_option("--seed", opts.seed, "root random seed");
  app.add_option("--jobs", opts.jobs, "worker threads for kernel evaluation (0 = all cores)");
  app.add_option("--out", out, "output directory");
  app.add_option("--set", sets, "override a configuration key (key=value), repeatable");
  app.add_flag("!--no-env", opts.use_environment, "ignore TSCENEJAL_* environment overrides");

  auto* synth = app.add_subcommand("synth", "write a synthetic prediction pool with sidecars and ground truth");

  auto* score = app.add_subcommand("score", "score every scene of a pool with one metric");
  std::string pool_dir;
  std::string metric = "entropy";
  score->add_option("--pool", pool_dir, "directory of KITTI prediction files")->required();
  score->add_option("--metric", metric, "entropy | similarity | uncertainty")
      ->check(CLI::IsMember({"entropy", "similarity", "uncertainty"}));

  auto* select = app.add_subcommand("select", "run one joint-selection round and update the round state");
  SelectOptions sel;
  std::string state_path;
  std::size_t budget = 0;
  select->add_option("--pool", pool_dir, "directory of KITTI prediction files")->required();
  select->add_option("--state", state_path, "round state file")->required();
  select->add_flag("--init", sel.init, "create a fresh state with --n0 random labeled scenes");
  select->add_option("--n0", sel.n0, "initial random labeled scenes (with --init)");
  auto* budget_opt = select->add_option("--budget", budget, "total annotation budget (with --init)");

  auto* simulate = app.add_subcommand("simulate", "end-to-end rounds on a synthetic pool for several strategies");
  std::vector<std::string> strategy_names{"random", "tscenejal"};
  simulate->add_option("--strategies", strategy_names, "random entropy-only fs-only uncertainty-only tscenejal")
      ->delimiter(',');

  auto* stats = app.add_subcommand("stats", "class, box-count, similarity and uncertainty statistics");
  std::string selection;
  stats->add_option("--pool", pool_dir, "directory of KITTI prediction files")->required();
  stats->add_option("--selection", selection, "file with one selected scene id per line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!config_file.empty()) opts.config_file = config_file;
    opts.out = out;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw InvalidArgument(fmt::format("--set expects key=value, got '{}'", s));
      opts.overrides[s.substr(0, eq)] = s.substr(eq + 1);
    }
    if (*synth) {
      cmd_synth(opts);
    } else if (*score) {
      cmd_score(opts, pool_dir, metric_from_name(metric));
    } else if (*select) {
      sel.pool_dir = pool_dir;
      sel.state_path = state_path;
      if (budget_opt->count() > 0) sel.budget = budget;
      cmd_select(opts, sel);
    } else if (*simulate) {
      std::vector<Strategy> strategies;
      for (const auto& n : strategy_names) strategies.push_back(strategy_from_name(n));
      cmd_simulate(opts, strategies);
    } else if (*stats) {
      std::optional<fs::path> sel_file;
      if (!selection.empty()) sel_file = selection;
      cmd_stats(opts, pool_dir, sel_file);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

}  // namespace tscenejal::cli

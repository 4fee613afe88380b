// dagsched: generate tiled-Cholesky task DAGs, benchmark reference
// schedulers, train and evaluate the graph-convolutional scheduling agent,
// and rebuild the result tables as CSV.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "dagsched/a2c.hpp"
#include "dagsched/baselines.hpp"
#include "dagsched/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace dagsched;

namespace {

int verbosity() {
  const char *env = std::getenv("DAGSCHED_VERBOSE");
  return env ? std::atoi(env) : 0;
}

void log_progress(const std::string &message) {
  if (verbosity() > 0) {
    std::cerr << "[dagsched] " << message << "\n";
  }
}

void write_file(const fs::path &path, const std::string &content) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  }
  out << content;
}

// every output file starts with the flag set that produced it
std::string flags_header(const std::string &command, const std::string &flags) {
  return "# dagsched " + command + " " + flags + "\n# schema_version=1\n";
}

double sample_std(const std::vector<double> &values, double mean) {
  if (values.size() < 2) {
    return 0.0;
  }
  double acc = 0.0;
  for (double v : values) {
    acc += (v - mean) * (v - mean);
  }
  return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

struct BenchRow {
  std::string algo;
  int tiles;
  int procs;
  std::uint64_t seed;
  timecount_t makespan;
};

std::vector<BenchRow> run_baseline(const std::string &algo, const TaskGraph &graph, int procs,
                                   int seeds, ScheduleResult *last) {
  std::vector<BenchRow> rows;
  if (algo == "asap") {
    *last = asap_schedule(graph, procs);
    rows.push_back({algo, graph.tiles(), procs, 0, last->makespan});
  } else if (algo == "greedy") {
    *last = greedy_schedule(graph, procs);
    rows.push_back({algo, graph.tiles(), procs, 0, last->makespan});
  } else if (algo == "random") {
    for (int s = 0; s < seeds; ++s) {
      *last = random_schedule(graph, procs, s);
      rows.push_back({algo, graph.tiles(), procs, static_cast<std::uint64_t>(s),
                      last->makespan});
    }
  } else {
    throw CLI::ValidationError("--algo", "unknown algorithm '" + algo + "'");
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow> &rows, const std::string &flags) {
  std::ostringstream out;
  out << flags_header("bench", flags);
  out << "algo,tiles,procs,seed,makespan\n";
  for (const auto &r : rows) {
    out << r.algo << ',' << r.tiles << ',' << r.procs << ',' << r.seed << ',' << r.makespan
        << "\n";
  }
  return out.str();
}

struct TrainSummary {
  std::vector<TrainResult> runs;
  timecount_t best = 0;
  std::uint64_t best_seed = 0;
  double std5 = 0.0;  // sample std of the 5 best runs
};

TrainSummary summarize(std::vector<TrainResult> runs) {
  TrainSummary s;
  s.runs = std::move(runs);
  s.best = s.runs.front().best_makespan;
  s.best_seed = s.runs.front().seed;
  std::vector<double> makespans;
  for (const auto &r : s.runs) {
    makespans.push_back(static_cast<double>(r.best_makespan));
    if (r.best_makespan < s.best) {
      s.best = r.best_makespan;
      s.best_seed = r.seed;
    }
  }
  std::sort(makespans.begin(), makespans.end());
  const std::size_t take = std::min<std::size_t>(5, makespans.size());
  std::vector<double> top(makespans.begin(), makespans.begin() + take);
  const double mean = std::accumulate(top.begin(), top.end(), 0.0) / static_cast<double>(take);
  s.std5 = sample_std(top, mean);
  return s;
}

const TrainResult &best_run(const TrainSummary &summary) {
  for (const auto &r : summary.runs) {
    if (r.best_makespan == summary.best && r.seed == summary.best_seed) {
      return r;
    }
  }
  return summary.runs.front();
}

struct TrainSpec {
  int tiles = 8;
  int procs = 4;
  int window = 1;
  bool cp_feature = true;
  long steps = 10000;
  int seeds = 10;
  std::uint64_t base_seed = 0;
  int threads = 0;  // 0: hardware concurrency
};

TrainSummary run_training(const TrainSpec &spec) {
  auto graph = std::make_shared<const TaskGraph>(generate_cholesky_dag(spec.tiles));
  EnvConfig env_cfg;
  env_cfg.tiles = spec.tiles;
  env_cfg.processors = spec.procs;
  env_cfg.window = spec.window;
  env_cfg.cp_feature = spec.cp_feature;
  env_cfg.baseline_makespan = asap_schedule(*graph, spec.procs).makespan;
  TrainConfig cfg;
  cfg.total_steps = spec.steps;
  cfg.seed = spec.base_seed;
  int threads = spec.threads > 0 ? spec.threads
                                 : static_cast<int>(std::thread::hardware_concurrency());
  log_progress("training T=" + std::to_string(spec.tiles) + " p=" + std::to_string(spec.procs) +
               " w=" + std::to_string(spec.window) + " cp=" + std::to_string(spec.cp_feature) +
               " seeds=" + std::to_string(spec.seeds));
  return summarize(train_seeds(graph, env_cfg, cfg, spec.seeds, std::max(1, threads)));
}

Checkpoint checkpoint_of(const TrainResult &run) {
  return to_checkpoint(run.best_params);
}

// --- table drivers -------------------------------------------------------

// Trains (or loads from the agents directory) the best-of-N agent for an
// instance; checkpoints are cached as <dir>/agent_T<t>_p<p>_w<w>_cp<f>.json.
PolicyParams agent_for(const TrainSpec &spec, const fs::path &agents_dir) {
  fs::path file = agents_dir / ("agent_T" + std::to_string(spec.tiles) + "_p" +
                                std::to_string(spec.procs) + "_w" + std::to_string(spec.window) +
                                "_cp" + std::to_string(spec.cp_feature ? 1 : 0) + ".json");
  if (fs::exists(file)) {
    log_progress("loading cached agent " + file.string());
    return params_from_checkpoint(load_checkpoint(file));
  }
  TrainSummary summary = run_training(spec);
  const TrainResult &run = best_run(summary);
  fs::create_directories(agents_dir);
  save_checkpoint(file, checkpoint_of(run));
  return run.best_params;
}

timecount_t eval_agent(const PolicyParams &params, int tiles, int procs) {
  auto graph = std::make_shared<const TaskGraph>(generate_cholesky_dag(tiles));
  EnvConfig cfg;
  cfg.tiles = tiles;
  cfg.processors = procs;
  cfg.window = params.window;
  cfg.cp_feature = params.cp_feature;
  cfg.baseline_makespan = asap_schedule(*graph, procs).makespan;
  return evaluate_greedy(graph, cfg, params).makespan;
}

std::string table2_csv(const std::string &flags) {
  std::ostringstream out;
  out << flags_header("table", flags);
  out << "tiles,nodes,nodes_expected,work,work_expected,cp,cp_expected,tolerance_pct,ok\n";
  struct Row {
    int tiles;
    int nodes;
    timecount_t work;
    timecount_t cp;
  };
  for (const Row &row : {Row{4, 21, 116, 74}, Row{8, 121, 536, 158}, Row{16, 817, 3056, 326}}) {
    TaskGraph g = generate_cholesky_dag(row.tiles);
    const bool ok =
        g.node_count() == row.nodes && g.total_work() == row.work && g.critical_path() == row.cp;
    out << row.tiles << ',' << g.node_count() << ',' << row.nodes << ',' << g.total_work() << ','
        << row.work << ',' << g.critical_path() << ',' << row.cp << ",0," << (ok ? 1 : 0)
        << "\n";
  }
  return out.str();
}

std::string table3_csv(const std::string &flags, const fs::path &agents_dir, long steps,
                       int seeds, int threads, bool with_agent) {
  std::ostringstream out;
  out << flags_header("table", flags);
  out << "tiles,procs,agent,agent_expected,agent_tol_pct,asap,asap_expected,asap_tol_pct,"
         "greedy,greedy_expected,greedy_tol_pct,random_mean,random_std,random_expected_mean,"
         "random_expected_std\n";
  struct Row {
    int tiles;
    int procs;
    timecount_t agent;
    timecount_t asap;
    timecount_t greedy;
    double random_mean;
    double random_std;
  };
  for (const Row &row :
       {Row{4, 4, 74, 74, 74, 74.8, 0.87}, Row{8, 4, 163, 160, 173, 196.5, 5.57},
        Row{16, 4, 792, 787, 814, 832.9, 6.09}, Row{8, 2, 280, 282, 286, 300.2, 5.39},
        Row{8, 6, 158, 158, 174, 174.2, 3.24}}) {
    TaskGraph g = generate_cholesky_dag(row.tiles);
    const timecount_t asap = asap_schedule(g, row.procs).makespan;
    const timecount_t greedy = greedy_schedule(g, row.procs).makespan;
    std::vector<double> randoms;
    for (int s = 0; s < 10; ++s) {
      randoms.push_back(static_cast<double>(random_schedule(g, row.procs, s).makespan));
    }
    const double mean = std::accumulate(randoms.begin(), randoms.end(), 0.0) / randoms.size();
    std::string agent_cell;
    if (with_agent) {
      TrainSpec spec;
      spec.tiles = row.tiles;
      spec.procs = row.procs;
      spec.steps = steps;
      spec.seeds = seeds;
      spec.threads = threads;
      agent_cell = std::to_string(eval_agent(agent_for(spec, agents_dir), row.tiles, row.procs));
    }
    out << row.tiles << ',' << row.procs << ',' << agent_cell << ',' << row.agent << ",5," << asap
        << ',' << row.asap << ",2," << greedy << ',' << row.greedy << ",3,"
        << format_double(mean) << ',' << format_double(sample_std(randoms, mean)) << ','
        << format_double(row.random_mean) << ',' << format_double(row.random_std) << "\n";
  }
  return out.str();
}

std::string table4_csv(const std::string &flags, long steps, int seeds, int threads) {
  std::ostringstream out;
  out << flags_header("table", flags);
  out << "tiles,procs,cp_feature,window,best_makespan,std5,expected,expected_std\n";
  struct Row {
    bool cp;
    int window;
    double expected;
    double expected_std;
  };
  for (const Row &row : {Row{true, 0, 163, 3.28}, Row{true, 1, 163, 4.54}, Row{false, 0, 173, 40.13},
                         Row{false, 1, 170, 16.53}, Row{false, 2, 171, 0.89},
                         Row{false, 3, 166, 0.83}, Row{false, 4, 164, 10.58}}) {
    TrainSpec spec;
    spec.tiles = 8;
    spec.procs = 4;
    spec.window = row.window;
    spec.cp_feature = row.cp;
    spec.steps = steps;
    spec.seeds = seeds;
    spec.threads = threads;
    TrainSummary summary = run_training(spec);
    out << "8,4," << (row.cp ? '+' : '-') << ',' << row.window << ',' << summary.best << ','
        << format_double(summary.std5) << ',' << format_double(row.expected) << ','
        << format_double(row.expected_std) << "\n";
  }
  return out.str();
}

std::string table5_csv(const std::string &flags, const fs::path &agents_dir, long steps,
                       int seeds, int threads) {
  std::ostringstream out;
  out << flags_header("table", flags);
  out << "tiles_test,tiles_train,procs_test,procs_train,makespan,expected,tolerance_pct\n";
  auto trained = [&](int tiles, int procs) {
    TrainSpec spec;
    spec.tiles = tiles;
    spec.procs = procs;
    spec.steps = steps;
    spec.seeds = seeds;
    spec.threads = threads;
    return agent_for(spec, agents_dir);
  };
  struct TileRow {
    int test;
    int train;
    timecount_t expected;
  };
  for (const TileRow &row :
       {TileRow{4, 4, 74}, TileRow{4, 8, 74}, TileRow{4, 16, 74}, TileRow{8, 4, 215},
        TileRow{8, 8, 163}, TileRow{8, 16, 175}, TileRow{16, 4, 911}, TileRow{16, 8, 805},
        TileRow{16, 16, 792}}) {
    const timecount_t got = eval_agent(trained(row.train, 4), row.test, 4);
    out << row.test << ',' << row.train << ",4,4," << got << ',' << row.expected << ",5\n";
  }
  struct ProcRow {
    int test;
    int train;
    timecount_t expected;
  };
  for (const ProcRow &row :
       {ProcRow{2, 2, 280}, ProcRow{2, 4, 285}, ProcRow{2, 6, 296}, ProcRow{4, 2, 172},
        ProcRow{4, 4, 163}, ProcRow{4, 6, 178}, ProcRow{6, 2, 158}, ProcRow{6, 4, 159},
        ProcRow{6, 6, 158}}) {
    const timecount_t got = eval_agent(trained(8, row.train), 8, row.test);
    out << "8,8," << row.test << ',' << row.train << ',' << got << ',' << row.expected << ",5\n";
  }
  return out.str();
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Scheduling laboratory for tiled Cholesky task DAGs"};
  app.require_subcommand(1);

  // gen -------------------------------------------------------------------
  auto *gen = app.add_subcommand("gen", "Generate the task DAG and print |V|, W, CP");
  int gen_tiles = 4;
  std::string gen_out;
  std::string gen_format = "dot";
  gen->add_option("--tiles", gen_tiles, "Number of tile rows/columns (T)")
      ->required()
      ->check(CLI::Range(1, 1 << 20));
  gen->add_option("--out", gen_out, "Write the DAG to this path");
  gen->add_option("--format", gen_format, "Output format")
      ->check(CLI::IsMember({"dot", "json"}));

  // bench -----------------------------------------------------------------
  auto *bench = app.add_subcommand("bench", "Run a reference scheduler and emit CSV rows");
  int bench_tiles = 8;
  int bench_procs = 4;
  int bench_seeds = 10;
  std::string bench_algo;
  std::string bench_out;
  bench->add_option("--tiles", bench_tiles, "Number of tiles (T)")
      ->required()
      ->check(CLI::Range(1, 1 << 20));
  bench->add_option("--procs", bench_procs, "Number of processors (p)")
      ->required()
      ->check(CLI::Range(1, 1 << 20));
  bench->add_option("--algo", bench_algo, "Scheduler: asap|greedy|random")
      ->required()
      ->check(CLI::IsMember({"asap", "greedy", "random"}));
  bench->add_option("--seeds", bench_seeds, "Seed count for the random scheduler")
      ->check(CLI::Range(1, 1 << 20));
  bench->add_option("--out", bench_out, "CSV output path");
  std::string bench_trace;
  bench->add_option("--trace", bench_trace,
                    "Write the episode trace JSON of the (last) run to this path");

  // train -----------------------------------------------------------------
  auto *train_cmd = app.add_subcommand("train", "Train seeded scheduling agents");
  TrainSpec spec;
  bool no_cp_feature = false;
  std::string train_out = "train_out";
  train_cmd->add_option("--tiles", spec.tiles, "Number of tiles (T)")
      ->required()
      ->check(CLI::Range(1, 1 << 20));
  train_cmd->add_option("--procs", spec.procs, "Number of processors (p)")
      ->required()
      ->check(CLI::Range(1, 1 << 20));
  train_cmd->add_option("--window", spec.window, "Observation depth w")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_flag("--no-cp-feature", no_cp_feature,
                      "Zero the critical-path column of the node features");
  train_cmd->add_option("--steps", spec.steps, "Environment decision steps per run")
      ->check(CLI::NonNegativeNumber);
  train_cmd->add_option("--seeds", spec.seeds, "Number of independent seeded runs")
      ->check(CLI::Range(1, 1 << 20));
  train_cmd->add_option("--seed", spec.base_seed, "Base seed (run i uses seed base+i)");
  train_cmd->add_option("--threads", spec.threads, "Worker threads (0 = hardware)");
  train_cmd->add_option("--out", train_out, "Output directory")->required();

  // eval ------------------------------------------------------------------
  auto *eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint with greedy actions");
  std::string eval_checkpoint;
  int eval_tiles = 8;
  int eval_procs = 4;
  int eval_episodes = 1;
  int eval_window = -1;
  std::string eval_out;
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint JSON path")->required();
  eval_cmd->add_option("--tiles", eval_tiles, "Target tiles (T)")
      ->required()
      ->check(CLI::Range(1, 1 << 20));
  eval_cmd->add_option("--procs", eval_procs, "Target processors (p)")
      ->required()
      ->check(CLI::Range(1, 1 << 20));
  eval_cmd->add_option("--episodes", eval_episodes, "Greedy episodes to run")
      ->check(CLI::Range(1, 1 << 20));
  eval_cmd->add_option("--window", eval_window,
                       "Expected observation window; must match the checkpoint");
  eval_cmd->add_option("--out", eval_out, "CSV output path");
  std::string eval_trace;
  eval_cmd->add_option("--trace", eval_trace,
                       "Write the episode trace JSON of the last episode to this path");

  // table -----------------------------------------------------------------
  auto *table = app.add_subcommand("table", "Rebuild a result table as CSV");
  int table_which = 2;
  std::string table_out;
  std::string agents_dir = "agents";
  long table_steps = 10000;
  int table_seeds = 10;
  int table_threads = 0;
  bool table_with_agent = false;
  table->add_option("--which", table_which,
                    "2: DAG characteristics, 3: makespan comparison, 4: window/CP ablation, "
                    "5: transfer matrix")
      ->required()
      ->check(CLI::IsMember({2, 3, 4, 5}));
  table->add_option("--out", table_out, "CSV output path")->required();
  table->add_option("--agents", agents_dir, "Directory of cached agent checkpoints");
  table->add_option("--steps", table_steps, "Training steps for agents trained on demand")
      ->check(CLI::NonNegativeNumber);
  table->add_option("--seeds", table_seeds, "Seeds per training configuration")
      ->check(CLI::Range(1, 1 << 20));
  table->add_option("--threads", table_threads, "Worker threads (0 = hardware)");
  table->add_flag("--with-agent", table_with_agent,
                  "Also fill the agent column of the makespan comparison (trains on demand)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      TaskGraph g = generate_cholesky_dag(gen_tiles);
      std::cout << "|V|=" << g.node_count() << " W=" << g.total_work()
                << " CP=" << g.critical_path() << "\n";
      if (!gen_out.empty()) {
        write_file(gen_out, gen_format == "dot" ? export_dot(g) : export_json(g));
        log_progress("wrote " + gen_out);
      }
    } else if (*bench) {
      std::ostringstream flags;
      flags << "--tiles " << bench_tiles << " --procs " << bench_procs << " --algo "
            << bench_algo << " --seeds " << bench_seeds;
      TaskGraph g = generate_cholesky_dag(bench_tiles);
      ScheduleResult last;
      auto rows = run_baseline(bench_algo, g, bench_procs, bench_seeds, &last);
      if (rows.size() == 1) {
        std::cout << bench_algo << " T=" << bench_tiles << " p=" << bench_procs
                  << " makespan=" << rows[0].makespan << "\n";
      } else {
        std::vector<double> makespans;
        for (const auto &r : rows) {
          makespans.push_back(static_cast<double>(r.makespan));
        }
        const double mean =
            std::accumulate(makespans.begin(), makespans.end(), 0.0) / makespans.size();
        std::cout << bench_algo << " T=" << bench_tiles << " p=" << bench_procs
                  << " seeds=" << rows.size() << " mean=" << format_double(mean)
                  << " std=" << format_double(sample_std(makespans, mean)) << "\n";
      }
      if (!bench_out.empty()) {
        write_file(bench_out, bench_csv(rows, flags.str()));
      }
      if (!bench_trace.empty()) {
        write_file(bench_trace,
                   SchedulingEnv::trace_to_json(g, bench_procs, true, last.makespan,
                                                last.decisions, last.intervals));
      }
    } else if (*train_cmd) {
      spec.cp_feature = !no_cp_feature;
      std::ostringstream flags;
      flags << "--tiles " << spec.tiles << " --procs " << spec.procs << " --window "
            << spec.window << (spec.cp_feature ? "" : " --no-cp-feature") << " --steps "
            << spec.steps << " --seeds " << spec.seeds << " --seed " << spec.base_seed;
      TrainSummary summary = run_training(spec);
      const fs::path out_dir(train_out);
      std::ostringstream csv;
      csv << flags_header("train", flags.str());
      csv << "seed,best_makespan\n";
      for (const auto &run : summary.runs) {
        const fs::path seed_dir = out_dir / ("seed_" + std::to_string(run.seed));
        write_file(seed_dir / "train_log.csv", run.log_csv);
        save_checkpoint(seed_dir / "checkpoint.json", to_checkpoint(run.best_params));
        csv << run.seed << ',' << run.best_makespan << "\n";
      }
      csv << "# best_makespan=" << summary.best << " best_seed=" << summary.best_seed
          << " std5_best=" << format_double(summary.std5) << "\n";
      write_file(out_dir / "summary.csv", csv.str());
      save_checkpoint(out_dir / "best_checkpoint.json",
                      to_checkpoint(best_run(summary).best_params));
      std::cout << "best_makespan=" << summary.best << " best_seed=" << summary.best_seed
                << " std5_best=" << format_double(summary.std5) << "\n";
      std::cout << "outputs in " << out_dir.string() << "\n";
    } else if (*eval_cmd) {
      PolicyParams params = params_from_checkpoint(load_checkpoint(eval_checkpoint));
      if (eval_window >= 0 && eval_window != params.window) {
        throw std::runtime_error("architecture mismatch: checkpoint window is " +
                                 std::to_string(params.window) + ", requested " +
                                 std::to_string(eval_window));
      }
      auto graph = std::make_shared<const TaskGraph>(generate_cholesky_dag(eval_tiles));
      EnvConfig cfg;
      cfg.tiles = eval_tiles;
      cfg.processors = eval_procs;
      cfg.window = params.window;
      cfg.cp_feature = params.cp_feature;
      cfg.baseline_makespan = asap_schedule(*graph, eval_procs).makespan;
      std::ostringstream flags;
      flags << "--checkpoint " << eval_checkpoint << " --tiles " << eval_tiles << " --procs "
            << eval_procs << " --episodes " << eval_episodes;
      std::ostringstream csv;
      csv << flags_header("eval", flags.str());
      csv << "episode,makespan,mean_action_us\n";
      EvalResult last;
      for (int e = 0; e < eval_episodes; ++e) {
        last = evaluate_greedy(graph, cfg, params);
        csv << e << ',' << last.makespan << ','
            << format_double(last.mean_action_seconds * 1e6) << "\n";
      }
      std::cout << "eval T=" << eval_tiles << " p=" << eval_procs
                << " makespan=" << last.makespan << " asap=" << cfg.baseline_makespan
                << " mean_action_us=" << format_double(last.mean_action_seconds * 1e6) << "\n";
      if (!eval_out.empty()) {
        write_file(eval_out, csv.str());
      }
      if (!eval_trace.empty()) {
        write_file(eval_trace,
                   SchedulingEnv::trace_to_json(*graph, eval_procs, true, last.makespan,
                                                last.decisions, last.intervals));
      }
    } else if (*table) {
      std::ostringstream flags;
      flags << "--which " << table_which << " --steps " << table_steps << " --seeds "
            << table_seeds;
      std::string csv;
      switch (table_which) {
      case 2:
        csv = table2_csv(flags.str());
        break;
      case 3:
        csv = table3_csv(flags.str(), agents_dir, table_steps, table_seeds, table_threads,
                         table_with_agent);
        break;
      case 4:
        csv = table4_csv(flags.str(), table_steps, table_seeds, table_threads);
        break;
      default:
        csv = table5_csv(flags.str(), agents_dir, table_steps, table_seeds, table_threads);
        break;
      }
      write_file(table_out, csv);
      std::cout << csv;
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

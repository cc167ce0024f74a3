// Command-line driver: generate truth trajectories, run single experiments,
// and sweep the benchmark presets.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <future>
#include <semaphore>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "enda/errors.hpp"
#include "enda/harness.hpp"

namespace {

using namespace enda;

struct CommonArgs {
  std::string config_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  std::optional<int> cycles;
  std::string out_dir = ".";
  bool allow_misspecified = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_variant) {
  cmd->add_option("--config", args.config_path, "experiment config file");
  cmd->add_option("--preset", args.preset_name,
                  "named preset (see `enda presets`)");
  cmd->add_option("--seed", args.seed, "64-bit RNG seed");
  if (with_variant) {
    cmd->add_option("--variant", args.variant, "filter variant: vanilla|cg|ns");
    cmd->add_flag("--allow-misspecified", args.allow_misspecified,
                  "permit the vanilla variant off linear+Gaussian observations");
  }
  cmd->add_option("--cycles", args.cycles, "override the number of cycles");
  cmd->add_option("--out", args.out_dir, "output directory");
}

harness::ParsedConfig load(const CommonArgs& args) {
  if (!args.config_path.empty() && !args.preset_name.empty()) {
    throw ConfigError("pass either --config or --preset, not both");
  }
  harness::ParsedConfig pc;
  if (!args.preset_name.empty()) {
    pc = harness::preset(args.preset_name);
  } else if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw IoError("cannot read config: " + args.config_path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    pc = harness::parse_config(text);
  }
  if (args.seed) pc.config.seed = *args.seed;
  if (args.cycles) pc.config.n_cycles = *args.cycles;
  if (args.variant) {
    if (*args.variant == "vanilla") pc.config.filter.variant = filter::Variant::vanilla;
    else if (*args.variant == "cg") pc.config.filter.variant = filter::Variant::cg;
    else if (*args.variant == "ns") pc.config.filter.variant = filter::Variant::ns;
    else throw ConfigError("unknown filter variant '" + *args.variant + "'");
    pc.variant_set = true;
  }
  if (args.allow_misspecified) pc.config.filter.allow_misspecified = true;
  return pc;
}

std::string run_basename(const harness::ExperimentConfig& cfg) {
  std::string base = cfg.preset_name.empty() ? "run" : cfg.preset_name;
  base += "_";
  switch (cfg.filter.variant) {
    case filter::Variant::vanilla: base += "vanilla"; break;
    case filter::Variant::cg: base += "cg"; break;
    case filter::Variant::ns: base += "ns"; break;
  }
  return base;
}

int cmd_truth(const CommonArgs& args) {
  harness::ParsedConfig pc = load(args);
  pc.variant_set = true;  // the variant is irrelevant to the truth
  const harness::ExperimentConfig cfg = harness::finalize(pc);
  const model::Trajectory traj = harness::make_truth(cfg);
  const std::string path = args.out_dir + "/truth.csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  harness::emit_trajectory_csv(traj, out);
  out.flush();
  if (!out) throw IoError("write failed: " + path);
  std::cout << "wrote " << path << " (" << traj.times.size() << " states)\n";
  return 0;
}

int cmd_run(const CommonArgs& args) {
  const harness::ExperimentConfig cfg = harness::finalize(load(args));
  const harness::RunReport report = harness::run_experiment(cfg);

  const std::string base = args.out_dir + "/" + run_basename(cfg);
  const std::string csv_path =
      cfg.csv_path.empty() ? base + "_cycles.csv" : cfg.csv_path;
  const std::string summary_path =
      cfg.summary_path.empty() ? base + "_summary.txt" : cfg.summary_path;
  const std::string summary_csv_path =
      cfg.summary_path.empty() ? base + "_summary.csv"
                               : cfg.summary_path + ".csv";

  harness::emit_csv(report, csv_path);
  harness::emit_summary({report}, summary_path, summary_csv_path);
  std::cout << harness::summary_table({report});
  if (report.status == harness::RunOutcome::diverged) {
    std::cerr << "run diverged at cycle " << report.diverged_cycle << "\n";
    return 3;
  }
  return 0;
}

struct BenchJob {
  std::string preset;
  filter::Variant variant;
  bool allow_misspecified = false;
};

int cmd_bench(const CommonArgs& args, const std::string& table, int jobs) {
  std::vector<BenchJob> table1 = {
      {"cubic-sf-comparison", filter::Variant::cg, false},
      {"cubic-sf-comparison", filter::Variant::ns, false},
  };
  std::vector<BenchJob> table3 = {
      {"linear-long", filter::Variant::cg, false},
      {"linear-long", filter::Variant::ns, false},
      {"linear-long", filter::Variant::vanilla, false},
      {"exponential-long", filter::Variant::cg, false},
      {"exponential-long", filter::Variant::ns, false},
      {"exponential-long", filter::Variant::vanilla, true},
      {"bimodal-long", filter::Variant::cg, false},
      {"bimodal-long", filter::Variant::ns, false},
      {"bimodal-long", filter::Variant::vanilla, true},
      {"cubic-long", filter::Variant::cg, false},
      {"cubic-long", filter::Variant::ns, false},
      {"pareto-long", filter::Variant::ns, false},
  };

  std::vector<std::pair<std::string, std::vector<BenchJob>>> groups;
  if (table == "1" || table == "all") groups.emplace_back("table1", table1);
  if (table == "3" || table == "all") groups.emplace_back("table3", table3);
  if (groups.empty()) throw ConfigError("--table must be 1, 3, or all");

  for (const auto& [group_name, group_jobs] : groups) {
    auto run_one = [&](const BenchJob& job) {
      harness::ParsedConfig pc = harness::preset(job.preset);
      pc.config.filter.variant = job.variant;
      pc.variant_set = true;
      pc.config.filter.allow_misspecified = job.allow_misspecified;
      if (args.seed) pc.config.seed = *args.seed;
      if (args.cycles) pc.config.n_cycles = *args.cycles;
      const harness::ExperimentConfig cfg = harness::finalize(pc);
      harness::RunReport report = harness::run_experiment(cfg);
      harness::emit_csv(report,
                        args.out_dir + "/" + run_basename(cfg) + "_cycles.csv");
      return report;
    };

    std::vector<harness::RunReport> reports(group_jobs.size());
    if (jobs <= 1) {
      for (std::size_t i = 0; i < group_jobs.size(); ++i) {
        reports[i] = run_one(group_jobs[i]);
      }
    } else {
      std::counting_semaphore<> slots(jobs);
      std::vector<std::future<harness::RunReport>> futures;
      futures.reserve(group_jobs.size());
      for (const auto& job : group_jobs) {
        futures.push_back(std::async(std::launch::async, [&slots, &run_one, job] {
          slots.acquire();
          auto report = run_one(job);
          slots.release();
          return report;
        }));
      }
      for (std::size_t i = 0; i < futures.size(); ++i) {
        reports[i] = futures[i].get();
      }
    }

    harness::emit_summary(reports, args.out_dir + "/" + group_name + "_summary.txt",
                          args.out_dir + "/" + group_name + "_summary.csv");
    std::cout << group_name << "\n" << harness::summary_table(reports) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ensemble data assimilation benchmark for Lorenz-96"};
  app.require_subcommand(1);

  CommonArgs truth_args, run_args, bench_args;
  std::string bench_table = "all";
  int bench_jobs = 1;

  CLI::App* truth = app.add_subcommand("truth", "emit a truth trajectory CSV");
  add_common(truth, truth_args, false);

  CLI::App* run = app.add_subcommand("run", "run a single experiment");
  add_common(run, run_args, true);

  CLI::App* bench =
      app.add_subcommand("bench", "run the benchmark preset sweep");
  bench->add_option("--seed", bench_args.seed, "64-bit RNG seed");
  bench->add_option("--cycles", bench_args.cycles,
                    "override the number of cycles for every run");
  bench->add_option("--out", bench_args.out_dir, "output directory");
  bench->add_option("--table", bench_table, "which table to reproduce: 1|3|all");
  bench->add_option("--jobs", bench_jobs, "independent experiments in parallel");

  CLI::App* presets = app.add_subcommand("presets", "list preset names");

  try {
    app.parse(argc, argv);
    if (presets->parsed()) {
      for (const auto& name : enda::harness::preset_names()) {
        std::cout << name << "\n";
      }
      return 0;
    }
    if (truth->parsed()) return cmd_truth(truth_args);
    if (run->parsed()) return cmd_run(run_args);
    if (bench->parsed()) return cmd_bench(bench_args, bench_table, bench_jobs);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const enda::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const enda::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

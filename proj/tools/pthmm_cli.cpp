#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pthmm/diagnostics.hpp"
#include "pthmm/hmm.hpp"
#include "pthmm/io.hpp"
#include "pthmm/priors.hpp"
#include "pthmm/pt.hpp"
#include "pthmm/target.hpp"
#include "pthmm/tuner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string data_path;
  std::string out_path;
  std::optional<std::uint64_t> seed_override;
  int jobs = 1;
  std::string resume_path;
};

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw pthmm::DataError("cannot write " + path.string());
  out << content;
}

std::vector<std::uint64_t> effective_seeds(const pthmm::RunConfig& config,
                                           const CommonArgs& args) {
  if (args.seed_override) return {*args.seed_override};
  return config.seeds;
}

fs::path out_dir(const CommonArgs& args) {
  if (args.out_path.empty()) {
    throw pthmm::ConfigError("--out is required");
  }
  fs::path dir(args.out_path);
  fs::create_directories(dir);
  return dir;
}

std::string seed_tag(std::uint64_t seed) {
  return "seed" + std::to_string(seed);
}

pthmm::ObservationSet load_data(const pthmm::RunConfig& config,
                                const CommonArgs& args) {
  const std::string path =
      args.data_path.empty() ? config.io.data_path : args.data_path;
  if (path.empty()) {
    throw pthmm::ConfigError("no data path: pass --data or set io.data_path");
  }
  return pthmm::load_sequences(path, config.model);
}

int cmd_simulate(const CommonArgs& args) {
  const pthmm::RunConfig config = pthmm::load_run_config(args.config_path);
  if (!config.simulate) {
    throw pthmm::ConfigError("config has no simulate block");
  }
  const auto seeds = effective_seeds(config, args);
  const fs::path dir = out_dir(args);

  const pthmm::ObservationSet data =
      pthmm::simulate(config.model, config.simulate->theta,
                      config.simulate->lengths, config.simulate->covariates,
                      seeds.front());
  pthmm::write_sequences((dir / "data.csv").string(), config.model, data);

  // Ground truth in flat coordinates, for recovery checks downstream.
  const std::vector<double> flat =
      pthmm::flatten(config.model, config.simulate->theta);
  const std::vector<std::string> names = pthmm::coord_names(config.model);
  std::ostringstream truth;
  truth << "coordinate,value\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    truth << names[i] << ',' << pthmm::format_double(flat[i]) << '\n';
  }
  write_text(dir / "truth.csv", truth.str());
  std::cout << truth.str();
  return 0;
}

int cmd_tune(const CommonArgs& args) {
  const pthmm::RunConfig config = pthmm::load_run_config(args.config_path);
  if (!config.tune) throw pthmm::ConfigError("config has no tune block");
  const auto seeds = effective_seeds(config, args);
  const fs::path dir = out_dir(args);

  const pthmm::ObservationSet data = load_data(config, args);
  const pthmm::HmmTarget target(config.model, data, config.prior);
  pthmm::TuneOptions options = *config.tune;
  options.seed = seeds.front();
  options.n_threads = args.jobs;
  const pthmm::TemperatureLadder ladder = pthmm::tune_ladder(target, options);
  write_text(dir / "ladder.json", pthmm::ladder_to_json(ladder));
  std::cout << "ladder levels: " << ladder.n_levels()
            << " hottest beta: " << ladder.betas.back() << '\n';
  return 0;
}

void run_one_seed(const pthmm::Target& target, pthmm::PtConfig pt,
                  std::uint64_t seed, const fs::path& dir,
                  const pthmm::RunConfig& config, const std::string& resume) {
  pt.seed = seed;
  pthmm::PtEngine engine(target, pt);

  std::string ckpt = config.io.checkpoint_path;
  if (ckpt.empty() && config.io.checkpoint_every > 0) {
    ckpt = (dir / ("checkpoint_" + seed_tag(seed) + ".bin")).string();
  }
  if (!resume.empty()) {
    pthmm::resume_from_file(engine, resume);
  } else {
    engine.init_from_prior();
  }
  if (config.io.checkpoint_every > 0) {
    engine.set_checkpoint_hook(
        config.io.checkpoint_every,
        [ckpt](const pthmm::PtEngine& e) { pthmm::checkpoint_to_file(e, ckpt); });
  }
  engine.run();

  pthmm::write_samples(engine.samples(),
                       (dir / ("samples_" + seed_tag(seed) + ".csv")).string());
  std::ofstream trace(dir / ("trace_" + seed_tag(seed) + ".csv"));
  pthmm::write_lineage_trace(trace, engine.trajectory());
  write_text(dir / ("ladder_" + seed_tag(seed) + ".json"),
             pthmm::ladder_to_json(engine.ladder()));
}

int cmd_sample(const CommonArgs& args) {
  const pthmm::RunConfig config = pthmm::load_run_config(args.config_path);
  if (!config.pt) throw pthmm::ConfigError("config has no pt block");
  const auto seeds = effective_seeds(config, args);
  const fs::path dir = out_dir(args);

  const pthmm::ObservationSet data = load_data(config, args);
  const pthmm::HmmTarget target(config.model, data, config.prior);

  pthmm::PtConfig pt = *config.pt;
  if (pt.ladder.betas.empty()) {
    if (!config.tune) {
      throw pthmm::ConfigError("pt.ladder missing and no tune block given");
    }
    pthmm::TuneOptions options = *config.tune;
    options.seed = seeds.front();
    pt.ladder = pthmm::tune_ladder(target, options);
    pt.ladder.reset_counters();
  }

  if (!args.resume_path.empty() && seeds.size() > 1) {
    throw pthmm::ConfigError("--resume works with a single seed");
  }

  if (args.jobs > 1 && seeds.size() > 1) {
    // Seeds are independent runs; replica-level threading stays off so the
    // per-run draw stream is identical either way.
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    std::atomic<std::size_t> next{0};
    const int workers = std::min<int>(args.jobs, static_cast<int>(seeds.size()));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < seeds.size();
             i = next.fetch_add(1)) {
          try {
            run_one_seed(target, pt, seeds[i], dir, config, "");
          } catch (...) {
            std::scoped_lock lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  } else {
    pt.n_threads = args.jobs;
    for (std::uint64_t seed : seeds) {
      run_one_seed(target, pt, seed, dir, config, args.resume_path);
    }
  }
  return 0;
}

int cmd_diagnose(const CommonArgs& args, const std::string& samples_path,
                 const std::string& trajectory_path) {
  const pthmm::RunConfig config = pthmm::load_run_config(args.config_path);
  const fs::path dir = out_dir(args);
  const pthmm::SampleStore raw = pthmm::read_samples(samples_path);
  if (raw.n_rows() == 0) throw pthmm::DataError("sample file has no draws");

  pthmm::RunConfig::DiagnoseBlock diag;
  if (config.diagnose) diag = *config.diagnose;

  json report;
  report["n_draws"] = raw.n_rows();

  pthmm::SampleStore store = raw;
  if (!diag.constraint.empty()) {
    pthmm::RelabelResult relabeled =
        pthmm::relabel_by_ordering(raw, config.model, diag.constraint);
    report["relabeling"] = {{"applied", true},
                            {"constraint", diag.constraint},
                            {"draws_permuted", relabeled.n_permuted},
                            {"ties", relabeled.n_ties}};
    for (const std::string& w : relabeled.warnings) {
      report["relabeling"]["warnings"].push_back(w);
    }
    store = std::move(relabeled.store);
    pthmm::write_samples(store, (dir / "samples_relabeled.csv").string());
  } else {
    report["relabeling"] = {{"applied", false},
                            {"note", "no ordering constraint given"}};
  }

  json per_coord = json::array();
  for (const std::string& name : store.names) {
    const std::vector<double> chain = store.column_values(name);
    json entry;
    entry["coordinate"] = name;
    if (chain.size() >= 8) {
      const double rhat = pthmm::split_rhat({chain});
      const double ess = pthmm::ess_basic({chain});
      if (std::isfinite(rhat)) entry["rhat"] = rhat;
      if (std::isfinite(ess)) entry["ess"] = ess;
    }
    per_coord.push_back(entry);
  }
  report["coordinates"] = per_coord;

  if (!diag.regions.empty()) {
    json weights = json::array();
    std::ostringstream running;
    running << "draw_index";
    std::vector<std::vector<double>> series;
    for (const pthmm::ModeRegion& region : diag.regions) {
      series.push_back(
          pthmm::running_weight(store, region, diag.burn_in_index));
      weights.push_back({{"region", region.name},
                         {"coordinate", region.coordinate},
                         {"weight", series.back().back()}});
      running << ',' << region.name;
    }
    running << '\n';
    for (std::size_t k = 0; k < series.front().size(); ++k) {
      running << (diag.burn_in_index + k);
      for (const auto& s : series) {
        running << ',' << pthmm::format_double(s[k]);
      }
      running << '\n';
    }
    write_text(dir / "running_weights.csv", running.str());
    report["mode_weights"] = weights;
  }

  if (!trajectory_path.empty()) {
    std::ifstream in(trajectory_path);
    if (!in) throw pthmm::DataError("cannot open " + trajectory_path);
    pthmm::ReplicaTrajectory traj;
    std::string line;
    std::getline(in, line);  // header
    std::uint64_t max_iter = 0;
    std::uint32_t max_lineage = 0;
    std::vector<std::tuple<std::uint64_t, std::uint32_t, std::uint8_t>> rows;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string a, b, c;
      std::getline(ls, a, ',');
      std::getline(ls, b, ',');
      std::getline(ls, c, ',');
      rows.emplace_back(std::stoull(a), std::stoul(b),
                        static_cast<std::uint8_t>(std::stoi(c)));
      max_iter = std::max(max_iter, std::get<0>(rows.back()));
      max_lineage = std::max(max_lineage, std::get<1>(rows.back()));
    }
    traj.n_levels = max_lineage + 1;
    traj.n_recorded = max_iter;
    traj.positions.assign(traj.n_recorded * traj.n_levels, 0);
    for (const auto& [it, lineage, pos] : rows) {
      traj.positions[(it - 1) * traj.n_levels + lineage] = pos;
    }
    const pthmm::RoundTrips trips = pthmm::count_round_trips(traj);
    report["round_trips"] = {{"total", trips.total},
                             {"per_lineage", trips.per_lineage}};
  }

  const std::vector<pthmm::CoordinateSummary> rows =
      pthmm::summarize(store, diag.regions);
  std::ostringstream summary;
  pthmm::write_summary_csv(summary, rows);
  write_text(dir / "summary.csv", summary.str());

  write_text(dir / "report.json", report.dump(2) + "\n");
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_demo_tempered_prior(const std::vector<double>& betas, int n_states,
                            std::uint64_t n_draws, std::uint64_t seed,
                            const CommonArgs& args) {
  const fs::path dir = out_dir(args);
  std::ostringstream out;
  out << "beta,expected_max_row_probability\n";
  for (double beta : betas) {
    const double value =
        pthmm::tempered_prior_demo(beta, n_states, n_draws, seed);
    out << pthmm::format_double(beta) << ','
        << pthmm::format_double(value) << '\n';
  }
  write_text(dir / "tempered_prior.csv", out.str());
  std::cout << out.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parallel-tempered Bayesian inference for multivariate HMMs"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string samples_path;
  std::string trajectory_path;
  std::vector<double> demo_betas{1.0, 0.5, 0.25};
  int demo_states = 3;
  std::uint64_t demo_draws = 100000;
  std::uint64_t demo_seed = 0;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", args.config_path, "run config JSON");
    if (needs_config) opt->required();
    cmd->add_option("--data", args.data_path, "observation CSV");
    cmd->add_option("--out", args.out_path, "output directory")->required();
    cmd->add_option("--seed", args.seed_override, "override config seeds");
    cmd->add_option("--jobs", args.jobs, "worker threads");
    cmd->add_option("--resume", args.resume_path, "checkpoint to resume from");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "draw synthetic data");
  add_common(simulate, true);
  CLI::App* tune = app.add_subcommand("tune", "tune the temperature ladder");
  add_common(tune, true);
  CLI::App* sample = app.add_subcommand("sample", "run the PT sampler");
  add_common(sample, true);
  CLI::App* diagnose = app.add_subcommand("diagnose", "post-run diagnostics");
  add_common(diagnose, true);
  diagnose->add_option("--samples", samples_path, "sample CSV")->required();
  diagnose->add_option("--trajectory", trajectory_path, "lineage trace CSV");
  CLI::App* demo =
      app.add_subcommand("demo-tempered-prior",
                         "expected max row probability under tempered priors");
  demo->add_option("--beta", demo_betas, "inverse temperatures");
  demo->add_option("--states", demo_states, "number of states");
  demo->add_option("--draws", demo_draws, "Monte Carlo draws");
  demo->add_option("--seed", demo_seed, "RNG seed");
  demo->add_option("--out", args.out_path, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: config: " << e.what() << '\n';
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(args);
    if (tune->parsed()) return cmd_tune(args);
    if (sample->parsed()) return cmd_sample(args);
    if (diagnose->parsed()) {
      return cmd_diagnose(args, samples_path, trajectory_path);
    }
    if (demo->parsed()) {
      return cmd_demo_tempered_prior(demo_betas, demo_states, demo_draws,
                                     demo_seed, args);
    }
  } catch (const pthmm::ConfigError& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return 2;
  } catch (const pthmm::DataError& e) {
    std::cerr << "error: data: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: runtime: " << e.what() << '\n';
    return 4;
  }
  return 0;
}

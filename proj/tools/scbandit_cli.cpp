// scbandit: run and inspect sequential-choice bandit experiments.
//
//   scbandit run <config> --out DIR     replicated seeded simulation -> CSVs
//   scbandit validate <config>          parse + validate, print a summary
//   scbandit oracle <config>            optimal sequence for the instance
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scb/scb.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::int64_t seed = -1;
  std::int64_t reps = -1;
  std::int64_t horizon = -1;
  std::int64_t parallelism = -1;
};

scb::ExperimentConfig load_config(const CommonArgs& args) {
  scb::ExperimentConfig cfg = scb::parse_config_file(args.config_path);
  if (args.seed >= 0) cfg.seed = static_cast<std::uint64_t>(args.seed);
  if (args.reps >= 0) {
    if (args.reps < 1) throw scb::ConfigError("--reps must be at least 1");
    cfg.replications = static_cast<int>(args.reps);
  }
  if (args.horizon >= 0) {
    if (args.horizon < 1) throw scb::ConfigError("--horizon must be at least 1");
    cfg.horizon = static_cast<std::uint64_t>(args.horizon);
  }
  if (args.parallelism >= 0) cfg.parallelism = static_cast<int>(args.parallelism);
  return cfg;
}

void describe(const scb::ExperimentConfig& cfg, std::ostream& out) {
  out << "catalog: n = " << cfg.catalog.n << "\n"
      << "mode: " << (cfg.is_contextual() ? "contextual" : "flat") << "\n"
      << "horizon: " << cfg.horizon << ", replications: " << cfg.replications
      << ", seed: " << cfg.seed << "\n"
      << "record stride: " << cfg.record_stride
      << ", shared instance: " << (cfg.shared_instance ? "true" : "false") << "\n"
      << "policies:";
  for (const scb::PolicySpec& pol : cfg.policies) out << ' ' << pol.name;
  out << "\nconfig hash: " << scb::config_hash_hex(cfg) << "\n";
}

int cmd_run(const CommonArgs& args, const std::string& out_dir, bool no_resume) {
  scb::ExperimentConfig cfg = load_config(args);
  scb::RunOptions opt;
  opt.checkpoint_dir = out_dir + "/checkpoints";
  if (no_resume) {
    std::filesystem::remove_all(opt.checkpoint_dir);
  }
  const scb::ExperimentResult result = scb::run_experiment(cfg, opt);
  scb::emit_results(result, out_dir);

  std::cout << "wrote " << out_dir << "/records.csv, aggregate.csv, manifest.json\n";
  const std::vector<scb::AggregateRow> agg = scb::aggregate_curves(result);
  for (const scb::PolicySpec& pol : cfg.policies) {
    for (auto it = agg.rbegin(); it != agg.rend(); ++it) {
      if (it->policy == pol.name) {
        std::cout << pol.name << ": mean cumulative regret at t = " << it->t
                  << " is " << it->mean_cum_regret << " (stderr "
                  << it->stderr_cum_regret << ")\n";
        break;
      }
    }
  }
  return 0;
}

int cmd_validate(const CommonArgs& args) {
  const scb::ExperimentConfig cfg = load_config(args);
  std::cout << "config ok\n";
  describe(cfg, std::cout);
  return 0;
}

int cmd_oracle(const CommonArgs& args) {
  const scb::ExperimentConfig cfg = load_config(args);
  if (cfg.is_contextual()) {
    throw scb::ConfigError(
        "oracle needs a flat [environment]; the contextual optimum varies per user");
  }
  // Inspect replication 0's instance (the shared one, if so configured).
  scb::RngStream rng(scb::derive_seed(scb::derive_seed(cfg.seed, scb::seedtag::kInstance), 0));
  std::vector<double> revenues =
      scb::detail::materialize(cfg.catalog.revenues, cfg.catalog.n, rng);
  std::vector<double> valuations =
      scb::detail::materialize(cfg.flat->valuations, cfg.catalog.n, rng);
  const scb::MessageCatalog catalog{revenues};
  const scb::EnvironmentParams env{valuations, cfg.flat->p, cfg.flat->c};

  std::cout << "instance (replication 0):\n";
  for (int i = 0; i < catalog.size(); ++i) {
    std::cout << "  message " << i << ": revenue " << revenues[static_cast<std::size_t>(i)]
              << ", valuation " << valuations[static_cast<std::size_t>(i)] << "\n";
  }
  std::cout << "  p = " << env.abandon_prob << ", c = " << env.abandon_cost << "\n";

  const scb::Sequence seq = scb::optimal_sequence(catalog, env);
  const double payoff = scb::expected_payoff(catalog, env, seq).expected_payoff;
  std::cout << "score-ordered optimal sequence: [";
  for (std::size_t k = 0; k < seq.order.size(); ++k) {
    std::cout << (k ? " " : "") << seq.order[k];
  }
  std::cout << "], expected payoff " << payoff << "\n";

  if (catalog.size() <= 8) {
    const scb::OracleResult brute = scb::enumerate_optimal(catalog, env);
    std::cout << "exhaustive-search optimum:       [";
    for (std::size_t k = 0; k < brute.sequence.order.size(); ++k) {
      std::cout << (k ? " " : "") << brute.sequence.order[k];
    }
    std::cout << "], expected payoff " << brute.payoff << "\n";
  } else {
    std::cout << "exhaustive search skipped (catalog larger than 8 messages)\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sequential-choice bandit experiments"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string out_dir;
  bool no_resume = false;

  CLI::App* run = app.add_subcommand("run", "run a replicated experiment");
  run->add_option("config", args.config_path, "experiment config file")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--seed", args.seed, "override base seed");
  run->add_option("--reps", args.reps, "override replication count");
  run->add_option("--horizon", args.horizon, "override horizon T");
  run->add_option("--parallelism", args.parallelism, "override worker count");
  run->add_flag("--no-resume", no_resume, "discard existing checkpoints first");

  CLI::App* validate = app.add_subcommand("validate", "check a config file");
  validate->add_option("config", args.config_path, "experiment config file")->required();

  CLI::App* oracle = app.add_subcommand("oracle", "print the optimal sequence");
  oracle->add_option("config", args.config_path, "experiment config file")->required();
  oracle->add_option("--seed", args.seed, "override base seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(args, out_dir, no_resume);
    if (validate->parsed()) return cmd_validate(args);
    if (oracle->parsed()) return cmd_oracle(args);
  } catch (const scb::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "scb/config.hpp"
#include "scb/glm.hpp"
#include "scb/learner.hpp"
#include "scb/optimize.hpp"
#include "scb/oracle.hpp"
#include "scb/payoff.hpp"
#include "scb/rng.hpp"
#include "scb/simulate.hpp"
#include "scb/types.hpp"

namespace scb {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Seeding scheme (reproducibility contract, documented in the README)
//
// All randomness hangs off the base seed through named substreams:
//   instance stream   derive(derive(base, 1000), shared_instance ? 0 : rep)
//   feature stream    derive(derive(base, 3000), rep)            [contextual]
//   episode stream    derive(derive(derive(base, 2000), rep), fnv1a64(policy))
// Keying episodes by policy name keeps a policy's draws stable when other
// policies are added to or dropped from the config; keying features by
// replication alone serves every policy the identical user stream.
// ---------------------------------------------------------------------------

namespace seedtag {
inline constexpr std::uint64_t kInstance = 1000;
inline constexpr std::uint64_t kEpisodes = 2000;
inline constexpr std::uint64_t kFeatures = 3000;
}  // namespace seedtag

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

// One recorded step of one policy in one replication. Regret is computed
// from exact expected payoffs, so instantaneous regret is nonnegative up to
// rounding no matter how the episode draws land.
struct RegretRecord {
  std::uint64_t t = 0;
  double inst_regret = 0.0;
  double cum_regret = 0.0;
};

struct PolicyCurve {
  std::string policy;
  int replication = 0;
  std::vector<RegretRecord> records;  // thinned to the record grid; t = 1 and t = T always present
  std::string final_state;            // learner state snapshot, JSON text
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<PolicyCurve> curves;  // ordered by (policy as configured, replication)
};

// ---------------------------------------------------------------------------
// Canonical config echo. The manifest stores this JSON and a hash of it;
// checkpoint resume refuses to mix outputs from different configurations.
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json value_spec_json(const ValueSpec& v) {
  if (v.uniform) {
    return nlohmann::json{{"uniform", {v.lo, v.hi}}};
  }
  return nlohmann::json{{"explicit", v.values}};
}

}  // namespace detail

inline nlohmann::json config_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["catalog"] = {{"n", cfg.catalog.n},
                  {"revenues", detail::value_spec_json(cfg.catalog.revenues)}};
  if (cfg.flat) {
    j["environment"] = {{"valuations", detail::value_spec_json(cfg.flat->valuations)},
                        {"p", cfg.flat->p},
                        {"c", cfg.flat->c}};
  }
  if (cfg.contextual) {
    j["contextual"] = {{"alpha", cfg.contextual->alpha},
                       {"beta_low", cfg.contextual->beta_low},
                       {"beta_high", cfg.contextual->beta_high},
                       {"feature_low", cfg.contextual->feature_low},
                       {"feature_high", cfg.contextual->feature_high},
                       {"c", cfg.contextual->c}};
  }
  j["experiment"] = {{"horizon", cfg.horizon},
                     {"replications", cfg.replications},
                     {"seed", cfg.seed},
                     {"shared_instance", cfg.shared_instance},
                     {"record_stride", cfg.record_stride}};
  nlohmann::json pols = nlohmann::json::object();
  for (const PolicySpec& pol : cfg.policies) {
    nlohmann::json pj;
    if (pol.kind == PolicyKind::kBenchmark1 || pol.kind == PolicyKind::kBenchmark2) {
      pj["gamma"] = pol.gamma;
    }
    if (pol.kind != PolicyKind::kAlgorithm1 && cfg.is_contextual()) {
      pj["lambda"] = pol.glm.lambda;
      pj["lambda_abandon"] = pol.glm.lambda_abandon;
      pj["refit_dense_until"] = pol.glm.refit_dense_until;
      pj["refit_every_frac"] = pol.glm.refit_every_frac;
      pj["force_per_step_refit"] = pol.glm.force_per_step_refit;
    }
    pols[pol.name] = std::move(pj);
  }
  j["policies"] = std::move(pols);
  return j;
}

inline std::string config_hash_hex(const ExperimentConfig& cfg) {
  const std::uint64_t h = fnv1a64(config_json(cfg).dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

// Note: parallelism is intentionally absent from the canonical echo — it
// changes scheduling, never results — so resumes may vary it freely.

// ---------------------------------------------------------------------------
// State snapshots (documented schema, see README). These carry the fitted
// summaries, not the raw observation logs.
// ---------------------------------------------------------------------------

inline nlohmann::json snapshot_json(const LearnerState& st) {
  return nlohmann::json{{"type", "ucb"},
                        {"episodes", st.episodes},
                        {"views", st.views},
                        {"accepts", st.accepts},
                        {"skips", st.skips},
                        {"abandons", st.abandons}};
}

namespace detail {

inline nlohmann::json matrix_json(const SymMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.size(); ++j) row.push_back(m.at(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

inline nlohmann::json snapshot_json(const GlmLearnerState& st) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const GlmMessageModel& m : st.messages) {
    msgs.push_back(nlohmann::json{{"observers", m.observers},
                                  {"coef", m.coef},
                                  {"design", detail::matrix_json(m.design)}});
  }
  return nlohmann::json{
      {"type", "glm"},
      {"users", st.users},
      {"dim", st.dim},
      {"messages", std::move(msgs)},
      {"abandonment", nlohmann::json{{"events", st.abandonment.events},
                                     {"coef", st.abandonment.coef},
                                     {"design", detail::matrix_json(st.abandonment.design)}}}};
}

// ---------------------------------------------------------------------------
// Instance materialization
// ---------------------------------------------------------------------------

namespace detail {

// Fixed draw order is part of the reproducibility contract: uniform specs
// consume exactly n draws in index order; explicit lists consume none.
inline std::vector<double> materialize(const ValueSpec& v, int n, RngStream& rng) {
  if (!v.uniform) return v.values;
  std::vector<double> out(static_cast<std::size_t>(n));
  for (double& d : out) d = rng.uniform(v.lo, v.hi);
  return out;
}

struct FlatInstance {
  MessageCatalog catalog;
  EnvironmentParams env;
};

// Flat instance: revenues first, then valuations.
inline FlatInstance draw_flat_instance(const ExperimentConfig& cfg, RngStream& rng) {
  std::vector<double> revenues = materialize(cfg.catalog.revenues, cfg.catalog.n, rng);
  std::vector<double> valuations = materialize(cfg.flat->valuations, cfg.catalog.n, rng);
  return FlatInstance{MessageCatalog{std::move(revenues)},
                      EnvironmentParams{std::move(valuations), cfg.flat->p, cfg.flat->c}};
}

struct ContextInstance {
  MessageCatalog catalog;
  ContextualEnvironment env;
};

// Contextual instance: revenues first, then each message's coefficient
// vector coordinate by coordinate.
inline ContextInstance draw_context_instance(const ExperimentConfig& cfg, RngStream& rng) {
  const ContextSpec& ctx = *cfg.contextual;
  std::vector<double> revenues = materialize(cfg.catalog.revenues, cfg.catalog.n, rng);
  std::vector<std::vector<double>> betas(static_cast<std::size_t>(cfg.catalog.n));
  for (auto& beta : betas) {
    beta.resize(ctx.alpha.size());
    for (std::size_t k = 0; k < beta.size(); ++k) {
      beta[k] = rng.uniform(ctx.beta_low[k], ctx.beta_high[k]);
    }
  }
  std::vector<std::pair<double, double>> ranges;
  ranges.reserve(ctx.feature_low.size());
  for (std::size_t k = 0; k < ctx.feature_low.size(); ++k) {
    ranges.emplace_back(ctx.feature_low[k], ctx.feature_high[k]);
  }
  return ContextInstance{
      MessageCatalog{std::move(revenues)},
      ContextualEnvironment{ctx.alpha, std::move(betas), ctx.c, FeatureBox{std::move(ranges)}}};
}

inline bool on_record_grid(std::uint64_t t, std::uint64_t horizon, std::uint64_t stride) {
  return t == 1 || t == horizon || t % stride == 0;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// One replication of every configured policy
// ---------------------------------------------------------------------------

inline std::vector<PolicyCurve> run_replication(const ExperimentConfig& cfg, int rep) {
  const std::uint64_t instance_seed =
      derive_seed(derive_seed(cfg.seed, seedtag::kInstance),
                  cfg.shared_instance ? 0 : static_cast<std::uint64_t>(rep));
  const std::uint64_t rep_episode_seed =
      derive_seed(derive_seed(cfg.seed, seedtag::kEpisodes), static_cast<std::uint64_t>(rep));
  const std::uint64_t feature_seed =
      derive_seed(derive_seed(cfg.seed, seedtag::kFeatures), static_cast<std::uint64_t>(rep));

  std::vector<PolicyCurve> curves;
  curves.reserve(cfg.policies.size());

  if (cfg.flat) {
    RngStream instance_rng(instance_seed);
    const detail::FlatInstance inst = detail::draw_flat_instance(cfg, instance_rng);
    const Sequence best = optimal_sequence(inst.catalog, inst.env);
    const double best_payoff = expected_payoff(inst.catalog, inst.env, best).expected_payoff;

    for (const PolicySpec& pol : cfg.policies) {
      RngStream episodes(derive_seed(rep_episode_seed, fnv1a64(pol.name)));
      auto runner = [&](const Sequence& s) {
        return run_episode(inst.catalog, inst.env, s, episodes);
      };
      LearnerState st(cfg.catalog.n);
      PolicyCurve curve;
      curve.policy = pol.name;
      curve.replication = rep;
      double cum = 0.0;
      for (std::uint64_t t = 1; t <= cfg.horizon; ++t) {
        StepResult step;
        switch (pol.kind) {
          case PolicyKind::kAlgorithm1:
            step = algorithm1_step(st, inst.catalog, inst.env.abandon_cost, runner);
            break;
          case PolicyKind::kBenchmark1:
            step = benchmark1_step(st, inst.catalog, inst.env.abandon_cost, pol.gamma, runner);
            break;
          case PolicyKind::kBenchmark2:
            step = benchmark2_step(st, inst.catalog, inst.env.abandon_cost, pol.gamma, runner);
            break;
          case PolicyKind::kAlgorithm2:
            throw ConfigError("algorithm2 needs a contextual environment");
        }
        const double value =
            expected_payoff(inst.catalog, inst.env, step.offered).expected_payoff;
        const double inst_regret = best_payoff - value;
        cum += inst_regret;
        if (detail::on_record_grid(t, cfg.horizon, cfg.record_stride)) {
          curve.records.push_back(RegretRecord{t, inst_regret, cum});
        }
      }
      curve.final_state = snapshot_json(st).dump();
      curves.push_back(std::move(curve));
    }
    return curves;
  }

  RngStream instance_rng(instance_seed);
  const detail::ContextInstance inst = detail::draw_context_instance(cfg, instance_rng);

  for (const PolicySpec& pol : cfg.policies) {
    RngStream features(feature_seed);  // same user stream for every policy
    RngStream episodes(derive_seed(rep_episode_seed, fnv1a64(pol.name)));
    GlmLearnerState st(cfg.catalog.n, inst.env.dim(), pol.glm);
    PolicyCurve curve;
    curve.policy = pol.name;
    curve.replication = rep;
    double cum = 0.0;
    for (std::uint64_t t = 1; t <= cfg.horizon; ++t) {
      const std::vector<double> x = sample_features(inst.env.features, features);
      auto runner = [&](const Sequence& s) {
        return run_contextual_episode(inst.catalog, inst.env, x, s, episodes);
      };
      GlmStepResult step;
      switch (pol.kind) {
        case PolicyKind::kAlgorithm2:
          step = algorithm2_step(st, inst.catalog, inst.env.abandon_cost, x, runner);
          break;
        case PolicyKind::kBenchmark1:
          step = glm_benchmark1_step(st, inst.catalog, inst.env.abandon_cost, pol.gamma, x, runner);
          break;
        case PolicyKind::kBenchmark2:
          step = glm_benchmark2_step(st, inst.catalog, inst.env.abandon_cost, pol.gamma, x, runner);
          break;
        case PolicyKind::kAlgorithm1:
          throw ConfigError("algorithm1 needs a flat environment");
      }
      // This user's exact optimum at the true per-context parameters.
      const std::vector<double> u_true = inst.env.valuations_at(x);
      const double p_true = 1.0 - inst.env.continue_prob(x);
      const Sequence best = optimal_sequence(inst.catalog.revenues, u_true, p_true,
                                             inst.env.abandon_cost);
      const double best_payoff = sequence_payoff(inst.catalog.revenues, u_true, p_true,
                                                 inst.env.abandon_cost, best);
      const double value = sequence_payoff(inst.catalog.revenues, u_true, p_true,
                                           inst.env.abandon_cost, step.offered);
      const double inst_regret = best_payoff - value;
      cum += inst_regret;
      if (detail::on_record_grid(t, cfg.horizon, cfg.record_stride)) {
        curve.records.push_back(RegretRecord{t, inst_regret, cum});
      }
    }
    curve.final_state = snapshot_json(st).dump();
    curves.push_back(std::move(curve));
  }
  return curves;
}

// ---------------------------------------------------------------------------
// Checkpointing: one JSON file per completed replication, written atomically
// (temp file + rename). Resume just skips replications whose file is present
// — and refuses to touch a directory whose manifest hashes a different
// config.
// ---------------------------------------------------------------------------

namespace detail {

inline std::filesystem::path checkpoint_path(const std::filesystem::path& dir, int rep) {
  return dir / ("rep_" + std::to_string(rep) + ".json");
}

inline nlohmann::json curves_json(const std::vector<PolicyCurve>& curves) {
  nlohmann::json arr = nlohmann::json::array();
  for (const PolicyCurve& c : curves) {
    nlohmann::json records = nlohmann::json::array();
    for (const RegretRecord& r : c.records) {
      records.push_back(nlohmann::json::array({r.t, r.inst_regret, r.cum_regret}));
    }
    arr.push_back(nlohmann::json{{"policy", c.policy},
                                 {"replication", c.replication},
                                 {"records", std::move(records)},
                                 {"final_state", nlohmann::json::parse(c.final_state)}});
  }
  return arr;
}

inline std::vector<PolicyCurve> curves_from_json(const nlohmann::json& arr) {
  std::vector<PolicyCurve> curves;
  for (const nlohmann::json& cj : arr) {
    PolicyCurve c;
    c.policy = cj.at("policy").get<std::string>();
    c.replication = cj.at("replication").get<int>();
    for (const nlohmann::json& rj : cj.at("records")) {
      c.records.push_back(RegretRecord{rj.at(0).get<std::uint64_t>(),
                                       rj.at(1).get<double>(),
                                       rj.at(2).get<double>()});
    }
    c.final_state = cj.at("final_state").dump();
    curves.push_back(std::move(c));
  }
  return curves;
}

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    if (!out.good()) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

struct RunOptions {
  std::string checkpoint_dir;  // empty = no checkpointing
  int parallelism_override = -1;  // -1 = take the config's value
};

// Run every replication of every policy, in a worker pool, with optional
// per-replication checkpointing. Results are deterministic for a given
// config regardless of thread count or resume history.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const RunOptions& opt = {}) {
  const int reps = cfg.replications;
  std::vector<std::vector<PolicyCurve>> slots(static_cast<std::size_t>(reps));
  std::vector<char> done(static_cast<std::size_t>(reps), 0);

  std::filesystem::path ckpt_dir;
  if (!opt.checkpoint_dir.empty()) {
    ckpt_dir = opt.checkpoint_dir;
    std::filesystem::create_directories(ckpt_dir);
    const std::filesystem::path guard = ckpt_dir / "config_hash.txt";
    const std::string want = config_hash_hex(cfg);
    if (std::filesystem::exists(guard)) {
      std::ifstream in(guard);
      std::string have;
      in >> have;
      if (have != want) {
        throw Error("checkpoint directory " + ckpt_dir.string() +
                    " belongs to a different configuration (hash " + have +
                    ", expected " + want + "); remove it to start over");
      }
    } else {
      detail::write_text_atomic(guard, want + "\n");
    }
    for (int r = 0; r < reps; ++r) {
      const std::filesystem::path p = detail::checkpoint_path(ckpt_dir, r);
      if (!std::filesystem::exists(p)) continue;
      std::ifstream in(p, std::ios::binary);
      nlohmann::json j = nlohmann::json::parse(in);
      slots[static_cast<std::size_t>(r)] = detail::curves_from_json(j.at("curves"));
      done[static_cast<std::size_t>(r)] = 1;
    }
  }

  int workers = opt.parallelism_override >= 0 ? opt.parallelism_override : cfg.parallelism;
  if (workers <= 0) {
    workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
  }
  workers = std::min(workers, reps);
  if (workers < 1) workers = 1;

  std::atomic<int> next{0};
  std::mutex io_mutex;
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&]() {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= reps) return;
      if (done[static_cast<std::size_t>(r)]) continue;
      try {
        std::vector<PolicyCurve> curves = run_replication(cfg, r);
        if (!ckpt_dir.empty()) {
          nlohmann::json j{{"replication", r}, {"curves", detail::curves_json(curves)}};
          std::lock_guard<std::mutex> lock(io_mutex);
          detail::write_text_atomic(detail::checkpoint_path(ckpt_dir, r), j.dump());
        }
        slots[static_cast<std::size_t>(r)] = std::move(curves);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  // Deterministic assembly: policy in config order, then replication.
  ExperimentResult result;
  result.config = cfg;
  for (const PolicySpec& pol : cfg.policies) {
    for (int r = 0; r < reps; ++r) {
      for (PolicyCurve& c : slots[static_cast<std::size_t>(r)]) {
        if (c.policy == pol.name) {
          result.curves.push_back(std::move(c));
          break;
        }
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Aggregation and emission
// ---------------------------------------------------------------------------

struct AggregateRow {
  std::uint64_t t = 0;
  std::string policy;
  double mean_cum_regret = 0.0;
  double stderr_cum_regret = 0.0;
};

// Mean and standard error of cumulative regret across replications, per
// policy and recorded t. Computed from the stored records directly (no
// streaming shortcuts), so the mean equals the mean of per-replication
// values to the last bit.
inline std::vector<AggregateRow> aggregate_curves(const ExperimentResult& result) {
  std::vector<AggregateRow> rows;
  for (const PolicySpec& pol : result.config.policies) {
    std::vector<const PolicyCurve*> group;
    for (const PolicyCurve& c : result.curves) {
      if (c.policy == pol.name) group.push_back(&c);
    }
    if (group.empty()) continue;
    const std::size_t points = group.front()->records.size();
    for (const PolicyCurve* c : group) {
      if (c->records.size() != points) {
        throw Error("replications of policy " + pol.name +
                    " disagree on the record grid");
      }
    }
    for (std::size_t k = 0; k < points; ++k) {
      AggregateRow row;
      row.t = group.front()->records[k].t;
      row.policy = pol.name;
      double sum = 0.0;
      for (const PolicyCurve* c : group) sum += c->records[k].cum_regret;
      const double n = static_cast<double>(group.size());
      row.mean_cum_regret = sum / n;
      if (group.size() > 1) {
        double ss = 0.0;
        for (const PolicyCurve* c : group) {
          const double d = c->records[k].cum_regret - row.mean_cum_regret;
          ss += d * d;
        }
        row.stderr_cum_regret = std::sqrt(ss / (n - 1.0) / n);
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

}  // namespace detail

// Write records.csv, aggregate.csv, and manifest.json into `out_dir`.
// Records are ordered (policy, replication, t); aggregates (policy, t).
inline void emit_results(const ExperimentResult& result, const std::string& out_dir) {
  if (result.curves.empty()) throw Error("nothing to emit: no curves in result");
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);

  {
    std::ostringstream out;
    out << "replication,t,policy,inst_regret,cum_regret\n";
    for (const PolicySpec& pol : result.config.policies) {
      for (const PolicyCurve& c : result.curves) {
        if (c.policy != pol.name) continue;
        for (const RegretRecord& r : c.records) {
          out << c.replication << ',' << r.t << ',' << c.policy << ','
              << detail::format_double(r.inst_regret) << ','
              << detail::format_double(r.cum_regret) << '\n';
        }
      }
    }
    detail::write_text_atomic(dir / "records.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "t,policy,mean_cum_regret,stderr\n";
    for (const AggregateRow& row : aggregate_curves(result)) {
      out << row.t << ',' << row.policy << ','
          << detail::format_double(row.mean_cum_regret) << ','
          << detail::format_double(row.stderr_cum_regret) << '\n';
    }
    detail::write_text_atomic(dir / "aggregate.csv", out.str());
  }
  {
    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["seed"] = result.config.seed;
    manifest["config"] = config_json(result.config);
    manifest["config_hash"] = config_hash_hex(result.config);
    nlohmann::json states = nlohmann::json::array();
    for (const PolicyCurve& c : result.curves) {
      states.push_back(nlohmann::json{{"policy", c.policy},
                                      {"replication", c.replication},
                                      {"state", nlohmann::json::parse(c.final_state)}});
    }
    manifest["final_states"] = std::move(states);
    detail::write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
  }
}

}  // namespace scb

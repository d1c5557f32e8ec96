#pragma once

#include <filesystem>
#include <iosfwd>

#include "blade/grpo.hpp"

namespace blade {

// One experiment, parseable from a flat key=value config file with CLI
// flags taking precedence (see tools/).
struct ExperimentConfig {
    // Dataset generation (gen-data, or train without --dataset).
    std::uint32_t n_items = 50;
    std::uint32_t n_genres = 5;
    std::uint32_t n_contexts = 20;
    std::uint32_t history_len = 10;
    std::uint32_t target_len = 10;
    std::uint32_t max_genres_per_item = 2;

    // Policy and training.
    std::uint32_t list_len = 5;          // K
    std::string reward_spec = "ndcg@5";
    int group_size = 16;                 // G
    double tau = 0.3;
    int bon_n = 4;                       // N inside the proxy reward
    int ref_size = 128;                  // M
    int steps = 400;
    double lr = 0.1;
    double epsilon = 0.2;
    double beta_kl = 0.1;
    double temperature = 1.0;
    double cdf_floor = 0.0;              // <= 0 selects the default floor
    std::uint64_t seed = 1;
    std::string mode = "blade";          // blade | static | noprior
    int sft_steps = 40;
    double sft_lr = 0.5;
    std::uint32_t eval_contexts = 0;     // held-out tail; 0 = n_contexts/4, min 1
};

// Held-out split: the last eval_contexts ids evaluate, the rest train.
struct ContextSplit {
    std::vector<std::uint32_t> train_ids;
    std::vector<std::uint32_t> eval_ids;
};
ContextSplit split_contexts(std::size_t n_contexts, std::uint32_t eval_contexts);

TrainStepConfig make_step_config(const ExperimentConfig& cfg,
                                 const ContextSplit& split);

// Warm start plus `steps` training steps, cycling round-robin over the
// training contexts. Curve row 0 is the warm-start snapshot (eval metric
// only). Fully reproducible from (cfg, dataset).
TrainState run_train(const ExperimentConfig& cfg, const Dataset& dataset);

// Versioned checkpoint: current policy, frozen reference policy,
// per-context reference statistics, and the step counter.
void save_checkpoint(const std::filesystem::path& path, const TrainState& state);
TrainState load_checkpoint(const std::filesystem::path& path);

// Curve file: CSV with a fixed, documented column order.
void save_curve(const std::filesystem::path& path,
                std::span<const CurvePoint> curve);

struct EvalTable {
    std::vector<std::string> columns;  // reward spec strings
    std::vector<double> means;         // greedy-decode mean per column
};
EvalTable run_eval(const PolicyParams& params, const Dataset& dataset,
                   const std::vector<RewardSpec>& specs);
void write_eval_table(std::ostream& out, const EvalTable& table);

struct BonRow {
    int n = 0;
    double mean_reward = 0.0;
    double seconds = 0.0;
};
// For each N: samples N lists per context and keeps the reward argmax,
// repeating passes until at least min_selections selections happened.
// Rewards are deterministic in seed; seconds is wall time.
std::vector<BonRow> run_bon(const PolicyParams& params, const Dataset& dataset,
                            const std::vector<int>& n_values,
                            const RewardSpec& spec, std::uint64_t seed,
                            std::size_t min_selections);
void write_bon_table(std::ostream& out, std::span<const BonRow> rows);

}  // namespace blade

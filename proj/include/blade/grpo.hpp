#pragma once

#include <optional>

#include "blade/estimator.hpp"
#include "blade/policy.hpp"

namespace blade {

struct ClipConfig {
    double epsilon = 0.2;      // ratio clip width
    double beta_kl = 0.1;      // KL-to-reference coefficient
    double sigma_floor = 1e-12;  // below this group std, advantages are zero
};

struct CurvePoint {
    std::uint64_t step = 0;
    double mean_raw_reward = 0.0;
    double mean_proxy_reward = 0.0;
    double mean_abs_advantage = 0.0;
    double grad_norm = 0.0;
    double eval_metric = 0.0;  // greedy-decode reward on the eval contexts
};

struct TrainState {
    PolicyParams params;      // current theta
    PolicyParams old_params;  // sampling snapshot theta_old
    PolicyParams ref_params;  // frozen pi_ref, never mutated after warm start
    std::vector<ReferenceStats> refstats;  // one per context
    std::uint64_t step = 0;
    std::vector<CurvePoint> curve;
    std::uint64_t rollouts_sampled = 0;  // shared-sampling audit counter
};

// How the CDF estimate for proxy rewards is formed.
enum class EstimatorMode {
    blade,       // (N_ref + tau*N_batch) / (M + tau*G); tau = 0 is static
    batch_only,  // N_batch / G, ignoring the reference (the no-prior ablation)
};

// (r_i - mean) / population std; all zeros when the std is degenerate.
std::vector<double> group_advantages(std::span<const double> rewards,
                                     double sigma_floor);

struct SurrogateResult {
    double objective = 0.0;
    std::vector<double> grad;  // same shape as params.logits
};

// Clipped importance-ratio surrogate with an exact per-step categorical KL
// to the reference policy, averaged over the G*K group steps. Old-policy
// log-probabilities come from the rollouts' recorded values. The gradient
// is exact; clipped-out ratio terms contribute none.
SurrogateResult surrogate_and_grad(const TrainState& state, const Group& group,
                                   std::span<const double> advantages,
                                   const ClipConfig& clip, double temperature);

struct TrainStepConfig {
    int group_size = 16;               // G
    double tau = 0.3;                  // dynamic coefficient
    int bon_n = 4;                     // N inside the proxy reward
    double cdf_floor = 0.0;            // <= 0 selects default_cdf_floor
    RewardSpec reward_spec;            // raw list-wise reward
    ClipConfig clip;
    double temperature = 1.0;
    double lr = 0.1;
    EstimatorMode estimator_mode = EstimatorMode::blade;
    std::uint64_t seed = 0;            // base seed for rollout rng streams
    std::vector<std::uint32_t> eval_context_ids;  // empty = all contexts
};

// Per-step internals, exposed for diagnostics and tests.
struct TrainStepTrace {
    Group group;
    std::vector<double> raw_rewards;
    std::vector<double> proxy_rewards;
    std::vector<double> advantages;
    SurrogateResult surrogate;
};

// One Alg.-1 step: snapshot theta_old, sample G rollouts, score them,
// convert to proxy rewards through the configured estimator, normalize to
// advantages, and take one gradient-ascent step on the surrogate. The same
// G rollouts serve as dynamic evidence and as the GRPO group.
CurvePoint blade_train_step(TrainState& state, const Dataset& dataset,
                            std::uint32_t context_id,
                            const TrainStepConfig& cfg,
                            TrainStepTrace* trace = nullptr);

struct WarmStartConfig {
    int sft_steps = 60;
    double lr = 0.5;
    int ref_size = 128;  // M reference rollouts per context
    std::uint64_t seed = 0;
    RewardSpec reward_spec;  // scores the reference rollouts
    std::uint32_t list_len = 5;  // K
};

// Supervised warm start toward each context's target list, then freezes
// the result as pi_ref and builds per-context reference statistics from
// M rollouts of the frozen policy at temperature 1.
TrainState warm_start(const Dataset& dataset, const WarmStartConfig& cfg);

// Mean greedy-decode reward over the given contexts (all when empty).
double greedy_eval(const PolicyParams& params, const Dataset& dataset,
                   const RewardSpec& spec,
                   std::span<const std::uint32_t> context_ids);

}  // namespace blade

#include "blade/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "blade/kernels.hpp"

namespace blade {
namespace {

constexpr std::uint64_t kTrainStream = 0x7472616e;  // "tran"
constexpr std::uint64_t kRefStream = 0x72656673;    // "refs"

double mean_of(std::span<const double> xs) {
    return kernels::sum(xs.data(), xs.size()) / static_cast<double>(xs.size());
}

}  // namespace

std::vector<double> group_advantages(std::span<const double> rewards,
                                     double sigma_floor) {
    const std::size_t g = rewards.size();
    if (g < 2) throw std::invalid_argument("group_advantages: need G >= 2");
    const double mu = mean_of(rewards);
    double var = 0.0;
    for (double r : rewards) var += (r - mu) * (r - mu);
    var /= static_cast<double>(g);  // population variance, no Bessel correction
    const double sigma = std::sqrt(var);

    std::vector<double> adv(g, 0.0);
    if (sigma < sigma_floor) return adv;  // degenerate group carries no signal
    for (std::size_t i = 0; i < g; ++i) adv[i] = (rewards[i] - mu) / sigma;
    return adv;
}

SurrogateResult surrogate_and_grad(const TrainState& state, const Group& group,
                                   std::span<const double> advantages,
                                   const ClipConfig& clip, double temperature) {
    const std::size_t g = group.rollouts.size();
    if (g < 2) throw std::invalid_argument("surrogate_and_grad: need G >= 2");
    if (advantages.size() != g) {
        throw std::invalid_argument("surrogate_and_grad: advantages/group size mismatch");
    }
    if (group.context_id >= state.params.n_contexts) {
        throw std::invalid_argument("surrogate_and_grad: context id out of range");
    }
    if (!(clip.epsilon > 0.0 && clip.epsilon <= 1.0) || clip.beta_kl < 0.0) {
        throw std::invalid_argument("surrogate_and_grad: bad clip config");
    }
    const std::size_t steps_per = group.rollouts.front().list.items.size();
    for (const auto& ro : group.rollouts) {
        if (ro.list.items.size() != steps_per ||
            ro.step_logprobs.size() != steps_per || steps_per == 0) {
            throw std::invalid_argument("surrogate_and_grad: malformed rollout group");
        }
    }

    const std::uint32_t ctx = group.context_id;
    const std::uint32_t n = state.params.n_items;
    const double inv_temp = 1.0 / temperature;
    const double* theta_row = state.params.row(ctx);
    const double* ref_row = state.ref_params.row(ctx);
    const double w = 1.0 / (static_cast<double>(g) * static_cast<double>(steps_per));

    SurrogateResult res;
    res.grad.assign(state.params.logits.size(), 0.0);
    double* grow = res.grad.data() + std::size_t{ctx} * n;

    std::vector<std::uint8_t> mask(n);
    std::vector<double> probs(n);
    std::vector<double> ref_probs(n);
    std::vector<double> logratio(n);

    for (std::size_t i = 0; i < g; ++i) {
        const auto& ro = group.rollouts[i];
        const double a = advantages[i];
        std::fill(mask.begin(), mask.end(), std::uint8_t{1});

        for (std::size_t t = 0; t < steps_per; ++t) {
            const ItemId item = ro.list.items[t];
            if (item >= n || !mask[item]) {
                throw std::invalid_argument("surrogate_and_grad: invalid rollout list");
            }
            const double lse_new = kernels::masked_softmax(
                theta_row, mask.data(), inv_temp, probs.data(), n);
            const double lp_new = theta_row[item] * inv_temp - lse_new;
            const double rho = std::exp(lp_new - ro.step_logprobs[t]);

            const double unclipped = rho * a;
            const double clipped =
                std::clamp(rho, 1.0 - clip.epsilon, 1.0 + clip.epsilon) * a;
            if (unclipped <= clipped) {
                res.objective += w * unclipped;
                const double coeff = w * a * rho * inv_temp;
                kernels::axpy(-coeff, probs.data(), grow, n);
                grow[item] += coeff;
            } else {
                // Clipped arm is active: constant in theta, no gradient.
                res.objective += w * clipped;
            }

            if (clip.beta_kl != 0.0) {
                // Reference step distribution under the same mask; only its
                // normalizer is needed for the log-ratio.
                const double lse_ref = kernels::masked_softmax(
                    ref_row, mask.data(), inv_temp, ref_probs.data(), n);
                kernels::masked_scaled_diff(theta_row, ref_row, mask.data(),
                                            inv_temp, lse_new - lse_ref,
                                            logratio.data(), n);
                const double kl = kernels::dot(probs.data(), logratio.data(), n);
                res.objective -= w * clip.beta_kl * kl;
                // dKL/dlogit_j = inv_temp * p_j * (logratio_j - kl)
                const double scale = w * clip.beta_kl * inv_temp;
                kernels::weighted_mul_add(probs.data(), logratio.data(), -scale,
                                          scale * kl, grow, n);
            }
            mask[item] = 0;
        }
    }
    return res;
}

CurvePoint blade_train_step(TrainState& state, const Dataset& dataset,
                            std::uint32_t context_id,
                            const TrainStepConfig& cfg,
                            TrainStepTrace* trace) {
    if (context_id >= state.params.n_contexts ||
        context_id >= dataset.contexts.size()) {
        throw std::invalid_argument("blade_train_step: context id out of range");
    }
    if (state.refstats.size() != state.params.n_contexts ||
        state.refstats[context_id].size() == 0) {
        throw std::logic_error("blade_train_step: reference stats not built");
    }
    if (cfg.group_size < 2) {
        throw std::invalid_argument("blade_train_step: group_size must be >= 2");
    }

    const auto g = static_cast<std::size_t>(cfg.group_size);
    const auto& ctx = dataset.contexts[context_id];

    // (1) Snapshot the sampling policy.
    state.old_params = state.params;

    // (2) Sample the group from theta_old; (3) score raw rewards. One rng
    // stream per rollout so the group could be drawn in parallel.
    Group group;
    group.context_id = context_id;
    group.rollouts.reserve(g);
    std::vector<double> raw(g);
    for (std::size_t i = 0; i < g; ++i) {
        Rng rng(mix_seed({cfg.seed, kTrainStream, state.step, context_id, i}));
        Rollout ro = sample_list(state.old_params, context_id, cfg.temperature, rng);
        ro.reward = reward(cfg.reward_spec, ro.list, ctx, dataset.catalog);
        raw[i] = ro.reward;
        group.rollouts.push_back(std::move(ro));
    }
    state.rollouts_sampled += g;

    // (4) Proxy rewards from the shared batch: the same rollouts are the
    // dynamic evidence and the GRPO group.
    const auto& stats = state.refstats[context_id];
    const double floor =
        cfg.cdf_floor > 0.0
            ? cfg.cdf_floor
            : (cfg.estimator_mode == EstimatorMode::blade
                   ? default_cdf_floor(stats.size(), cfg.tau, g)
                   : default_cdf_floor(0, 1.0, g));
    std::vector<double> proxy(g);
    for (std::size_t i = 0; i < g; ++i) {
        const double fhat =
            cfg.estimator_mode == EstimatorMode::blade
                ? blade_cdf(stats, raw, cfg.tau, raw[i])
                : static_cast<double>(batch_count_below(raw, raw[i])) /
                      static_cast<double>(g);
        proxy[i] = proxy_reward(fhat, cfg.bon_n, floor);
    }

    // (5) Group-relative advantages over the proxy rewards.
    const std::vector<double> adv = group_advantages(proxy, cfg.clip.sigma_floor);

    // (6) One ascent step on the clipped surrogate.
    SurrogateResult res =
        surrogate_and_grad(state, group, adv, cfg.clip, cfg.temperature);
    if (!std::isfinite(res.objective)) {
        throw std::runtime_error("blade_train_step: non-finite objective at step " +
                                 std::to_string(state.step));
    }
    kernels::axpy(cfg.lr, res.grad.data(), state.params.logits.data(),
                  state.params.logits.size());

    double sq = kernels::dot(res.grad.data(), res.grad.data(), res.grad.size());
    if (!std::isfinite(sq)) {
        throw std::runtime_error("blade_train_step: non-finite gradient at step " +
                                 std::to_string(state.step));
    }

    state.step += 1;

    if (trace) {
        trace->raw_rewards = raw;
        trace->proxy_rewards = proxy;
        trace->advantages = adv;
        trace->surrogate = res;
        trace->group = std::move(group);
    }

    CurvePoint pt;
    pt.step = state.step;
    pt.mean_raw_reward = mean_of(raw);
    pt.mean_proxy_reward = mean_of(proxy);
    double abs_adv = 0.0;
    for (double x : adv) abs_adv += std::abs(x);
    pt.mean_abs_advantage = abs_adv / static_cast<double>(g);
    pt.grad_norm = std::sqrt(sq);
    pt.eval_metric =
        greedy_eval(state.params, dataset, cfg.reward_spec, cfg.eval_context_ids);
    state.curve.push_back(pt);
    return pt;
}

TrainState warm_start(const Dataset& dataset, const WarmStartConfig& cfg) {
    if (dataset.contexts.empty()) {
        throw std::invalid_argument("warm_start: dataset has no contexts");
    }
    if (cfg.sft_steps < 0 || cfg.ref_size < 1) {
        throw std::invalid_argument("warm_start: bad sft_steps or ref_size");
    }
    const auto n_ctx = static_cast<std::uint32_t>(dataset.contexts.size());

    TrainState state;
    state.params =
        PolicyParams::zeros(n_ctx, dataset.catalog.n_items, cfg.list_len);

    // Supervised phase: ascend the log-likelihood of each context's
    // teacher list (its targets in ascending item order).
    std::vector<RecList> teacher(n_ctx);
    for (std::uint32_t c = 0; c < n_ctx; ++c) {
        teacher[c].items = dataset.contexts[c].targets;
    }
    for (int s = 0; s < cfg.sft_steps; ++s) {
        for (std::uint32_t c = 0; c < n_ctx; ++c) {
            const std::vector<double> grad =
                grad_logprob(state.params, c, teacher[c], 1.0);
            kernels::axpy(cfg.lr, grad.data(), state.params.logits.data(),
                          grad.size());
        }
    }

    state.old_params = state.params;
    state.ref_params = state.params;

    // Reference statistics: M frozen-policy rollouts per context.
    state.refstats.reserve(n_ctx);
    const auto m = static_cast<std::size_t>(cfg.ref_size);
    for (std::uint32_t c = 0; c < n_ctx; ++c) {
        std::vector<double> rewards(m);
        for (std::size_t i = 0; i < m; ++i) {
            Rng rng(mix_seed({cfg.seed, kRefStream, c, i}));
            const Rollout ro = sample_list(state.ref_params, c, 1.0, rng);
            rewards[i] =
                reward(cfg.reward_spec, ro.list, dataset.contexts[c], dataset.catalog);
        }
        state.refstats.push_back(build_reference(std::move(rewards), c));
    }
    return state;
}

double greedy_eval(const PolicyParams& params, const Dataset& dataset,
                   const RewardSpec& spec,
                   std::span<const std::uint32_t> context_ids) {
    std::vector<std::uint32_t> all;
    if (context_ids.empty()) {
        all.resize(dataset.contexts.size());
        for (std::uint32_t c = 0; c < all.size(); ++c) all[c] = c;
        context_ids = all;
    }
    double acc = 0.0;
    for (std::uint32_t c : context_ids) {
        const RecList list = greedy_decode(params, c);
        acc += reward(spec, list, dataset.contexts[c], dataset.catalog);
    }
    return acc / static_cast<double>(context_ids.size());
}

}  // namespace blade

#include "blade/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "blade/kernels.hpp"

namespace blade {

ReferenceStats build_reference(std::vector<double> rewards,
                               std::uint32_t context_id) {
    if (rewards.empty()) {
        throw std::invalid_argument("build_reference: empty reward list");
    }
    for (double r : rewards) {
        if (!std::isfinite(r)) {
            throw std::invalid_argument("build_reference: non-finite reward");
        }
    }
    ReferenceStats stats;
    stats.sorted_rewards = std::move(rewards);
    stats.context_id = context_id;
    std::sort(stats.sorted_rewards.begin(), stats.sorted_rewards.end());
    return stats;
}

std::size_t count_below(const ReferenceStats& stats, double r) {
    const auto& v = stats.sorted_rewards;
    return static_cast<std::size_t>(
        std::lower_bound(v.begin(), v.end(), r) - v.begin());
}

std::size_t batch_count_below(std::span<const double> group_rewards, double r) {
    return kernels::count_less(group_rewards.data(), group_rewards.size(), r);
}

BetaPosterior posterior(const ReferenceStats& stats,
                        std::span<const double> group_rewards, double tau,
                        double r) {
    if (tau < 0.0) throw std::invalid_argument("posterior: tau must be >= 0");
    const auto m = static_cast<double>(stats.size());
    const auto g = static_cast<double>(group_rewards.size());
    const auto n_ref = static_cast<double>(count_below(stats, r));
    const auto n_batch = static_cast<double>(batch_count_below(group_rewards, r));

    BetaPosterior post;
    post.alpha = n_ref + tau * n_batch;
    post.beta = (m - n_ref) + tau * (g - n_batch);
    post.mean_ = (n_ref + tau * n_batch) / (m + tau * g);
    return post;
}

double blade_cdf(const ReferenceStats& stats,
                 std::span<const double> group_rewards, double tau, double r) {
    return posterior(stats, group_rewards, tau, r).mean();
}

double proxy_reward(double fhat, int bon_n, double cdf_floor) {
    if (bon_n < 2) throw std::invalid_argument("proxy_reward: bon_n must be >= 2");
    if (!(fhat >= 0.0 && fhat <= 1.0)) {
        throw std::invalid_argument("proxy_reward: fhat must be in [0, 1]");
    }
    if (!(cdf_floor > 0.0 && cdf_floor < 1.0)) {
        throw std::invalid_argument("proxy_reward: cdf_floor must be in (0, 1)");
    }
    return (bon_n - 1) * std::log(std::max(fhat, cdf_floor));
}

double default_cdf_floor(std::size_t ref_size, double tau,
                         std::size_t group_size) {
    return 1.0 / (2.0 * (static_cast<double>(ref_size) +
                         tau * static_cast<double>(group_size)));
}

bool indiscrimination_witness(const ReferenceStats& stats, double r1,
                              double r2) {
    if (!(r1 > r2) || !(r2 > stats.max())) {
        throw std::invalid_argument(
            "indiscrimination_witness: need r1 > r2 > reference max");
    }
    const std::span<const double> no_batch{};
    return blade_cdf(stats, no_batch, 0.0, r1) == 1.0 &&
           blade_cdf(stats, no_batch, 0.0, r2) == 1.0;
}

}  // namespace blade

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace blade {

// Frozen per-context reference rewards: the static prior for quantile
// estimation. Counting is strict (<) throughout, so tied rewards sit
// above the query.
struct ReferenceStats {
    std::vector<double> sorted_rewards;  // ascending
    std::uint32_t context_id = 0;

    std::size_t size() const { return sorted_rewards.size(); }
    double max() const { return sorted_rewards.back(); }
};

ReferenceStats build_reference(std::vector<double> rewards,
                               std::uint32_t context_id = 0);

// |{ x in stats : x < r }| via binary search.
std::size_t count_below(const ReferenceStats& stats, double r);

// Strict count over an unsorted batch; a candidate never counts itself.
std::size_t batch_count_below(std::span<const double> group_rewards, double r);

struct BetaPosterior {
    double alpha = 0.0;
    double beta = 0.0;

    // Posterior mean alpha/(alpha+beta), evaluated with the fused
    // denominator M + tau*G (equal to alpha+beta in exact arithmetic) so
    // that the estimator below is the identical floating-point value.
    double mean() const { return mean_; }

    double mean_ = 0.0;
};

// Beta(N_ref^{<r}, M - N_ref^{<r}) prior updated by the tau-power-scaled
// batch likelihood.
BetaPosterior posterior(const ReferenceStats& stats,
                        std::span<const double> group_rewards, double tau,
                        double r);

// Dynamic CDF estimate (N_ref^{<r} + tau*N_batch^{<r}) / (M + tau*G).
// tau = 0 recovers the static empirical strict CDF.
double blade_cdf(const ReferenceStats& stats,
                 std::span<const double> group_rewards, double tau, double r);

// (N-1) * log(max(fhat, cdf_floor)); <= 0, and 0 exactly when fhat = 1.
double proxy_reward(double fhat, int bon_n, double cdf_floor);

// Half of one pooled sample: keeps log(fhat) finite for candidates below
// every observed reward without moving mid-range quantiles.
double default_cdf_floor(std::size_t ref_size, double tau, std::size_t group_size);

// True iff the static estimator gives both supra-reference rewards the
// saturated quantile 1 (they are indistinguishable at tau = 0). Requires
// r1 > r2 > max(stats).
bool indiscrimination_witness(const ReferenceStats& stats, double r1, double r2);

}  // namespace blade

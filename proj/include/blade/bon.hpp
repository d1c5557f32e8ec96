#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blade/estimator.hpp"

namespace blade {

// Finite-support reference distribution with a reward per outcome; the
// ground truth against which the exact BoN law is computed.
struct DiscreteDist {
    std::vector<std::string> outcomes;
    std::vector<double> probs;
    std::vector<double> rewards;

    std::size_t size() const { return outcomes.size(); }

    // One outcome per line: "<name> <prob> <reward>". '#' starts a comment.
    static DiscreteDist from_text(std::string_view text);
};

// Index of the highest reward; ties break toward the lowest index.
std::size_t bon_select(std::span<const double> rewards);

// Probability that each outcome is the Best-of-N pick over n iid draws,
// via the order-statistics expansion with the strictly-below reward CDF:
//   pi_bon(y) = sum_k C(n,k) F(R(y))^(n-k) p(y)^k.
// Rewards must be pairwise distinct or the atomized law is ill-defined.
DiscreteDist bon_exact_distribution(const DiscreteDist& dist, int n);

// (N-1) * log of the floored static quantile of r: the utility signal of
// static BoN alignment. Saturates at 0 for supra-reference rewards.
double static_quantile_reward(const ReferenceStats& stats, double r, int n,
                              double cdf_floor);

struct VbonTerms {
    double utility = 0.0;
    double kl_penalty = 0.0;
    double total = 0.0;
};

// Surrogate objective pieces: utility - (log pi_theta - log pi_ref).
VbonTerms vbon_objective_terms(double quantile_reward, double logprob_theta,
                               double logprob_ref);

}  // namespace blade

#include "blade/bon.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "blade/errors.hpp"

namespace blade {
namespace {

void validate(const DiscreteDist& dist) {
    if (dist.size() == 0) {
        throw std::invalid_argument("DiscreteDist: empty support");
    }
    if (dist.probs.size() != dist.size() || dist.rewards.size() != dist.size()) {
        throw std::invalid_argument("DiscreteDist: mismatched field lengths");
    }
    double total = 0.0;
    for (double p : dist.probs) {
        if (!(p >= 0.0)) throw std::invalid_argument("DiscreteDist: negative probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("DiscreteDist: probabilities sum to " +
                                    std::to_string(total));
    }
}

double binomial(int n, int k) {
    double c = 1.0;
    for (int i = 1; i <= k; ++i) {
        c *= static_cast<double>(n - k + i) / static_cast<double>(i);
    }
    return c;
}

}  // namespace

DiscreteDist DiscreteDist::from_text(std::string_view text) {
    DiscreteDist dist;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        std::string name;
        if (!(row >> name)) continue;  // blank line
        double p = 0.0, r = 0.0;
        if (!(row >> p >> r)) {
            throw ParseError("distribution line " + std::to_string(lineno) +
                             ": expected \"<name> <prob> <reward>\"");
        }
        dist.outcomes.push_back(name);
        dist.probs.push_back(p);
        dist.rewards.push_back(r);
    }
    validate(dist);
    return dist;
}

std::size_t bon_select(std::span<const double> rewards) {
    if (rewards.empty()) {
        throw std::invalid_argument("bon_select: no candidates");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < rewards.size(); ++i) {
        if (rewards[i] > rewards[best]) best = i;
    }
    return best;
}

DiscreteDist bon_exact_distribution(const DiscreteDist& dist, int n) {
    validate(dist);
    if (n < 1) throw std::invalid_argument("bon_exact_distribution: n must be >= 1");
    {
        std::set<double> uniq(dist.rewards.begin(), dist.rewards.end());
        if (uniq.size() != dist.size()) {
            throw std::invalid_argument(
                "bon_exact_distribution: rewards must be pairwise distinct");
        }
    }

    DiscreteDist out = dist;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        // Strictly-below CDF at this outcome's reward.
        double cdf = 0.0;
        for (std::size_t j = 0; j < dist.size(); ++j) {
            if (dist.rewards[j] < dist.rewards[i]) cdf += dist.probs[j];
        }
        double mass = 0.0;
        for (int k = 1; k <= n; ++k) {
            mass += binomial(n, k) * std::pow(cdf, n - k) *
                    std::pow(dist.probs[i], k);
        }
        out.probs[i] = mass;
    }
    return out;
}

double static_quantile_reward(const ReferenceStats& stats, double r, int n,
                              double cdf_floor) {
    const std::span<const double> no_batch{};
    return proxy_reward(blade_cdf(stats, no_batch, 0.0, r), n, cdf_floor);
}

VbonTerms vbon_objective_terms(double quantile_reward, double logprob_theta,
                               double logprob_ref) {
    if (!std::isfinite(logprob_theta) || !std::isfinite(logprob_ref)) {
        throw std::invalid_argument("vbon_objective_terms: non-finite log-probability");
    }
    VbonTerms terms;
    terms.utility = quantile_reward;
    terms.kl_penalty = logprob_theta - logprob_ref;
    terms.total = terms.utility - terms.kl_penalty;
    return terms;
}

}  // namespace blade

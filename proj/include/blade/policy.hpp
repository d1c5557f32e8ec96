#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>

#include "blade/metrics.hpp"
#include "blade/rng.hpp"

namespace blade {

// Context-conditioned item-logit table. One row per context; a list is
// generated autoregressively by repeated masked softmax over the row, so
// an item can never be drawn twice.
struct PolicyParams {
    std::uint32_t n_contexts = 0;
    std::uint32_t n_items = 0;
    std::uint32_t list_len = 0;  // K, items per generated list
    std::vector<double> logits;  // row-major, n_contexts x n_items

    static PolicyParams zeros(std::uint32_t n_contexts, std::uint32_t n_items,
                              std::uint32_t list_len);

    double* row(std::uint32_t ctx) { return logits.data() + std::size_t{ctx} * n_items; }
    const double* row(std::uint32_t ctx) const {
        return logits.data() + std::size_t{ctx} * n_items;
    }

    bool operator==(const PolicyParams&) const = default;
};

struct Rollout {
    RecList list;
    std::vector<double> step_logprobs;  // log prob of each drawn item, <= 0
    double total_logprob = 0.0;
    double reward = 0.0;  // filled after scoring
};

// G rollouts for one context; the GRPO group and, during training, the
// dynamic evidence batch.
struct Group {
    std::vector<Rollout> rollouts;
    std::uint32_t context_id = 0;
};

// Tempered softmax over items not in `prefix`; masked items get
// probability exactly 0.
std::vector<double> step_distribution(const PolicyParams& params,
                                      std::uint32_t ctx,
                                      std::span<const ItemId> prefix,
                                      double temperature);

Rollout sample_list(const PolicyParams& params, std::uint32_t ctx,
                    double temperature, Rng& rng);

struct ListLogProb {
    std::vector<double> step_logprobs;
    double total = 0.0;
};

// Replays the prefix masking; for a rollout sampled at the same parameters
// and temperature this reproduces its recorded log-probabilities exactly.
ListLogProb logprob(const PolicyParams& params, std::uint32_t ctx,
                    const RecList& list, double temperature);

// Exact gradient of logprob(...).total with respect to every logit.
// Returns a table with the same shape as params.logits; rows other than
// `ctx` are zero.
std::vector<double> grad_logprob(const PolicyParams& params, std::uint32_t ctx,
                                 const RecList& list, double temperature);

// Argmax decode at temperature 1, ties broken toward the lowest item id.
RecList greedy_decode(const PolicyParams& params, std::uint32_t ctx);

// Text tensor serialization: a shape line followed by one row of logits
// per context, full double precision.
void write_logits(std::ostream& out, const PolicyParams& params);
PolicyParams read_logits(std::istream& in, std::size_t& lineno);
void save_params(const std::filesystem::path& path, const PolicyParams& params);
PolicyParams load_params(const std::filesystem::path& path);

}  // namespace blade

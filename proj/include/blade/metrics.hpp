#pragma once

#include <span>
#include <string>
#include <string_view>

#include "blade/envsim.hpp"

namespace blade {

// Ordered recommendation list, no duplicate items.
struct RecList {
    std::vector<ItemId> items;
};

// Normalized genre distribution over the catalog's genre universe.
// Each item carries unit mass split equally across its genres.
struct GenreDist {
    std::vector<double> probs;
};

enum class RewardKind { recall, ndcg, mgu, ild, fair, div };

// Parseable reward description. Grammar:
//   "recall@K" | "ndcg@K" | "mgu" | "ild"
//   | "fair@K[:lambda=X]" | "div@K[:lambda=X]"
// fair = NDCG@K - lambda*MGU, div = NDCG@K + lambda*ILD.
struct RewardSpec {
    RewardKind kind = RewardKind::ndcg;
    int k = 5;
    double lambda = 0.0;

    static RewardSpec parse(std::string_view text);
    std::string to_string() const;

    bool operator==(const RewardSpec&) const = default;
};

// `targets` must be sorted ascending (set semantics, as stored in
// UserContext). Returns |top-k hits| / |targets|.
double recall_at_k(const RecList& list, const std::vector<ItemId>& targets,
                   int k);

// Binary relevance, base-2 log discount:
//   DCG = sum_i rel_i / log2(i+1), IDCG over the first min(k,|targets|)
// positions. `targets` sorted ascending.
double ndcg_at_k(const RecList& list, const std::vector<ItemId>& targets,
                 int k);

GenreDist genre_dist(std::span<const ItemId> items, const Catalog& catalog);

// Mean absolute gap between the genre distributions of the list and the
// history. Zero iff the distributions match; lower is fairer.
double mgu(const RecList& list, const std::vector<ItemId>& history,
           const Catalog& catalog);

// Mean pairwise Jaccard genre distance over ordered pairs. Higher is more
// diverse. Requires at least two items.
double ild(const RecList& list, const Catalog& catalog);

double reward(const RewardSpec& spec, const RecList& list,
              const UserContext& ctx, const Catalog& catalog);

}  // namespace blade

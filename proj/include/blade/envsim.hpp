#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace blade {

using ItemId = std::uint32_t;
using GenreId = std::uint32_t;

// Synthetic recommendation world: items with genre labels plus per-user
// history/target splits. Everything downstream (rewards, policies) is a
// pure function of these values.

struct Catalog {
    std::uint32_t n_items = 0;
    std::uint32_t n_genres = 0;
    // genres[i] is item i's genre set, sorted ascending, never empty.
    std::vector<std::vector<GenreId>> genres;
};

struct UserContext {
    std::uint32_t id = 0;
    std::vector<ItemId> history;   // ordered by preference rank
    std::vector<ItemId> targets;   // sorted ascending (set semantics)

    bool operator==(const UserContext&) const = default;
};

struct Dataset {
    Catalog catalog;
    std::vector<UserContext> contexts;
    std::uint64_t seed = 0;
};

bool operator==(const Catalog& a, const Catalog& b);
bool operator==(const Dataset& a, const Dataset& b);

// Deterministic in (seed, sizes). Each item gets 1..max_genres_per_item
// genres drawn uniformly without replacement.
Catalog generate_catalog(std::uint64_t seed, std::uint32_t n_items,
                         std::uint32_t n_genres,
                         std::uint32_t max_genres_per_item);

// Per context: draws a latent per-genre preference, scores items by mean
// genre affinity plus bounded uniform noise, and slices the ranking into a
// history prefix and a disjoint target block. The latent preference is
// discarded; rewards depend only on the retained fields.
Dataset generate_contexts(const Catalog& catalog, std::uint64_t seed,
                          std::uint32_t n_contexts, std::uint32_t history_len,
                          std::uint32_t target_len);

// Line-delimited JSON: one header record (version, sizes, seed, catalog
// genres) then one record per context.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace blade

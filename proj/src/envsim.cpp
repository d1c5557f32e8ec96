#include "blade/envsim.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "blade/errors.hpp"
#include "blade/rng.hpp"

namespace blade {
namespace {

constexpr std::uint64_t kCatalogStream = 0x63617461;  // "cata"
constexpr std::uint64_t kContextStream = 0x63747874;  // "ctxt"
constexpr int kDatasetVersion = 1;

using nlohmann::json;

}  // namespace

bool operator==(const Catalog& a, const Catalog& b) {
    return a.n_items == b.n_items && a.n_genres == b.n_genres &&
           a.genres == b.genres;
}

bool operator==(const Dataset& a, const Dataset& b) {
    return a.catalog == b.catalog && a.contexts == b.contexts &&
           a.seed == b.seed;
}

Catalog generate_catalog(std::uint64_t seed, std::uint32_t n_items,
                         std::uint32_t n_genres,
                         std::uint32_t max_genres_per_item) {
    if (n_items < 2) throw std::invalid_argument("generate_catalog: n_items must be >= 2");
    if (n_genres < 1) throw std::invalid_argument("generate_catalog: n_genres must be >= 1");
    if (max_genres_per_item < 1 || max_genres_per_item > n_genres) {
        throw std::invalid_argument(
            "generate_catalog: max_genres_per_item must be in [1, n_genres]");
    }

    Rng rng(mix_seed({seed, kCatalogStream}));
    Catalog cat;
    cat.n_items = n_items;
    cat.n_genres = n_genres;
    cat.genres.resize(n_items);

    std::vector<GenreId> pool(n_genres);
    for (std::uint32_t item = 0; item < n_items; ++item) {
        const auto count =
            1 + static_cast<std::uint32_t>(rng.uniform_below(max_genres_per_item));
        std::iota(pool.begin(), pool.end(), 0u);
        // Partial Fisher-Yates: the first `count` entries become the sample.
        for (std::uint32_t j = 0; j < count; ++j) {
            const auto k =
                j + static_cast<std::uint32_t>(rng.uniform_below(n_genres - j));
            std::swap(pool[j], pool[k]);
        }
        auto& gset = cat.genres[item];
        gset.assign(pool.begin(), pool.begin() + count);
        std::sort(gset.begin(), gset.end());
    }
    return cat;
}

Dataset generate_contexts(const Catalog& catalog, std::uint64_t seed,
                          std::uint32_t n_contexts, std::uint32_t history_len,
                          std::uint32_t target_len) {
    if (history_len < 1 || target_len < 1) {
        throw std::invalid_argument(
            "generate_contexts: history_len and target_len must be >= 1");
    }
    if (static_cast<std::uint64_t>(history_len) + target_len > catalog.n_items) {
        throw std::invalid_argument(
            "generate_contexts: history_len + target_len exceeds catalog size");
    }

    Dataset ds;
    ds.catalog = catalog;
    ds.seed = seed;
    ds.contexts.reserve(n_contexts);

    const auto n_items = catalog.n_items;
    std::vector<double> pref(catalog.n_genres);
    std::vector<double> score(n_items);
    std::vector<ItemId> order(n_items);

    for (std::uint32_t c = 0; c < n_contexts; ++c) {
        Rng rng(mix_seed({seed, kContextStream, c}));
        for (auto& p : pref) p = rng.uniform();

        double lo = 1.0, hi = 0.0;
        for (std::uint32_t i = 0; i < n_items; ++i) {
            double s = 0.0;
            for (GenreId g : catalog.genres[i]) s += pref[g];
            s /= static_cast<double>(catalog.genres[i].size());
            score[i] = s;
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
        // Noise magnitude is 0.1 of the score range: enough to keep contexts
        // distinguishable without collapsing target sets onto each other.
        const double amp = 0.1 * (hi - lo);
        for (std::uint32_t i = 0; i < n_items; ++i) {
            score[i] += amp * (2.0 * rng.uniform() - 1.0);
        }

        std::iota(order.begin(), order.end(), 0u);
        std::stable_sort(order.begin(), order.end(), [&](ItemId a, ItemId b) {
            return score[a] > score[b];
        });

        UserContext ctx;
        ctx.id = c;
        ctx.history.assign(order.begin(), order.begin() + history_len);
        ctx.targets.assign(order.begin() + history_len,
                           order.begin() + history_len + target_len);
        std::sort(ctx.targets.begin(), ctx.targets.end());
        ds.contexts.push_back(std::move(ctx));
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_dataset: cannot open " + path.string());
    }
    json header = {
        {"version", kDatasetVersion},
        {"kind", "blade-dataset"},
        {"n_items", ds.catalog.n_items},
        {"n_genres", ds.catalog.n_genres},
        {"seed", ds.seed},
        {"genres", ds.catalog.genres},
    };
    out << header.dump() << '\n';
    for (const auto& ctx : ds.contexts) {
        json rec = {
            {"id", ctx.id},
            {"history", ctx.history},
            {"targets", ctx.targets},
        };
        out << rec.dump() << '\n';
    }
    if (!out) {
        throw std::runtime_error("save_dataset: write failed for " + path.string());
    }
}

namespace {

json parse_line(const std::string& line, std::size_t lineno) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
        throw ParseError("dataset line " + std::to_string(lineno) +
                         ": invalid JSON");
    }
    return j;
}

template <typename T>
T field(const json& j, const char* name, std::size_t lineno) {
    auto it = j.find(name);
    if (it == j.end()) {
        throw ParseError("dataset line " + std::to_string(lineno) +
                         ": missing field \"" + name + "\"");
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ParseError("dataset line " + std::to_string(lineno) +
                         ": field \"" + name + "\" has wrong type");
    }
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_dataset: cannot open " + path.string());
    }

    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) {
        throw ParseError("dataset line 1: empty file, expected header record");
    }
    ++lineno;

    const json header = parse_line(line, lineno);
    const int version = field<int>(header, "version", lineno);
    if (version != kDatasetVersion) {
        throw VersionError("dataset version " + std::to_string(version) +
                           " not supported (expected " +
                           std::to_string(kDatasetVersion) + ")");
    }

    Dataset ds;
    ds.catalog.n_items = field<std::uint32_t>(header, "n_items", lineno);
    ds.catalog.n_genres = field<std::uint32_t>(header, "n_genres", lineno);
    ds.seed = field<std::uint64_t>(header, "seed", lineno);
    ds.catalog.genres =
        field<std::vector<std::vector<GenreId>>>(header, "genres", lineno);
    if (ds.catalog.genres.size() != ds.catalog.n_items) {
        throw ParseError("dataset line 1: genres array length " +
                         std::to_string(ds.catalog.genres.size()) +
                         " does not match n_items " +
                         std::to_string(ds.catalog.n_items));
    }
    for (const auto& gset : ds.catalog.genres) {
        if (gset.empty()) {
            throw ParseError("dataset line 1: item with empty genre set");
        }
        for (GenreId g : gset) {
            if (g >= ds.catalog.n_genres) {
                throw ParseError("dataset line 1: genre id " + std::to_string(g) +
                                 " out of range");
            }
        }
    }

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const json rec = parse_line(line, lineno);
        UserContext ctx;
        ctx.id = field<std::uint32_t>(rec, "id", lineno);
        ctx.history = field<std::vector<ItemId>>(rec, "history", lineno);
        ctx.targets = field<std::vector<ItemId>>(rec, "targets", lineno);
        for (ItemId it : ctx.history) {
            if (it >= ds.catalog.n_items) {
                throw ParseError("dataset line " + std::to_string(lineno) +
                                 ": history item out of range");
            }
        }
        for (ItemId it : ctx.targets) {
            if (it >= ds.catalog.n_items) {
                throw ParseError("dataset line " + std::to_string(lineno) +
                                 ": target item out of range");
            }
        }
        ds.contexts.push_back(std::move(ctx));
    }
    return ds;
}

}  // namespace blade

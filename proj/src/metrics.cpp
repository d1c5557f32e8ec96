#include "blade/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace blade {
namespace {

bool is_target(const std::vector<ItemId>& targets, ItemId item) {
    return std::binary_search(targets.begin(), targets.end(), item);
}

double log2_discount(std::size_t position) {
    // position is 1-based; gain discount is 1/log2(position+1).
    return 1.0 / std::log2(static_cast<double>(position) + 1.0);
}

double jaccard_distance(const std::vector<GenreId>& a,
                        const std::vector<GenreId>& b) {
    std::size_t inter = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    const std::size_t uni = a.size() + b.size() - inter;
    return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

[[noreturn]] void bad_spec(std::string_view text, const char* why) {
    throw std::invalid_argument("reward spec \"" + std::string(text) +
                                "\": " + why);
}

std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, end);
}

}  // namespace

double recall_at_k(const RecList& list, const std::vector<ItemId>& targets,
                   int k) {
    if (k < 1) throw std::invalid_argument("recall_at_k: k must be >= 1");
    if (targets.empty()) throw std::invalid_argument("recall_at_k: empty targets");
    const std::size_t depth =
        std::min<std::size_t>(static_cast<std::size_t>(k), list.items.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < depth; ++i) {
        if (is_target(targets, list.items[i])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(targets.size());
}

double ndcg_at_k(const RecList& list, const std::vector<ItemId>& targets,
                 int k) {
    if (k < 1) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
    if (targets.empty()) throw std::invalid_argument("ndcg_at_k: empty targets");
    const std::size_t depth =
        std::min<std::size_t>(static_cast<std::size_t>(k), list.items.size());
    double dcg = 0.0;
    for (std::size_t i = 0; i < depth; ++i) {
        if (is_target(targets, list.items[i])) dcg += log2_discount(i + 1);
    }
    const std::size_t ideal =
        std::min<std::size_t>(static_cast<std::size_t>(k), targets.size());
    double idcg = 0.0;
    for (std::size_t i = 0; i < ideal; ++i) idcg += log2_discount(i + 1);
    return dcg / idcg;
}

GenreDist genre_dist(std::span<const ItemId> items, const Catalog& catalog) {
    if (items.empty()) throw std::invalid_argument("genre_dist: empty item list");
    GenreDist dist;
    dist.probs.assign(catalog.n_genres, 0.0);
    for (ItemId item : items) {
        const auto& gset = catalog.genres.at(item);
        const double share = 1.0 / static_cast<double>(gset.size());
        for (GenreId g : gset) dist.probs[g] += share;
    }
    const double total = static_cast<double>(items.size());
    for (auto& p : dist.probs) p /= total;
    return dist;
}

double mgu(const RecList& list, const std::vector<ItemId>& history,
           const Catalog& catalog) {
    if (list.items.empty()) throw std::invalid_argument("mgu: empty list");
    if (history.empty()) throw std::invalid_argument("mgu: empty history");
    const GenreDist pl = genre_dist(list.items, catalog);
    const GenreDist ph = genre_dist(history, catalog);
    double acc = 0.0;
    for (std::uint32_t c = 0; c < catalog.n_genres; ++c) {
        acc += std::abs(pl.probs[c] - ph.probs[c]);
    }
    return acc / static_cast<double>(catalog.n_genres);
}

double ild(const RecList& list, const Catalog& catalog) {
    const std::size_t n = list.items.size();
    if (n < 2) throw std::invalid_argument("ild: need at least 2 items");
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            acc += 2.0 * jaccard_distance(catalog.genres.at(list.items[i]),
                                          catalog.genres.at(list.items[j]));
        }
    }
    return acc / (static_cast<double>(n) * static_cast<double>(n - 1));
}

double reward(const RewardSpec& spec, const RecList& list,
              const UserContext& ctx, const Catalog& catalog) {
    switch (spec.kind) {
        case RewardKind::recall:
            return recall_at_k(list, ctx.targets, spec.k);
        case RewardKind::ndcg:
            return ndcg_at_k(list, ctx.targets, spec.k);
        case RewardKind::mgu:
            return mgu(list, ctx.history, catalog);
        case RewardKind::ild:
            return ild(list, catalog);
        case RewardKind::fair:
            return ndcg_at_k(list, ctx.targets, spec.k) -
                   spec.lambda * mgu(list, ctx.history, catalog);
        case RewardKind::div:
            return ndcg_at_k(list, ctx.targets, spec.k) +
                   spec.lambda * ild(list, catalog);
    }
    throw std::invalid_argument("reward: unknown kind");
}

RewardSpec RewardSpec::parse(std::string_view text) {
    RewardSpec spec;
    std::string_view rest = text;

    const auto at = rest.find('@');
    const std::string_view name = rest.substr(0, std::min(at, rest.size()));
    if (name == "recall") {
        spec.kind = RewardKind::recall;
    } else if (name == "ndcg") {
        spec.kind = RewardKind::ndcg;
    } else if (name == "mgu") {
        spec.kind = RewardKind::mgu;
    } else if (name == "ild") {
        spec.kind = RewardKind::ild;
    } else if (name == "fair") {
        spec.kind = RewardKind::fair;
    } else if (name == "div") {
        spec.kind = RewardKind::div;
    } else {
        bad_spec(text, "unknown metric name");
    }

    const bool takes_k = spec.kind != RewardKind::mgu && spec.kind != RewardKind::ild;
    const bool takes_lambda =
        spec.kind == RewardKind::fair || spec.kind == RewardKind::div;

    if (!takes_k) {
        if (at != std::string_view::npos) bad_spec(text, "metric takes no @k");
        return spec;
    }
    if (at == std::string_view::npos) bad_spec(text, "missing @k");
    rest.remove_prefix(at + 1);

    const auto colon = rest.find(':');
    const std::string_view kpart = rest.substr(0, std::min(colon, rest.size()));
    int k = 0;
    const auto [kend, kec] =
        std::from_chars(kpart.data(), kpart.data() + kpart.size(), k);
    if (kec != std::errc{} || kend != kpart.data() + kpart.size() || k < 1) {
        bad_spec(text, "invalid k");
    }
    spec.k = k;

    if (colon == std::string_view::npos) return spec;
    if (!takes_lambda) bad_spec(text, "metric takes no lambda");
    rest.remove_prefix(colon + 1);
    constexpr std::string_view prefix = "lambda=";
    if (rest.substr(0, prefix.size()) != prefix) bad_spec(text, "expected lambda=");
    rest.remove_prefix(prefix.size());
    double lambda = 0.0;
    const auto [lend, lec] =
        std::from_chars(rest.data(), rest.data() + rest.size(), lambda);
    if (lec != std::errc{} || lend != rest.data() + rest.size() ||
        !(lambda >= 0.0)) {
        bad_spec(text, "invalid lambda");
    }
    spec.lambda = lambda;
    return spec;
}

std::string RewardSpec::to_string() const {
    switch (kind) {
        case RewardKind::recall:
            return "recall@" + std::to_string(k);
        case RewardKind::ndcg:
            return "ndcg@" + std::to_string(k);
        case RewardKind::mgu:
            return "mgu";
        case RewardKind::ild:
            return "ild";
        case RewardKind::fair:
            return "fair@" + std::to_string(k) + ":lambda=" + format_double(lambda);
        case RewardKind::div:
            return "div@" + std::to_string(k) + ":lambda=" + format_double(lambda);
    }
    return "?";
}

}  // namespace blade

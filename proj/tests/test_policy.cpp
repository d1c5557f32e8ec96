#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>

#include "blade/policy.hpp"

using namespace blade;

namespace {

PolicyParams random_params(Rng& rng, std::uint32_t n_contexts,
                           std::uint32_t n_items, std::uint32_t list_len,
                           double spread = 2.0) {
    PolicyParams p = PolicyParams::zeros(n_contexts, n_items, list_len);
    for (auto& v : p.logits) v = spread * (2.0 * rng.uniform() - 1.0);
    return p;
}

// All duplicate-free lists of the given length, by recursive extension.
void enumerate_lists(std::uint32_t n_items, std::uint32_t len,
                     std::vector<ItemId>& prefix,
                     const std::function<void(const std::vector<ItemId>&)>& fn) {
    if (prefix.size() == len) {
        fn(prefix);
        return;
    }
    for (ItemId i = 0; i < n_items; ++i) {
        if (std::find(prefix.begin(), prefix.end(), i) != prefix.end()) continue;
        prefix.push_back(i);
        enumerate_lists(n_items, len, prefix, fn);
        prefix.pop_back();
    }
}

}  // namespace

TEST_CASE("step_distribution: golden values and masking") {
    PolicyParams p = PolicyParams::zeros(1, 3, 2);

    auto probs = step_distribution(p, 0, {}, 1.0);
    for (double v : probs) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-12));

    const std::vector<ItemId> prefix{0};
    probs = step_distribution(p, 0, prefix, 1.0);
    CHECK(probs[0] == 0.0);
    CHECK(probs[1] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(probs[2] == doctest::Approx(0.5).epsilon(1e-12));

    p.row(0)[0] = std::log(2.0);
    probs = step_distribution(p, 0, {}, 1.0);
    CHECK(probs[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(probs[1] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(probs[2] == doctest::Approx(0.25).epsilon(1e-12));

    double total = 0.0;
    for (double v : probs) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("step_distribution: errors") {
    PolicyParams p = PolicyParams::zeros(1, 3, 2);
    const std::vector<ItemId> dup{1, 1};
    CHECK_THROWS_AS(step_distribution(p, 0, dup, 1.0), std::invalid_argument);
    const std::vector<ItemId> all{0, 1, 2};
    CHECK_THROWS_AS(step_distribution(p, 0, all, 1.0), std::logic_error);
    CHECK_THROWS_AS(step_distribution(p, 5, {}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(step_distribution(p, 0, {}, 0.0), std::invalid_argument);
}

TEST_CASE("sample_list: uniform logits give uniform ordered pairs (chi-square)") {
    PolicyParams p = PolicyParams::zeros(1, 3, 2);
    Rng rng(123);
    std::map<std::pair<ItemId, ItemId>, int> counts;
    const int samples = 60000;
    for (int s = 0; s < samples; ++s) {
        const Rollout ro = sample_list(p, 0, 1.0, rng);
        counts[{ro.list.items[0], ro.list.items[1]}]++;
        CHECK(ro.list.items[0] != ro.list.items[1]);
    }
    REQUIRE(counts.size() == 6);
    const double expected = samples / 6.0;
    double chi2 = 0.0;
    for (const auto& [pair, c] : counts) {
        chi2 += (c - expected) * (c - expected) / expected;
    }
    // 5 degrees of freedom; 25.7 is the 1e-4 tail.
    CHECK(chi2 < 25.7);
}

TEST_CASE("sample_list: K = n_items yields a permutation; fixed seed repeats") {
    PolicyParams p = PolicyParams::zeros(2, 5, 5);
    Rng rng_a(7);
    const Rollout a = sample_list(p, 1, 1.0, rng_a);
    std::vector<ItemId> sorted = a.list.items;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<ItemId>{0, 1, 2, 3, 4});

    Rng rng_b(7);
    const Rollout b = sample_list(p, 1, 1.0, rng_b);
    CHECK(a.list.items == b.list.items);
    CHECK(a.step_logprobs == b.step_logprobs);
}

TEST_CASE("sample_list: rollout invariants") {
    Rng seeder(99);
    for (int trial = 0; trial < 50; ++trial) {
        PolicyParams p = random_params(seeder, 3, 8, 4);
        Rng rng(seeder.next());
        const double temp = trial % 2 == 0 ? 1.0 : 0.8;
        const Rollout ro = sample_list(p, 2, temp, rng);
        REQUIRE(ro.list.items.size() == 4);
        REQUIRE(ro.step_logprobs.size() == 4);
        double total = 0.0;
        for (double lp : ro.step_logprobs) {
            CHECK(lp <= 0.0);
            total += lp;
        }
        CHECK(std::abs(total - ro.total_logprob) <= 1e-12);
    }
}

TEST_CASE("logprob: golden values") {
    PolicyParams p = PolicyParams::zeros(1, 3, 2);
    const auto uniform = logprob(p, 0, RecList{{2, 0}}, 1.0);
    CHECK(uniform.total == doctest::Approx(std::log(1.0 / 6)).epsilon(1e-12));

    p.row(0)[0] = std::log(2.0);
    const auto skew = logprob(p, 0, RecList{{0, 1}}, 1.0);
    CHECK(skew.step_logprobs[0] == doctest::Approx(std::log(0.5)).epsilon(1e-12));
    CHECK(skew.step_logprobs[1] == doctest::Approx(std::log(0.5)).epsilon(1e-12));
    CHECK(skew.total == doctest::Approx(std::log(0.25)).epsilon(1e-12));

    CHECK_THROWS_AS(logprob(p, 0, RecList{{0, 0}}, 1.0), std::invalid_argument);
}

TEST_CASE("logprob: replay of a sampled rollout is exact") {
    Rng seeder(2024);
    for (int trial = 0; trial < 100; ++trial) {
        PolicyParams p = random_params(seeder, 2, 10, 5);
        Rng rng(seeder.next());
        const double temp = trial % 3 == 0 ? 0.8 : 1.0;
        const Rollout ro = sample_list(p, trial % 2, temp, rng);
        const auto replay = logprob(p, trial % 2, ro.list, temp);
        CHECK(replay.step_logprobs == ro.step_logprobs);  // bit-identical
        CHECK(replay.total == ro.total_logprob);
    }
}

TEST_CASE("policy normalizes: sum over all lists of exp(logprob) is 1") {
    Rng seeder(31337);
    for (const auto [n_items, len] : {std::pair<std::uint32_t, std::uint32_t>{4, 2},
                                      {5, 3}, {6, 3}, {3, 3}}) {
        PolicyParams p = random_params(seeder, 1, n_items, len);
        double total = 0.0;
        std::vector<ItemId> prefix;
        enumerate_lists(n_items, len, prefix, [&](const std::vector<ItemId>& list) {
            total += std::exp(logprob(p, 0, RecList{list}, 1.0).total);
        });
        CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("grad_logprob: golden value and per-step zero sum") {
    PolicyParams p = PolicyParams::zeros(1, 2, 1);
    const auto grad = grad_logprob(p, 0, RecList{{0}}, 1.0);
    CHECK(grad[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(grad[1] == doctest::Approx(-0.5).epsilon(1e-12));

    // Each step's softmax gradient is zero-sum over its unmasked items and
    // masked items receive nothing, so the whole row sums to zero too.
    Rng seeder(555);
    for (int trial = 0; trial < 20; ++trial) {
        PolicyParams q = random_params(seeder, 2, 7, 3);
        Rng rng(seeder.next());
        const Rollout ro = sample_list(q, 1, 1.0, rng);
        const auto g = grad_logprob(q, 1, ro.list, 1.0);
        double row_sum = 0.0;
        for (std::uint32_t i = 0; i < 7; ++i) row_sum += g[7 + i];
        CHECK(row_sum == doctest::Approx(0.0).epsilon(1e-12));
        for (std::uint32_t i = 0; i < 7; ++i) CHECK(g[i] == 0.0);  // other row
    }
}

TEST_CASE("grad_logprob matches central finite differences") {
    Rng seeder(424242);
    const double h = 1e-5;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::uint32_t n_items =
            4 + static_cast<std::uint32_t>(seeder.uniform_below(6));
        const std::uint32_t len =
            2 + static_cast<std::uint32_t>(
                    seeder.uniform_below(std::min(n_items, 4u) - 1));
        PolicyParams p = random_params(seeder, 2, n_items, len);
        const auto ctx = static_cast<std::uint32_t>(seeder.uniform_below(2));
        const double temp = trial % 2 == 0 ? 1.0 : 0.8;
        Rng rng(seeder.next());
        const Rollout ro = sample_list(p, ctx, temp, rng);

        const auto grad = grad_logprob(p, ctx, ro.list, temp);
        for (std::uint32_t i = 0; i < n_items; ++i) {
            const std::size_t idx = std::size_t{ctx} * n_items + i;
            const double save = p.logits[idx];
            p.logits[idx] = save + h;
            const double up = logprob(p, ctx, ro.list, temp).total;
            p.logits[idx] = save - h;
            const double down = logprob(p, ctx, ro.list, temp).total;
            p.logits[idx] = save;
            const double fd = (up - down) / (2 * h);
            const double rel = std::abs(grad[idx] - fd) /
                               std::max({std::abs(fd), std::abs(grad[idx]), 1e-8});
            worst = std::max(worst, rel);
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("greedy_decode: ordering, ties, determinism") {
    PolicyParams p = PolicyParams::zeros(1, 6, 3);
    for (std::uint32_t i = 0; i < 6; ++i) p.row(0)[i] = -static_cast<double>(i);
    CHECK(greedy_decode(p, 0).items == std::vector<ItemId>{0, 1, 2});

    PolicyParams flat = PolicyParams::zeros(1, 6, 4);
    CHECK(greedy_decode(flat, 0).items == std::vector<ItemId>{0, 1, 2, 3});

    Rng seeder(8);
    PolicyParams q = random_params(seeder, 2, 9, 5);
    CHECK(greedy_decode(q, 1).items == greedy_decode(q, 1).items);
}

TEST_CASE("params text tensor round-trips") {
    Rng seeder(64);
    const PolicyParams p = random_params(seeder, 3, 7, 4, 5.0);
    const auto path = std::filesystem::temp_directory_path() / "blade_params.txt";
    save_params(path, p);
    const PolicyParams q = load_params(path);
    CHECK(p == q);  // %.17g round-trips doubles exactly
    std::filesystem::remove(path);
}

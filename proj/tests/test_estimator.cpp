#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "blade/estimator.hpp"
#include "blade/rng.hpp"

using namespace blade;

namespace {

std::vector<double> random_rewards(Rng& rng, std::size_t n, double lo = 0.0,
                                   double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = lo + (hi - lo) * rng.uniform();
    return v;
}

// Counting oracle: strict-below count in the union multiset of reference
// and batch rewards. At tau = 1 the estimator must equal this pooled
// empirical CDF exactly.
double pooled_cdf(const ReferenceStats& stats, std::span<const double> batch,
                  double r) {
    std::size_t c = 0;
    for (double x : stats.sorted_rewards) c += x < r;
    for (double x : batch) c += x < r;
    return static_cast<double>(c) /
           static_cast<double>(stats.size() + batch.size());
}

}  // namespace

TEST_CASE("build_reference: sorting and multiset semantics") {
    const ReferenceStats s = build_reference({3.0, 1.0, 2.0});
    CHECK(s.sorted_rewards == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(s.size() == 3);

    const ReferenceStats dup = build_reference({1.0, 1.0, 2.0});
    CHECK(dup.size() == 3);

    Rng rng(5);
    const ReferenceStats m128 = build_reference(random_rewards(rng, 128));
    CHECK(m128.size() == 128);
    CHECK(std::is_sorted(m128.sorted_rewards.begin(), m128.sorted_rewards.end()));

    CHECK_THROWS_AS(build_reference({}), std::invalid_argument);
    CHECK_THROWS_AS(build_reference({0.1, std::nan("")}), std::invalid_argument);
}

TEST_CASE("count_below is strict binary search") {
    const ReferenceStats s = build_reference({1.0, 2.0, 3.0});
    CHECK(count_below(s, 2.0) == 1);
    CHECK(count_below(s, 0.5) == 0);
    CHECK(count_below(s, 99.0) == 3);
    CHECK(count_below(s, 1.0) == 0);
    CHECK(count_below(s, 3.0 + 1e-12) == 3);
}

TEST_CASE("batch_count_below: strict, ties excluded") {
    const std::vector<double> group{0.1, 0.5, 0.5, 0.9};
    CHECK(batch_count_below(group, 0.5) == 1);
    CHECK(batch_count_below(group, 0.9) == 3);  // G - multiplicity of max
    CHECK(batch_count_below(group, 0.1) == 0);
}

TEST_CASE("posterior: golden updates") {
    Rng rng(17);
    {
        // M = 128 with exactly 64 below r, tau = 0: the pure prior.
        std::vector<double> ref(128);
        for (int i = 0; i < 128; ++i) ref[i] = i < 64 ? 0.1 : 0.9;
        const auto s = build_reference(std::move(ref));
        const auto post = posterior(s, {}, 0.0, 0.5);
        CHECK(post.alpha == 64.0);
        CHECK(post.beta == 64.0);
        CHECK(post.mean() == 0.5);
    }
    {
        // M = 128 all below, tau = 1, G = 16 with 8 below: Beta(136, 8).
        const auto s = build_reference(random_rewards(rng, 128, 0.0, 0.4));
        std::vector<double> batch(16);
        for (int i = 0; i < 16; ++i) batch[i] = i < 8 ? 0.45 : 0.7;
        const auto post = posterior(s, batch, 1.0, 0.6);
        CHECK(post.alpha == 136.0);
        CHECK(post.beta == 8.0);
        CHECK(post.mean() == doctest::Approx(136.0 / 144).epsilon(1e-15));
        CHECK(post.mean() == pooled_cdf(s, batch, 0.6));  // tau = 1 pools exactly
    }
    {
        // M = 4, none below, tau = 0.5, batch of 2 both below: Beta(1, 4).
        const auto s = build_reference({0.5, 0.6, 0.7, 0.8});
        const std::vector<double> batch{0.1, 0.2};
        const auto post = posterior(s, batch, 0.5, 0.4);
        CHECK(post.alpha == 1.0);
        CHECK(post.beta == 4.0);
        CHECK(post.mean() == doctest::Approx(0.2).epsilon(1e-15));
    }
    CHECK_THROWS_AS(posterior(build_reference({0.0}), {}, -0.1, 0.0),
                    std::invalid_argument);
}

TEST_CASE("blade_cdf: static recovery at tau = 0, exact") {
    Rng rng(23);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t m = 1 + rng.uniform_below(64);
        const auto s = build_reference(random_rewards(rng, m));
        const auto batch = random_rewards(rng, 1 + rng.uniform_below(16));
        const double r = -0.1 + 1.2 * rng.uniform();
        const double expected =
            static_cast<double>(count_below(s, r)) / static_cast<double>(m);
        CHECK(blade_cdf(s, batch, 0.0, r) == expected);
    }
}

TEST_CASE("blade_cdf: equals posterior mean and closed form, in [0,1], monotone") {
    Rng rng(29);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t m = 1 + rng.uniform_below(64);
        const std::size_t g = 1 + rng.uniform_below(24);
        const auto s = build_reference(random_rewards(rng, m));
        const auto batch = random_rewards(rng, g);
        const double tau = rng.uniform() * 2.0;
        const double r1 = -0.2 + 1.4 * rng.uniform();
        const double r2 = -0.2 + 1.4 * rng.uniform();

        const double f1 = blade_cdf(s, batch, tau, r1);
        CHECK(f1 == posterior(s, batch, tau, r1).mean());
        const double closed =
            (static_cast<double>(count_below(s, r1)) +
             tau * static_cast<double>(batch_count_below(batch, r1))) /
            (static_cast<double>(m) + tau * static_cast<double>(g));
        CHECK(f1 == closed);
        CHECK(f1 >= 0.0);
        CHECK(f1 <= 1.0);

        const double f2 = blade_cdf(s, batch, tau, r2);
        if (r1 <= r2) {
            CHECK(f1 <= f2);
        } else {
            CHECK(f2 <= f1);
        }
    }
}

TEST_CASE("blade_cdf: tau = 1 equals the pooled strict empirical CDF") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const auto s =
            build_reference(random_rewards(rng, 1 + rng.uniform_below(40)));
        const auto batch = random_rewards(rng, 1 + rng.uniform_below(20));
        const double r = rng.uniform();
        CHECK(blade_cdf(s, batch, 1.0, r) == pooled_cdf(s, batch, r));
    }
}

TEST_CASE("blade_cdf: saturates at 1 above all observations") {
    const auto s = build_reference({0.1, 0.2, 0.3});
    const std::vector<double> batch{0.4, 0.5};
    CHECK(blade_cdf(s, batch, 1.0, 0.9) == 1.0);
}

TEST_CASE("proxy_reward: golden values and bounds") {
    CHECK(proxy_reward(1.0, 2, 1e-6) == 0.0);
    CHECK(proxy_reward(1.0, 16, 1e-6) == 0.0);
    CHECK(proxy_reward(0.5, 2, 1e-6) ==
          doctest::Approx(std::log(0.5)).epsilon(1e-12));
    CHECK(proxy_reward(0.0, 4, 1e-6) ==
          doctest::Approx(3.0 * std::log(1e-6)).epsilon(1e-12));
    CHECK(proxy_reward(0.0, 4, 1e-6) == doctest::Approx(-41.446531).epsilon(1e-6));

    Rng rng(37);
    for (int trial = 0; trial < 200; ++trial) {
        const double fhat = rng.uniform();
        const int n = 2 + static_cast<int>(rng.uniform_below(8));
        const double floor = 1e-8 + 0.5 * rng.uniform();
        const double v = proxy_reward(fhat, n, floor);
        CHECK(v <= 0.0);
        CHECK(v >= (n - 1) * std::log(floor));
    }

    CHECK_THROWS_AS(proxy_reward(0.5, 1, 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(proxy_reward(1.5, 2, 1e-6), std::invalid_argument);
    CHECK_THROWS_AS(proxy_reward(0.5, 2, 0.0), std::invalid_argument);
}

TEST_CASE("default_cdf_floor: half a pooled sample") {
    CHECK(default_cdf_floor(128, 0.0, 16) == doctest::Approx(1.0 / 256));
    CHECK(default_cdf_floor(128, 1.0, 16) == doctest::Approx(1.0 / 288));
    CHECK(default_cdf_floor(0, 1.0, 16) == doctest::Approx(1.0 / 32));
}

TEST_CASE("indiscrimination witness: static saturation vs dynamic ordering") {
    Rng rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        const auto s =
            build_reference(random_rewards(rng, 8 + rng.uniform_below(64)));
        const double rmax = s.max();
        const double r2 = rmax + 0.01 + rng.uniform();
        const double r1 = r2 + 0.01 + rng.uniform();

        CHECK(indiscrimination_witness(s, r1, r2));

        // With both candidates in the batch and tau > 0, the estimator
        // strictly orders them again.
        const std::vector<double> batch{r1, r2};
        const double f1 = blade_cdf(s, batch, 0.5, r1);
        const double f2 = blade_cdf(s, batch, 0.5, r2);
        CHECK(f1 > f2);
    }

    const auto s = build_reference({0.1, 0.5, 0.9});
    CHECK_THROWS_AS(indiscrimination_witness(s, 1.2, 0.8), std::invalid_argument);
    CHECK_THROWS_AS(indiscrimination_witness(s, 1.1, 1.2), std::invalid_argument);
}

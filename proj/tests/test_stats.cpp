#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <vector>

#include "cpsim/stats.hpp"
#include "doctest.h"

using namespace cpsim;

TEST_CASE("normal cdf / quantile round trip") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5));
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963985).epsilon(1e-8));
    CHECK(normal_cdf(1.959963985) == doctest::Approx(0.975).epsilon(1e-8));
    for (double p : {0.001, 0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999})
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-10));
}

TEST_CASE("chi-square survival function") {
    // dof = 2 is exactly exp(-x/2)
    for (double x : {0.1, 1.0, 3.0, 10.0})
        CHECK(chi2_sf(x, 2.0) == doctest::Approx(std::exp(-x / 2.0)).epsilon(1e-10));
    // classic 5% critical value for dof = 1
    CHECK(chi2_sf(3.841458821, 1.0) == doctest::Approx(0.05).epsilon(1e-6));
    CHECK(chi2_sf(0.0, 3.0) == doctest::Approx(1.0));
}

TEST_CASE("KS asymptotic tail") {
    CHECK(ks_asymptotic_sf(1e-12) == doctest::Approx(1.0));
    CHECK(ks_asymptotic_sf(10.0) == doctest::Approx(0.0).epsilon(1e-12));
    // lambda = 1.358 is the textbook 5% point
    CHECK(ks_asymptotic_sf(1.358) == doctest::Approx(0.05).epsilon(0.03));
    // monotone decreasing
    CHECK(ks_asymptotic_sf(0.5) > ks_asymptotic_sf(1.0));
    CHECK(ks_asymptotic_sf(1.0) > ks_asymptotic_sf(2.0));
}

TEST_CASE("Wilson interval") {
    SUBCASE("degenerate counts stay in [0,1]") {
        auto lo = wilson_ci(0, 10);
        CHECK(lo.p_hat == 0.0);
        CHECK(lo.ci_low == 0.0);
        CHECK(lo.ci_high > 0.0);
        auto hi = wilson_ci(10, 10);
        CHECK(hi.ci_high == 1.0);
        CHECK(hi.ci_low < 1.0);
    }
    SUBCASE("frozen reference value at 50/100, level 0.95") {
        auto r = wilson_ci(50, 100, 0.95);
        CHECK(r.p_hat == doctest::Approx(0.5));
        CHECK(r.ci_low == doctest::Approx(0.4038315).epsilon(1e-6));
        CHECK(r.ci_high == doctest::Approx(0.5961685).epsilon(1e-6));
    }
    SUBCASE("narrows with trials") {
        auto a = wilson_ci(50, 100);
        auto b = wilson_ci(500, 1000);
        CHECK(b.ci_high - b.ci_low < a.ci_high - a.ci_low);
    }
}

namespace {
// brute-force two-sample KS statistic: sup over all observed points
double ks_stat_brute(std::vector<double> a, std::vector<double> b) {
    auto ecdf = [](const std::vector<double>& v, double x) {
        double c = 0;
        for (double t : v)
            if (t <= x) ++c;
        return c / static_cast<double>(v.size());
    };
    double d = 0.0;
    for (const auto& v : {a, b})
        for (double x : v) d = std::max(d, std::fabs(ecdf(a, x) - ecdf(b, x)));
    return d;
}
}  // namespace

TEST_CASE("two-sample KS against brute-force statistic") {
    StreamRng rng(42);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> a, b;
        for (int i = 0; i < 37; ++i) a.push_back(rng.open01());
        for (int i = 0; i < 53; ++i) b.push_back(rng.open01() * (rep % 2 ? 1.0 : 0.8));
        auto rep1 = ks_two_sample(a, b);
        CHECK(rep1.statistic == doctest::Approx(ks_stat_brute(a, b)).epsilon(1e-12));
    }
    // identical samples: D = 0, p = 1
    std::vector<double> s = {1.0, 2.0, 3.0};
    auto same = ks_two_sample(s, s);
    CHECK(same.statistic == doctest::Approx(0.0));
    CHECK(same.p_value == doctest::Approx(1.0));
    // disjoint supports: D = 1
    auto far = ks_two_sample({1.0, 2.0}, {10.0, 11.0});
    CHECK(far.statistic == doctest::Approx(1.0));
}

TEST_CASE("one-sample KS vs uniform") {
    // hand-computable: n = 2, u = {0.1, 0.2}: D = max(0.5-0.1, 1-0.2, ...) = 0.8
    auto r = ks_one_sample_uniform({0.1, 0.2});
    CHECK(r.statistic == doctest::Approx(0.8).epsilon(1e-12));
    // a dense uniform grid should not be rejected
    std::vector<double> grid;
    for (int i = 0; i < 1000; ++i) grid.push_back((i + 0.5) / 1000.0);
    CHECK_FALSE(ks_one_sample_uniform(grid).rejected());
}

TEST_CASE("lag autocorrelation") {
    // exact alternation gives exactly -1 under the chosen normalization
    std::vector<double> alt;
    for (int i = 0; i < 40; ++i) alt.push_back(i % 2 ? 1.0 : -1.0);
    CHECK(lag_autocorrelation(alt, 1) == -1.0);
    // hand value for {1,2,3,4}: (1.25/3) / (5/4) = 1/3
    CHECK(lag_autocorrelation({1, 2, 3, 4}, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    // i.i.d. noise sits inside the 2/sqrt(n) band
    StreamRng rng(7);
    std::vector<double> noise;
    for (int i = 0; i < 4000; ++i) noise.push_back(rng.open01());
    CHECK(std::fabs(lag_autocorrelation(noise, 1)) < 2.0 / std::sqrt(4000.0));
}

TEST_CASE("geometric fit") {
    SUBCASE("hand value") {
        auto [p, rep] = geometric_fit({1, 2, 1, 1});
        CHECK(p == doctest::Approx(0.8));
        CHECK_FALSE(rep.rejected());
    }
    SUBCASE("large geometric sample passes GOF") {
        StreamRng rng(123);
        const double p_true = 0.35;
        std::vector<long> ns;
        for (int i = 0; i < 10000; ++i)
            ns.push_back(1 + static_cast<long>(std::floor(std::log(rng.open01()) /
                                                          std::log(1.0 - p_true))));
        auto [p, rep] = geometric_fit(ns);
        CHECK(p == doctest::Approx(p_true).epsilon(0.03));
        CHECK(rep.p_value > 0.01);
    }
    SUBCASE("clearly non-geometric sample is rejected") {
        std::vector<long> ns(2000, 2);  // point mass at 2
        auto [p, rep] = geometric_fit(ns);
        CHECK(rep.rejected());
    }
}

TEST_CASE("normality test") {
    const int n = 200;
    SUBCASE("exact normal quantiles pass") {
        std::vector<double> z;
        for (int i = 1; i <= n; ++i) z.push_back(normal_quantile((i - 0.5) / n));
        auto rep = normality_test(z);
        CHECK_FALSE(rep.rejected());
        CHECK(rep.p_value > 0.5);
    }
    SUBCASE("exponential data is rejected (power check)") {
        std::vector<double> e;
        for (int i = 1; i <= n; ++i) e.push_back(-std::log(1.0 - (i - 0.5) / n));
        CHECK(normality_test(e).rejected());
    }
}

TEST_CASE("decay fit recovers an exact exponential") {
    std::vector<DecayFit::Point> pts;
    const double c = 0.5, g = 0.1;
    for (long n : {10L, 20L, 30L, 40L})
        pts.push_back({n, c * std::exp(-g * n), 100000, 1000});
    auto fit = decay_fit(pts);
    CHECK(fit.c_hat == doctest::Approx(c).epsilon(1e-10));
    CHECK(fit.gamma_hat == doctest::Approx(g).epsilon(1e-10));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(fit.support.size() == 4);
}

TEST_CASE("decay fit drops starved points and needs three usable ones") {
    std::vector<DecayFit::Point> pts = {{10, 0.5, 100, 50},
                                        {20, 0.25, 100, 25},
                                        {30, 0.125, 100, 12},
                                        {40, 0.01, 100, 1}};
    auto fit = decay_fit(pts);  // successes < 5 at n = 40 is excluded
    CHECK(fit.support.size() == 3);
    CHECK_THROWS_AS(decay_fit({{10, 0.5, 100, 50}, {20, 0.25, 100, 25}}),
                    InsufficientData);
}

TEST_CASE("edge speed estimator") {
    std::vector<std::pair<double, double>> flat(40, {2.0, 1.0});
    auto e = edge_speed(flat);
    CHECK(e.alpha_hat == doctest::Approx(2.0));
    CHECK(e.ci_high - e.ci_low == doctest::Approx(0.0).epsilon(1e-12));

    // ratio estimator, not mean of ratios: sum dr / sum dpsi
    std::vector<std::pair<double, double>> mixed;
    for (int i = 0; i < 50; ++i) mixed.push_back(i % 2 ? std::pair{3.0, 1.0} : std::pair{1.0, 2.0});
    auto m = edge_speed(mixed);
    CHECK(m.alpha_hat == doctest::Approx((3.0 + 1.0) / (1.0 + 2.0)).epsilon(1e-12));
    CHECK(m.ci_low < m.alpha_hat);
    CHECK(m.ci_high > m.alpha_hat);

    CHECK_THROWS_AS(edge_speed({{1.0, 1.0}}), InsufficientData);
}

TEST_CASE("experiment orchestration is deterministic with the prefix property") {
    auto f = [](std::size_t i, std::uint64_t key) {
        StreamRng rng(key);
        return rng.open01() + static_cast<double>(i);
    };
    auto a = run_experiment(10, 99, f);
    auto b = run_experiment(10, 99, f);
    auto c = run_experiment(25, 99, f);
    CHECK(a == b);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == c[i]);
}

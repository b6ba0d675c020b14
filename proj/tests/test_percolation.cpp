#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <set>
#include <vector>

#include "cpsim/percolation.hpp"
#include "cpsim/rng.hpp"
#include "doctest.h"

using namespace cpsim;

namespace {
PercConfig pcfg(double eps, PercMode mode, int n_max, std::uint64_t seed = 1,
                int extent = 0) {
    PercConfig c;
    c.epsilon = eps;
    c.mode = mode;
    c.n_max = n_max;
    c.extent = extent;
    c.seed = seed;
    return c;
}

// oracle: y is in W_n iff w(y, n) is open and some open path from the start
// reaches it (steps y -> y +- 1 per row, every visited row-i site open)
bool reachable(const PercField& f, const std::vector<int>& start, int y, int n) {
    if (n == 0) {
        for (int s : start)
            if (s == y) return true;
        return false;
    }
    if (!f.open(y, n)) return false;
    return reachable(f, start, y - 1, n - 1) || reachable(f, start, y + 1, n - 1);
}
}  // namespace

TEST_CASE("constant-open field spreads at speed one") {
    const auto f = PercField::constant(pcfg(0.0, PercMode::independent, 6), true);
    const auto run = evolve_percolation(f, {0}, 6);
    CHECK(run.survived());
    for (int n = 1; n <= 6; ++n) {
        CHECK(run.L[n] == -n);
        CHECK(run.R[n] == n);
        CHECK(static_cast<int>(run.level(n).size()) == n + 1);
    }
}

TEST_CASE("constant-closed field dies in one step") {
    const auto f = PercField::constant(pcfg(0.5, PercMode::independent, 6), false);
    const auto run = evolve_percolation(f, {0}, 6);
    CHECK(run.tau == 1);
    CHECK_FALSE(run.survived());
    CHECK_FALSE(run.survived_to(1));
    CHECK(run.survived_to(0));
}

TEST_CASE("epsilon = 0 generates an all-open field in both modes") {
    for (auto mode : {PercMode::independent, PercMode::one_dependent}) {
        const auto f = PercField::generate(pcfg(0.0, mode, 4, 9));
        for (int n = 1; n <= 4; ++n)
            for (int y = f.config().col_lo() + 1; y < f.config().col_hi(); ++y)
                if ((y + n) % 2 == 0) CHECK(f.open(y, n));
    }
}

TEST_CASE("manually blocking the first row kills the run") {
    auto f = PercField::constant(pcfg(0.1, PercMode::independent, 4), true);
    f.set_open(-1, 1, false);
    f.set_open(1, 1, false);
    const auto run = evolve_percolation(f, {0}, 4);
    CHECK(run.tau == 1);
}

TEST_CASE("exhaustive two-row oracle from the origin") {
    // all 2^5 assignments of the cone sites (rows 1..2)
    const std::vector<std::pair<int, int>> sites = {
        {-1, 1}, {1, 1}, {-2, 2}, {0, 2}, {2, 2}};
    for (unsigned m = 0; m < 32; ++m) {
        auto f = PercField::constant(pcfg(0.5, PercMode::independent, 2), false);
        for (std::size_t i = 0; i < sites.size(); ++i)
            f.set_open(sites[i].first, sites[i].second, (m >> i) & 1);
        const auto run = evolve_percolation(f, {0}, 2);
        for (int n = 0; n <= 2; ++n) {
            if (!run.survived_to(n)) {
                if (run.tau <= n) CHECK(run.levels[n].empty());
                continue;
            }
            for (int y = -2; y <= 2; ++y) {
                if ((y + n) % 2 != 0) continue;
                CHECK(run.occupied(y, n) == reachable(f, {0}, y, n));
            }
        }
    }
}

TEST_CASE("random fields match the path oracle up to row 12") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const auto f = PercField::generate(pcfg(0.25, PercMode::one_dependent, 12, seed));
        const auto run = evolve_percolation(f, {0}, 12);
        for (int n = 1; n <= 12; ++n) {
            if (!run.survived_to(n)) break;
            for (int y = -n; y <= n; ++y) {
                if ((y + n) % 2 != 0) continue;
                CHECK(run.occupied(y, n) == reachable(f, {0}, y, n));
            }
        }
    }
}

TEST_CASE("one-dependent openness follows the two-eta rule") {
    const auto f = PercField::generate(pcfg(0.3, PercMode::one_dependent, 10, 4));
    REQUIRE(f.has_eta());
    for (int n = 1; n <= 10; ++n)
        for (int y = f.config().col_lo() + 1; y < f.config().col_hi(); ++y)
            if ((y + n) % 2 == 0)
                CHECK(f.open(y, n) == (f.eta(y - 1, n) && f.eta(y + 1, n)));
}

TEST_CASE("field statistics: openness, one-dependence, correlation sign") {
    const double eps = 0.19;
    long open = 0, total = 0;
    long both_adj = 0, n_adj = 0, both_far = 0, n_far = 0;
    long triple_closed = 0, n_triple = 0;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const auto f = PercField::generate(pcfg(eps, PercMode::one_dependent, 30, seed));
        // interior columns only: the outermost w columns have no eta
        // neighbor outside and are left closed by construction
        const int lo = f.config().col_lo() + 1, hi = f.config().col_hi() - 1;
        for (int n = 1; n <= 30; ++n)
            for (int y = lo; y <= hi; ++y) {
                if ((y + n) % 2 != 0) continue;
                ++total;
                if (f.open(y, n)) ++open;
                if (y + 2 <= hi) {
                    ++n_adj;
                    if (f.open(y, n) && f.open(y + 2, n)) ++both_adj;
                }
                if (y + 4 <= hi) {
                    ++n_far;
                    if (f.open(y, n) && f.open(y + 4, n)) ++both_far;
                }
                if (y + 8 <= hi) {
                    ++n_triple;
                    if (!f.open(y, n) && !f.open(y + 4, n) && !f.open(y + 8, n))
                        ++triple_closed;
                }
            }
    }
    const double p_open = static_cast<double>(open) / total;
    CHECK(std::fabs(p_open - (1.0 - eps)) < 0.01);
    // adjacent sites share an eta: P(both) = (1-eps)^{3/2} > (1-eps)^2
    const double p_adj = static_cast<double>(both_adj) / n_adj;
    CHECK(p_adj == doctest::Approx(std::pow(1.0 - eps, 1.5)).epsilon(0.03));
    // distance >= 4 is independent
    const double p_far = static_cast<double>(both_far) / n_far;
    CHECK(p_far == doctest::Approx((1.0 - eps) * (1.0 - eps)).epsilon(0.03));
    // simultaneous closure over a spread-out triple costs eps^3
    const double p_triple = static_cast<double>(triple_closed) / n_triple;
    CHECK(p_triple == doctest::Approx(eps * eps * eps).epsilon(0.25));
}

TEST_CASE("coupling identity holds on generated fields") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto f = PercField::generate(pcfg(0.1, PercMode::one_dependent, 20, seed));
        CHECK(coupling_identity_check(f, 20));
        CHECK(coupling_identity_check(f, 7));
    }
}

TEST_CASE("density deficit on hand-built runs") {
    // full cone: row 4 from {0} is {-4,-2,0,2,4}
    const auto full = PercField::constant(pcfg(0.0, PercMode::independent, 4), true);
    const auto run = evolve_percolation(full, {0}, 4);
    const std::vector<int> Y = {-4, -2, 0, 2, 4};
    CHECK_FALSE(density_deficit(run, Y, 0.99, 4, true));  // all 5 of 5 present

    // hollow cone: closing the middle column empties the interior
    auto hollow = PercField::constant(pcfg(0.1, PercMode::independent, 4), true);
    for (int n = 2; n <= 4; ++n)
        for (int y = -(n - 2); y <= n - 2; ++y)
            if ((y + n) % 2 == 0) hollow.set_open(y, n, false);
    const auto hrun = evolve_percolation(hollow, {0}, 4);
    REQUIRE(hrun.survived());
    CHECK(hrun.level(4) == std::vector<int>{-4, 4});
    CHECK(density_deficit(hrun, Y, 0.6, 4, true));  // 2 of 5 < 0.6 * 5
    CHECK_FALSE(density_deficit(hrun, Y, 0.3, 4, true));

    // extinct-by-n runs never trigger the origin-conditioned event
    const auto dead = evolve_percolation(
        PercField::constant(pcfg(0.5, PercMode::independent, 4), false), {0}, 4);
    CHECK_FALSE(density_deficit(dead, Y, 0.99, 4, true));
}

TEST_CASE("scan of consecutive runs sees the hollow gap") {
    auto hollow = PercField::constant(pcfg(0.1, PercMode::independent, 8), true);
    for (int n = 2; n <= 8; ++n)
        for (int y = -(n - 2); y <= n - 2; ++y)
            if ((y + n) % 2 == 0) hollow.set_open(y, n, false);
    const auto hrun = evolve_percolation(hollow, {0}, 8);
    // X(8) within [-4, 4] is empty (only -8 and 8 are occupied), so any
    // window of floor(0.25 * 8) = 2 consecutive points has zero occupation
    CHECK(scan_consecutive_runs(hrun, 8, 0.25, 0.5, 0.5));
    // the full cone has every point occupied: no deficient window
    const auto full = evolve_percolation(
        PercField::constant(pcfg(0.0, PercMode::independent, 8), true), {0}, 8);
    CHECK_FALSE(scan_consecutive_runs(full, 8, 0.25, 0.5, 0.5));
}

TEST_CASE("extinction and slow-edge events") {
    // full cone: survives with edges at +-n, never slow, never extinct
    const auto full = evolve_percolation(
        PercField::constant(pcfg(0.0, PercMode::independent, 12), true), {0}, 12);
    auto [ext_f, slow_f] = extinction_and_speed_events(full, 4, 0.5);
    CHECK_FALSE(ext_f);
    CHECK_FALSE(slow_f);  // [-4, 4] is not inside [-2, 2]

    // pinched field: only |y| <= 1 stays open, so the surviving cluster
    // crawls and the edges are slow
    auto pinched = PercField::constant(pcfg(0.1, PercMode::independent, 12), false);
    for (int n = 1; n <= 12; ++n)
        for (int y = -1; y <= 1; ++y)
            if ((y + n) % 2 == 0) pinched.set_open(y, n, true);
    const auto prun = evolve_percolation(pinched, {0}, 12);
    REQUIRE(prun.survived());
    auto [ext_p, slow_p] = extinction_and_speed_events(prun, 6, 0.5);
    CHECK_FALSE(ext_p);
    CHECK(slow_p);  // [L_6, R_6] subset of [-1, 1] subset of [-3, 3]

    // early death: tau in [n, n_max) is the extinction tail event
    auto dying = PercField::constant(pcfg(0.1, PercMode::independent, 12), true);
    for (int y = -12; y <= 12; ++y)
        if ((y + 6) % 2 == 0) dying.set_open(y, 6, false);
    const auto drun = evolve_percolation(dying, {0}, 12);
    CHECK(drun.tau == 6);
    CHECK(extinction_and_speed_events(drun, 4, 0.5).first);    // 4 <= 6 < 12
    CHECK_FALSE(extinction_and_speed_events(drun, 8, 0.5).first);
}

TEST_CASE("generation is deterministic and respects the extent margin") {
    const auto a = PercField::generate(pcfg(0.3, PercMode::one_dependent, 10, 5, 4));
    const auto b = PercField::generate(pcfg(0.3, PercMode::one_dependent, 10, 5, 4));
    for (int n = 1; n <= 10; ++n)
        for (int y = a.config().col_lo(); y <= a.config().col_hi(); ++y)
            if ((y + n) % 2 == 0) CHECK(a.open(y, n) == b.open(y, n));
    // a start at the declared extent is admissible
    const auto run = evolve_percolation(a, {4}, 10);
    CHECK(run.levels[0] == std::vector<int>{4});
}

TEST_CASE("config validation") {
    auto c = pcfg(0.5, PercMode::independent, 5);
    c.epsilon = 1.0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    c.epsilon = 0.5;
    c.n_max = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    // starts must respect parity and the extent margin
    const auto f = PercField::generate(pcfg(0.5, PercMode::independent, 5, 1));
    CHECK_THROWS_AS(evolve_percolation(f, {1}, 5), std::invalid_argument);  // odd parity
    CHECK_THROWS_AS(evolve_percolation(f, {500}, 5), std::invalid_argument);
}

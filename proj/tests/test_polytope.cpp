#include <catch2/catch_amalgamated.hpp>

#include "syl/polytope.hpp"
#include "syl/rng.hpp"
#include "test_fixtures.hpp"

using namespace syl;

namespace {

ConvexCombination random_crossbar_combination(int n, RngStream& rng, int perms) {
    const ScheduleSet set = ScheduleSet::crossbar(n);
    std::vector<double> weights(perms + 1);  // + zero schedule
    double total = 0.0;
    for (double& w : weights) {
        w = rng.uniform();
        total += w;
    }
    ConvexCombination combo;
    for (int t = 0; t < perms; ++t) {
        std::vector<int> cols(n);
        for (int i = 0; i < n; ++i) cols[i] = i;
        for (int i = n - 1; i > 0; --i) std::swap(cols[i], cols[rng.next() % (i + 1)]);
        combo.terms.push_back({Permutation{cols}.to_schedule(), weights[t] / total});
    }
    combo.terms.push_back({set.zero_schedule(), weights[perms] / total});
    return combo;
}

}  // namespace

TEST_CASE("crossbar membership") {
    const ScheduleSet set = ScheduleSet::crossbar(3);
    CHECK(membership(fixtures::demo_mu_exact(), set));
    CHECK(membership(RateVector(9, 0.0), set));

    RateVector scaled = fixtures::demo_lambda();
    for (double& x : scaled) x *= 1.2;  // row sums 1.08 > 1
    CHECK_FALSE(membership(scaled, set));

    RateVector unequal(9, 0.0);
    unequal[0] = 0.5;  // one row sum 0.5, the others 0
    CHECK_FALSE(membership(unequal, set));

    CHECK_THROWS_AS(membership(RateVector(4, 0.0), set), std::invalid_argument);
}

TEST_CASE("explicit-set membership") {
    const ScheduleSet set = ScheduleSet::explicit_set(fixtures::toy_server_schedules());
    CHECK(membership({0.3, 0.3}, set));
    CHECK(membership({0.0, 0.0}, set));
    CHECK(membership({1.0, 0.0}, set));
    CHECK_FALSE(membership({0.8, 0.4}, set));  // total load 1.2
}

TEST_CASE("capacity margin by bisection") {
    const ScheduleSet set = ScheduleSet::crossbar(3);
    SECTION("demo lambda has margin (1 - 0.9) / 3") {
        const CapacityMargin m = capacity_margin(fixtures::demo_lambda(), set, 1e-7);
        REQUIRE(m.feasible);
        CHECK(m.eta_star == Catch::Approx(1.0 / 30.0).margin(1e-6));
    }
    SECTION("zero traffic has margin 1/n") {
        const CapacityMargin m = capacity_margin(RateVector(9, 0.0), set, 1e-7);
        REQUIRE(m.feasible);
        CHECK(m.eta_star == Catch::Approx(1.0 / 3.0).margin(1e-6));
    }
    SECTION("a point on the boundary is feasible with margin 0") {
        const CapacityMargin m = capacity_margin(fixtures::demo_mu_exact(), set, 1e-7);
        REQUIRE(m.feasible);
        CHECK(m.eta_star <= 1e-6);
    }
    SECTION("unequal row sums are infeasible") {
        RateVector unequal(9, 0.0);
        unequal[0] = 0.5;
        const CapacityMargin m = capacity_margin(unequal, set, 1e-7);
        CHECK_FALSE(m.feasible);
        CHECK(m.eta_star == 0.0);
    }
    SECTION("toy server margin") {
        const ScheduleSet toy = ScheduleSet::explicit_set(fixtures::toy_server_schedules());
        const CapacityMargin m = capacity_margin({0.4, 0.2}, toy, 1e-7);
        REQUIRE(m.feasible);
        CHECK(m.eta_star == Catch::Approx(0.2).margin(1e-5));
    }
}

TEST_CASE("birkhoff decomposition of the demo matrix") {
    const ScheduleSet set = ScheduleSet::crossbar(3);
    const RateVector mu = fixtures::demo_mu_exact();

    // Fixed oracle: the known combination of four permutations with
    // weights 19/30, 6/30, 4/30, 1/30 reconstructs mu.
    {
        ConvexCombination known;
        const auto perms = fixtures::demo_decomposition_perms();
        const auto weights = fixtures::demo_decomposition_weights();
        for (std::size_t i = 0; i < perms.size(); ++i)
            known.terms.push_back({perms[i].to_schedule(), weights[i]});
        CHECK(known.weight_sum() == Catch::Approx(1.0).margin(1e-12));
        CHECK(linf_distance(known.reconstruct(9), mu) <= 1e-9);
    }

    const ConvexCombination combo = birkhoff_decompose(mu, set);
    int perm_terms = 0;
    for (const auto& term : combo.terms) {
        CHECK(term.weight >= 0.0);
        int ones = 0;
        for (int x : term.schedule) ones += x;
        if (ones > 0) ++perm_terms;
    }
    CHECK(perm_terms <= 5);  // (n-1)^2 + 1 for n = 3
    CHECK(std::abs(combo.weight_sum() - 1.0) <= 1e-9);
    CHECK(linf_distance(combo.reconstruct(9), mu) <= 1e-9);
}

TEST_CASE("birkhoff corner cases") {
    const ScheduleSet set = ScheduleSet::crossbar(3);
    SECTION("a permutation decomposes to itself") {
        const Schedule p = Permutation{{2, 0, 1}}.to_schedule();
        const ConvexCombination combo = birkhoff_decompose(RateVector(p.begin(), p.end()), set);
        REQUIRE(combo.terms.size() == 1);
        CHECK(combo.terms[0].schedule == p);
        CHECK(combo.terms[0].weight == Catch::Approx(1.0));
    }
    SECTION("an even mix of two disjoint permutations is recovered exactly") {
        const Schedule p1 = Permutation{{0, 1, 2}}.to_schedule();
        const Schedule p2 = Permutation{{1, 2, 0}}.to_schedule();
        RateVector mu(9, 0.0);
        for (int i = 0; i < 9; ++i) mu[i] = 0.5 * p1[i] + 0.5 * p2[i];
        const ConvexCombination combo = birkhoff_decompose(mu, set);
        REQUIRE(combo.terms.size() == 2);
        for (const auto& term : combo.terms) CHECK(term.weight == Catch::Approx(0.5).margin(1e-12));
        CHECK(linf_distance(combo.reconstruct(9), mu) <= 1e-12);
    }
    SECTION("the zero matrix is the zero schedule") {
        const ConvexCombination combo = birkhoff_decompose(RateVector(9, 0.0), set);
        REQUIRE(combo.terms.size() == 1);
        CHECK(combo.terms[0].weight == 1.0);
    }
    SECTION("non-members are rejected") {
        RateVector bad(9, 0.0);
        bad[0] = 0.5;
        CHECK_THROWS_AS(birkhoff_decompose(bad, set), std::domain_error);
    }
}

TEST_CASE("decomposition round trip on random members") {
    RngStream rng(11, "birkhoff-roundtrip");
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 2 + static_cast<int>(rng.next() % 3);
        const ScheduleSet set = ScheduleSet::crossbar(n);
        const ConvexCombination source = random_crossbar_combination(n, rng, 3 + static_cast<int>(rng.next() % 3));
        const RateVector mu = source.reconstruct(set.dim());
        REQUIRE(membership(mu, set));
        const ConvexCombination combo = birkhoff_decompose(mu, set);
        CHECK(std::abs(combo.weight_sum() - 1.0) <= 1e-9);
        int perm_terms = 0;
        for (const auto& term : combo.terms) {
            CHECK(term.weight >= 0.0);
            int ones = 0;
            for (int x : term.schedule) ones += x;
            if (ones > 0) ++perm_terms;
        }
        CHECK(perm_terms <= (n - 1) * (n - 1) + 1);
        CHECK(linf_distance(combo.reconstruct(set.dim()), mu) <= 1e-8);
    }
}

TEST_CASE("simplex decomposition over an explicit set") {
    const ScheduleSet set = ScheduleSet::explicit_set(fixtures::toy_server_schedules());
    SECTION("interior point has the unique affine weights") {
        // Default stop rule (improvement < 1e-12) certifies ~1e-6.
        const SimplexWeights sw = simplex_weights({0.3, 0.3}, set);
        REQUIRE(sw.weights.size() == 3);
        CHECK(sw.weights[0] == Catch::Approx(0.3).margin(1e-5));
        CHECK(sw.weights[1] == Catch::Approx(0.3).margin(1e-5));
        CHECK(sw.weights[2] == Catch::Approx(0.4).margin(1e-5));
        CHECK(sw.residual <= 1e-5);
        // Run to the numerical floor the weights are essentially exact.
        const SimplexWeights tight = simplex_weights({0.3, 0.3}, set, 100000, 0.0);
        CHECK(tight.weights[0] == Catch::Approx(0.3).margin(1e-9));
        CHECK(tight.residual <= 1e-10);
    }
    SECTION("a schedule decomposes to itself") {
        const ConvexCombination combo = simplex_decompose({0.0, 1.0}, set);
        double dominant = 0.0, rest = 0.0;
        for (const auto& term : combo.terms)
            (term.schedule == Schedule{0, 1} ? dominant : rest) += term.weight;
        CHECK(dominant == Catch::Approx(1.0).margin(1e-5));
        CHECK(rest <= 1e-5);
        CHECK(combo.weight_sum() == Catch::Approx(1.0).margin(1e-9));
    }
    SECTION("full-load point uses no idle weight") {
        const SimplexWeights sw = simplex_weights({0.8, 0.2}, set);
        CHECK(sw.weights[0] == Catch::Approx(0.8).margin(1e-5));
        CHECK(sw.weights[1] == Catch::Approx(0.2).margin(1e-5));
        CHECK(sw.weights[2] <= 1e-5);
    }
    SECTION("points outside the hull are rejected") {
        CHECK_THROWS_AS(simplex_decompose({0.9, 0.9}, set), std::domain_error);
    }
}

TEST_CASE("linear maximization oracle") {
    const ScheduleSet set = ScheduleSet::crossbar(3);
    SECTION("all-negative directions pick the zero schedule") {
        CHECK(lmo(RateVector(9, -0.5), set) == set.zero_schedule());
    }
    SECTION("zero direction ties break to the zero schedule") {
        CHECK(lmo(RateVector(9, 0.0), set) == set.zero_schedule());
    }
    SECTION("the demo matrix picks the known best permutation") {
        CHECK(lmo(fixtures::demo_mu_exact(), set) == Permutation{{0, 2, 1}}.to_schedule());
    }
    SECTION("agrees with exhaustive evaluation") {
        RngStream rng(3, "lmo-exhaustive");
        for (int n = 2; n <= 4; ++n) {
            const ScheduleSet cb = ScheduleSet::crossbar(n);
            for (int trial = 0; trial < 20; ++trial) {
                RateVector dir(cb.dim());
                for (double& x : dir) x = 2.0 * rng.uniform() - 1.0;
                const double got = inner(dir, lmo(dir, cb));
                double best = -1e300;
                cb.for_each_schedule([&](const Schedule& s) { best = std::max(best, inner(dir, s)); });
                CHECK(got == Catch::Approx(best).margin(1e-12));
            }
        }
        const ScheduleSet toy = ScheduleSet::explicit_set(fixtures::toy_server_schedules());
        RateVector dir = {0.4, 0.9};
        CHECK(lmo(dir, toy) == Schedule{0, 1});
    }
}

TEST_CASE("decomposition cache only refreshes on real movement") {
    const ScheduleSet set = ScheduleSet::crossbar(3);
    DecompositionCache cache;
    RateVector target = fixtures::demo_mu_exact();
    const ConvexCombination first = cache.get(target, set);

    RateVector nudged = target;
    for (double& x : nudged) x += 1e-8;  // below the cache tolerance
    const ConvexCombination& second = cache.get(nudged, set);
    REQUIRE(second.terms.size() == first.terms.size());
    for (std::size_t i = 0; i < first.terms.size(); ++i) {
        CHECK(second.terms[i].schedule == first.terms[i].schedule);
        CHECK(second.terms[i].weight == first.terms[i].weight);
    }

    RateVector moved = target;
    for (double& x : moved) x *= 0.5;  // well past the tolerance
    const ConvexCombination& third = cache.get(moved, set);
    CHECK(linf_distance(third.reconstruct(9), moved) <= 1e-8);
}

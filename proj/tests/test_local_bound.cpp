#include <doctest.h>

#include <psg/local_bound.hpp>

#include <algorithm>
#include <cmath>
#include <random>

#include "test_util.hpp"

using namespace psg;

namespace {

// Reference bound: enumerate all vertices through to_behaviour and evaluate.
double brute_force_bound(const GameSpec& game) {
    VertexEnumerator en(game.scenario());
    DeterministicStrategy e;
    double best = -1.0;
    while (en.next(e)) {
        GameValue val = evaluate(game, to_behaviour(e, game.scenario()));
        if (val.omega) best = std::max(best, *val.omega);
    }
    REQUIRE(best >= 0.0);
    return best;
}

} // namespace

TEST_SUITE("local_bound") {

TEST_CASE("vertex enumeration covers the strategy product space") {
    Scenario sc(2, 1, 3, 2);
    CHECK(vertex_pair_count(sc) == 9u * 2u);

    VertexEnumerator en(sc);
    DeterministicStrategy e;
    int count = 0;
    DeterministicStrategy prev;
    while (en.next(e)) {
        if (count > 0) {
            // Lexicographic order over concatenated (alice, bob) digits.
            std::vector<int> a(prev.alice), b(e.alice);
            a.insert(a.end(), prev.bob.begin(), prev.bob.end());
            b.insert(b.end(), e.bob.begin(), e.bob.end());
            CHECK(std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end()));
        }
        prev = e;
        ++count;
    }
    CHECK(count == 18);
    CHECK_FALSE(en.next(e));
    en.reset();
    CHECK(en.next(e));
    CHECK(e.alice == std::vector<int>{0, 0});

    // Saturates instead of overflowing.
    CHECK(vertex_pair_count(Scenario(40, 40, 10, 10)) ==
          std::numeric_limits<std::uint64_t>::max());
}

TEST_CASE("deterministic behaviours") {
    Scenario sc(2, 2, 2, 2);
    Behaviour p = to_behaviour({{1, 0}, {0, 1}}, sc);
    CHECK(p.at(0, 0, 1, 0) == 1.0);
    CHECK(p.at(0, 1, 1, 1) == 1.0);
    CHECK(p.at(1, 0, 0, 0) == 1.0);
    CHECK(p.at(1, 1, 0, 1) == 1.0);
    CHECK_THROWS_AS(to_behaviour({{0}, {0, 0}}, sc), shape_error);
}

TEST_CASE("chsh local bound is 3/4") {
    LocalBoundResult r = local_bound(chsh_game());
    CHECK(r.value == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(r.gamma_at_witness == doctest::Approx(1.0));
    CHECK_FALSE(r.used_dinkelbach);
    // First maximizer in enumeration order: all-zero outputs.
    CHECK(r.witness.alice == std::vector<int>{0, 0});
    CHECK(r.witness.bob == std::vector<int>{0, 0});
}

TEST_CASE("ch local bound matches 16-vertex brute force") {
    GameSpec g = ch_game();
    LocalBoundResult r = local_bound_naive(g);
    CHECK(r.value == doctest::Approx(brute_force_bound(g)).epsilon(1e-15));
    CHECK(r.value == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("hardy local bound is 1/2") {
    LocalBoundResult r = local_bound(hardy_game());
    CHECK(r.value == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.gamma_at_witness > 0.0);

    Behaviour witness = to_behaviour(r.witness, hardy_game().scenario());
    GameValue val = evaluate(hardy_game(), witness);
    REQUIRE(val.omega.has_value());
    CHECK(*val.omega == doctest::Approx(r.value).epsilon(1e-12));
    CHECK(val.gamma == doctest::Approx(r.gamma_at_witness).epsilon(1e-12));
}

TEST_CASE("generalized hardy bounds are 1/2") {
    for (auto [s, k] : {std::pair{2, 2}, {3, 2}, {3, 3}, {4, 2}}) {
        GameSpec g = generalized_hardy_game(s, k);
        LocalBoundResult naive = local_bound_naive(g);
        LocalBoundResult dink = local_bound_dinkelbach(g);
        CAPTURE(s);
        CAPTURE(k);
        CHECK(naive.value == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(dink.value == doctest::Approx(naive.value).epsilon(1e-12));
        CHECK(dink.used_dinkelbach);
    }
}

TEST_CASE("dinkelbach agrees with enumeration on random games") {
    std::mt19937_64 rng(2024);
    const Scenario scenarios[] = {
        Scenario(2, 2, 2, 2), Scenario(3, 2, 2, 3), Scenario(2, 3, 3, 2),
        Scenario(3, 3, 2, 2), Scenario(2, 2, 3, 3),
    };
    for (const Scenario& sc : scenarios) {
        REQUIRE(vertex_pair_count(sc) <= 4096u);
        for (int trial = 0; trial < 40; ++trial) {
            GameSpec g = testutil::random_game(rng, sc);
            LocalBoundResult naive, dink;
            try {
                naive = local_bound_naive(g);
            } catch (const degenerate_game_error&) {
                CHECK_THROWS_AS(local_bound_dinkelbach(g), degenerate_game_error);
                continue;
            }
            dink = local_bound_dinkelbach(g);
            CHECK(dink.value == doctest::Approx(naive.value).epsilon(1e-12));

            // Witnesses must achieve the reported value on re-evaluation.
            for (const LocalBoundResult* r : {&naive, &dink}) {
                GameValue val = evaluate(g, to_behaviour(r->witness, sc));
                REQUIRE(val.omega.has_value());
                CHECK(*val.omega == doctest::Approx(r->value).epsilon(1e-10));
                CHECK(val.gamma == doctest::Approx(r->gamma_at_witness).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("vertex dominance: no behaviour beats the bound by mixing vertices") {
    std::mt19937_64 rng(5);
    Scenario sc(2, 2, 2, 2);
    for (int trial = 0; trial < 25; ++trial) {
        GameSpec g = testutil::random_game(rng, sc);
        LocalBoundResult r;
        try {
            r = local_bound_naive(g);
        } catch (const degenerate_game_error&) {
            continue;
        }
        // Random mixtures of deterministic points stay below the bound.
        std::uniform_int_distribution<int> pick(0, 15);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int m = 0; m < 20; ++m) {
            auto strat = [&](int code) {
                return DeterministicStrategy{{code >> 3 & 1, code >> 2 & 1},
                                             {code >> 1 & 1, code & 1}};
            };
            Behaviour mixed = testutil::mix(to_behaviour(strat(pick(rng)), sc),
                                            to_behaviour(strat(pick(rng)), sc), u(rng));
            auto w = omega(g, mixed);
            if (w) CHECK(*w <= r.value + 1e-10);
        }
    }
}

TEST_CASE("degenerate game throws") {
    // S supported only where mu vanishes: nothing is ever kept.
    Scenario sc(2, 1, 2, 2);
    std::vector<double> mu = {1.0, 0.0};
    std::vector<double> s(sc.size(), 0.0);
    std::vector<double> v(sc.size(), 0.0);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            s[sc.flat_index(1, 0, a, b)] = 1.0;
    GameSpec g(sc, mu, s, v);
    CHECK_THROWS_AS(local_bound_naive(g), degenerate_game_error);
    CHECK_THROWS_AS(local_bound_dinkelbach(g), degenerate_game_error);
}

TEST_CASE("naive cap dispatches to dinkelbach") {
    GameSpec g = chsh_game();
    LocalBoundOptions tight;
    tight.naive_cap = 4;
    CHECK_THROWS_AS(local_bound_naive(g, tight), capacity_error);
    LocalBoundResult r = local_bound(g, tight);
    CHECK(r.used_dinkelbach);
    CHECK(r.value == doctest::Approx(0.75).epsilon(1e-12));
}

} // TEST_SUITE

#include <doctest.h>

#include <psg/local_bound.hpp>
#include <psg/scenario.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "test_util.hpp"

using namespace psg;

TEST_SUITE("scenario") {

TEST_CASE("flat index is row-major in (x,y,a,b)") {
    Scenario sc(2, 3, 4, 5);
    CHECK(sc.size() == 2u * 3 * 4 * 5);
    CHECK(sc.flat_index(0, 0, 0, 0) == 0);
    CHECK(sc.flat_index(0, 0, 0, 1) == 1);
    CHECK(sc.flat_index(0, 0, 1, 0) == 5);
    CHECK(sc.flat_index(0, 1, 0, 0) == 20);
    CHECK(sc.flat_index(1, 0, 0, 0) == 60);
    CHECK(sc.flat_index(1, 2, 3, 4) == sc.size() - 1);
    CHECK_THROWS_AS(sc.flat_index(2, 0, 0, 0), std::out_of_range);
    CHECK_THROWS_AS(sc.flat_index(0, 0, 4, 0), std::out_of_range);
    CHECK_THROWS_AS(sc.flat_index(0, 0, 0, -1), std::out_of_range);
    CHECK_THROWS_AS(Scenario(0, 1, 2, 2), parameter_error);
}

TEST_CASE("behaviour validation") {
    Scenario sc(1, 1, 2, 2);
    CHECK_THROWS_AS(Behaviour(sc, {0.5, 0.5, 0.5}), shape_error);
    CHECK_THROWS_AS(Behaviour(sc, {-0.1, 0.6, 0.25, 0.25}), validation_error);
    CHECK_THROWS_AS(Behaviour(sc, {0.5, 0.5, 0.25, 0.25}), validation_error);
    CHECK_NOTHROW(Behaviour(sc, {0.5, 0.5, 0.25, 0.25}, /*unnormalized=*/true));

    Behaviour u = Behaviour::uniform(sc);
    CHECK(u.at(0, 0, 1, 1) == doctest::Approx(0.25));

    Behaviour scaled = u.scaled(3.0);
    CHECK(scaled.is_unnormalized());
    CHECK(scaled.at(0, 0, 0, 0) == doctest::Approx(0.75));
    CHECK(scaled.renormalized().at(0, 0, 0, 0) == doctest::Approx(0.25));
    CHECK_THROWS_AS(u.scaled(-1.0), parameter_error);
}

TEST_CASE("outcome pair aggregates") {
    Scenario sc(1, 1, 3, 3);
    std::mt19937_64 rng(7);
    Behaviour p = testutil::random_behaviour(rng, sc);
    double lt = 0.0, gt = 0.0, eq = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            (a < b ? lt : a > b ? gt : eq) += p.at(0, 0, a, b);
    CHECK(less_than_aggregate(p, 0, 0) == doctest::Approx(lt).epsilon(1e-12));
    CHECK(less_than_aggregate(p, 0, 0, OutcomePairOrder::a_greater_b) ==
          doctest::Approx(gt).epsilon(1e-12));
    CHECK(lt + gt + eq == doctest::Approx(1.0));
}

TEST_CASE("game validation") {
    Scenario sc(1, 1, 2, 2);
    std::vector<double> s(4, 1.0), v(4, 0.0);
    CHECK_THROWS_AS(GameSpec(sc, {0.5}, s, v), validation_error);
    CHECK_THROWS_AS(GameSpec(sc, {1.0, 1.0}, s, v), shape_error);
    std::vector<double> bad_s = {1.0, 1.0, 1.0, 1.5};
    CHECK_THROWS_AS(GameSpec(sc, {1.0}, bad_s, v), validation_error);
    std::vector<double> bad_v = {0.0, 0.0, 0.0, -0.2};
    CHECK_THROWS_AS(GameSpec(sc, {1.0}, s, bad_v), validation_error);
}

TEST_CASE("chsh game values") {
    GameSpec g = chsh_game();
    Behaviour u = Behaviour::uniform(g.scenario());
    CHECK(gamma(g, u) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(*omega(g, u) == doctest::Approx(0.5).epsilon(1e-12));

    // All-zero outputs win on three of the four input pairs.
    Behaviour det = to_behaviour({{0, 0}, {0, 0}}, g.scenario());
    CHECK(*omega(g, det) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("ch game values") {
    GameSpec g = ch_game();
    Behaviour u = Behaviour::uniform(g.scenario());
    CHECK(gamma(g, u) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(*omega(g, u) == doctest::Approx(10.0 / 16.0).epsilon(1e-12));
}

TEST_CASE("hardy game gamma and undefined omega") {
    GameSpec g = hardy_game();
    Behaviour u = Behaviour::uniform(g.scenario());
    CHECK(gamma(g, u) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(*omega(g, u) == doctest::Approx(0.25).epsilon(1e-12));

    // Outputting 1 everywhere hits no kept event: omega is undefined.
    Behaviour ones = to_behaviour({{1, 1}, {1, 1}}, g.scenario());
    GameValue val = evaluate(g, ones);
    CHECK(val.gamma == 0.0);
    CHECK_FALSE(val.omega.has_value());
}

TEST_CASE("generalized hardy at (2,2) is a relabelling of hardy") {
    GameSpec gh = generalized_hardy_game(2, 2);
    GameSpec h = hardy_game();
    const Scenario& sc = h.scenario();

    // x' = 1-x, y' = 1-y, a flips on x=0, b flips on y=1.
    auto relabel = [&](const Behaviour& p) {
        std::vector<double> q(sc.size());
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y)
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b)
                        q[sc.flat_index(1 - x, 1 - y, x == 0 ? 1 - a : a,
                                        y == 1 ? 1 - b : b)] = p.at(x, y, a, b);
        return Behaviour(sc, std::move(q));
    };

    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        Behaviour p = testutil::random_behaviour(rng, sc);
        GameValue lhs = evaluate(gh, p);
        GameValue rhs = evaluate(h, relabel(p));
        CHECK(lhs.gamma == doctest::Approx(rhs.gamma).epsilon(1e-12));
        REQUIRE(lhs.omega.has_value());
        CHECK(*lhs.omega == doctest::Approx(*rhs.omega).epsilon(1e-12));
    }
}

TEST_CASE("generalized hardy structure") {
    CHECK_THROWS_AS(generalized_hardy_game(1, 2), parameter_error);
    CHECK_THROWS_AS(generalized_hardy_game(2, 1), parameter_error);

    GameSpec g = generalized_hardy_game(3, 4);
    double mu_sum = 0.0;
    for (double m : g.mu_table()) mu_sum += m;
    CHECK(mu_sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.mu(0, 2) == doctest::Approx(1.0 / 6.0));
    CHECK(g.mu(0, 1) == 0.0);

    // Winning events sit at input (s-1,s-1) with a < b and nowhere else.
    const Scenario& sc = g.scenario();
    for (int x = 0; x < sc.ma; ++x)
        for (int y = 0; y < sc.mb; ++y)
            for (int a = 0; a < sc.oa; ++a)
                for (int b = 0; b < sc.ob; ++b) {
                    const bool win = x == 2 && y == 2 && a < b;
                    CHECK(g.v(x, y, a, b) == (win ? 1.0 : 0.0));
                    if (win) CHECK(g.s(x, y, a, b) == 1.0);
                }
}

TEST_CASE("json round trip") {
    GameSpec g = generalized_hardy_game(3, 3);
    GameSpec back = game_from_json(game_to_json(g));
    CHECK(back.scenario() == g.scenario());
    for (std::size_t i = 0; i < g.scenario().size(); ++i) {
        CHECK(back.s_tensor()[i] == g.s_tensor()[i]);
        CHECK(back.v_tensor()[i] == g.v_tensor()[i]);
    }
    for (std::size_t i = 0; i < g.mu_table().size(); ++i)
        CHECK(back.mu_table()[i] == g.mu_table()[i]);

    CHECK_THROWS_AS(game_from_json("{not json"), io_error);
    CHECK_THROWS_AS(game_from_json("{\"scenario\":{\"ma\":2}}"), io_error);

    auto path = std::filesystem::temp_directory_path() / "psg_test_game.json";
    save_game(g, path);
    GameSpec loaded = load_game(path);
    CHECK(loaded.scenario() == g.scenario());
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_game(path), io_error);
}

// omega = <V,P>/<S,P> is a ratio of linear functions, so along any segment
// of behaviours it stays between the endpoint values.
TEST_CASE("omega is quasilinear on behaviour segments") {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Scenario sc{2, 2, 2, 2};
    int checked = 0;
    for (int it = 0; it < 10000; ++it) {
        const GameSpec g = testutil::random_game(rng, sc);
        const Behaviour p0 = testutil::random_behaviour(rng, sc);
        const Behaviour p1 = testutil::random_behaviour(rng, sc);
        const GameValue v0 = evaluate(g, p0);
        const GameValue v1 = evaluate(g, p1);
        if (!v0.omega || !v1.omega) continue;
        const GameValue vm = evaluate(g, testutil::mix(p0, p1, u(rng)));
        REQUIRE(vm.omega.has_value());
        const double lo = std::min(*v0.omega, *v1.omega);
        const double hi = std::max(*v0.omega, *v1.omega);
        CHECK(*vm.omega >= lo - 1e-9);
        CHECK(*vm.omega <= hi + 1e-9);
        ++checked;
    }
    CHECK(checked > 9900);
}

} // TEST_SUITE

#include <doctest.h>

#include <psg/errors.hpp>
#include <psg/quantum.hpp>
#include <psg/statistics.hpp>

#include <cmath>
#include <random>

#include "test_util.hpp"

using namespace psg;

namespace {

const double kZ0 = (std::sqrt(5.0) - 1.0) / 2.0;
const double kHardyProb = (5.0 * std::sqrt(5.0) - 11.0) / 2.0;
const double kTsirelson = (2.0 + std::sqrt(2.0)) / 4.0;

// Maximally entangled pair with the textbook tilted bases: correlators
// cos 2(alpha - beta) = +-sqrt(2)/2, saturating the quantum CHSH value.
QuantumStrategy tsirelson_strategy() {
    QuantumStrategy st;
    st.dim = 2;
    st.state = Eigen::VectorXd::Zero(4);
    st.state(0) = st.state(3) = 1.0 / std::sqrt(2.0);
    auto basis = [](double theta) {
        Eigen::MatrixXd m(2, 2);
        m << std::cos(theta), std::sin(theta),  //
            -std::sin(theta), std::cos(theta);
        return m;
    };
    st.alice_bases = {basis(0.0), basis(M_PI / 4.0)};
    st.bob_bases = {basis(M_PI / 8.0), basis(-M_PI / 8.0)};
    return st;
}

} // namespace

TEST_SUITE("quantum") {

TEST_CASE("chart size") {
    CHECK(chart_size(2, 2, 2) == 7);
    CHECK(chart_size(2, 3, 3) == 9);
    CHECK(chart_size(3, 3, 3) == 26);
    CHECK(chart_size(4, 2, 2) == 39);
    CHECK(chart_size(4, 3, 3) == 51);
}

TEST_CASE("zero chart is the computational strategy") {
    const QuantumStrategy st =
        parameterize(std::vector<double>(7, 0.0), 2, 2, 2);
    CHECK(st.dim == 2);
    CHECK(st.state(0) == doctest::Approx(1.0).epsilon(1e-15));
    for (int i = 1; i < 4; ++i)
        CHECK(std::abs(st.state(i)) < 1e-15);
    for (const auto& bases : {st.alice_bases, st.bob_bases}) {
        REQUIRE(bases.size() == 2);
        for (const auto& m : bases)
            CHECK((m - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-15);
    }

    // ... and it behaves like the product state |00>.
    const Behaviour p = behaviour_from_strategy(st);
    const Scenario& sc = p.scenario();
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            CHECK(p.flat()[sc.flat_index(x, y, 0, 0)] ==
                  doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("parameterize rejects wrong chart lengths") {
    CHECK_THROWS_AS(parameterize(std::vector<double>(6, 0.0), 2, 2, 2),
                    shape_error);
    CHECK_THROWS_AS(parameterize(std::vector<double>(8, 0.0), 2, 2, 2),
                    shape_error);
    CHECK_THROWS_AS(parameterize({}, 1, 1, 1), parameter_error);
}

TEST_CASE("charts always land on valid strategies") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int it = 0; it < 1000; ++it) {
        std::vector<double> x(7);
        for (double& v : x) v = u(rng);
        CHECK_NOTHROW(validate_strategy(parameterize(x, 2, 2, 2)));
    }
    for (int it = 0; it < 100; ++it) {
        std::vector<double> x(std::size_t(chart_size(3, 2, 2)));
        for (double& v : x) v = u(rng);
        const QuantumStrategy st = parameterize(x, 3, 2, 2);
        CHECK_NOTHROW(validate_strategy(st));
        const Behaviour p = behaviour_from_strategy(st);
        const Scenario& sc = p.scenario();
        for (int xx = 0; xx < 2; ++xx)
            for (int yy = 0; yy < 2; ++yy) {
                double block = 0.0;
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) {
                        const double q = p.flat()[sc.flat_index(xx, yy, a, b)];
                        CHECK(q >= 0.0);
                        block += q;
                    }
                CHECK(block == doctest::Approx(1.0).epsilon(1e-12));
            }
    }
}

TEST_CASE("validate_strategy rejects broken strategies") {
    QuantumStrategy st = parameterize(std::vector<double>(7, 0.0), 2, 2, 2);
    CHECK_NOTHROW(validate_strategy(st));

    QuantumStrategy bad_state = st;
    bad_state.state(0) = 1.5;
    CHECK_THROWS_AS(validate_strategy(bad_state), validation_error);

    QuantumStrategy bad_basis = st;
    bad_basis.alice_bases[0](0, 0) = 0.9;
    CHECK_THROWS_AS(validate_strategy(bad_basis), validation_error);

    QuantumStrategy bad_dim = st;
    bad_dim.dim = 1;
    CHECK_THROWS_AS(validate_strategy(bad_dim), validation_error);

    QuantumStrategy bad_shape = st;
    bad_shape.bob_bases.pop_back();
    CHECK_NOTHROW(validate_strategy(bad_shape)); // one input is still legal
    bad_shape.bob_bases.clear();
    CHECK_THROWS_AS(validate_strategy(bad_shape), validation_error);
}

TEST_CASE("tilted bases reach the quantum CHSH value") {
    const QuantumStrategy st = tsirelson_strategy();
    validate_strategy(st);
    const GameValue v = evaluate(chsh_game(), behaviour_from_strategy(st));
    CHECK(v.gamma == doctest::Approx(1.0).epsilon(1e-12));
    REQUIRE(v.omega.has_value());
    CHECK(*v.omega == doctest::Approx(kTsirelson).epsilon(1e-9));
}

TEST_CASE("hardy family at the golden point") {
    const QuantumStrategy st = hardy_measurement_family(kZ0);
    validate_strategy(st);
    const Behaviour p = behaviour_from_strategy(st);
    const Scenario& sc = p.scenario();

    CHECK(p.flat()[sc.flat_index(0, 0, 0, 0)] ==
          doctest::Approx(kHardyProb).epsilon(1e-9));
    CHECK(std::abs(p.flat()[sc.flat_index(0, 1, 0, 1)]) < 1e-12);
    CHECK(std::abs(p.flat()[sc.flat_index(1, 0, 1, 0)]) < 1e-12);
    CHECK(std::abs(p.flat()[sc.flat_index(1, 1, 0, 0)]) < 1e-12);

    const GameValue v = evaluate(hardy_game(), p);
    CHECK(v.gamma == doctest::Approx(kHardyProb / 4.0).epsilon(1e-12));
    REQUIRE(v.omega.has_value());
    CHECK(*v.omega == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(statistical_power(v.gamma, *v.omega, 0.5) ==
          doctest::Approx(kHardyProb / 4.0).epsilon(1e-12));
}

TEST_CASE("hardy family edge cases") {
    // z = 0 is the product state |11>: nothing is ever post-selected.
    const GameValue v = evaluate(
        hardy_game(), behaviour_from_strategy(hardy_measurement_family(0.0)));
    CHECK(v.gamma < 1e-14);
    CHECK(!v.omega.has_value());

    CHECK_THROWS_AS(hardy_measurement_family(1.0), parameter_error);
    CHECK_THROWS_AS(hardy_measurement_family(-0.1), parameter_error);

    for (double z : {0.1, 0.35, 0.62, 0.9})
        CHECK_NOTHROW(validate_strategy(hardy_measurement_family(z)));
}

TEST_CASE("nelder-mead minimizes a shifted quadratic") {
    auto f = [](const std::vector<double>& x) {
        double s = 0.0;
        for (double v : x) s += (v - 1.0) * (v - 1.0);
        return s;
    };
    const NelderMeadResult res = nelder_mead(f, std::vector<double>(5, 0.0));
    CHECK(res.value < 1e-10);
    for (double v : res.x) CHECK(v == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(res.evaluations > 5);
}

TEST_CASE("nelder-mead rejects bad input") {
    auto f = [](const std::vector<double>&) { return 0.0; };
    CHECK_THROWS_AS(nelder_mead(f, {}), parameter_error);

    OptimizerOptions opt;
    opt.max_evals = 0;
    CHECK_THROWS_AS(nelder_mead(f, {0.0}, opt), parameter_error);

    auto nan = [](const std::vector<double>&) {
        return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_AS(nelder_mead(nan, {0.0}), numerical_error);
}

TEST_CASE("maximize_power recovers the CHSH optimum") {
    const PowerResult res = maximize_power(chsh_game(), 2);
    CHECK(res.omega_local == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(res.gamma == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(res.omega == doctest::Approx(kTsirelson).epsilon(5e-4));
    CHECK(res.power ==
          doctest::Approx(kl_divergence(kTsirelson, 0.75)).epsilon(5e-4));

    // The report is reproducible from the returned strategy and chart.
    const GameValue v =
        evaluate(chsh_game(), behaviour_from_strategy(res.strategy));
    REQUIRE(v.omega.has_value());
    CHECK(*v.omega == doctest::Approx(res.omega).epsilon(1e-10));
    CHECK(v.gamma == doctest::Approx(res.gamma).epsilon(1e-10));
    CHECK(statistical_power(v.gamma, *v.omega, res.omega_local) ==
          doctest::Approx(res.power).epsilon(1e-10));

    REQUIRE(int(res.chart.size()) == chart_size(2, 2, 2));
    const GameValue vc = evaluate(
        chsh_game(),
        behaviour_from_strategy(parameterize(res.chart, 2, 2, 2)));
    REQUIRE(vc.omega.has_value());
    CHECK(*vc.omega == doctest::Approx(res.omega).epsilon(1e-12));
}

TEST_CASE("maximize_power beats the ideal Hardy family") {
    const PowerResult res = maximize_power(hardy_game(), 2);
    CHECK(res.omega_local == doctest::Approx(0.5).epsilon(1e-12));
    // Trading a little omega for more post-selection beats the sharp
    // paradox point's power.
    CHECK(res.power >= 0.02517);
    CHECK(res.power <= 0.026);
    CHECK(res.omega > 0.9);
    CHECK(res.omega <= 1.0 + 1e-12);
}

TEST_CASE("maximize_power under losses favours Hardy") {
    const double eta = 0.75;
    const PowerResult hardy = maximize_power(hardy_game(), 2, eta);
    const PowerResult chsh = maximize_power(chsh_game(), 2, eta);
    CHECK(hardy.power > 0.0);
    CHECK(chsh.power > 0.0);
    CHECK(hardy.power > chsh.power);

    CHECK_THROWS_AS(maximize_power(chsh_game(), 2, 1.2), parameter_error);
    CHECK_THROWS_AS(maximize_power(chsh_game(), 1), parameter_error);
}

TEST_CASE("maximize_power warm start and determinism") {
    OptimizerOptions opt;
    opt.restarts = 5;
    opt.seed = 7;
    const PowerResult a = maximize_power(hardy_game(), 2, std::nullopt, opt);
    const PowerResult b = maximize_power(hardy_game(), 2, std::nullopt, opt);
    CHECK(a.power == b.power);
    CHECK(a.omega == b.omega);
    REQUIRE(a.chart.size() == b.chart.size());
    for (std::size_t i = 0; i < a.chart.size(); ++i)
        CHECK(a.chart[i] == b.chart[i]);

    OptimizerOptions warm;
    warm.restarts = 0;
    warm.warm_start = a.chart;
    const PowerResult c =
        maximize_power(hardy_game(), 2, std::nullopt, warm);
    CHECK(c.power >= a.power - 1e-12);

    warm.warm_start.pop_back();
    CHECK_THROWS_AS(maximize_power(hardy_game(), 2, std::nullopt, warm),
                    shape_error);
}

TEST_CASE("statistical power is convex on behaviour segments") {
    std::mt19937_64 rng(505);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Scenario sc{2, 2, 2, 2};
    const GameSpec games[] = {chsh_game(), hardy_game()};
    const double locals[] = {0.75, 0.5};
    const Behaviour anchors[] = {
        behaviour_from_strategy(tsirelson_strategy()),
        behaviour_from_strategy(hardy_measurement_family(kZ0))};

    int active = 0;
    for (int gi = 0; gi < 2; ++gi) {
        auto power_of = [&](const Behaviour& p) {
            const GameValue v = evaluate(games[gi], p);
            if (!v.omega) return 0.0;
            return statistical_power(v.gamma, *v.omega, locals[gi]);
        };
        for (int it = 0; it < 500; ++it) {
            // Blend random points toward the quantum anchor so a good share
            // of the segment sits above the local bound.
            const Behaviour p0 = testutil::mix(
                testutil::random_behaviour(rng, sc), anchors[gi], u(rng));
            const Behaviour p1 = testutil::mix(
                testutil::random_behaviour(rng, sc), anchors[gi], u(rng));
            const double lam = u(rng);
            const double w0 = power_of(p0);
            const double w1 = power_of(p1);
            const double wm = power_of(testutil::mix(p0, p1, lam));
            CHECK(wm <= lam * w0 + (1.0 - lam) * w1 + 1e-9);
            if (wm > 0.0) ++active;
        }
    }
    CHECK(active > 100);
}

TEST_CASE("generalized hardy optimizer on the small cells") {
    const HardyProbabilityResult h22 = maximize_hardy_probability(2, 2);
    CHECK(h22.condition_sum < 1e-9);
    CHECK(h22.p_hardy == doctest::Approx(kHardyProb).epsilon(5e-4));
    CHECK(h22.power == doctest::Approx(h22.p_hardy / 4.0).epsilon(1e-12));
    CHECK_NOTHROW(validate_strategy(h22.strategy));

    // The reported probability reproduces from the strategy.
    const Behaviour p = behaviour_from_strategy(h22.strategy);
    CHECK(less_than_aggregate(p, 1, 1, OutcomePairOrder::a_less_b) ==
          doctest::Approx(h22.p_hardy).epsilon(1e-12));

    const HardyProbabilityResult h32 = maximize_hardy_probability(3, 2);
    CHECK(h32.condition_sum < 1e-9);
    CHECK(h32.power >= 0.0291 - 2e-3);

    CHECK_THROWS_AS(maximize_hardy_probability(1, 2), parameter_error);
    CHECK_THROWS_AS(maximize_hardy_probability(2, 1), parameter_error);
}

} // TEST_SUITE

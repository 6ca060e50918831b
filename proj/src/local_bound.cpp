#include "psg/local_bound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace psg {

namespace {

// Increments a mixed-radix digit vector (last digit fastest).
bool increment(std::vector<int>& digits, int radix) {
    for (int i = int(digits.size()) - 1; i >= 0; --i) {
        if (++digits[i] < radix) return true;
        digits[i] = 0;
    }
    return false;
}

} // namespace

Behaviour to_behaviour(const DeterministicStrategy& e, const Scenario& scenario) {
    if (int(e.alice.size()) != scenario.ma || int(e.bob.size()) != scenario.mb)
        throw shape_error("to_behaviour: strategy length does not match scenario");
    std::vector<double> p(scenario.size(), 0.0);
    for (int x = 0; x < scenario.ma; ++x)
        for (int y = 0; y < scenario.mb; ++y)
            p[scenario.flat_index(x, y, e.alice[x], e.bob[y])] = 1.0;
    return Behaviour(scenario, std::move(p));
}

VertexEnumerator::VertexEnumerator(const Scenario& scenario) : scenario_(scenario) {
    reset();
}

void VertexEnumerator::reset() {
    current_.alice.assign(scenario_.ma, 0);
    current_.bob.assign(scenario_.mb, 0);
    done_ = false;
    started_ = false;
}

bool VertexEnumerator::next(DeterministicStrategy& out) {
    if (done_) return false;
    if (started_) {
        // Joint odometer: bob digits fastest, then alice.
        if (!increment(current_.bob, scenario_.ob)) {
            if (!increment(current_.alice, scenario_.oa)) {
                done_ = true;
                return false;
            }
        }
    }
    started_ = true;
    out = current_;
    return true;
}

std::uint64_t vertex_pair_count(const Scenario& scenario) {
    const std::uint64_t cap = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t n = 1;
    auto mul = [&](std::uint64_t base, int times) {
        for (int i = 0; i < times; ++i) {
            if (n > cap / base) {
                n = cap;
                return;
            }
            n *= base;
        }
    };
    mul(std::uint64_t(scenario.oa), scenario.ma);
    if (n != cap) mul(std::uint64_t(scenario.ob), scenario.mb);
    return n;
}

LocalBoundResult local_bound_naive(const GameSpec& game, const LocalBoundOptions& options) {
    const Scenario& sc = game.scenario();
    if (vertex_pair_count(sc) > options.naive_cap)
        throw capacity_error(
            "local_bound_naive: vertex count exceeds cap; use local_bound_dinkelbach");

    auto s_mu = game.s_mu();
    auto v_mu = game.v_mu();

    LocalBoundResult best;
    best.value = -1.0;
    bool any_selected = false;

    VertexEnumerator en(sc);
    DeterministicStrategy e;
    while (en.next(e)) {
        double v = 0.0, s = 0.0;
        for (int x = 0; x < sc.ma; ++x)
            for (int y = 0; y < sc.mb; ++y) {
                const std::size_t i = sc.flat_index(x, y, e.alice[x], e.bob[y]);
                v += v_mu[i];
                s += s_mu[i];
            }
        if (s > 0.0) {
            any_selected = true;
            const double ratio = v / s;
            if (ratio > best.value) {
                best.value = ratio;
                best.witness = e;
                best.gamma_at_witness = s;
            }
        }
    }
    if (!any_selected)
        throw degenerate_game_error(
            "local_bound_naive: every deterministic strategy has zero post-selection");
    return best;
}

LocalBoundResult local_bound_dinkelbach(const GameSpec& game) {
    const Scenario& sc = game.scenario();
    auto s_mu = game.s_mu();
    auto v_mu = game.v_mu();

    LocalBoundResult best;
    best.value = -1.0;
    best.used_dinkelbach = true;
    bool any_selected = false;

    // Per-Alice reply tables: tv[y][b] = sum_x v_mu(a(x),b,x,y), ts likewise.
    std::vector<double> tv(std::size_t(sc.mb) * sc.ob);
    std::vector<double> ts(std::size_t(sc.mb) * sc.ob);

    std::vector<int> alice(sc.ma, 0);
    bool alice_more = true;
    while (alice_more) {
        for (int y = 0; y < sc.mb; ++y)
            for (int b = 0; b < sc.ob; ++b) {
                double av = 0.0, as = 0.0;
                for (int x = 0; x < sc.ma; ++x) {
                    const std::size_t i = sc.flat_index(x, y, alice[x], b);
                    av += v_mu[i];
                    as += s_mu[i];
                }
                tv[std::size_t(y) * sc.ob + b] = av;
                ts[std::size_t(y) * sc.ob + b] = as;
            }

        // Start from the reply with maximal keep probability; skip this
        // Alice strategy if even that is zero.
        std::vector<int> bob(sc.mb, 0);
        double v = 0.0, s = 0.0;
        for (int y = 0; y < sc.mb; ++y) {
            int arg = 0;
            double bests = -1.0;
            for (int b = 0; b < sc.ob; ++b) {
                const double cs = ts[std::size_t(y) * sc.ob + b];
                if (cs > bests) {
                    bests = cs;
                    arg = b;
                }
            }
            bob[y] = arg;
            v += tv[std::size_t(y) * sc.ob + arg];
            s += bests;
        }
        if (s <= 0.0) {
            alice_more = increment(alice, sc.oa);
            continue;
        }
        any_selected = true;

        double alpha = v / s;
        std::vector<int> witness_bob = bob;
        double witness_gamma = s;
        bool converged = false;
        for (int iter = 0; iter < 100; ++iter) {
            double cv = 0.0, cs = 0.0;
            for (int y = 0; y < sc.mb; ++y) {
                int arg = 0;
                double bestg = -std::numeric_limits<double>::infinity();
                for (int b = 0; b < sc.ob; ++b) {
                    const std::size_t i = std::size_t(y) * sc.ob + b;
                    const double g = tv[i] - alpha * ts[i];
                    if (g > bestg) {
                        bestg = g;
                        arg = b;
                    }
                }
                bob[y] = arg;
                cv += tv[std::size_t(y) * sc.ob + arg];
                cs += ts[std::size_t(y) * sc.ob + arg];
            }
            if (cs <= 0.0 || cv / cs <= alpha + 1e-12) {
                converged = true;
                break;
            }
            alpha = cv / cs;
            witness_bob = bob;
            witness_gamma = cs;
        }
        if (!converged)
            throw numerical_error("local_bound_dinkelbach: ratio iteration did not converge");

        if (alpha > best.value) {
            best.value = alpha;
            best.witness.alice = alice;
            best.witness.bob = witness_bob;
            best.gamma_at_witness = witness_gamma;
        }
        alice_more = increment(alice, sc.oa);
    }

    if (!any_selected)
        throw degenerate_game_error(
            "local_bound_dinkelbach: every deterministic strategy has zero post-selection");
    return best;
}

LocalBoundResult local_bound(const GameSpec& game, const LocalBoundOptions& options) {
    if (vertex_pair_count(game.scenario()) <= options.naive_cap)
        return local_bound_naive(game, options);
    return local_bound_dinkelbach(game);
}

} // namespace psg

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "psg/errors.hpp"

namespace psg {

/// Bipartite measurement scenario: ma/mb inputs and oa/ob outputs per party.
struct Scenario {
    int ma = 0;
    int mb = 0;
    int oa = 0;
    int ob = 0;

    Scenario() = default;
    Scenario(int ma_, int mb_, int oa_, int ob_);

    bool operator==(const Scenario&) const = default;

    /// Number of entries of a flat behaviour vector.
    std::size_t size() const { return std::size_t(ma) * mb * oa * ob; }

    /// Row-major index of the event (ab|xy): ((x*mb + y)*oa + a)*ob + b.
    /// Throws std::out_of_range for indices outside the scenario.
    std::size_t flat_index(int x, int y, int a, int b) const;

    /// Index into a per-input-pair table (mu): x*mb + y.
    std::size_t input_index(int x, int y) const;
};

/// Conditional probabilities P(ab|xy) stored flat in scenario order.
///
/// A normalized behaviour has entries in [0,1] summing to one for every
/// input pair (tolerance 1e-9). The `unnormalized` flag admits cone
/// elements theta*P, which only need nonnegative finite entries.
class Behaviour {
public:
    Behaviour(Scenario scenario, std::vector<double> p, bool unnormalized = false);

    /// The maximally mixed behaviour P(ab|xy) = 1/(oa*ob).
    static Behaviour uniform(const Scenario& scenario);

    const Scenario& scenario() const { return scenario_; }
    std::span<const double> flat() const { return p_; }
    bool is_unnormalized() const { return unnormalized_; }

    double at(int x, int y, int a, int b) const {
        return p_[scenario_.flat_index(x, y, a, b)];
    }

    /// Copy with every input-pair block rescaled to sum to one.
    Behaviour renormalized() const;

    /// Unnormalized copy theta*P, theta > 0.
    Behaviour scaled(double theta) const;

private:
    Scenario scenario_;
    std::vector<double> p_;
    bool unnormalized_;
};

/// Sum of P(ab|xy) over outcome pairs with a < b (or a > b).
enum class OutcomePairOrder { a_less_b, a_greater_b };
double less_than_aggregate(const Behaviour& p, int x, int y,
                           OutcomePairOrder mode = OutcomePairOrder::a_less_b);

/// A post-selection game: input distribution mu(x,y), per-event keep
/// probability S(a,b,x,y) and win probability V(a,b,x,y), all in [0,1].
///
/// The derived vectors s_mu = S*mu and v_mu = S*V*mu make the conditional
/// win probability a ratio of two inner products with the behaviour.
class GameSpec {
public:
    GameSpec(Scenario scenario, std::vector<double> mu,
             std::vector<double> s_tensor, std::vector<double> v_tensor);

    const Scenario& scenario() const { return scenario_; }

    double mu(int x, int y) const { return mu_[scenario_.input_index(x, y)]; }
    double s(int x, int y, int a, int b) const { return s_[scenario_.flat_index(x, y, a, b)]; }
    double v(int x, int y, int a, int b) const { return v_[scenario_.flat_index(x, y, a, b)]; }

    std::span<const double> mu_table() const { return mu_; }
    std::span<const double> s_tensor() const { return s_; }
    std::span<const double> v_tensor() const { return v_; }
    std::span<const double> s_mu() const { return s_mu_; }
    std::span<const double> v_mu() const { return v_mu_; }

private:
    Scenario scenario_;
    std::vector<double> mu_;
    std::vector<double> s_;
    std::vector<double> v_;
    std::vector<double> s_mu_;
    std::vector<double> v_mu_;
};

/// Game value at a behaviour. omega is empty when the post-selection
/// probability gamma is zero (the conditional win probability is then
/// undefined, not an error).
struct GameValue {
    std::optional<double> omega;
    double gamma = 0.0;
};

/// Post-selection probability <s_mu, P>.
double gamma(const GameSpec& game, const Behaviour& p);

/// Conditional win probability <v_mu, P> / <s_mu, P>; empty if gamma = 0.
std::optional<double> omega(const GameSpec& game, const Behaviour& p);

GameValue evaluate(const GameSpec& game, const Behaviour& p);

/// CHSH as a post-selection game with S == 1: win iff a xor b = x*y.
GameSpec chsh_game();

/// Clauser-Horne game (S == 1); V has ten winning events.
GameSpec ch_game();

/// Hardy's paradox as a post-selection game: keep the four events
/// (00|00),(01|01),(10|10),(00|11), win only on (00|00); mu uniform.
GameSpec hardy_game();

/// Generalized Hardy game with s inputs and k outputs per party.
/// mu is uniform over the 2s input pairs entering the Hardy conditions;
/// kept events are the a<b / a>b aggregates of those conditions and the
/// winning events are a<b at input (s-1,s-1).
GameSpec generalized_hardy_game(int s, int k);

/// GameSpec (de)serialization. JSON document with fields
///   scenario {ma,mb,oa,ob}, mu (ma*mb, x-major), S, V (flat event order).
/// Doubles round-trip bit-exactly.
std::string game_to_json(const GameSpec& game);
GameSpec game_from_json(const std::string& text);
GameSpec load_game(const std::filesystem::path& path);
void save_game(const GameSpec& game, const std::filesystem::path& path);

} // namespace psg

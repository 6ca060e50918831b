#include "psg/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace psg {

namespace {

constexpr double kMuSumTol = 1e-12;
constexpr double kNormTol = 1e-9;

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

} // namespace

Scenario::Scenario(int ma_, int mb_, int oa_, int ob_)
    : ma(ma_), mb(mb_), oa(oa_), ob(ob_) {
    if (ma < 1 || mb < 1 || oa < 1 || ob < 1)
        throw parameter_error("Scenario: all input/output counts must be >= 1");
}

std::size_t Scenario::flat_index(int x, int y, int a, int b) const {
    if (x < 0 || x >= ma || y < 0 || y >= mb || a < 0 || a >= oa || b < 0 || b >= ob)
        throw std::out_of_range("Scenario::flat_index: event outside scenario");
    return ((std::size_t(x) * mb + y) * oa + a) * ob + b;
}

std::size_t Scenario::input_index(int x, int y) const {
    if (x < 0 || x >= ma || y < 0 || y >= mb)
        throw std::out_of_range("Scenario::input_index: input outside scenario");
    return std::size_t(x) * mb + y;
}

Behaviour::Behaviour(Scenario scenario, std::vector<double> p, bool unnormalized)
    : scenario_(scenario), p_(std::move(p)), unnormalized_(unnormalized) {
    if (p_.size() != scenario_.size())
        throw shape_error("Behaviour: vector length does not match scenario");
    for (double v : p_) {
        if (!std::isfinite(v) || v < 0.0)
            throw validation_error("Behaviour: entries must be finite and nonnegative");
        if (!unnormalized_ && v > 1.0 + kNormTol)
            throw validation_error("Behaviour: normalized entries must lie in [0,1]");
    }
    if (!unnormalized_) {
        const std::size_t block = std::size_t(scenario_.oa) * scenario_.ob;
        for (std::size_t off = 0; off < p_.size(); off += block) {
            double sum = 0.0;
            for (std::size_t i = 0; i < block; ++i) sum += p_[off + i];
            if (std::abs(sum - 1.0) > kNormTol)
                throw validation_error("Behaviour: input pair not normalized within 1e-9");
        }
    }
}

Behaviour Behaviour::uniform(const Scenario& scenario) {
    std::vector<double> p(scenario.size(), 1.0 / (double(scenario.oa) * scenario.ob));
    return Behaviour(scenario, std::move(p));
}

Behaviour Behaviour::renormalized() const {
    std::vector<double> q(p_);
    const std::size_t block = std::size_t(scenario_.oa) * scenario_.ob;
    for (std::size_t off = 0; off < q.size(); off += block) {
        double sum = 0.0;
        for (std::size_t i = 0; i < block; ++i) sum += q[off + i];
        if (sum <= 0.0)
            throw validation_error("Behaviour::renormalized: zero-mass input pair");
        for (std::size_t i = 0; i < block; ++i) q[off + i] /= sum;
    }
    return Behaviour(scenario_, std::move(q));
}

Behaviour Behaviour::scaled(double theta) const {
    if (!(theta > 0.0) || !std::isfinite(theta))
        throw parameter_error("Behaviour::scaled: theta must be positive");
    std::vector<double> q(p_);
    for (double& v : q) v *= theta;
    return Behaviour(scenario_, std::move(q), /*unnormalized=*/true);
}

double less_than_aggregate(const Behaviour& p, int x, int y, OutcomePairOrder mode) {
    const Scenario& sc = p.scenario();
    double acc = 0.0;
    for (int a = 0; a < sc.oa; ++a)
        for (int b = 0; b < sc.ob; ++b) {
            const bool keep = mode == OutcomePairOrder::a_less_b ? a < b : a > b;
            if (keep) acc += p.at(x, y, a, b);
        }
    return acc;
}

GameSpec::GameSpec(Scenario scenario, std::vector<double> mu,
                   std::vector<double> s_tensor, std::vector<double> v_tensor)
    : scenario_(scenario), mu_(std::move(mu)), s_(std::move(s_tensor)), v_(std::move(v_tensor)) {
    if (mu_.size() != std::size_t(scenario_.ma) * scenario_.mb)
        throw shape_error("GameSpec: mu length does not match scenario inputs");
    if (s_.size() != scenario_.size() || v_.size() != scenario_.size())
        throw shape_error("GameSpec: S/V length does not match scenario");

    double mu_sum = 0.0;
    for (double m : mu_) {
        if (!std::isfinite(m) || m < 0.0)
            throw validation_error("GameSpec: mu entries must be nonnegative");
        mu_sum += m;
    }
    if (std::abs(mu_sum - 1.0) > kMuSumTol)
        throw validation_error("GameSpec: mu must sum to one within 1e-12");
    for (std::size_t i = 0; i < s_.size(); ++i) {
        if (!std::isfinite(s_[i]) || s_[i] < 0.0 || s_[i] > 1.0)
            throw validation_error("GameSpec: S entries must lie in [0,1]");
        if (!std::isfinite(v_[i]) || v_[i] < 0.0 || v_[i] > 1.0)
            throw validation_error("GameSpec: V entries must lie in [0,1]");
    }

    s_mu_.resize(s_.size());
    v_mu_.resize(v_.size());
    for (int x = 0; x < scenario_.ma; ++x)
        for (int y = 0; y < scenario_.mb; ++y) {
            const double m = mu_[scenario_.input_index(x, y)];
            for (int a = 0; a < scenario_.oa; ++a)
                for (int b = 0; b < scenario_.ob; ++b) {
                    const std::size_t i = scenario_.flat_index(x, y, a, b);
                    s_mu_[i] = s_[i] * m;
                    v_mu_[i] = s_[i] * v_[i] * m;
                }
        }
}

double gamma(const GameSpec& game, const Behaviour& p) {
    if (p.scenario() != game.scenario())
        throw shape_error("gamma: behaviour scenario does not match game");
    return dot(game.s_mu(), p.flat());
}

std::optional<double> omega(const GameSpec& game, const Behaviour& p) {
    if (p.scenario() != game.scenario())
        throw shape_error("omega: behaviour scenario does not match game");
    const double g = dot(game.s_mu(), p.flat());
    if (g == 0.0) return std::nullopt;
    return dot(game.v_mu(), p.flat()) / g;
}

GameValue evaluate(const GameSpec& game, const Behaviour& p) {
    return GameValue{omega(game, p), gamma(game, p)};
}

GameSpec chsh_game() {
    Scenario sc(2, 2, 2, 2);
    std::vector<double> mu(4, 0.25);
    std::vector<double> s(16, 1.0);
    std::vector<double> v(16, 0.0);
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    if ((a ^ b) == (x & y)) v[sc.flat_index(x, y, a, b)] = 1.0;
    return GameSpec(sc, std::move(mu), std::move(s), std::move(v));
}

GameSpec ch_game() {
    Scenario sc(2, 2, 2, 2);
    std::vector<double> mu(4, 0.25);
    std::vector<double> s(16, 1.0);
    std::vector<double> v(16, 0.0);
    // Quadrant layout (x,y), within each quadrant outcomes (a,b).
    const int wins[10][4] = {
        {0, 0, 0, 0},
        {0, 1, 0, 0}, {0, 1, 1, 0}, {0, 1, 1, 1},
        {1, 0, 0, 0}, {1, 0, 0, 1}, {1, 0, 1, 1},
        {1, 1, 0, 1}, {1, 1, 1, 0}, {1, 1, 1, 1},
    };
    for (const auto& w : wins) v[sc.flat_index(w[0], w[1], w[2], w[3])] = 1.0;
    return GameSpec(sc, std::move(mu), std::move(s), std::move(v));
}

GameSpec hardy_game() {
    Scenario sc(2, 2, 2, 2);
    std::vector<double> mu(4, 0.25);
    std::vector<double> s(16, 0.0);
    std::vector<double> v(16, 0.0);
    s[sc.flat_index(0, 0, 0, 0)] = 1.0;
    s[sc.flat_index(0, 1, 0, 1)] = 1.0;
    s[sc.flat_index(1, 0, 1, 0)] = 1.0;
    s[sc.flat_index(1, 1, 0, 0)] = 1.0;
    v[sc.flat_index(0, 0, 0, 0)] = 1.0;
    return GameSpec(sc, std::move(mu), std::move(s), std::move(v));
}

GameSpec generalized_hardy_game(int s, int k) {
    if (s < 2 || k < 2)
        throw parameter_error("generalized_hardy_game: requires s >= 2 and k >= 2");
    Scenario sc(s, s, k, k);
    std::vector<double> mu(std::size_t(s) * s, 0.0);
    std::vector<double> st(sc.size(), 0.0);
    std::vector<double> vt(sc.size(), 0.0);

    const double w = 1.0 / (2.0 * s);
    auto select = [&](int x, int y, OutcomePairOrder order, bool winning) {
        mu[sc.input_index(x, y)] = w;
        for (int a = 0; a < k; ++a)
            for (int b = 0; b < k; ++b) {
                const bool keep =
                    order == OutcomePairOrder::a_less_b ? a < b : a > b;
                if (!keep) continue;
                st[sc.flat_index(x, y, a, b)] = 1.0;
                if (winning) vt[sc.flat_index(x, y, a, b)] = 1.0;
            }
    };

    select(0, s - 1, OutcomePairOrder::a_less_b, false);
    for (int i = 1; i <= s - 1; ++i) {
        select(i, i - 1, OutcomePairOrder::a_less_b, false);
        select(i - 1, i - 1, OutcomePairOrder::a_greater_b, false);
    }
    select(s - 1, s - 1, OutcomePairOrder::a_less_b, true);

    return GameSpec(sc, std::move(mu), std::move(st), std::move(vt));
}

std::string game_to_json(const GameSpec& game) {
    nlohmann::json j;
    const Scenario& sc = game.scenario();
    j["scenario"] = {{"ma", sc.ma}, {"mb", sc.mb}, {"oa", sc.oa}, {"ob", sc.ob}};
    j["mu"] = std::vector<double>(game.mu_table().begin(), game.mu_table().end());
    j["S"] = std::vector<double>(game.s_tensor().begin(), game.s_tensor().end());
    j["V"] = std::vector<double>(game.v_tensor().begin(), game.v_tensor().end());
    return j.dump(2);
}

GameSpec game_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw io_error(std::string("game file: ") + e.what());
    }
    try {
        const auto& js = j.at("scenario");
        Scenario sc(js.at("ma").get<int>(), js.at("mb").get<int>(),
                    js.at("oa").get<int>(), js.at("ob").get<int>());
        return GameSpec(sc, j.at("mu").get<std::vector<double>>(),
                        j.at("S").get<std::vector<double>>(),
                        j.at("V").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw io_error(std::string("game file: ") + e.what());
    }
}

GameSpec load_game(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open game file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return game_from_json(buf.str());
}

void save_game(const GameSpec& game, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write game file: " + path.string());
    out << game_to_json(game) << '\n';
}

} // namespace psg

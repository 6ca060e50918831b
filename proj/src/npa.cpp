#include "psg/npa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "psg/local_bound.hpp"

namespace psg::npa {

namespace {

using Word = std::vector<std::pair<int, int>>;

// Projector algebra on one party's word: adjacent factors with the same
// input collapse (same outcome) or annihilate (different outcome).
std::optional<Word> reduce(const Word& w) {
    Word out;
    for (const auto& f : w) {
        if (!out.empty() && out.back().first == f.first) {
            if (out.back().second == f.second) continue;
            return std::nullopt;
        }
        out.push_back(f);
    }
    return out;
}

// <m_i' m_j> equals <m_j' m_i> in the real relaxation, so a moment and its
// reversal share one variable.
std::pair<Word, Word> canonical(Word a, Word b) {
    std::pair<Word, Word> rev{Word(a.rbegin(), a.rend()), Word(b.rbegin(), b.rend())};
    std::pair<Word, Word> fwd{std::move(a), std::move(b)};
    return std::min(fwd, rev);
}

} // namespace

std::string to_string(Level level) {
    return level == Level::one ? "1" : "1+AB";
}

Level default_level(const Scenario& scenario) {
    return scenario.oa == 2 && scenario.ob == 2 ? Level::one_ab : Level::one;
}

MomentStructure::MomentStructure(Scenario scenario, Level level)
    : scenario_(scenario), level_(level) {
    monomials_.push_back({});
    for (int x = 0; x < scenario_.ma; ++x)
        for (int a = 0; a + 1 < scenario_.oa; ++a)
            monomials_.push_back({{{x, a}}, {}});
    for (int y = 0; y < scenario_.mb; ++y)
        for (int b = 0; b + 1 < scenario_.ob; ++b)
            monomials_.push_back({{}, {{y, b}}});
    if (level_ == Level::one_ab)
        for (int x = 0; x < scenario_.ma; ++x)
            for (int a = 0; a + 1 < scenario_.oa; ++a)
                for (int y = 0; y < scenario_.mb; ++y)
                    for (int b = 0; b + 1 < scenario_.ob; ++b)
                        monomials_.push_back({{{x, a}}, {{y, b}}});

    const int n = size();
    cells_.assign(std::size_t(n) * n, -1);
    std::map<std::pair<Word, Word>, int> index;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            Word wa(monomials_[i].alice.rbegin(), monomials_[i].alice.rend());
            wa.insert(wa.end(), monomials_[j].alice.begin(), monomials_[j].alice.end());
            Word wb(monomials_[i].bob.rbegin(), monomials_[i].bob.rend());
            wb.insert(wb.end(), monomials_[j].bob.begin(), monomials_[j].bob.end());
            auto ra = reduce(wa), rb = reduce(wb);
            if (!ra || !rb) continue;
            auto key = canonical(std::move(*ra), std::move(*rb));
            auto [it, inserted] = index.try_emplace(key, int(representative_.size()));
            if (inserted) representative_.push_back({i, j});
            cells_[std::size_t(i) * n + j] = it->second;
        }
    identity_var_ = cell_variable(0, 0);

    auto lookup = [&](Word a, Word b) {
        auto it = index.find(canonical(std::move(a), std::move(b)));
        return it == index.end() ? -1 : it->second;
    };
    alice_vars_.assign(std::size_t(scenario_.ma) * (scenario_.oa - 1), -1);
    for (int x = 0; x < scenario_.ma; ++x)
        for (int a = 0; a + 1 < scenario_.oa; ++a)
            alice_vars_[std::size_t(x) * (scenario_.oa - 1) + a] = lookup({{x, a}}, {});
    bob_vars_.assign(std::size_t(scenario_.mb) * (scenario_.ob - 1), -1);
    for (int y = 0; y < scenario_.mb; ++y)
        for (int b = 0; b + 1 < scenario_.ob; ++b)
            bob_vars_[std::size_t(y) * (scenario_.ob - 1) + b] = lookup({}, {{y, b}});
    ab_vars_.assign(alice_vars_.size() * bob_vars_.size(), -1);
    for (int x = 0; x < scenario_.ma; ++x)
        for (int a = 0; a + 1 < scenario_.oa; ++a)
            for (int y = 0; y < scenario_.mb; ++y)
                for (int b = 0; b + 1 < scenario_.ob; ++b) {
                    const std::size_t i =
                        (std::size_t(x) * (scenario_.oa - 1) + a) * bob_vars_.size() +
                        std::size_t(y) * (scenario_.ob - 1) + b;
                    ab_vars_[i] = lookup({{x, a}}, {{y, b}});
                }
}

int MomentStructure::cell_variable(int i, int j) const {
    if (i > j) std::swap(i, j);
    if (i < 0 || j >= size()) throw std::out_of_range("MomentStructure: cell out of range");
    return cells_[std::size_t(i) * size() + j];
}

int MomentStructure::moment_of(int x, int a) const {
    return alice_vars_[std::size_t(x) * (scenario_.oa - 1) + a];
}

int MomentStructure::moment_of_bob(int y, int b) const {
    return bob_vars_[std::size_t(y) * (scenario_.ob - 1) + b];
}

int MomentStructure::moment_of_ab(int x, int a, int y, int b) const {
    return ab_vars_[(std::size_t(x) * (scenario_.oa - 1) + a) * bob_vars_.size() +
                    std::size_t(y) * (scenario_.ob - 1) + b];
}

std::vector<std::pair<int, double>> MomentStructure::event_moments(int x, int y, int a,
                                                                   int b) const {
    scenario_.flat_index(x, y, a, b);
    const int la = scenario_.oa - 1, lb = scenario_.ob - 1;
    std::vector<std::pair<int, double>> out;
    if (a < la && b < lb) {
        out.push_back({moment_of_ab(x, a, y, b), 1.0});
    } else if (a < la) {
        out.push_back({moment_of(x, a), 1.0});
        for (int bp = 0; bp < lb; ++bp) out.push_back({moment_of_ab(x, a, y, bp), -1.0});
    } else if (b < lb) {
        out.push_back({moment_of_bob(y, b), 1.0});
        for (int ap = 0; ap < la; ++ap) out.push_back({moment_of_ab(x, ap, y, b), -1.0});
    } else {
        out.push_back({identity_var_, 1.0});
        for (int ap = 0; ap < la; ++ap) out.push_back({moment_of(x, ap), -1.0});
        for (int bp = 0; bp < lb; ++bp) out.push_back({moment_of_bob(y, bp), -1.0});
        for (int ap = 0; ap < la; ++ap)
            for (int bp = 0; bp < lb; ++bp) out.push_back({moment_of_ab(x, ap, y, bp), 1.0});
    }
    return out;
}

namespace {

// Linear functional sum_e weights(e) P'(e) as moment-variable coefficients.
std::map<int, double> build_var_map(const MomentStructure& ms,
                                    std::span<const double> weights) {
    std::map<int, double> acc;
    const Scenario& sc = ms.scenario();
    for (int x = 0; x < sc.ma; ++x)
        for (int y = 0; y < sc.mb; ++y)
            for (int a = 0; a < sc.oa; ++a)
                for (int b = 0; b < sc.ob; ++b) {
                    const double w = weights[sc.flat_index(x, y, a, b)];
                    if (w == 0.0) continue;
                    for (auto [var, c] : ms.event_moments(x, y, a, b)) acc[var] += w * c;
                }
    return acc;
}

void add_var_entry(const MomentStructure& ms, std::vector<sdp::Entry>& es, int var,
                   double coeff) {
    auto [i, j] = ms.representative(var);
    es.push_back({0, i, j, i == j ? coeff : 0.5 * coeff});
}

std::vector<sdp::Entry> to_entries(const MomentStructure& ms,
                                   const std::map<int, double>& vars) {
    std::vector<sdp::Entry> es;
    for (auto [var, c] : vars)
        if (c != 0.0) add_var_entry(ms, es, var, c);
    return es;
}

// At level 1 the moment matrix does not force the completed event
// probabilities to be nonnegative (the 1+AB minors that would imply it are
// absent), so P' can leave the cone of unnormalized behaviours and the
// objective can exceed <S,P'>. Pin each event to a 1x1 slack block.
void add_event_positivity(const MomentStructure& ms, sdp::Problem& pb) {
    const Scenario& sc = ms.scenario();
    for (int x = 0; x < sc.ma; ++x)
        for (int y = 0; y < sc.mb; ++y)
            for (int a = 0; a < sc.oa; ++a)
                for (int b = 0; b < sc.ob; ++b) {
                    std::map<int, double> acc;
                    for (auto [var, c] : ms.event_moments(x, y, a, b)) acc[var] += c;
                    sdp::Constraint cst;
                    cst.entries = to_entries(ms, acc);
                    const int blk = int(pb.block_dims.size());
                    pb.block_dims.push_back(1);
                    cst.entries.push_back({blk, 0, 0, -1.0});
                    pb.constraints.push_back(std::move(cst));
                }
}

// Cell-tying and orthogonality-zero constraints shared by both programs.
void add_structure_constraints(const MomentStructure& ms, sdp::Problem& pb) {
    const int n = ms.size();
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const int var = ms.cell_variable(i, j);
            const double w = i == j ? 1.0 : 0.5;
            if (var < 0) {
                pb.constraints.push_back({{{0, i, j, w}}, 0.0});
                continue;
            }
            auto [ri, rj] = ms.representative(var);
            if (ri == i && rj == j) continue;
            sdp::Constraint tie;
            tie.entries = {{0, i, j, w}, {0, ri, rj, ri == rj ? -1.0 : -0.5}};
            pb.constraints.push_back(std::move(tie));
        }
}

} // namespace

TsirelsonResult tsirelson_conic(const GameSpec& game, std::optional<Level> level_opt,
                                double theta_cap) {
    if (!std::isfinite(theta_cap) || theta_cap <= 1.0)
        throw parameter_error("tsirelson_conic: theta_cap must be finite and > 1");
    const Level level = level_opt.value_or(default_level(game.scenario()));
    MomentStructure ms(game.scenario(), level);

    std::map<int, double> s_vars = build_var_map(ms, game.s_mu());
    if (s_vars.empty())
        throw degenerate_game_error("tsirelson_conic: game never keeps a round");

    sdp::Problem pb;
    pb.block_dims = {ms.size(), 1};
    pb.maximize = true;
    pb.objective = to_entries(ms, build_var_map(ms, game.v_mu()));
    pb.constraints.push_back({to_entries(ms, s_vars), 1.0});
    add_structure_constraints(ms, pb);
    if (level == Level::one) add_event_positivity(ms, pb);

    // theta/cap + slack = 1 keeps the transform bounded when the supremum is
    // approached only as gamma -> 0. A cap far above the theta the game needs
    // can leave the solver badly scaled, so on a numerical-limit status retry
    // with geometrically smaller caps; a solution pinned at a reduced cap is
    // reported with attained = false like any other cap hit.
    TsirelsonResult r;
    r.level = level;
    sdp::Solution sol;
    double cap = theta_cap;
    for (;;) {
        pb.constraints.push_back({{{0, 0, 0, 1.0 / cap}, {1, 0, 0, 1.0}}, 1.0});
        sol = sdp::solve(pb);
        pb.constraints.pop_back();
        ++r.sdp_solves;
        if (sol.status == sdp::Status::infeasible)
            throw degenerate_game_error(
                "tsirelson_conic: no relaxation point with positive post-selection");
        if (sol.status == sdp::Status::optimal) break;
        cap /= 100.0;
        if (cap <= 10.0)
            throw numerical_error("tsirelson_conic: solver status " +
                                  sdp::to_string(sol.status));
    }

    r.upper_bound = sol.objective;
    r.theta = sol.x_blocks[0](0, 0);
    r.attained = r.theta < 0.99 * cap;
    r.certificate = std::move(sol);
    return r;
}

TsirelsonResult tsirelson_bisection(const GameSpec& game, std::optional<Level> level_opt,
                                    double tol) {
    if (!std::isfinite(tol) || tol <= 0.0)
        throw parameter_error("tsirelson_bisection: tol must be positive");
    const Level level = level_opt.value_or(default_level(game.scenario()));
    MomentStructure ms(game.scenario(), level);

    double lo = local_bound(game).value;
    double hi = 1.0;

    std::map<int, double> v_vars = build_var_map(ms, game.v_mu());
    std::map<int, double> s_vars = build_var_map(ms, game.s_mu());
    std::vector<sdp::Entry> s_entries = to_entries(ms, s_vars);

    sdp::Problem pb;
    pb.block_dims = {ms.size()};
    pb.maximize = true;
    pb.constraints.push_back({{{0, 0, 0, 1.0}}, 1.0});
    add_structure_constraints(ms, pb);
    if (level == Level::one) add_event_positivity(ms, pb);

    TsirelsonResult r;
    r.level = level;
    constexpr double kMargin = 1e-9;
    double last_gamma = 0.0;

    // Slack of the best relaxation point at ratio alpha; > margin means
    // some normalized point wins more than alpha of its kept rounds.
    auto feasible = [&](double alpha) {
        std::map<int, double> obj = v_vars;
        for (auto [var, c] : s_vars) obj[var] -= alpha * c;
        pb.objective = to_entries(ms, obj);
        sdp::Solution sol = sdp::solve(pb);
        if (sol.status != sdp::Status::optimal)
            throw numerical_error("tsirelson_bisection: solver status " +
                                  sdp::to_string(sol.status));
        const double slack = sol.objective;
        last_gamma = sdp::inner(s_entries, sol.x_blocks);
        ++r.sdp_solves;
        r.certificate = std::move(sol);
        return slack > kMargin;
    };

    if (feasible(hi)) {
        // Conditional win probabilities cannot exceed one; report the cap.
        lo = hi;
    } else {
        for (int iter = 0; iter < 200 && hi - lo > tol; ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (feasible(mid))
                lo = mid;
            else
                hi = mid;
        }
    }

    r.upper_bound = hi;
    r.theta = last_gamma > 0.0 ? 1.0 / last_gamma : std::numeric_limits<double>::infinity();
    r.attained = r.theta < 0.99 * 1e8;
    return r;
}

} // namespace psg::npa

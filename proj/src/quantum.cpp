#include "psg/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "psg/efficiency.hpp"
#include "psg/errors.hpp"
#include "psg/local_bound.hpp"
#include "psg/statistics.hpp"

namespace psg {

void validate_strategy(const QuantumStrategy& st) {
    const int d = st.dim;
    if (d < 2) throw validation_error("strategy dimension must be at least 2");
    if (st.state.size() != d * d)
        throw validation_error("state must have length dim^2");
    if (std::abs(st.state.squaredNorm() - 1.0) > 1e-12)
        throw validation_error("state is not normalized");
    if (st.alice_bases.empty() || st.bob_bases.empty())
        throw validation_error("each party needs at least one basis");
    for (const auto* side : {&st.alice_bases, &st.bob_bases})
        for (const Eigen::MatrixXd& u : *side) {
            if (u.rows() != d || u.cols() != d)
                throw validation_error("basis must be dim x dim");
            const double err =
                (u * u.transpose() - Eigen::MatrixXd::Identity(d, d))
                    .cwiseAbs()
                    .maxCoeff();
            if (err > 1e-10)
                throw validation_error("basis is not orthonormal (error " +
                                       std::to_string(err) + ")");
        }
}

Behaviour behaviour_from_strategy(const QuantumStrategy& st) {
    validate_strategy(st);
    const int d = st.dim;
    const Scenario sc(int(st.alice_bases.size()), int(st.bob_bases.size()), d,
                      d);
    // state[i*d+j] is the |ij> coefficient: row-major reshape.
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        m(st.state.data(), d, d);
    std::vector<double> p(std::size_t(sc.size()));
    for (int x = 0; x < sc.ma; ++x)
        for (int y = 0; y < sc.mb; ++y) {
            const Eigen::MatrixXd t =
                st.alice_bases[std::size_t(x)] * m *
                st.bob_bases[std::size_t(y)].transpose();
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b)
                    p[std::size_t(sc.flat_index(x, y, a, b))] =
                        t(a, b) * t(a, b);
        }
    return Behaviour(sc, std::move(p));
}

QuantumStrategy hardy_measurement_family(double z) {
    if (!(z >= 0.0 && z < 1.0))
        throw parameter_error("hardy family parameter z must lie in [0,1)");
    const double alpha = std::sqrt(z);
    const double beta = std::sqrt(1.0 - z);
    const double nrm = 1.0 / std::sqrt(1.0 - z * z); // 1/sqrt(1 - alpha^4)

    QuantumStrategy st;
    st.dim = 2;
    st.state = Eigen::VectorXd::Zero(4);
    st.state[1] = nrm * alpha * beta; // |01>
    st.state[2] = nrm * alpha * beta; // |10>
    st.state[3] = nrm * beta * beta;  // |11>

    Eigen::MatrixXd tilted(2, 2);
    tilted << beta, -alpha, // outcome 0
        alpha, beta;        // outcome 1
    const Eigen::MatrixXd computational = Eigen::MatrixXd::Identity(2, 2);
    st.alice_bases = {tilted, computational};
    st.bob_bases = {tilted, computational};
    return st;
}

int chart_size(int d, int ma, int mb) {
    return d * d - 1 + (ma + mb) * d * (d - 1) / 2;
}

namespace {

// Point on the unit sphere in R^(n+1) from n hyperspherical angles; the
// zero vector maps to the first coordinate axis.
Eigen::VectorXd sphere_point(const double* angles, int n) {
    Eigen::VectorXd v(n + 1);
    double sines = 1.0;
    for (int i = 0; i < n; ++i) {
        v[i] = sines * std::cos(angles[i]);
        sines *= std::sin(angles[i]);
    }
    v[n] = sines;
    return v;
}

// Orthogonal matrix from d(d-1)/2 Givens angles; zero maps to the identity.
Eigen::MatrixXd rotation_from_angles(const double* angles, int d) {
    Eigen::MatrixXd u = Eigen::MatrixXd::Identity(d, d);
    int idx = 0;
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j, ++idx) {
            const double c = std::cos(angles[idx]);
            const double s = std::sin(angles[idx]);
            const Eigen::RowVectorXd ri = u.row(i);
            u.row(i) = c * ri + s * u.row(j);
            u.row(j) = -s * ri + c * u.row(j);
        }
    return u;
}

} // namespace

QuantumStrategy parameterize(const std::vector<double>& params, int d, int ma,
                             int mb) {
    if (d < 2) throw parameter_error("dimension must be at least 2");
    if (ma < 1 || mb < 1) throw parameter_error("each party needs an input");
    if (int(params.size()) != chart_size(d, ma, mb))
        throw shape_error("chart for d=" + std::to_string(d) + ", ma=" +
                          std::to_string(ma) + ", mb=" + std::to_string(mb) +
                          " needs " + std::to_string(chart_size(d, ma, mb)) +
                          " parameters, got " + std::to_string(params.size()));
    QuantumStrategy st;
    st.dim = d;
    st.state = sphere_point(params.data(), d * d - 1);
    const int per_basis = d * (d - 1) / 2;
    const double* cursor = params.data() + (d * d - 1);
    for (int x = 0; x < ma; ++x, cursor += per_basis)
        st.alice_bases.push_back(rotation_from_angles(cursor, d));
    for (int y = 0; y < mb; ++y, cursor += per_basis)
        st.bob_bases.push_back(rotation_from_angles(cursor, d));
    return st;
}

NelderMeadResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& objective,
    const std::vector<double>& x0, const OptimizerOptions& options) {
    const int n = int(x0.size());
    if (n < 1) throw parameter_error("nelder_mead needs at least one variable");
    if (options.max_evals < n + 2 || options.tolerance <= 0.0)
        throw parameter_error("bad optimizer options");

    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        const double f = objective(x);
        ++evals;
        if (!std::isfinite(f))
            throw numerical_error(
                "nelder_mead: objective is not finite after " +
                std::to_string(evals) + " evaluations");
        return f;
    };

    // Initial simplex: x0 plus a fixed step along each axis.
    std::vector<std::vector<double>> xs(std::size_t(n) + 1, x0);
    std::vector<double> fs(std::size_t(n) + 1);
    fs[0] = eval(xs[0]);
    for (int i = 0; i < n; ++i) {
        xs[std::size_t(i) + 1][std::size_t(i)] += 0.5;
        fs[std::size_t(i) + 1] = eval(xs[std::size_t(i) + 1]);
    }
    const std::size_t un = std::size_t(n);
    std::vector<int> order(un + 1);
    std::vector<double> c(un), xr(un), xt(un);

    while (true) {
        for (int i = 0; i <= n; ++i) order[std::size_t(i)] = i;
        std::stable_sort(order.begin(), order.end(), [&](int l, int r) {
            return fs[std::size_t(l)] < fs[std::size_t(r)];
        });
        const int best = order[0], worst = order[std::size_t(n)];
        const int second_worst = order[std::size_t(n) - 1];
        if (fs[std::size_t(worst)] - fs[std::size_t(best)] <
                options.tolerance ||
            evals >= options.max_evals)
            return {xs[std::size_t(best)], fs[std::size_t(best)], evals};

        // Centroid of all points but the worst.
        std::fill(c.begin(), c.end(), 0.0);
        for (int i = 0; i <= n; ++i)
            if (i != worst)
                for (int j = 0; j < n; ++j)
                    c[std::size_t(j)] += xs[std::size_t(i)][std::size_t(j)] / n;

        auto blend = [&](std::vector<double>& out, double coeff) {
            for (int j = 0; j < n; ++j)
                out[std::size_t(j)] =
                    c[std::size_t(j)] +
                    coeff * (c[std::size_t(j)] -
                             xs[std::size_t(worst)][std::size_t(j)]);
        };
        auto replace_worst = [&](const std::vector<double>& x, double f) {
            xs[std::size_t(worst)] = x;
            fs[std::size_t(worst)] = f;
        };

        blend(xr, 1.0); // reflection
        const double fr = eval(xr);
        if (fr < fs[std::size_t(best)]) {
            blend(xt, 2.0); // expansion
            const double fe = eval(xt);
            if (fe < fr)
                replace_worst(xt, fe);
            else
                replace_worst(xr, fr);
        } else if (fr < fs[std::size_t(second_worst)]) {
            replace_worst(xr, fr);
        } else {
            const bool outside = fr < fs[std::size_t(worst)];
            blend(xt, outside ? 0.5 : -0.5); // contraction
            const double fc = eval(xt);
            if (fc < std::min(fr, fs[std::size_t(worst)])) {
                replace_worst(xt, fc);
            } else {
                // Shrink toward the best vertex.
                for (int i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (int j = 0; j < n; ++j)
                        xs[std::size_t(i)][std::size_t(j)] =
                            0.5 * (xs[std::size_t(i)][std::size_t(j)] +
                                   xs[std::size_t(best)][std::size_t(j)]);
                    fs[std::size_t(i)] = eval(xs[std::size_t(i)]);
                }
            }
        }
    }
}

namespace {

// One restart start point per call: the origin first, then uniform angles.
std::vector<double> restart_point(int index, int n, std::mt19937_64& rng) {
    std::vector<double> x(std::size_t(n), 0.0);
    if (index > 0) {
        std::uniform_real_distribution<double> u(-M_PI, M_PI);
        for (double& v : x) v = u(rng);
    }
    return x;
}

} // namespace

PowerResult maximize_power(const GameSpec& game, int d,
                           std::optional<double> eta,
                           const OptimizerOptions& options) {
    if (d < 2) throw parameter_error("dimension must be at least 2");
    if (eta && !(*eta >= 0.0 && *eta <= 1.0))
        throw parameter_error("eta must lie in [0,1]");
    const Scenario& sc = game.scenario();
    const double omega_l = local_bound(game).value;
    const int n = chart_size(d, sc.ma, sc.mb);

    auto realize = [&](const std::vector<double>& x) {
        QuantumStrategy st = parameterize(x, d, sc.ma, sc.mb);
        Behaviour p = behaviour_from_strategy(st);
        if (eta) p = apply_efficiency(p, *eta);
        return std::pair<QuantumStrategy, GameValue>(std::move(st),
                                                     evaluate(game, p));
    };
    // Shaped objective: past the local bound, maximize the power; below it,
    // walk omega upward; with nothing post-selected, stay away.
    auto shaped = [&](const std::vector<double>& x) {
        const GameValue val = realize(x).second;
        if (!val.omega) return 2.0;
        if (*val.omega < omega_l) return omega_l - *val.omega;
        return -statistical_power(val.gamma, *val.omega, omega_l);
    };

    if (!options.warm_start.empty() && int(options.warm_start.size()) != n)
        throw shape_error("warm start length does not match the chart");

    std::mt19937_64 rng(options.seed);
    PowerResult best;
    best.power = -1.0;
    best.omega_local = omega_l;
    const int first = options.warm_start.empty() ? 0 : -1;
    for (int r = first; r <= options.restarts; ++r) {
        const NelderMeadResult run = nelder_mead(
            shaped, r < 0 ? options.warm_start : restart_point(r, n, rng),
            options);
        auto [st, val] = realize(run.x);
        const double omega = val.omega.value_or(0.0);
        const double power = val.omega && omega >= omega_l
                                 ? statistical_power(val.gamma, omega, omega_l)
                                 : 0.0;
        if (power > best.power) {
            best.strategy = std::move(st);
            best.power = power;
            best.omega = omega;
            best.gamma = val.gamma;
            best.chart = run.x;
        }
    }
    best.power = std::max(best.power, 0.0);
    return best;
}

namespace {

struct HardyScores {
    double p = 0.0;          // paradox probability P(a<b | s-1, s-1)
    double conditions = 0.0; // mass on the events required to vanish
};

HardyScores hardy_scores(const Behaviour& p, int s) {
    HardyScores sc;
    sc.p = less_than_aggregate(p, s - 1, s - 1, OutcomePairOrder::a_less_b);
    sc.conditions =
        less_than_aggregate(p, 0, s - 1, OutcomePairOrder::a_less_b);
    for (int i = 1; i < s; ++i) {
        sc.conditions +=
            less_than_aggregate(p, i, i - 1, OutcomePairOrder::a_less_b);
        sc.conditions += less_than_aggregate(p, i - 1, i - 1,
                                             OutcomePairOrder::a_greater_b);
    }
    return sc;
}

} // namespace

HardyProbabilityResult maximize_hardy_probability(
    int s, int k, const OptimizerOptions& options) {
    if (s < 2 || k < 2)
        throw parameter_error("generalized hardy needs s, k >= 2");
    const int d = k;
    const int n = chart_size(d, s, s);

    auto scores = [&](const std::vector<double>& x) {
        return hardy_scores(
            behaviour_from_strategy(parameterize(x, d, s, s)), s);
    };
    auto penalized = [&](double weight) {
        return [&, weight](const std::vector<double>& x) {
            const HardyScores h = scores(x);
            return -h.p + weight * h.conditions;
        };
    };

    // Multi-round refresh: re-seeding the simplex at the incumbent unsticks
    // the search in the larger charts.
    auto polish_rounds = [&](std::vector<double> x, double weight,
                             int rounds) {
        auto obj = penalized(weight);
        double value = obj(x);
        for (int round = 0; round < rounds; ++round) {
            NelderMeadResult run = nelder_mead(obj, x, options);
            if (run.value >= value - 1e-9) break;
            value = run.value;
            x = std::move(run.x);
        }
        return x;
    };

    if (!options.warm_start.empty() && int(options.warm_start.size()) != n)
        throw shape_error("warm start length does not match the chart");

    // Penalty continuation: let the paradox probability grow under a light
    // feasibility weight before clamping the zero conditions.  Starting at
    // the full weight tends to collapse the search into a strategy that only
    // uses a lower number of outcomes.
    std::mt19937_64 rng(options.seed);
    std::vector<double> best_x;
    double best_score = std::numeric_limits<double>::infinity();
    const int first = options.warm_start.empty() ? 0 : -1;
    for (int r = first; r <= options.restarts; ++r) {
        std::vector<double> x =
            r < 0 ? options.warm_start : restart_point(r, n, rng);
        for (const double weight : {1.0, 30.0, 1e3})
            x = polish_rounds(std::move(x), weight, 4);
        const HardyScores h = scores(x);
        const double score = -h.p + 1e6 * h.conditions;
        if (score < best_score) {
            best_score = score;
            best_x = std::move(x);
        }
    }
    // Feasibility polish: drive the condition mass to numerical zero.
    best_x = polish_rounds(std::move(best_x), 1e6, 4);

    HardyProbabilityResult out;
    out.strategy = parameterize(best_x, d, s, s);
    const HardyScores h =
        hardy_scores(behaviour_from_strategy(out.strategy), s);
    out.p_hardy = h.p;
    out.condition_sum = h.conditions;
    out.power = h.p / (2.0 * s);
    return out;
}

} // namespace psg

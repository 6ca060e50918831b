#include "psg/efficiency.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

#include "psg/errors.hpp"
#include "psg/statistics.hpp"

namespace psg {

EfficiencyParams::EfficiencyParams(double eta_) : eta(eta_) {
    if (!(eta >= 0.0 && eta <= 1.0))
        throw parameter_error("efficiency must lie in [0,1], got " +
                              std::to_string(eta));
    detuning = eta > 0.0 ? 2.0 * (1.0 - eta) / eta
                         : std::numeric_limits<double>::infinity();
}

Behaviour apply_efficiency(const Behaviour& p, double eta) {
    const Scenario& sc = p.scenario();
    if (sc.oa != 2 || sc.ob != 2)
        throw shape_error("apply_efficiency needs 2 outcomes per party, got " +
                          std::to_string(sc.oa) + "x" + std::to_string(sc.ob));
    if (!(eta >= 0.0 && eta <= 1.0))
        throw parameter_error("efficiency must lie in [0,1]");

    std::vector<double> q(std::size_t(sc.size()));
    for (int x = 0; x < sc.ma; ++x)
        for (int y = 0; y < sc.mb; ++y) {
            const double p00 = p.at(x, y, 0, 0);
            const double p01 = p.at(x, y, 0, 1);
            const double p10 = p.at(x, y, 1, 0);
            const double block = p00 + p01 + p10 + p.at(x, y, 1, 1);
            const double e00 = eta * eta * p00;
            const double e01 = eta * p01 + eta * (1.0 - eta) * p00;
            const double e10 = eta * p10 + eta * (1.0 - eta) * p00;
            q[std::size_t(sc.flat_index(x, y, 0, 0))] = e00;
            q[std::size_t(sc.flat_index(x, y, 0, 1))] = e01;
            q[std::size_t(sc.flat_index(x, y, 1, 0))] = e10;
            // Undetected rounds are binned into outcome 1 for both parties;
            // assigning the remainder keeps each block's mass exactly. The
            // map is nonnegativity-preserving, so a negative remainder can
            // only be roundoff and is clamped away.
            q[std::size_t(sc.flat_index(x, y, 1, 1))] =
                std::max(0.0, block - e00 - e01 - e10);
        }
    return Behaviour(sc, std::move(q));
}

namespace {

double poly_eval(const std::array<double, 5>& c, double x) {
    return (((c[4] * x + c[3]) * x + c[2]) * x + c[1]) * x + c[0];
}

double poly_deriv(const std::array<double, 5>& c, double x) {
    return ((4.0 * c[4] * x + 3.0 * c[3]) * x + 2.0 * c[2]) * x + c[1];
}

} // namespace

double largest_real_root(const std::array<double, 5>& c) {
    if (c[4] == 0.0)
        throw parameter_error("largest_real_root needs degree exactly 4");
    double max_coeff = 0.0;
    for (double v : c) max_coeff = std::max(max_coeff, std::abs(v));

    Eigen::Matrix4d companion = Eigen::Matrix4d::Zero();
    for (int i = 0; i < 3; ++i) companion(i + 1, i) = 1.0;
    for (int i = 0; i < 4; ++i) companion(i, 3) = -c[std::size_t(i)] / c[4];
    const Eigen::EigenSolver<Eigen::Matrix4d> es(companion);

    bool found = false;
    double best = 0.0;
    for (int i = 0; i < 4; ++i) {
        const std::complex<double> ev = es.eigenvalues()[i];
        if (std::abs(ev.imag()) > 1e-6 * (1.0 + std::abs(ev.real())))
            continue;
        // Newton polish; eigenvalues of the companion matrix are accurate
        // to roughly sqrt(machine precision) near multiple roots.
        double x = ev.real();
        double fx = poly_eval(c, x);
        for (int it = 0; it < 60 && fx != 0.0; ++it) {
            const double dfx = poly_deriv(c, x);
            if (dfx == 0.0) break;
            const double step = fx / dfx;
            const double next = x - step;
            const double fnext = poly_eval(c, next);
            if (std::abs(fnext) >= std::abs(fx)) break;
            x = next;
            fx = fnext;
        }
        if (std::abs(fx) > 1e-9 * max_coeff) continue;
        if (!found || x > best) best = x;
        found = true;
    }
    if (!found)
        throw numerical_error("quartic has no real root within tolerance");
    return best;
}

double chsh_efficiency_bound(double eta) {
    if (!(eta > 2.0 / 3.0 && eta <= 1.0))
        throw parameter_error(
            "chsh_efficiency_bound is defined for eta in (2/3, 1]; the bound "
            "degenerates to the local value 3/4 at eta = 2/3");
    const double s = EfficiencyParams(eta).detuning;
    const double s2 = s * s, s4 = s2 * s2, s6 = s4 * s2;
    const std::array<double, 5> f = {
        5.0 * s6 - 21.0 * s4 + 16.0 * s2 - 32.0,
        2.0 * s6 - s4 - 20.0 * s2 - 32.0,
        11.0 / 4.0 * s4 - 12.0 * s2 - 4.0,
        4.0 - s2,
        1.0,
    };
    const double r = largest_real_root(f);
    return (eta * eta * r + 2.0 * (1.0 - eta) * (1.0 - eta) + 4.0) / 8.0;
}

HardyFamilyPoint hardy_family_analytic(double eta, double z) {
    if (!(eta > 0.0 && eta <= 1.0))
        throw parameter_error("eta must lie in (0,1]");
    if (!(z >= 0.0 && z < 1.0)) throw parameter_error("z must lie in [0,1)");
    HardyFamilyPoint pt;
    const double denom = 2.0 - eta - eta * z;
    pt.gamma = eta * z * z * denom / (4.0 * (1.0 + z));
    pt.omega = eta * (1.0 - z) / denom;
    pt.nonlocal = pt.omega > 0.5;
    return pt;
}

double z_of_eta(double eta) {
    if (!(eta >= 2.0 / 3.0 && eta <= 1.0))
        throw parameter_error("z_of_eta is defined on [2/3, 1]");
    const double z0 = (std::sqrt(5.0) - 1.0) / 2.0;
    return 3.0 * z0 * (eta - 2.0 / 3.0);
}

std::vector<PowerCurvePoint> power_curves(const std::vector<double>& grid,
                                          CurveMode mode,
                                          const OptimizerOptions& options) {
    if (grid.empty()) throw parameter_error("power_curves needs a grid");
    for (double eta : grid)
        if (!(eta > 2.0 / 3.0 && eta <= 1.0))
            throw parameter_error(
                "power_curves grid must lie in (2/3, 1], got " +
                std::to_string(eta));

    const GameSpec hardy = hardy_game();
    std::vector<PowerCurvePoint> out;
    out.reserve(grid.size());
    std::vector<double> neighbour;
    for (double eta : grid) {
        PowerCurvePoint pt;
        pt.eta = eta;
        pt.w_chsh = statistical_power(1.0, chsh_efficiency_bound(eta), 0.75);
        if (mode == CurveMode::family) {
            const HardyFamilyPoint f = hardy_family_analytic(eta, z_of_eta(eta));
            pt.w_hardy = statistical_power(f.gamma, f.omega, 0.5);
        } else {
            OptimizerOptions opt = options;
            opt.warm_start = neighbour;
            const PowerResult r = maximize_power(hardy, 2, eta, opt);
            pt.w_hardy = r.power;
            neighbour = r.chart;
        }
        pt.ratio = pt.w_hardy / pt.w_chsh;
        out.push_back(pt);
    }
    return out;
}

ScalingFit scaling_fit(const std::function<double(double)>& w_of_eta,
                       double delta_min, double delta_max, int points) {
    if (!(delta_min > 0.0) || !(delta_max > delta_min) || points < 2)
        throw parameter_error("scaling_fit needs 0 < delta_min < delta_max "
                              "and at least two points");
    ScalingFit fit;
    fit.delta_min = delta_min;
    fit.delta_max = delta_max;

    const std::size_t npts = std::size_t(points);
    std::vector<double> xs(npts), ys(npts);
    const double lmin = std::log(delta_min), lmax = std::log(delta_max);
    for (int i = 0; i < points; ++i) {
        const double ld = lmin + (lmax - lmin) * i / (points - 1);
        const double w = w_of_eta(2.0 / 3.0 + std::exp(ld));
        if (!(w > 0.0) || !std::isfinite(w))
            throw numerical_error(
                "scaling_fit needs strictly positive curve values; got " +
                std::to_string(w) + " at delta = " +
                std::to_string(std::exp(ld)));
        xs[std::size_t(i)] = ld;
        ys[std::size_t(i)] = std::log(w);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < points; ++i) {
        sx += xs[std::size_t(i)];
        sy += ys[std::size_t(i)];
        sxx += xs[std::size_t(i)] * xs[std::size_t(i)];
        sxy += xs[std::size_t(i)] * ys[std::size_t(i)];
    }
    fit.exponent = (points * sxy - sx * sy) / (points * sxx - sx * sx);
    const double intercept = (sy - fit.exponent * sx) / points;
    fit.coefficient = std::exp(intercept);
    for (int i = 0; i < points; ++i)
        fit.residual = std::max(
            fit.residual, std::abs(ys[std::size_t(i)] - fit.exponent *
                                   xs[std::size_t(i)] - intercept));
    return fit;
}

} // namespace psg

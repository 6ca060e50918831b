#pragma once

#include <array>
#include <functional>
#include <vector>

#include "psg/quantum.hpp"
#include "psg/scenario.hpp"

namespace psg {

/// Detection efficiency and the detuning s = 2(1-eta)/eta entering the
/// CHSH efficiency quartic. The detuning lies in [0,1) exactly when
/// eta > 2/3, the regime where nonlocality survives the losses.
struct EfficiencyParams {
    explicit EfficiencyParams(double eta);

    double eta = 1.0;
    double detuning = 0.0;
};

/// The lossy-detector map on 2-outcome behaviours: each party's outcome is
/// detected with probability eta, and lost rounds are binned into outcome 1:
///
///   E(00) = eta^2 P(00)
///   E(01) = eta P(01) + eta(1-eta) P(00)      (and symmetrically for (10))
///   E(11) = the remainder
///
/// Linear in P, normalization-preserving, and E_a . E_b = E_{a*b}. Throws
/// shape_error unless both parties have exactly 2 outcomes.
Behaviour apply_efficiency(const Behaviour& p, double eta);

/// Largest real root of c4 x^4 + c3 x^3 + c2 x^2 + c1 x + c0, coefficients
/// ordered {c0, c1, c2, c3, c4}, via companion-matrix eigenvalues plus a
/// Newton polish. Throws parameter_error when c4 = 0 and numerical_error
/// when no real root exists. The residual satisfies
/// |f(root)| <= 1e-9 * max|coefficient|.
double largest_real_root(const std::array<double, 5>& coeffs);

/// The exact maximum of omega_CHSH over quantum behaviours seen through
/// E_eta:   ( eta^2 r(eta) + 2(1-eta)^2 + 4 ) / 8,
/// where r is the largest real root of
///
///   f_s(x) = x^4 + (4 - s^2) x^3 + (11/4 s^4 - 12 s^2 - 4) x^2
///          + (2 s^6 - s^4 - 20 s^2 - 32) x + 5 s^6 - 21 s^4 + 16 s^2 - 32
///
/// at s = 2(1-eta)/eta. Defined for eta in (2/3, 1]; at the excluded
/// endpoint eta = 2/3 the bound degenerates to the local value 3/4, so
/// lower eta is rejected with parameter_error rather than clamped.
double chsh_efficiency_bound(double eta);

struct HardyFamilyPoint {
    double gamma = 0.0;
    double omega = 0.0;
    bool nonlocal = false;  ///< omega > 1/2, equivalently z < 3 - 2/eta
};

/// Closed forms for the Hardy family seen through the efficiency map:
///
///   gamma = eta z^2 (2 - eta - eta z) / (4 (1 + z))
///   omega = eta (1 - z) / (2 - eta - eta z)
///
/// for eta in (0,1], z in [0,1).
HardyFamilyPoint hardy_family_analytic(double eta, double z);

/// The family parameter kept nonlocal as losses grow: the linear
/// interpolation z(eta) = 3 z0 (eta - 2/3) with z0 = (sqrt(5)-1)/2, which
/// satisfies z(eta) < 3 - 2/eta on (2/3, 1].
double z_of_eta(double eta);

enum class CurveMode {
    family,     ///< w_H from the analytic family at z_of_eta
    optimized,  ///< w_H from maximize_power over d=2 strategies under E_eta
};

struct PowerCurvePoint {
    double eta = 0.0;
    double w_hardy = 0.0;
    double w_chsh = 0.0;
    double ratio = 0.0;  ///< w_hardy / w_chsh
};

/// Hardy and CHSH statistical powers along an efficiency grid in (2/3, 1].
/// w_C is exact via chsh_efficiency_bound; w_H per the mode. In optimized
/// mode each point warm-starts from its neighbour's optimum in addition to
/// the configured restarts. Throws parameter_error on an empty or
/// out-of-range grid.
std::vector<PowerCurvePoint> power_curves(const std::vector<double>& grid,
                                          CurveMode mode,
                                          const OptimizerOptions& options = {});

struct ScalingFit {
    double exponent = 0.0;
    double coefficient = 0.0;
    double delta_min = 0.0;
    double delta_max = 0.0;
    double residual = 0.0;  ///< max |log w - fit| over the window
};

/// Least-squares fit of w(2/3 + delta) ~ coefficient * delta^exponent on a
/// log-spaced window, the numeric stand-in for the Taylor coefficients at
/// the critical efficiency. Throws numerical_error when the curve is not
/// strictly positive on the window.
ScalingFit scaling_fit(const std::function<double(double)>& w_of_eta,
                       double delta_min = 1e-3, double delta_max = 5e-2,
                       int points = 25);

}  // namespace psg

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "psg/scenario.hpp"

namespace psg {

/// A bipartite pure-state strategy: a real unit vector on C^d x C^d (the
/// entry for |ij> sits at index i*dim + j) and, per input, a real orthonormal
/// measurement basis whose row a is the outcome-a vector. Real coefficients
/// suffice for every construction used here; complex charts would only be
/// needed for scenarios beyond this toolkit's scope.
struct QuantumStrategy {
    int dim = 2;
    Eigen::VectorXd state;
    std::vector<Eigen::MatrixXd> alice_bases;
    std::vector<Eigen::MatrixXd> bob_bases;
};

/// Throws validation_error unless the state is normalized within 1e-12 and
/// every basis is orthonormal within 1e-10.
void validate_strategy(const QuantumStrategy& strategy);

/// The behaviour P(ab|xy) = <A_x^a B_y^b|psi>^2 of a valid strategy.
Behaviour behaviour_from_strategy(const QuantumStrategy& strategy);

/// The two-qubit family exhibiting Hardy's paradox, parameterized by
/// z = alpha^2 in [0,1):
///
///   |psi> = N [ alpha*beta (|01> + |10>) + beta^2 |11> ],  beta = sqrt(1-z)
///
/// with first-input basis {beta|0> - alpha|1>, alpha|0> + beta|1>} and the
/// computational basis on the second input, identically for both parties.
/// At z = z0 = (sqrt(5)-1)/2 it wins the Hardy game with certainty.
QuantumStrategy hardy_measurement_family(double z);

/// Length of the real chart for dimension d with ma + mb bases: d^2 - 1
/// hyperspherical state angles plus d(d-1)/2 rotation angles per basis.
int chart_size(int d, int ma, int mb);

/// Smooth map from chart parameters onto strategies: the state comes from
/// hyperspherical angles, each basis from a product of Givens rotations.
/// The zero vector gives the computational state and bases. Sign flips of
/// basis rows are unobservable, so the chart reaches every measurement
/// statistic real strategies can produce. Throws shape_error when the
/// parameter count does not match chart_size(d, ma, mb).
QuantumStrategy parameterize(const std::vector<double>& params, int d, int ma,
                             int mb);

struct OptimizerOptions {
    int restarts = 20;      ///< random restarts beyond the origin start
    int max_evals = 50000;  ///< objective-evaluation budget per restart
    double tolerance = 1e-10;  ///< simplex value spread at convergence
    std::uint64_t seed = 1;    ///< restart RNG seed; same seed, same result
    /// Optional extra start point, tried before the origin and the random
    /// restarts; lets grid scans continue from a neighbouring optimum.
    std::vector<double> warm_start{};
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
};

/// Derivative-free simplex minimization with the standard coefficients
/// (reflection 1, expansion 2, contraction 0.5, shrink 0.5), stopping when
/// the simplex value spread drops below options.tolerance or the evaluation
/// budget runs out. Deterministic. Throws numerical_error if the objective
/// turns non-finite.
NelderMeadResult nelder_mead(
    const std::function<double(const std::vector<double>&)>& objective,
    const std::vector<double>& x0, const OptimizerOptions& options = {});

struct PowerResult {
    QuantumStrategy strategy;
    double power = 0.0;
    double omega = 0.0;
    double gamma = 0.0;
    double omega_local = 0.0;
    std::vector<double> chart;  ///< chart coordinates of the strategy
};

/// Best statistical power gamma * D(omega || omega_l) found over
/// dimension-d strategies for the game, a lower bound on the true optimum.
/// When eta is given, the detector-efficiency map is applied to the
/// behaviour before scoring. Restarts whose omega stays below the local
/// bound score 0.
PowerResult maximize_power(const GameSpec& game, int d,
                           std::optional<double> eta = std::nullopt,
                           const OptimizerOptions& options = {});

struct HardyProbabilityResult {
    QuantumStrategy strategy;
    double p_hardy = 0.0;        ///< P(a<b | s-1, s-1)
    double power = 0.0;          ///< p_hardy / (2s)
    double condition_sum = 0.0;  ///< residual mass on the zero-conditions
};

/// Best Hardy probability found for the generalized paradox with s inputs
/// and k outputs per party, over two k-dimensional qudits with projective
/// measurements. The zero-conditions are enforced by a smooth penalty and a
/// feasibility polish; the reported power p/(2s) is a lower bound whenever
/// condition_sum is negligible.
HardyProbabilityResult maximize_hardy_probability(
    int s, int k, const OptimizerOptions& options = {});

}  // namespace psg

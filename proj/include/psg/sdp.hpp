#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "psg/errors.hpp"

namespace psg::sdp {

/// One entry of a symmetric constraint/objective matrix. Entries live in the
/// upper triangle (row <= col); an off-diagonal entry stands for the value at
/// both (row,col) and (col,row), so it counts twice in inner products.
struct Entry {
    int block = 0;
    int row = 0;
    int col = 0;
    double value = 0.0;
};

/// Linear equality <A, X> = rhs over the block-diagonal PSD variable X.
struct Constraint {
    std::vector<Entry> entries;
    double rhs = 0.0;
};

/// Equality-constrained SDP over X = diag(X_1, ..., X_k), X_j PSD:
///   optimize <C, X>  subject to  <A_i, X> = b_i.
/// Nonnegative scalar slacks are modelled as 1x1 blocks.
struct Problem {
    std::vector<int> block_dims;
    std::vector<Entry> objective;
    std::vector<Constraint> constraints;
    bool maximize = false;
};

enum class Status { optimal, infeasible, unbounded, numerical_limit };

std::string to_string(Status status);

struct SolveOptions {
    int max_iterations = 200;
    /// Relative primal/dual feasibility target.
    double feas_tol = 1e-9;
    /// Complementarity gap target, relative to 1 + |objective|.
    double gap_tol = 1e-9;
    /// Objective magnitude beyond which a feasible-looking ray is reported
    /// as an infeasibility/unboundedness certificate.
    double divergence_threshold = 1e8;
    /// Per-iteration residual trace on stderr (debug aid).
    bool trace = false;
};

struct Solution {
    Status status = Status::numerical_limit;
    /// Optimal value in the sense of Problem::maximize.
    double objective = 0.0;
    std::vector<Eigen::MatrixXd> x_blocks;
    std::vector<Eigen::MatrixXd> z_blocks;
    std::vector<double> y;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    /// Complementarity <X, Z> (internal minimization sense).
    double duality_gap = 0.0;
};

/// Interior-point solve. Deterministic: a fixed starting point and no
/// randomness, so identical problems give identical outputs.
/// Throws shape_error/validation_error for malformed problems; numerical
/// trouble is reported through Status, not exceptions.
Solution solve(const Problem& problem, const SolveOptions& options = {});

/// <A, X> where entries describe a symmetric matrix (off-diagonal twice).
double inner(const std::vector<Entry>& entries,
             const std::vector<Eigen::MatrixXd>& x);

/// Dense symmetric blocks from sparse entries.
std::vector<Eigen::MatrixXd> to_dense(const std::vector<Entry>& entries,
                                      const std::vector<int>& dims);

/// Sparse text dump for cross-checking against external solvers.
/// Header: comment, m, nblocks, dims, b row; then one line per entry
/// "matno block row col value" (1-based, matno 0 is the objective).
std::string dump_sdpa(const Problem& problem);

} // namespace psg::sdp

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "psg/scenario.hpp"
#include "psg/sdp.hpp"

namespace psg::npa {

/// Relaxation level: 1 uses identity plus single projectors, 1+AB adds
/// Alice*Bob products of the listed projectors.
enum class Level { one, one_ab };

std::string to_string(Level level);

/// 1+AB for two-outcome scenarios (tight for CHSH-type games in practice),
/// level 1 otherwise to keep the moment matrix small.
Level default_level(const Scenario& scenario);

/// Product of projectors per party; factors are (input, outcome) with
/// outcome < last (minimal-outcome bookkeeping). Empty factors = identity.
struct Monomial {
    std::vector<std::pair<int, int>> alice;
    std::vector<std::pair<int, int>> bob;
};

/// Symbolic moment matrix of the relaxation: rows/columns are monomials,
/// cells reduce under the projector algebra (idempotence, same-input
/// orthogonality) to either zero or a shared moment variable.
class MomentStructure {
public:
    MomentStructure(Scenario scenario, Level level);

    const Scenario& scenario() const { return scenario_; }
    Level level() const { return level_; }
    int size() const { return int(monomials_.size()); }
    const std::vector<Monomial>& monomials() const { return monomials_; }

    int variable_count() const { return int(representative_.size()); }

    /// Variable shared by cell (i,j) with i <= j, or -1 if the cell is
    /// identically zero by orthogonality.
    int cell_variable(int i, int j) const;

    /// First cell (row-major, upper triangle) carrying this variable.
    std::pair<int, int> representative(int var) const { return representative_.at(var); }

    int identity_variable() const { return identity_var_; }

    /// P'(ab|xy) as a linear combination of moment variables; unlisted
    /// (last) outcomes are filled in by no-signalling completion.
    std::vector<std::pair<int, double>> event_moments(int x, int y, int a, int b) const;

private:
    int moment_of(int x, int a) const;
    int moment_of_bob(int y, int b) const;
    int moment_of_ab(int x, int a, int y, int b) const;

    Scenario scenario_;
    Level level_;
    std::vector<Monomial> monomials_;
    std::vector<int> cells_;                          // size n*n, upper used
    std::vector<std::pair<int, int>> representative_;
    std::vector<int> alice_vars_, bob_vars_, ab_vars_;
    int identity_var_ = -1;
};

struct TsirelsonResult {
    double upper_bound = 0.0;
    /// Recovered normalization theta = <1> of the unnormalized relaxation
    /// point (1/gamma at the witness).
    double theta = 0.0;
    /// False when theta ran into the cap, i.e. the supremum is approached
    /// only as the post-selection probability tends to zero.
    bool attained = true;
    Level level = Level::one;
    int sdp_solves = 0;
    /// Last SDP solution, kept as the certificate handle.
    sdp::Solution certificate;
};

/// Upper bound on the post-selected quantum value via the fractional
/// (Charnes-Cooper) transform: maximize <V_mu, P'> over the relaxation cone
/// with <S_mu, P'> = 1 and theta <= theta_cap. When the cap leaves the
/// solver badly scaled it is reduced geometrically until a solve succeeds;
/// a solution pinned at the cap in use is reported with attained = false.
/// Throws degenerate_game_error when the relaxation admits no point with
/// positive post-selection, numerical_error on solver failure.
TsirelsonResult tsirelson_conic(const GameSpec& game,
                                std::optional<Level> level = std::nullopt,
                                double theta_cap = 1e8);

/// Same bound by binary search on alpha in [local bound, 1], deciding
/// feasibility of <V_mu - alpha S_mu, P> > 0 by the sign of the optimized
/// slack (margin 1e-9). Cross-check for tsirelson_conic.
TsirelsonResult tsirelson_bisection(const GameSpec& game,
                                    std::optional<Level> level = std::nullopt,
                                    double tol = 1e-6);

} // namespace psg::npa

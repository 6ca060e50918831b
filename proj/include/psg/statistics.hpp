#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "psg/scenario.hpp"

namespace psg {

/// Binary relative entropy D(p || q) in bits, with the convention
/// 0*log(0) = 0. Returns +infinity when q is 0 or 1 and p differs from it.
double kl_divergence(double p, double q);

/// Per-round statistical power w = gamma * D(omega || omega_l) of a behaviour
/// with post-selection rate gamma and conditional winning probability omega,
/// against the local bound omega_l. If omega < omega_l the test cannot
/// certify nonlocality; the power is reported as 0 and *below_local (when
/// given) is set.
double statistical_power(double gamma, double omega, double omega_l,
                         bool* below_local = nullptr);

/// log2 of the Bayes factor for k wins out of t post-selected rounds, testing
/// the local hypothesis omega_l against the alternative omega_alt:
///
///   log2 K = k*log2(omega_l/omega_alt) + (t-k)*log2((1-omega_l)/(1-omega_alt))
///
/// k and t may be fractional (weighted counts). Terms with a zero count are
/// dropped, so omega_alt in {0,1} yields an infinite/zero marker only when a
/// mismatching count is present.
double log2_bayes_factor(double k, double t, double omega_l, double omega_alt);

/// The Bayes factor itself, exp2 of the above. Small values are evidence
/// against locality.
double bayes_factor(double k, double t, double omega_l, double omega_alt);

/// Expected asymptotic evidence after n rounds: E[-log2 K] = n * w where
/// w = statistical_power(gamma, omega, omega_l).
double expected_bayes_exponent(double n, double gamma, double omega,
                               double omega_l);

/// Chernoff upper bound on the p-value of observing k or more wins in t
/// post-selected rounds under the local hypothesis:
///
///   p <= exp2(-t * D(k/t || omega_l))
///
/// Requires k/t >= omega_l (the bound only holds for the upper tail); throws
/// parameter_error otherwise.
double chernoff_p_bound(double k, double t, double omega_l);

/// Raw experimental counts n(a,b,x,y) for a scenario, stored in the flat
/// event order of Behaviour. Counts are nonnegative and total at least 1.
class CountsTable {
  public:
    CountsTable(Scenario scenario, std::vector<std::int64_t> counts);

    const Scenario& scenario() const { return scenario_; }
    std::int64_t at(int x, int y, int a, int b) const {
        return counts_[scenario_.flat_index(x, y, a, b)];
    }
    const std::vector<std::int64_t>& flat() const { return counts_; }
    std::int64_t total() const { return total_; }

  private:
    Scenario scenario_;
    std::vector<std::int64_t> counts_;
    std::int64_t total_ = 0;
};

/// Parse counts from CSV with header "x,y,a,b,count". Events may appear in
/// any order; missing events count 0; duplicate events accumulate. Malformed
/// rows raise io_error with the offending line number.
CountsTable counts_from_csv(std::istream& in, const Scenario& scenario);
CountsTable load_counts_csv(const std::string& path, const Scenario& scenario);

/// Parse counts for a (2,2,2,2) scenario from the block-matrix layout: a 4x4
/// whitespace-separated matrix whose entry in row 2x+a, column 2y+b is
/// n(a,b,x,y). Lines starting with '#' are ignored.
CountsTable counts_from_matrix(std::istream& in);
CountsTable load_counts_matrix(const std::string& path);

/// Hypothesis-test summary for a game run on experimental counts.
struct TestReport {
    double n = 0;                   ///< total rounds
    double t = 0;                   ///< post-selected rounds, sum S*n
    double k = 0;                   ///< victories, sum S*V*n
    double omega_hat = 0;           ///< empirical winning probability k/t
    double omega_local = 0;         ///< local bound the test is run against
    double omega_alt = 0;           ///< alternative hypothesis used
    double log2_bayes_factor = 0;
    double bayes_factor = 0;
    std::optional<double> chernoff_p_bound;  ///< absent when omega_hat < omega_local
    double per_round_exponent = 0;  ///< -log2(K)/n
    bool below_local = false;       ///< omega_hat < omega_local
};

/// Run the hypothesis test of a game against counts. The alternative
/// hypothesis omega_alt defaults to the empirical frequency k/t; the local
/// bound defaults to local_bound(game) and can be overridden when already
/// known. Throws degenerate_game_error when the counts contain no
/// post-selected rounds (t = 0). When omega_hat < omega_local the report is
/// flagged and the Chernoff bound is omitted; the Bayes factor is still
/// meaningful.
TestReport analyze_counts(const GameSpec& game, const CountsTable& counts,
                          std::optional<double> omega_alt = std::nullopt,
                          std::optional<double> omega_local = std::nullopt);

}  // namespace psg

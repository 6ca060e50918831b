#include "psg/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "psg/errors.hpp"
#include "psg/local_bound.hpp"

namespace psg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Validates a probability, forgiving roundoff-level overshoot: computed
// gammas and omegas routinely land a few ulps outside [0,1].
double check_prob(double v, const char* name) {
    if (!(v >= -1e-9 && v <= 1.0 + 1e-9))
        throw parameter_error(std::string(name) + " must lie in [0,1], got " +
                              std::to_string(v));
    return std::clamp(v, 0.0, 1.0);
}

} // namespace

double kl_divergence(double p, double q) {
    p = check_prob(p, "p");
    q = check_prob(q, "q");
    if (p == q) return 0.0;
    if (q == 0.0 || q == 1.0) return kInf;
    // log1p keeps the result accurate when p is close to q, where the two
    // naive p*log2(p/q) terms cancel almost completely.
    double d = 0.0;
    if (p > 0.0) d += p * std::log1p((p - q) / q);
    if (p < 1.0) d += (1.0 - p) * std::log1p((q - p) / (1.0 - q));
    return d / std::log(2.0);
}

double statistical_power(double gamma, double omega, double omega_l,
                         bool* below_local) {
    gamma = check_prob(gamma, "gamma");
    omega = check_prob(omega, "omega");
    if (!(omega_l > 0.0 && omega_l < 1.0))
        throw parameter_error("omega_l must lie in (0,1), got " +
                              std::to_string(omega_l));
    if (below_local) *below_local = omega < omega_l;
    if (omega < omega_l) return 0.0;
    return gamma * kl_divergence(omega, omega_l);
}

double log2_bayes_factor(double k, double t, double omega_l,
                         double omega_alt) {
    if (!(t >= 0.0) || !(k >= 0.0) || k > t)
        throw parameter_error("bayes_factor requires 0 <= k <= t");
    omega_l = check_prob(omega_l, "omega_l");
    omega_alt = check_prob(omega_alt, "omega_alt");
    // Terms with a zero count are dropped, so a degenerate alternative only
    // produces an infinite marker when the data actually contradicts it.
    double e = 0.0;
    if (k > 0.0) e += k * (std::log2(omega_l) - std::log2(omega_alt));
    if (t - k > 0.0)
        e += (t - k) * (std::log2(1.0 - omega_l) - std::log2(1.0 - omega_alt));
    return e;
}

double bayes_factor(double k, double t, double omega_l, double omega_alt) {
    return std::exp2(log2_bayes_factor(k, t, omega_l, omega_alt));
}

double expected_bayes_exponent(double n, double gamma, double omega,
                               double omega_l) {
    if (!(n >= 0.0)) throw parameter_error("n must be nonnegative");
    return n * statistical_power(gamma, omega, omega_l);
}

double chernoff_p_bound(double k, double t, double omega_l) {
    if (!(t > 0.0) || !(k >= 0.0) || k > t)
        throw parameter_error("chernoff_p_bound requires 0 <= k <= t, t > 0");
    if (!(omega_l > 0.0 && omega_l < 1.0))
        throw parameter_error("omega_l must lie in (0,1)");
    const double freq = k / t;
    if (freq < omega_l)
        throw parameter_error(
            "chernoff_p_bound assumes k/t >= omega_l (upper-tail bound); got "
            "k/t = " + std::to_string(freq) + " < " + std::to_string(omega_l));
    return std::exp2(-t * kl_divergence(freq, omega_l));
}

CountsTable::CountsTable(Scenario scenario, std::vector<std::int64_t> counts)
    : scenario_(scenario), counts_(std::move(counts)) {
    if (int(counts_.size()) != scenario_.size())
        throw shape_error("counts table has " + std::to_string(counts_.size()) +
                          " entries, scenario needs " +
                          std::to_string(scenario_.size()));
    for (std::int64_t c : counts_) {
        if (c < 0) throw validation_error("counts must be nonnegative");
        total_ += c;
    }
    if (total_ < 1) throw validation_error("counts table is empty");
}

namespace {

std::int64_t parse_count_field(const std::string& field, int line_no) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(field, &pos);
        if (pos != field.size()) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw io_error("counts line " + std::to_string(line_no) +
                       ": bad field '" + field + "'");
    }
}

} // namespace

CountsTable counts_from_csv(std::istream& in, const Scenario& scenario) {
    std::vector<std::int64_t> counts(scenario.size(), 0);
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream row(line);
        std::string field;
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (!header_seen) {
            header_seen = true;
            if (!fields.empty() && fields[0] == "x") continue; // header row
        }
        if (fields.size() != 5)
            throw io_error("counts line " + std::to_string(line_no) +
                           ": expected 5 fields x,y,a,b,count, got " +
                           std::to_string(fields.size()));
        const int x = int(parse_count_field(fields[0], line_no));
        const int y = int(parse_count_field(fields[1], line_no));
        const int a = int(parse_count_field(fields[2], line_no));
        const int b = int(parse_count_field(fields[3], line_no));
        if (x < 0 || x >= scenario.ma || y < 0 || y >= scenario.mb ||
            a < 0 || a >= scenario.oa || b < 0 || b >= scenario.ob)
            throw io_error("counts line " + std::to_string(line_no) +
                           ": event (" + fields[0] + "," + fields[1] + "," +
                           fields[2] + "," + fields[3] +
                           ") outside the scenario");
        counts[scenario.flat_index(x, y, a, b)] +=
            parse_count_field(fields[4], line_no);
    }
    return CountsTable(scenario, std::move(counts));
}

CountsTable load_counts_csv(const std::string& path, const Scenario& scenario) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open counts file " + path);
    return counts_from_csv(in, scenario);
}

CountsTable counts_from_matrix(std::istream& in) {
    const Scenario scenario{2, 2, 2, 2};
    std::vector<std::int64_t> values;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::stringstream row(line);
        std::string field;
        while (row >> field) {
            if (field[0] == '#') break; // rest of line is a comment
            values.push_back(parse_count_field(field, line_no));
        }
    }
    if (values.size() != 16)
        throw io_error("count matrix needs 16 entries, got " +
                       std::to_string(values.size()));
    // Entry in row 2x+a, column 2y+b is n(a,b,x,y).
    std::vector<std::int64_t> counts(scenario.size(), 0);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            counts[scenario.flat_index(r / 2, c / 2, r % 2, c % 2)] =
                values[std::size_t(4 * r + c)];
    return CountsTable(scenario, std::move(counts));
}

CountsTable load_counts_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open counts file " + path);
    return counts_from_matrix(in);
}

TestReport analyze_counts(const GameSpec& game, const CountsTable& counts,
                          std::optional<double> omega_alt,
                          std::optional<double> omega_local) {
    if (game.scenario() != counts.scenario())
        throw shape_error("counts scenario does not match the game");
    const Scenario& sc = game.scenario();

    TestReport rep;
    rep.n = double(counts.total());
    for (int x = 0; x < sc.ma; ++x)
        for (int y = 0; y < sc.mb; ++y)
            for (int a = 0; a < sc.oa; ++a)
                for (int b = 0; b < sc.ob; ++b) {
                    const double n_e = double(counts.at(x, y, a, b));
                    const double s_e = game.s(x, y, a, b);
                    rep.t += s_e * n_e;
                    rep.k += s_e * game.v(x, y, a, b) * n_e;
                }
    if (rep.t <= 0.0)
        throw degenerate_game_error(
            "counts contain no post-selected rounds for this game");

    rep.omega_hat = rep.k / rep.t;
    rep.omega_local =
        omega_local ? *omega_local : local_bound(game).value;
    rep.omega_alt = omega_alt ? *omega_alt : rep.omega_hat;
    rep.below_local = rep.omega_hat < rep.omega_local;

    rep.log2_bayes_factor =
        log2_bayes_factor(rep.k, rep.t, rep.omega_local, rep.omega_alt);
    rep.bayes_factor = std::exp2(rep.log2_bayes_factor);
    rep.per_round_exponent = -rep.log2_bayes_factor / rep.n;
    if (!rep.below_local)
        rep.chernoff_p_bound =
            psg::chernoff_p_bound(rep.k, rep.t, rep.omega_local);
    return rep;
}

} // namespace psg

#pragma once

#include <cstdint>
#include <vector>

#include "psg/scenario.hpp"

namespace psg {

/// A local deterministic strategy: fixed output per input for each party.
struct DeterministicStrategy {
    std::vector<int> alice; // alice[x] = a
    std::vector<int> bob;   // bob[y] = b

    bool operator==(const DeterministicStrategy&) const = default;
};

/// The 0/1 behaviour induced by a deterministic strategy.
Behaviour to_behaviour(const DeterministicStrategy& e, const Scenario& scenario);

/// Streams all oa^ma * ob^mb deterministic strategies in lexicographic
/// order of the concatenated (alice, bob) output vectors.
class VertexEnumerator {
public:
    explicit VertexEnumerator(const Scenario& scenario);

    /// Fills `out` with the next strategy; false when exhausted.
    bool next(DeterministicStrategy& out);

    void reset();

private:
    Scenario scenario_;
    DeterministicStrategy current_;
    bool done_ = false;
    bool started_ = false;
};

/// oa^ma * ob^mb, saturated at uint64 max on overflow.
std::uint64_t vertex_pair_count(const Scenario& scenario);

struct LocalBoundResult {
    double value = 0.0;
    DeterministicStrategy witness;
    double gamma_at_witness = 0.0;
    bool used_dinkelbach = false;
};

struct LocalBoundOptions {
    std::uint64_t naive_cap = 10'000'000; // max vertex pairs for enumeration
};

/// Exact maximum of omega over deterministic strategies with gamma > 0,
/// by full enumeration. Ties break to the lexicographically smallest
/// strategy. Throws degenerate_game_error if no vertex keeps any round,
/// capacity_error above options.naive_cap.
LocalBoundResult local_bound_naive(const GameSpec& game, const LocalBoundOptions& options = {});

/// Same maximum via Dinkelbach ratio iteration over Bob's side: only
/// Alice's oa^ma strategies are enumerated; for fixed Alice and ratio
/// target alpha the best Bob reply separates per input y.
LocalBoundResult local_bound_dinkelbach(const GameSpec& game);

/// Dispatch: enumeration below the cap, Dinkelbach above.
LocalBoundResult local_bound(const GameSpec& game, const LocalBoundOptions& options = {});

} // namespace psg

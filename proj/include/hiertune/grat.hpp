#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hiertune/domain.hpp"
#include "hiertune/hierarchy.hpp"
#include "hiertune/objectives.hpp"
#include "hiertune/rng.hpp"

namespace hiertune {

/// A terminal agent's report: the best point it found while varying `param`
/// and the response there.
struct SubResult {
    std::string param;
    Assignment best_assignment;
    double best_response = 0.0;

    friend bool operator==(const SubResult&, const SubResult&) = default;
};

using SubResultSet = std::vector<SubResult>;

/// Start point for every objective parameter's terminal in the next iteration.
struct Feedback {
    std::map<std::string, Assignment> per_param;

    friend bool operator==(const Feedback&, const Feedback&) = default;
};

/// Set union of the children's results. Identical duplicates collapse;
/// conflicting payloads for one parameter throw DuplicateParamError.
SubResultSet aggregate_results(std::span<const SubResultSet> parts);

/// Maps each objective parameter to the best assignment reported for any
/// *other* parameter (lowest declaration index on ties). With a single
/// objective parameter the terminal is fed its own result.
Feedback prepare_feedback(const SearchSpace& space, const SubResultSet& results);

/// Bounds [lower, upper) of slot s (1-based) of a real spec split into eta
/// slots, in value space. Log10 specs are split in log-space.
std::pair<double, double> slot_bounds(const HyperParameterSpec& spec, int eta, int slot);

/// Index (1-based) of the slot containing a real value.
int slot_of(const HyperParameterSpec& spec, int eta, double value);

/// Per-call sampling session for one parameter. Nominal labels are drawn
/// without replacement until exhausted, then with replacement.
class SlotSampler {
public:
    SlotSampler(const HyperParameterSpec& spec, int eta);

    /// Uniform draw inside slot s (reals) or a fresh label (nominals).
    /// Throws InvalidSlotError when s is outside 1..eta.
    Value draw(int slot, Rng& rng);

private:
    const HyperParameterSpec* spec_;
    int eta_;
    std::vector<std::size_t> remaining_;
};

/// One-shot draw with a fresh session.
Value uniform_rand_slot(const HyperParameterSpec& spec, int eta, int slot, Rng& rng);

/// Keeps `current` with probability omega / (omega + eta - 1); otherwise
/// draws uniformly inside one of the other slots. For nominals the slot
/// count is min(eta, |labels|) and the alternative is a uniformly chosen
/// different label.
Value weighted_rand(const HyperParameterSpec& spec, const Value& current, int omega, int eta, Rng& rng);

/// The eta + 1 candidate points of one GRAT step: index 0 is the feedback
/// point, index s varies the agent's primary parameter inside slot s and
/// perturbs the complement parameters with weighted_rand.
std::vector<Assignment> generate_candidates(const SearchSpace& space, const HierarchyNode& agent,
                                            const Assignment& feedback_point, int eta, int omega, Rng& rng);

/// One terminal step: generates candidates, evaluates them through the
/// ledger, returns the argmin (lowest index on ties).
SubResult run_tuning_algorithm(const SearchSpace& space, const HierarchyNode& agent,
                               const Assignment& feedback_point, int eta, int omega, const Objective& objective,
                               EvaluationLedger& ledger, Rng& rng);

struct OmegaPolicy {
    enum class Kind { Fixed, DecayOnStall };
    Kind kind = Kind::Fixed;
    int patience = 0;

    static OmegaPolicy fixed() { return {}; }
    static OmegaPolicy decay_on_stall(int patience) { return {Kind::DecayOnStall, patience}; }
    /// "fixed" or "decay:<p>".
    static OmegaPolicy parse(std::string_view text);
};

/// Root-side omega schedule over the per-iteration incumbent history.
int adapt_omega(std::span<const double> history, int omega, const OmegaPolicy& policy);

}  // namespace hiertune

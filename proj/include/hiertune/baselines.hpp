#pragma once

#include <cstdint>
#include <string_view>

#include "hiertune/domain.hpp"
#include "hiertune/objectives.hpp"
#include "hiertune/rng.hpp"
#include "hiertune/runtime.hpp"

namespace hiertune {

/// How a baseline's evaluation budget is matched to a GRAT run.
enum class BudgetMode {
    Formula,   ///< c * eta * iterations
    Measured,  ///< the fresh evaluations the GRAT run actually used
};

BudgetMode parse_budget_mode(std::string_view text);
std::string_view to_string(BudgetMode mode);

std::int64_t formula_budget(int c, int eta, int iterations);

// Both baselines consume exactly `budget` fresh ledger evaluations: a draw
// whose key is already cached is replaced. The report's trace has one entry
// per sample, so `last_best_iteration` is the 1-based index of the best sample.

/// Independent uniform draws (log-uniform for log10 reals, uniform labels).
TuningReport random_search(const SearchSpace& space, const Objective& objective, EvaluationLedger& ledger,
                           std::int64_t budget, Rng& rng);

/// Latin hypercube design: every real dimension hits each of `budget` equal
/// strata (log-space for log10) exactly once; nominals are drawn uniformly.
TuningReport latin_hypercube(const SearchSpace& space, const Objective& objective, EvaluationLedger& ledger,
                             std::int64_t budget, Rng& rng);

}  // namespace hiertune

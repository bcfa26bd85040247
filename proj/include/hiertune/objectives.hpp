#pragma once

#include <cstdint>
#include <functional>
#include <future>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>

#include "hiertune/domain.hpp"

namespace hiertune {

/// A response function over a search space. Lower is better. `evaluate` must
/// be deterministic per assignment and safe to call from several threads.
struct Objective {
    std::string name;
    SearchSpace space;
    std::function<double(const Assignment&)> evaluate;
};

/// Counts fresh objective calls and memoizes results by canonical key.
///
/// Concurrent calls for the same key compute it once; later callers wait for
/// the first. A failed evaluation is rolled back (not cached, not counted).
/// With caching disabled every call is fresh and counted.
class EvaluationLedger {
public:
    explicit EvaluationLedger(std::optional<std::int64_t> cap = std::nullopt, bool caching = true)
        : cap_(cap), caching_(caching) {}

    EvaluationLedger(const EvaluationLedger&) = delete;
    EvaluationLedger& operator=(const EvaluationLedger&) = delete;

    /// Throws DomainError for an assignment invalid in objective.space,
    /// BudgetExhaustedError when a fresh call would exceed the cap, and
    /// EvaluationError when the objective fails.
    double evaluate(const Objective& objective, const Assignment& assignment);

    std::int64_t count() const;
    bool contains(const std::string& key) const;
    std::optional<std::int64_t> cap() const noexcept { return cap_; }
    bool caching() const noexcept { return caching_; }

private:
    std::optional<std::int64_t> cap_;
    bool caching_;
    mutable std::mutex mutex_;
    std::int64_t count_ = 0;
    std::unordered_map<std::string, std::shared_future<double>> cache_;
};

/// Hartmann family, d in {3, 4, 6}, x in [0,1]^d. The 4-d variant is the
/// rescaled truncation (1.1 - sum) / 0.839 of the 6-d constants.
double hartmann(int d, std::span<const double> x);

/// Sum of squares.
double sphere(std::span<const double> x);

/// d linear parameters x1..xd on [0, 1], all objective.
SearchSpace make_box_space(int d);

Objective make_hartmann_objective(int d);
Objective make_sphere_objective(int d);

/// Resolves "hartmann3", "hartmann4", "hartmann6", "sphere" or "sphere:<d>".
/// External evaluators ("extproc:...") are resolved by the extproc module.
std::optional<Objective> make_builtin_objective(std::string_view name);

/// Center of every real interval (log-space center for log10), first label
/// for nominals, and the fixed values.
Assignment default_initial_assignment(const SearchSpace& space);

}  // namespace hiertune

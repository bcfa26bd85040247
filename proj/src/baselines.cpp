#include "hiertune/baselines.hpp"

#include <climits>
#include <functional>
#include <numeric>
#include <vector>

#include "hiertune/errors.hpp"
#include "hiertune/grat.hpp"

namespace hiertune {

BudgetMode parse_budget_mode(std::string_view text) {
    if (text == "formula") return BudgetMode::Formula;
    if (text == "measured") return BudgetMode::Measured;
    throw UsageError("budget mode must be 'formula' or 'measured', got '" + std::string(text) + "'");
}

std::string_view to_string(BudgetMode mode) {
    return mode == BudgetMode::Formula ? "formula" : "measured";
}

std::int64_t formula_budget(int c, int eta, int iterations) {
    return static_cast<std::int64_t>(c) * eta * iterations;
}

namespace {

constexpr int kMaxRedraws = 1000;

void check_budget(std::int64_t budget) {
    if (budget < 1) throw UsageError("baseline budget must be at least 1");
    if (budget > INT_MAX) throw UsageError("baseline budget too large");
}

/// Draws `budget` fresh points from `sample(row)` and tracks the incumbent.
TuningReport run_design(const Objective& objective, EvaluationLedger& ledger, std::int64_t budget,
                        const std::function<Assignment(std::int64_t)>& sample) {
    TuningReport report;
    const std::int64_t start = ledger.count();
    for (std::int64_t row = 0; row < budget; ++row) {
        Assignment point = sample(row);
        int redraws = 0;
        while (ledger.caching() && ledger.contains(canonical_key(point))) {
            if (++redraws > kMaxRedraws) throw Error("search space exhausted: no fresh point after repeated redraws");
            point = sample(row);
        }
        const std::int64_t before = ledger.count();
        const double value = ledger.evaluate(objective, point);
        const int step = static_cast<int>(row + 1);
        if (row == 0 || value < report.incumbent_response) {
            report.incumbent = std::move(point);
            report.incumbent_response = value;
            report.last_best_iteration = step;
        }
        report.trace.push_back({step, report.incumbent_response, ledger.count() - before});
    }
    report.iterations_run = static_cast<int>(budget);
    report.evaluations = ledger.count() - start;
    return report;
}

}  // namespace

TuningReport random_search(const SearchSpace& space, const Objective& objective, EvaluationLedger& ledger,
                           std::int64_t budget, Rng& rng) {
    check_budget(budget);
    return run_design(objective, ledger, budget, [&](std::int64_t) {
        Assignment a = space.fixed();
        for (const auto& name : space.objective_ordered()) a.set(name, uniform_rand_slot(space.spec(name), 1, 1, rng));
        return a;
    });
}

TuningReport latin_hypercube(const SearchSpace& space, const Objective& objective, EvaluationLedger& ledger,
                             std::int64_t budget, Rng& rng) {
    check_budget(budget);
    const int strata = static_cast<int>(budget);

    // One stratum permutation per real objective dimension.
    std::map<std::string, std::vector<int>> permutations;
    for (const auto& name : space.objective_ordered()) {
        if (!space.spec(name).is_real()) continue;
        std::vector<int> perm(static_cast<std::size_t>(strata));
        std::iota(perm.begin(), perm.end(), 1);
        shuffle(std::span<int>(perm), rng);
        permutations.emplace(name, std::move(perm));
    }

    return run_design(objective, ledger, budget, [&](std::int64_t row) {
        Assignment a = space.fixed();
        for (const auto& name : space.objective_ordered()) {
            const auto& spec = space.spec(name);
            if (spec.is_real()) {
                const int slot = permutations.at(name)[static_cast<std::size_t>(row)];
                a.set(name, uniform_rand_slot(spec, strata, slot, rng));
            } else {
                a.set(name, uniform_rand_slot(spec, 1, 1, rng));
            }
        }
        return a;
    });
}

}  // namespace hiertune

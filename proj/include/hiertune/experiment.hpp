#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hiertune/baselines.hpp"
#include "hiertune/domain.hpp"
#include "hiertune/grat.hpp"
#include "hiertune/objectives.hpp"
#include "hiertune/runtime.hpp"

namespace hiertune {

enum class Method { Grat, Random, Lhs };

std::string_view to_string(Method method);
Method parse_method(std::string_view text);

struct ExperimentConfig {
    Objective objective;
    /// Start point of every GRAT run; empty means default_initial_assignment.
    Assignment initial;
    int eta = 10;
    int omega = 3;
    int c = 2;
    int iters = 15;
    std::optional<int> agent_budget;
    std::optional<int> patience;
    std::optional<double> target;
    int trials = 1;
    std::uint64_t seed = 0;
    std::vector<Method> methods{Method::Grat};
    BudgetMode budget_mode = BudgetMode::Measured;
    OmegaPolicy omega_policy;
    /// Trials run on up to this many threads.
    int workers = 1;
    bool concurrent_agents = true;
    /// Message observer for the GRAT run of trial 0.
    std::function<void(const MessageEvent&)> on_message;
};

struct TrialRow {
    int trial = 0;
    Method method = Method::Grat;
    std::string objective;
    int eta = 0;
    int omega = 0;
    int iters = 0;
    double best = 0.0;
    std::int64_t evals = 0;
    /// For baselines, the best sample's index mapped onto the same iteration
    /// axis: ceil(index * iters / budget).
    int last_best_iter = 0;

    friend bool operator==(const TrialRow&, const TrialRow&) = default;
};

struct Summary {
    int n = 0;
    double mean = 0.0;
    double std_error = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

/// Mean, standard error (sample sd / sqrt(n); 0 when n = 1) and the normal
/// approximation 95% interval mean +- 1.96 SE.
Summary summarize(std::span<const double> values);

struct MethodSummary {
    Method method = Method::Grat;
    Summary best;
    double mean_evals = 0.0;
    Summary last_best_iter;
};

struct ExperimentResult {
    int eta = 0;
    int iters = 0;
    std::vector<TrialRow> rows;  ///< ordered by trial, then method
    std::vector<MethodSummary> summary;
};

/// Trial t derives its seed from (seed, t); output is identical for any
/// worker count.
ExperimentResult run_experiment(const ExperimentConfig& config);

enum class SweepAxis { Eta, Iterations };
SweepAxis parse_sweep_axis(std::string_view text);

/// One experiment per value of the axis. Throws UsageError on empty values.
std::vector<ExperimentResult> sweep(const ExperimentConfig& config, SweepAxis axis, std::span<const int> values);

/// `trial,method,objective,eta,omega,iters,best,evals,last_best_iter`
std::string_view csv_header();
std::string to_csv(std::span<const TrialRow> rows);
std::string to_csv(std::span<const ExperimentResult> results);
std::string summary_table(const ExperimentResult& result);
json to_json(std::span<const ExperimentResult> results);

}  // namespace hiertune

#include "hiertune/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "hiertune/errors.hpp"
#include "hiertune/hierarchy.hpp"
#include "hiertune/rng.hpp"

namespace hiertune {

std::string_view to_string(Method method) {
    switch (method) {
        case Method::Grat: return "grat";
        case Method::Random: return "random";
        case Method::Lhs: return "lhs";
    }
    return "?";
}

Method parse_method(std::string_view text) {
    if (text == "grat") return Method::Grat;
    if (text == "random") return Method::Random;
    if (text == "lhs") return Method::Lhs;
    throw UsageError("method must be grat, random or lhs, got '" + std::string(text) + "'");
}

SweepAxis parse_sweep_axis(std::string_view text) {
    if (text == "eta") return SweepAxis::Eta;
    if (text == "iterations" || text == "iters") return SweepAxis::Iterations;
    throw UsageError("sweep axis must be 'eta' or 'iterations', got '" + std::string(text) + "'");
}

Summary summarize(std::span<const double> values) {
    Summary s;
    s.n = static_cast<int>(values.size());
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / s.n;
    if (s.n > 1) {
        double sq = 0.0;
        for (double v : values) sq += (v - s.mean) * (v - s.mean);
        s.std_error = std::sqrt(sq / (s.n - 1)) / std::sqrt(static_cast<double>(s.n));
    }
    s.ci_low = s.mean - 1.96 * s.std_error;
    s.ci_high = s.mean + 1.96 * s.std_error;
    return s;
}

namespace {

void validate(const ExperimentConfig& config) {
    std::vector<std::string> problems;
    if (config.eta < 1) problems.push_back("eta must be >= 1");
    if (config.omega < 1) problems.push_back("omega must be >= 1");
    if (config.c < 2) problems.push_back("c must be >= 2");
    if (config.iters < 1) problems.push_back("iters must be >= 1");
    if (config.trials < 1) problems.push_back("trials must be >= 1");
    if (config.workers < 1) problems.push_back("workers must be >= 1");
    if (config.methods.empty()) problems.push_back("at least one method is required");
    if (config.agent_budget && *config.agent_budget < 2) problems.push_back("agent budget must be >= 2");
    if (!config.objective.evaluate) problems.push_back("objective is not set");
    if (!problems.empty()) {
        std::string msg = "invalid experiment configuration:";
        for (const auto& p : problems) msg += " " + p + ";";
        throw UsageError(msg);
    }
}

int iteration_of_sample(int sample_index, int iters, std::int64_t budget) {
    if (sample_index <= 0) return 0;
    const auto scaled = static_cast<std::int64_t>(sample_index) * iters;
    return static_cast<int>((scaled + budget - 1) / budget);
}

class TrialRunner {
public:
    explicit TrialRunner(const ExperimentConfig& config)
        : config_(config),
          query_{config.objective.space,
                 config.initial.empty() ? default_initial_assignment(config.objective.space) : config.initial,
                 config.c,
                 config.agent_budget,
                 config.eta,
                 config.omega,
                 StopCriteria{config.iters, config.patience, config.target}},
          tree_(build_hierarchy(query_)) {}

    std::vector<TrialRow> run(int trial) const {
        const std::uint64_t seed = derive_seed(config_.seed, static_cast<std::uint64_t>(trial));
        const bool wants_grat = contains(Method::Grat);
        std::optional<TuningReport> grat;
        if (wants_grat || config_.budget_mode == BudgetMode::Measured) {
            RuntimeOptions options;
            options.concurrent = config_.concurrent_agents;
            options.omega_policy = config_.omega_policy;
            if (trial == 0) options.on_message = config_.on_message;
            EvaluationLedger ledger;
            grat = tune(tree_, query_, config_.objective, seed, ledger, options);
        }
        const std::int64_t budget = config_.budget_mode == BudgetMode::Measured
                                        ? grat->evaluations
                                        : formula_budget(config_.c, config_.eta, config_.iters);

        std::vector<TrialRow> rows;
        for (Method method : config_.methods) {
            TrialRow row{trial, method, config_.objective.name, config_.eta, config_.omega, config_.iters};
            if (method == Method::Grat) {
                row.best = grat->incumbent_response;
                row.evals = grat->evaluations;
                row.last_best_iter = grat->last_best_iteration;
            } else {
                EvaluationLedger ledger;
                Rng rng(derive_seed(seed, method == Method::Random ? 1 : 2));
                const auto report = method == Method::Random
                                        ? random_search(config_.objective.space, config_.objective, ledger, budget, rng)
                                        : latin_hypercube(config_.objective.space, config_.objective, ledger, budget, rng);
                row.best = report.incumbent_response;
                row.evals = report.evaluations;
                row.last_best_iter = iteration_of_sample(report.last_best_iteration, config_.iters, budget);
            }
            rows.push_back(std::move(row));
        }
        return rows;
    }

private:
    bool contains(Method m) const {
        return std::find(config_.methods.begin(), config_.methods.end(), m) != config_.methods.end();
    }

    const ExperimentConfig& config_;
    TuningQuery query_;
    Hierarchy tree_;
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    validate(config);
    const TrialRunner runner(config);

    std::vector<std::vector<TrialRow>> per_trial(static_cast<std::size_t>(config.trials));
    std::vector<std::exception_ptr> errors(per_trial.size());
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int t; (t = next.fetch_add(1)) < config.trials;) {
            try {
                per_trial[static_cast<std::size_t>(t)] = runner.run(t);
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        }
    };
    const int threads = std::min(config.workers, config.trials);
    std::vector<std::thread> pool;
    for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    ExperimentResult result;
    result.eta = config.eta;
    result.iters = config.iters;
    for (auto& rows : per_trial) {
        for (auto& row : rows) result.rows.push_back(std::move(row));
    }
    for (Method method : config.methods) {
        std::vector<double> best;
        std::vector<double> last;
        double evals = 0.0;
        for (const auto& row : result.rows) {
            if (row.method != method) continue;
            best.push_back(row.best);
            last.push_back(row.last_best_iter);
            evals += static_cast<double>(row.evals);
        }
        MethodSummary s;
        s.method = method;
        s.best = summarize(best);
        s.last_best_iter = summarize(last);
        s.mean_evals = best.empty() ? 0.0 : evals / static_cast<double>(best.size());
        result.summary.push_back(s);
    }
    return result;
}

std::vector<ExperimentResult> sweep(const ExperimentConfig& config, SweepAxis axis, std::span<const int> values) {
    if (values.empty()) throw UsageError("sweep needs at least one value");
    std::vector<ExperimentResult> out;
    for (int v : values) {
        ExperimentConfig point = config;
        (axis == SweepAxis::Eta ? point.eta : point.iters) = v;
        out.push_back(run_experiment(point));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string format_real(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& text) {
    if (text.find_first_of(",\"\n") == std::string::npos) return text;
    std::string out = "\"";
    for (char ch : text) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

}  // namespace

std::string_view csv_header() {
    return "trial,method,objective,eta,omega,iters,best,evals,last_best_iter";
}

std::string to_csv(std::span<const TrialRow> rows) {
    std::string out(csv_header());
    out += '\n';
    for (const auto& r : rows) {
        out += std::to_string(r.trial) + ',' + std::string(to_string(r.method)) + ',' + csv_field(r.objective) + ',' +
               std::to_string(r.eta) + ',' + std::to_string(r.omega) + ',' + std::to_string(r.iters) + ',' +
               format_real(r.best) + ',' + std::to_string(r.evals) + ',' + std::to_string(r.last_best_iter) + '\n';
    }
    return out;
}

std::string to_csv(std::span<const ExperimentResult> results) {
    std::vector<TrialRow> all;
    for (const auto& r : results) all.insert(all.end(), r.rows.begin(), r.rows.end());
    return to_csv(all);
}

std::string summary_table(const ExperimentResult& result) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "eta=%d iters=%d\n%-8s %6s %14s %12s %14s %14s %10s %10s\n", result.eta,
                  result.iters, "method", "trials", "mean_best", "std_error", "ci95_low", "ci95_high", "evals",
                  "last_best");
    out += line;
    for (const auto& s : result.summary) {
        std::snprintf(line, sizeof line, "%-8s %6d %14.6g %12.4g %14.6g %14.6g %10.1f %10.2f\n",
                      std::string(to_string(s.method)).c_str(), s.best.n, s.best.mean, s.best.std_error, s.best.ci_low,
                      s.best.ci_high, s.mean_evals, s.last_best_iter.mean);
        out += line;
    }
    return out;
}

json to_json(std::span<const ExperimentResult> results) {
    json doc = json::array();
    for (const auto& r : results) {
        json block;
        block["eta"] = r.eta;
        block["iters"] = r.iters;
        json rows = json::array();
        for (const auto& row : r.rows) {
            rows.push_back(json{{"trial", row.trial},
                                {"method", to_string(row.method)},
                                {"objective", row.objective},
                                {"eta", row.eta},
                                {"omega", row.omega},
                                {"iters", row.iters},
                                {"best", row.best},
                                {"evals", row.evals},
                                {"last_best_iter", row.last_best_iter}});
        }
        block["rows"] = std::move(rows);
        json summary = json::array();
        for (const auto& s : r.summary) {
            summary.push_back(json{{"method", to_string(s.method)},
                                   {"trials", s.best.n},
                                   {"mean", s.best.mean},
                                   {"std_error", s.best.std_error},
                                   {"ci95", json::array({s.best.ci_low, s.best.ci_high})},
                                   {"mean_evals", s.mean_evals},
                                   {"mean_last_best_iter", s.last_best_iter.mean},
                                   {"last_best_iter_std_error", s.last_best_iter.std_error}});
        }
        block["summary"] = std::move(summary);
        doc.push_back(std::move(block));
    }
    return doc;
}

}  // namespace hiertune

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hiertune/errors.hpp"
#include "hiertune/experiment.hpp"

using namespace hiertune;

namespace {

ExperimentConfig h3_config(int trials, int iters = 4) {
    ExperimentConfig cfg{make_hartmann_objective(3)};
    cfg.trials = trials;
    cfg.iters = iters;
    cfg.seed = 17;
    return cfg;
}

}  // namespace

TEST_CASE("summaries") {
    const double one[] = {2.5};
    auto s = summarize(one);
    CHECK(s.n == 1);
    CHECK(s.mean == 2.5);
    CHECK(s.std_error == 0.0);
    CHECK(s.ci_low == 2.5);
    CHECK(s.ci_high == 2.5);

    const double four[] = {1, 2, 3, 4};
    s = summarize(four);
    CHECK(s.mean == 2.5);
    // sample sd = sqrt(5/3), SE = sd / 2
    CHECK(s.std_error == doctest::Approx(std::sqrt(5.0 / 3.0) / 2));
    CHECK(s.ci_high - s.mean == doctest::Approx(1.96 * s.std_error));
}

TEST_CASE("one trial per method yields one row each and zero spread") {
    auto cfg = h3_config(1);
    cfg.methods = {Method::Grat, Method::Random, Method::Lhs};
    auto result = run_experiment(cfg);
    REQUIRE(result.rows.size() == 3);
    REQUIRE(result.summary.size() == 3);
    for (const auto& m : result.summary) CHECK(m.best.std_error == 0.0);
    // Measured mode: baselines spend what GRAT spent.
    CHECK(result.rows[1].evals == result.rows[0].evals);
    CHECK(result.rows[2].evals == result.rows[0].evals);
    for (const auto& row : result.rows) {
        CHECK(row.last_best_iter >= 0);
        CHECK(row.last_best_iter <= cfg.iters);
    }
}

TEST_CASE("formula budget mode") {
    auto cfg = h3_config(1, 3);
    cfg.methods = {Method::Random};
    cfg.budget_mode = BudgetMode::Formula;
    cfg.eta = 5;
    auto result = run_experiment(cfg);
    CHECK(result.rows.at(0).evals == 2 * 5 * 3);
}

TEST_CASE("output is identical for any worker count") {
    auto cfg = h3_config(8);
    cfg.methods = {Method::Grat, Method::Random};
    auto serial = run_experiment(cfg);
    cfg.workers = 4;
    auto parallel = run_experiment(cfg);
    cfg.concurrent_agents = false;
    auto flat = run_experiment(cfg);
    const ExperimentResult a[] = {serial};
    const ExperimentResult b[] = {parallel};
    const ExperimentResult c[] = {flat};
    CHECK(to_csv(a) == to_csv(b));
    CHECK(to_csv(a) == to_csv(c));
    CHECK(to_csv(a).rfind(std::string(csv_header()) + "\n", 0) == 0);
}

TEST_CASE("csv rows") {
    auto cfg = h3_config(2, 2);
    auto result = run_experiment(cfg);
    std::istringstream in(to_csv(result.rows));
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        ++lines;
        CHECK(std::count(line.begin(), line.end(), ',') == 8);
    }
    CHECK(lines == 3);
    CHECK(summary_table(result).find("grat") != std::string::npos);
}

TEST_CASE("sweeps run one block per value") {
    auto cfg = h3_config(2, 2);
    const int etas[] = {2, 4, 6};
    auto results = sweep(cfg, SweepAxis::Eta, etas);
    REQUIRE(results.size() == 3);
    CHECK(results[1].eta == 4);
    CHECK(results[1].rows.front().eta == 4);
    const int iters[] = {1, 3};
    auto by_iter = sweep(cfg, SweepAxis::Iterations, iters);
    CHECK(by_iter[1].iters == 3);
    CHECK(to_json(by_iter).size() == 2);
    CHECK_THROWS_AS(sweep(cfg, SweepAxis::Eta, std::span<const int>{}), UsageError);
    CHECK(parse_sweep_axis("iterations") == SweepAxis::Iterations);
    CHECK_THROWS_AS(parse_sweep_axis("omega"), UsageError);
}

TEST_CASE("invalid configurations list every problem") {
    auto cfg = h3_config(0);
    cfg.eta = 0;
    try {
        run_experiment(cfg);
        FAIL("expected UsageError");
    } catch (const UsageError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("eta") != std::string::npos);
        CHECK(msg.find("trials") != std::string::npos);
    }
}

TEST_CASE("more slots do not hurt on Hartmann-3") {
    auto cfg = h3_config(100, 5);
    double previous = 0.0;
    for (int eta : {2, 5, 10, 20}) {
        cfg.eta = eta;
        auto result = run_experiment(cfg);
        const double mean = result.summary.front().best.mean;
        CAPTURE(eta);
        if (eta != 2) CHECK(mean <= previous + 1e-3);
        previous = mean;
    }
}

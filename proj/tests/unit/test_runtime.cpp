#include <doctest.h>

#include <cmath>
#include <mutex>
#include <set>

#include "hiertune/errors.hpp"
#include "hiertune/runtime.hpp"

using namespace hiertune;

namespace {

TuningQuery box_query(const Objective& objective, int iters, int eta = 10, int omega = 3) {
    TuningQuery q{objective.space, default_initial_assignment(objective.space)};
    q.eta = eta;
    q.omega = omega;
    q.stop.max_iterations = iters;
    return q;
}

std::vector<TraceEntry> trace_of(std::initializer_list<double> incumbents) {
    std::vector<TraceEntry> t;
    int i = 1;
    for (double v : incumbents) t.push_back({i++, v, 0});
    return t;
}

}  // namespace

TEST_CASE("should_stop") {
    StopCriteria c;
    c.max_iterations = 3;
    CHECK_FALSE(should_stop(c, trace_of({})));
    CHECK_FALSE(should_stop(c, trace_of({1, 0.5})));
    CHECK(should_stop(c, trace_of({1, 0.5, 0.4})));

    c.max_iterations = 100;
    c.patience = 2;
    CHECK_FALSE(should_stop(c, trace_of({1, 0.5, 0.5})));
    CHECK(should_stop(c, trace_of({1, 0.5, 0.5, 0.5})));
    CHECK_FALSE(should_stop(c, trace_of({1, 1, 1, 0.5})));

    c.patience.reset();
    c.target = -3.0;
    CHECK_FALSE(should_stop(c, trace_of({-2.9})));
    CHECK(should_stop(c, trace_of({-2.9, -3.0})));
}

TEST_CASE("single parameter run") {
    auto objective = make_sphere_objective(1);
    auto q = box_query(objective, 5, 4, 2);
    auto tree = build_hierarchy(q);
    REQUIRE(tree.size() == 1);
    auto report = tune(tree, q, objective, 42);
    CHECK(report.iterations_run == 5);
    CHECK(report.incumbent_response <= 0.25);
    CHECK(report.evaluations <= 1 + 5 * 4);
}

TEST_CASE("results do not depend on thread scheduling") {
    auto objective = make_hartmann_objective(6);
    auto q = box_query(objective, 6);
    auto tree = build_hierarchy(q);
    RuntimeOptions sequential;
    sequential.concurrent = false;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto a = tune(tree, q, objective, seed, sequential);
        auto b = tune(tree, q, objective, seed);
        auto c = tune(tree, q, objective, seed);
        CHECK(a == b);
        CHECK(b == c);
    }
    CHECK_FALSE(tune(tree, q, objective, 1) == tune(tree, q, objective, 2));
}

TEST_CASE("incumbent never worsens and the ledger stays within bound") {
    auto objective = make_hartmann_objective(3);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const int eta = 2 + static_cast<int>(seed % 9);
        const int iters = 1 + static_cast<int>(seed % 7);
        auto q = box_query(objective, iters, eta, 1 + static_cast<int>(seed % 4));
        auto tree = build_hierarchy(q);
        EvaluationLedger ledger;
        const double start = objective.evaluate(q.initial_values);
        auto report = tune(tree, q, objective, seed, ledger);
        CHECK(report.incumbent_response <= start);
        for (std::size_t k = 1; k < report.trace.size(); ++k) {
            CHECK(report.trace[k].incumbent <= report.trace[k - 1].incumbent);
        }
        CHECK(report.evaluations == ledger.count());
        CHECK(report.evaluations <= 3LL * (eta + 1) * iters + 1);
        std::int64_t fresh = 0;
        for (const auto& e : report.trace) fresh += e.fresh_evaluations;
        CHECK(fresh + 1 == report.evaluations);  // plus the bootstrap point
        CHECK(objective.evaluate(report.incumbent) == report.incumbent_response);
    }
}

TEST_CASE("message discipline: one ask down and one inform up per edge") {
    auto objective = make_hartmann_objective(6);
    auto q = box_query(objective, 3);
    auto tree = build_hierarchy(q);
    MessageProbe probe;
    RuntimeOptions options;
    options.on_message = [&](const MessageEvent& e) { probe.record(e); };
    tune(tree, q, objective, 5, options);
    for (int iteration = 0; iteration <= 3; ++iteration) {
        for (const auto& node : tree.nodes()) {
            CHECK(probe.sent(iteration, node.id, MessageKind::Ask) == static_cast<int>(node.children.size()));
            CHECK(probe.received(iteration, node.id, MessageKind::Inform) == static_cast<int>(node.children.size()));
            CHECK(probe.sent(iteration, node.id, MessageKind::Inform) == (node.parent ? 1 : 0));
            CHECK(probe.received(iteration, node.id, MessageKind::Ask) == (node.parent ? 1 : 0));
        }
    }
    CHECK(probe.total() == 4LL * 2 * (static_cast<long long>(tree.size()) - 1));
}

TEST_CASE("two parameters, four slots") {
    // Two terminals under one root; each varies its own parameter across four
    // slots and perturbs the other with weighted_rand.
    SearchSpace space({HyperParameterSpec::real("l1", 0, 1), HyperParameterSpec::real("l2", 0, 1)}, {"l1", "l2"}, {});
    std::mutex mu;
    std::vector<Assignment> seen;
    Objective objective{"bowl", space, [&](const Assignment& a) {
                            std::lock_guard lock(mu);
                            seen.push_back(a);
                            return std::pow(a.real("l1") - 0.8, 2) + std::pow(a.real("l2") - 0.2, 2);
                        }};
    TuningQuery q{space, Assignment{{"l1", 0.1}, {"l2", 0.9}}};
    q.eta = 4;
    q.omega = 2;
    q.stop.max_iterations = 1;
    auto tree = build_hierarchy(q);
    REQUIRE(tree.size() == 3);
    EvaluationLedger ledger;
    auto report = tune(tree, q, objective, 3, ledger);
    CHECK(report.evaluations <= 1 + 2 * 4);
    CHECK(report.incumbent_response <= std::pow(0.7, 2) + std::pow(0.7, 2));
    // Each terminal's own parameter covered all four quarter slots.
    for (const char* own : {"l1", "l2"}) {
        std::set<int> slots;
        for (const auto& a : seen) slots.insert(std::min(3, static_cast<int>(a.real(own) * 4)));
        CHECK(slots.size() == 4);
    }
}

TEST_CASE("an evaluation failure aborts the run and names the agent") {
    SearchSpace space({HyperParameterSpec::real("a", 0, 1), HyperParameterSpec::real("b", 0, 1)}, {"a", "b"}, {});
    Objective failing{"boom", space, [](const Assignment& x) -> double {
                          if (x.real("b") > 0.95) throw std::runtime_error("diverged");
                          return x.real("a");
                      }};
    TuningQuery q{space, Assignment{{"a", 0.5}, {"b", 0.5}}};
    q.eta = 20;
    q.stop.max_iterations = 50;
    auto tree = build_hierarchy(q);
    try {
        tune(tree, q, failing, 1);
        FAIL("expected AgentFailure");
    } catch (const AgentFailure& e) {
        CHECK(e.node_id() > 0);
        CHECK(tree.node(e.node_id()).terminal());
        CHECK(std::string(e.what()).find("diverged") != std::string::npos);
    }
}

TEST_CASE("tune rejects a tree built for another query") {
    auto h3 = make_hartmann_objective(3);
    auto h6 = make_hartmann_objective(6);
    auto q = box_query(h3, 1);
    CHECK_THROWS_AS(tune(build_hierarchy(box_query(h6, 1)), q, h3, 1), InvalidQueryError);
}

TEST_CASE("patience and target stop early") {
    auto objective = make_hartmann_objective(3);
    auto q = box_query(objective, 500);
    q.stop.target = -3.0;
    auto report = tune(build_hierarchy(q), q, objective, 9);
    CHECK(report.iterations_run < 500);
    CHECK(report.incumbent_response <= -3.0);

    q.stop.target.reset();
    q.stop.patience = 3;
    report = tune(build_hierarchy(q), q, objective, 9);
    CHECK(report.iterations_run < 500);
}

TEST_CASE("report json") {
    auto objective = make_sphere_objective(2);
    auto q = box_query(objective, 2, 3, 1);
    auto doc = tune(build_hierarchy(q), q, objective, 1).to_json();
    CHECK(doc["iterations_run"] == 2);
    CHECK(doc["trace"].size() == 2);
    CHECK(doc["incumbent"].contains("x1"));
}

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <thread>

#include "hiertune/errors.hpp"
#include "hiertune/objectives.hpp"
#include "hiertune/rng.hpp"
#include "../support/oracles.hpp"

using namespace hiertune;

TEST_CASE("Hartmann optima") {
    const double h3_opt[] = {0.114614, 0.555649, 0.852547};
    const double h6_opt[] = {0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573};
    const double h4_opt[] = {0.1873, 0.1906, 0.5566, 0.2647};
    CHECK(std::abs(hartmann(3, h3_opt) - -3.86278) < 1e-4);
    CHECK(std::abs(hartmann(6, h6_opt) - -3.32237) < 1e-4);
    CHECK(std::abs(hartmann(4, h4_opt) - -3.134353) < 1e-5);
    CHECK(hartmann(3, h3_opt) == doctest::Approx(oracle::hartmann({h3_opt, h3_opt + 3})).epsilon(1e-14));
    CHECK(hartmann(6, h6_opt) == doctest::Approx(oracle::hartmann({h6_opt, h6_opt + 6})).epsilon(1e-14));
}

TEST_CASE("Hartmann agrees with the reference on random points and stays negative") {
    Rng rng(11);
    for (int i = 0; i < 100000; ++i) {
        std::vector<double> x3(3), x6(6);
        for (auto& v : x3) v = uniform01(rng);
        for (auto& v : x6) v = uniform01(rng);
        const double h3 = hartmann(3, x3);
        CHECK_MESSAGE(h3 < 0, "H3 must be strictly negative on the box");
        if (i % 100 == 0) {
            CHECK(h3 == doctest::Approx(oracle::hartmann(x3)).epsilon(1e-13));
            CHECK(hartmann(6, x6) == doctest::Approx(oracle::hartmann(x6)).epsilon(1e-13));
        }
        CHECK(h3 >= -3.86279);
    }
}

TEST_CASE("Hartmann rejects bad input") {
    const double inside[] = {0.5, 0.5, 0.5};
    const double outside[] = {0.5, 1.5, 0.5};
    CHECK_THROWS_AS(hartmann(5, inside), DomainError);
    CHECK_THROWS_AS(hartmann(3, outside), DomainError);
    CHECK_THROWS_AS(hartmann(6, inside), DomainError);
}

TEST_CASE("builtin objectives") {
    auto h6 = make_builtin_objective("hartmann6");
    REQUIRE(h6);
    CHECK(h6->space.objective() == std::vector<std::string>{"x1", "x2", "x3", "x4", "x5", "x6"});
    CHECK(make_builtin_objective("hartmann3")->name == "hartmann3");
    CHECK(make_builtin_objective("hartmann4"));
    CHECK(make_builtin_objective("sphere")->space.params().size() == 3);
    CHECK(make_builtin_objective("sphere:5")->space.params().size() == 5);
    CHECK_FALSE(make_builtin_objective("rosenbrock"));
    CHECK_FALSE(make_builtin_objective("sphere:0"));

    const auto box = make_box_space(4);
    auto center = default_initial_assignment(box);
    CHECK(center.real("x3") == 0.5);
    CHECK(h6->evaluate(default_initial_assignment(h6->space)) == doctest::Approx(-0.505).epsilon(1e-2));
}

TEST_CASE("default initial assignment") {
    SearchSpace space({HyperParameterSpec::real("C", 1e-2, 1e2, Scale::Log10),
                       HyperParameterSpec::nominal("k", {"rbf", "poly"}), HyperParameterSpec::real("g", 0, 1)},
                      {"C", "k"}, Assignment{{"g", 0.75}});
    auto a = default_initial_assignment(space);
    CHECK(a.real("C") == doctest::Approx(1.0));
    CHECK(a.label("k") == "rbf");
    CHECK(a.real("g") == 0.75);
    CHECK(validate_assignment(space, a).empty());
}

TEST_CASE("ledger caches and counts fresh evaluations") {
    std::atomic<int> calls{0};
    Objective counting{"count", make_box_space(2), [&](const Assignment& a) {
                           ++calls;
                           return a.real("x1") + a.real("x2");
                       }};
    EvaluationLedger ledger;
    const Assignment p{{"x1", 0.25}, {"x2", 0.5}};
    CHECK(ledger.evaluate(counting, p) == 0.75);
    CHECK(ledger.evaluate(counting, p) == 0.75);
    CHECK(ledger.count() == 1);
    CHECK(calls == 1);
    CHECK(ledger.contains(canonical_key(p)));

    EvaluationLedger uncached(std::nullopt, false);
    uncached.evaluate(counting, p);
    uncached.evaluate(counting, p);
    CHECK(uncached.count() == 2);

    CHECK_THROWS_AS(ledger.evaluate(counting, Assignment{{"x1", 2.0}, {"x2", 0.5}}), DomainError);
    CHECK(ledger.count() == 1);
}

TEST_CASE("ledger cap") {
    auto objective = make_sphere_objective(2);
    EvaluationLedger ledger(2);
    ledger.evaluate(objective, Assignment{{"x1", 0.1}, {"x2", 0.1}});
    ledger.evaluate(objective, Assignment{{"x1", 0.2}, {"x2", 0.1}});
    CHECK_NOTHROW(ledger.evaluate(objective, Assignment{{"x1", 0.1}, {"x2", 0.1}}));  // cached, free
    CHECK_THROWS_AS(ledger.evaluate(objective, Assignment{{"x1", 0.3}, {"x2", 0.1}}), BudgetExhaustedError);
    CHECK(ledger.count() == 2);
}

TEST_CASE("ledger failures are rolled back and wrapped") {
    int calls = 0;
    Objective flaky{"flaky", make_box_space(1), [&](const Assignment&) -> double {
                        if (++calls == 1) throw std::runtime_error("transient");
                        return 1.0;
                    }};
    EvaluationLedger ledger;
    const Assignment p{{"x1", 0.5}};
    CHECK_THROWS_AS(ledger.evaluate(flaky, p), EvaluationError);
    CHECK(ledger.count() == 0);
    CHECK_FALSE(ledger.contains(canonical_key(p)));
    CHECK(ledger.evaluate(flaky, p) == 1.0);
    CHECK(ledger.count() == 1);

    Objective nan{"nan", make_box_space(1), [](const Assignment&) { return std::nan(""); }};
    CHECK_THROWS_AS(ledger.evaluate(nan, Assignment{{"x1", 0.25}}), EvaluationError);
}

TEST_CASE("concurrent evaluations of one key compute it once") {
    std::atomic<int> calls{0};
    Objective slow{"slow", make_box_space(1), [&](const Assignment& a) {
                       ++calls;
                       std::this_thread::sleep_for(std::chrono::milliseconds(20));
                       return a.real("x1");
                   }};
    EvaluationLedger ledger;
    std::vector<std::thread> threads;
    std::atomic<int> wrong{0};
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            const double x = (t % 2) ? 0.25 : 0.75;
            if (ledger.evaluate(slow, Assignment{{"x1", x}}) != x) ++wrong;
        });
    }
    for (auto& t : threads) t.join();
    CHECK(wrong == 0);
    CHECK(calls == 2);
    CHECK(ledger.count() == 2);
}

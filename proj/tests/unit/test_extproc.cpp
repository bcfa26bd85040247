#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <unistd.h>

#include "hiertune/errors.hpp"
#include "hiertune/extproc.hpp"
#include "hiertune/runtime.hpp"

using namespace hiertune;

namespace {

std::string fake(const std::string& flags = "") {
    return std::string(HIERTUNE_FAKE_EVALUATOR) + (flags.empty() ? "" : " " + flags);
}

SearchSpace two_reals() {
    return SearchSpace({HyperParameterSpec::real("a", -1, 1), HyperParameterSpec::real("b", -1, 1)}, {"a", "b"}, {});
}

const Assignment kPoint{{"a", 0.5}, {"b", -0.25}};

SessionOptions quick() {
    SessionOptions o;
    o.response_timeout = std::chrono::milliseconds(500);
    o.shutdown_grace = std::chrono::milliseconds(300);
    return o;
}

}  // namespace

TEST_CASE("wire messages encode with a fixed field order") {
    WireMessage m{WireKind::Eval, 3, json{{"C", 1.5}, {"kernel", "rbf"}}};
    CHECK(m.encode() == R"({"kind":"eval","id":3,"payload":{"C":1.5,"kernel":"rbf"}})");
    auto back = WireMessage::decode(m.encode());
    CHECK(back.kind == WireKind::Eval);
    CHECK(back.id == 3);
    CHECK(back.payload == m.payload);
    CHECK_THROWS_AS(WireMessage::decode("not json"), SessionError);
    CHECK_THROWS_AS(WireMessage::decode(R"({"kind":"bogus","id":1,"payload":{}})"), SessionError);
    CHECK_THROWS_AS(WireMessage::decode(R"({"kind":"result","payload":{}})"), SessionError);
}

TEST_CASE("evaluate returns the child's loss") {
    auto session = EvaluatorSession::spawn(fake("--loss sphere"), two_reals());
    CHECK(session->alive());
    CHECK(session->evaluate(kPoint) == doctest::Approx(0.3125));
    CHECK(session->evaluate(Assignment{{"a", 0.0}, {"b", 0.0}}) == 0.0);
    CHECK(session->close());
    CHECK_FALSE(session->alive());
    CHECK(session->close());  // idempotent
    CHECK_THROWS_AS(session->evaluate(kPoint), SessionError);
}

TEST_CASE("an error reply raises EvaluationError and leaves the session usable") {
    // hello and space take ids 0 and 1, so the first eval is id 2.
    auto session = EvaluatorSession::spawn(fake("--error-id 2"), two_reals());
    CHECK_THROWS_AS(session->evaluate(kPoint), EvaluationError);
    CHECK(session->evaluate(kPoint) == 0.0);
}

TEST_CASE("session failures raise SessionError") {
    SUBCASE("child exits mid-run") {
        auto session = EvaluatorSession::spawn(fake("--die-after 1"), two_reals(), quick());
        CHECK(session->evaluate(kPoint) == 0.0);
        CHECK_THROWS_AS(session->evaluate(kPoint), SessionError);
        CHECK_FALSE(session->alive());
    }
    SUBCASE("missing loss") {
        auto session = EvaluatorSession::spawn(fake("--nan"), two_reals(), quick());
        CHECK_THROWS_AS(session->evaluate(kPoint), SessionError);
    }
    SUBCASE("malformed output") {
        auto session = EvaluatorSession::spawn(fake("--garbage"), two_reals(), quick());
        CHECK_THROWS_AS(session->evaluate(kPoint), SessionError);
    }
    SUBCASE("no reply within the timeout") {
        auto session = EvaluatorSession::spawn(fake("--hang"), two_reals(), quick());
        const auto t0 = std::chrono::steady_clock::now();
        CHECK_THROWS_AS(session->evaluate(kPoint), SessionError);
        CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(5));
    }
    SUBCASE("no hello ack") {
        CHECK_THROWS_AS(EvaluatorSession::spawn(fake("--no-hello"), two_reals(), quick()), SessionError);
    }
    SUBCASE("command that does not exist") {
        CHECK_THROWS_AS(EvaluatorSession::spawn("/nonexistent/evaluator", two_reals(), quick()), SessionError);
    }
}

TEST_CASE("replies are matched by id when they arrive out of order") {
    auto session = EvaluatorSession::spawn(fake("--loss sphere --batch 4"), two_reals(), quick());
    std::vector<double> got(4, -1);
    std::vector<std::thread> threads;
    for (int i = 0; i < 4; ++i) {
        threads.emplace_back([&, i] { got[static_cast<std::size_t>(i)] = session->evaluate(Assignment{{"a", 0.1 * i}, {"b", 0.0}}); });
    }
    for (auto& t : threads) t.join();
    for (int i = 0; i < 4; ++i) CHECK(got[static_cast<std::size_t>(i)] == doctest::Approx(0.01 * i * i));
}

TEST_CASE("close sends shutdown and kills a child that ignores it") {
    const std::string log = "extproc_shutdown_" + std::to_string(::getpid()) + ".log";
    {
        auto session = EvaluatorSession::spawn(fake("--log " + log), two_reals(), quick());
        session->evaluate(kPoint);
        CHECK(session->close());
    }
    std::ifstream in(log);
    std::stringstream text;
    text << in.rdbuf();
    CHECK(text.str() == "hello 0\nspace 1\neval 2\nshutdown 3\n");
    std::remove(log.c_str());

    auto stubborn = EvaluatorSession::spawn(fake("--ignore-shutdown"), two_reals(), quick());
    const auto t0 = std::chrono::steady_clock::now();
    CHECK_FALSE(stubborn->close());
    CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(3));
    CHECK_FALSE(stubborn->alive());
}

TEST_CASE("extproc objectives drive a tuning run") {
    auto objective = make_extproc_objective("extproc:" + fake("--loss sphere"), two_reals());
    TuningQuery q{objective.space, Assignment{{"a", 0.9}, {"b", -0.9}}};
    q.eta = 5;
    q.stop.max_iterations = 3;
    auto report = tune(build_hierarchy(q), q, objective, 1);
    CHECK(report.incumbent_response < 1.62);
    CHECK_THROWS_AS(make_extproc_objective("hartmann3", two_reals()), UsageError);
}

TEST_CASE("conformance checks") {
    auto good = check_evaluator_conformance(fake("--loss sphere"), two_reals(), quick());
    REQUIRE_FALSE(good.empty());
    for (const auto& c : good) CHECK_MESSAGE(c.passed, c.name << ": " << c.detail);

    auto bad = check_evaluator_conformance(fake("--ignore-shutdown"), two_reals(), quick());
    bool shutdown_failed = false;
    for (const auto& c : bad) {
        if (c.name == "shutdown") shutdown_failed = !c.passed;
    }
    CHECK(shutdown_failed);

    auto dead = check_evaluator_conformance(fake("--no-hello"), two_reals(), quick());
    REQUIRE_FALSE(dead.empty());
    CHECK_FALSE(dead.front().passed);
}

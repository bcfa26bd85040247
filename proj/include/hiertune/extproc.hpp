#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "hiertune/domain.hpp"
#include "hiertune/objectives.hpp"

// External evaluator protocol. The child process reads requests on stdin and
// writes replies on stdout, one UTF-8 JSON object per line:
//
//   {"kind":"hello","id":0,"payload":{"protocol":1}}          tuner -> child
//   {"kind":"space","id":1,"payload":<search space document>}  tuner -> child
//   {"kind":"hello","id":0,"payload":{"protocol":1}}          child -> tuner (ack)
//   {"kind":"eval","id":3,"payload":{"C":1.5,"kernel":"rbf"}}  tuner -> child
//   {"kind":"result","id":3,"payload":{"loss":0.41}}          child -> tuner
//   {"kind":"error","id":3,"payload":{"message":"..."}}       child -> tuner
//   {"kind":"shutdown","id":9,"payload":{}}                   tuner -> child
//
// Replies correlate by id and may arrive in any order.

namespace hiertune {

enum class WireKind { Hello, Space, Eval, Result, Error, Shutdown };

std::string_view to_string(WireKind kind);

struct WireMessage {
    WireKind kind = WireKind::Hello;
    std::int64_t id = 0;
    json payload = json::object();

    /// Single line, no trailing newline, fields in kind/id/payload order.
    std::string encode() const;
    /// Throws SessionError on malformed input.
    static WireMessage decode(std::string_view line);
};

constexpr int kProtocolVersion = 1;

struct SessionOptions {
    std::chrono::milliseconds response_timeout{30000};
    std::chrono::milliseconds shutdown_grace{5000};
};

/// A running evaluator process. Shareable across threads; requests are
/// multiplexed by id.
class EvaluatorSession {
public:
    /// Starts `/bin/sh -c "exec <command>"`, performs the hello/space
    /// handshake and waits for the hello ack. Throws SessionError.
    static std::shared_ptr<EvaluatorSession> spawn(const std::string& command, const SearchSpace& space,
                                                   SessionOptions options = {});

    ~EvaluatorSession();
    EvaluatorSession(const EvaluatorSession&) = delete;
    EvaluatorSession& operator=(const EvaluatorSession&) = delete;

    /// Sends `eval` and blocks for its reply. An `error` reply raises
    /// EvaluationError; exit, malformed output, non-finite loss or timeout
    /// raise SessionError.
    double evaluate(const Assignment& assignment);

    /// Sends `shutdown` and waits for the child to exit, killing it after the
    /// grace period. Returns true iff it exited on its own. Idempotent.
    bool close();

    bool alive() const;
    int pid() const noexcept { return pid_; }
    const std::string& command() const noexcept { return command_; }

private:
    struct Reply {
        enum class Status { Loss, EvalError, SessionFailure } status = Status::Loss;
        double loss = 0.0;
        std::string message;
    };

    EvaluatorSession(std::string command, SessionOptions options);

    void start(const SearchSpace& space);
    void send(const WireMessage& message);
    void reader_loop();
    void handle_line(std::string_view line);
    void fail(const std::string& reason);

    std::string command_;
    SessionOptions options_;
    int fd_ = -1;
    int pid_ = -1;
    std::thread reader_;

    std::mutex write_mutex_;
    mutable std::mutex state_mutex_;
    std::int64_t next_id_ = 0;
    std::map<std::int64_t, std::shared_ptr<std::promise<Reply>>> pending_;
    std::promise<void> hello_ack_;
    bool hello_seen_ = false;
    bool broken_ = false;
    std::string broken_reason_;

    std::mutex close_mutex_;
    bool closed_ = false;
    bool exited_cleanly_ = false;
};

/// Objective handle backed by a session. Copies share the session.
Objective make_session_objective(std::shared_ptr<EvaluatorSession> session, std::string name,
                                 const SearchSpace& space);

/// Resolves "extproc:<command>" by spawning the evaluator for `space`.
Objective make_extproc_objective(std::string_view objective_name, const SearchSpace& space,
                                 SessionOptions options = {});

struct ConformanceCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Runs a protocol conformance pass against an evaluator command: handshake,
/// eval/result correlation under concurrent requests, deterministic replies
/// and shutdown within the grace period.
std::vector<ConformanceCheck> check_evaluator_conformance(const std::string& command, const SearchSpace& space,
                                                          SessionOptions options = {});

}  // namespace hiertune

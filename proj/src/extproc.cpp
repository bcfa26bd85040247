#include "hiertune/extproc.hpp"

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "hiertune/errors.hpp"
#include "hiertune/rng.hpp"
#include "hiertune/grat.hpp"

namespace hiertune {

std::string_view to_string(WireKind kind) {
    switch (kind) {
        case WireKind::Hello: return "hello";
        case WireKind::Space: return "space";
        case WireKind::Eval: return "eval";
        case WireKind::Result: return "result";
        case WireKind::Error: return "error";
        case WireKind::Shutdown: return "shutdown";
    }
    return "?";
}

namespace {

WireKind parse_kind(std::string_view text) {
    for (auto kind : {WireKind::Hello, WireKind::Space, WireKind::Eval, WireKind::Result, WireKind::Error,
                      WireKind::Shutdown}) {
        if (to_string(kind) == text) return kind;
    }
    throw SessionError("unknown message kind '" + std::string(text) + "'");
}

}  // namespace

std::string WireMessage::encode() const {
    json doc;
    doc["kind"] = to_string(kind);
    doc["id"] = id;
    doc["payload"] = payload;
    return doc.dump(-1, ' ', false, json::error_handler_t::replace);
}

WireMessage WireMessage::decode(std::string_view line) {
    json doc = json::parse(line.begin(), line.end(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw SessionError("malformed line from evaluator: " + std::string(line.substr(0, 200)));
    }
    if (!doc.contains("kind") || !doc["kind"].is_string() || !doc.contains("id") ||
        !doc["id"].is_number_integer() || !doc.contains("payload") || !doc["payload"].is_object()) {
        throw SessionError("message lacks kind/id/payload: " + std::string(line.substr(0, 200)));
    }
    return WireMessage{parse_kind(doc["kind"].get<std::string>()), doc["id"].get<std::int64_t>(), doc["payload"]};
}

// ---------------------------------------------------------------------------

EvaluatorSession::EvaluatorSession(std::string command, SessionOptions options)
    : command_(std::move(command)), options_(options) {}

std::shared_ptr<EvaluatorSession> EvaluatorSession::spawn(const std::string& command, const SearchSpace& space,
                                                          SessionOptions options) {
    std::shared_ptr<EvaluatorSession> session(new EvaluatorSession(command, options));
    session->start(space);
    return session;
}

void EvaluatorSession::start(const SearchSpace& space) {
    int sv[2];
    if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0) {
        throw SessionError(std::string("socketpair failed: ") + std::strerror(errno));
    }
    const std::string script = "exec " + command_;
    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(sv[0]);
        ::close(sv[1]);
        throw SessionError(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid == 0) {
        // Only async-signal-safe calls until exec.
        ::dup2(sv[1], STDIN_FILENO);
        ::dup2(sv[1], STDOUT_FILENO);
        ::execl("/bin/sh", "sh", "-c", script.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::close(sv[1]);
    fd_ = sv[0];
    pid_ = pid;
    reader_ = std::thread([this] { reader_loop(); });

    auto ack = hello_ack_.get_future();
    try {
        send(WireMessage{WireKind::Hello, next_id_++, json{{"protocol", kProtocolVersion}}});
        send(WireMessage{WireKind::Space, next_id_++, space.to_json()});
    } catch (const SessionError&) {
        close();
        throw;
    }
    if (ack.wait_for(options_.response_timeout) != std::future_status::ready) {
        close();
        throw SessionError("evaluator '" + command_ + "' did not acknowledge hello within " +
                           std::to_string(options_.response_timeout.count()) + " ms");
    }
    std::string reason;
    {
        std::lock_guard lock(state_mutex_);
        if (broken_) reason = broken_reason_;
    }
    if (!reason.empty()) {
        close();
        throw SessionError("evaluator handshake failed: " + reason);
    }
}

EvaluatorSession::~EvaluatorSession() {
    close();
}

void EvaluatorSession::send(const WireMessage& message) {
    const std::string line = message.encode() + "\n";
    std::lock_guard lock(write_mutex_);
    std::size_t written = 0;
    while (written < line.size()) {
        const ssize_t n = ::send(fd_, line.data() + written, line.size() - written, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw SessionError(std::string("write to evaluator failed: ") + std::strerror(errno));
        }
        written += static_cast<std::size_t>(n);
    }
}

void EvaluatorSession::reader_loop() {
    std::string buffer;
    char chunk[4096];
    for (;;) {
        const ssize_t n = ::read(fd_, chunk, sizeof chunk);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) {
            fail(n == 0 ? "evaluator process exited" : std::string("read failed: ") + std::strerror(errno));
            return;
        }
        buffer.append(chunk, static_cast<std::size_t>(n));
        std::size_t start = 0;
        for (std::size_t nl; (nl = buffer.find('\n', start)) != std::string::npos; start = nl + 1) {
            std::string_view line(buffer.data() + start, nl - start);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            if (!line.empty()) handle_line(line);
        }
        buffer.erase(0, start);
    }
}

void EvaluatorSession::handle_line(std::string_view line) {
    WireMessage message;
    try {
        message = WireMessage::decode(line);
    } catch (const SessionError& e) {
        fail(e.what());
        return;
    }

    std::lock_guard lock(state_mutex_);
    if (message.kind == WireKind::Hello) {
        if (!hello_seen_) {
            hello_seen_ = true;
            hello_ack_.set_value();
        }
        return;
    }
    if (message.kind != WireKind::Result && message.kind != WireKind::Error) return;

    auto it = pending_.find(message.id);
    if (it == pending_.end()) return;  // reply to a request that already timed out
    Reply reply;
    if (message.kind == WireKind::Error) {
        reply.status = Reply::Status::EvalError;
        const auto& p = message.payload;
        reply.message = p.contains("message") && p["message"].is_string() ? p["message"].get<std::string>()
                                                                          : p.dump();
    } else {
        const auto& p = message.payload;
        if (p.contains("loss") && p["loss"].is_number() && std::isfinite(p["loss"].get<double>())) {
            reply.loss = p["loss"].get<double>();
        } else {
            reply.status = Reply::Status::SessionFailure;
            reply.message = "protocol error: result " + std::to_string(message.id) + " lacks a finite loss";
        }
    }
    it->second->set_value(std::move(reply));
    pending_.erase(it);
}

void EvaluatorSession::fail(const std::string& reason) {
    std::lock_guard lock(state_mutex_);
    if (!broken_) {
        broken_ = true;
        broken_reason_ = reason;
    }
    for (auto& [id, promise] : pending_) {
        promise->set_value(Reply{Reply::Status::SessionFailure, 0.0, broken_reason_});
    }
    pending_.clear();
    if (!hello_seen_) {
        hello_seen_ = true;
        hello_ack_.set_value();
    }
}

double EvaluatorSession::evaluate(const Assignment& assignment) {
    auto promise = std::make_shared<std::promise<Reply>>();
    auto reply_future = promise->get_future();
    std::int64_t id;
    {
        std::lock_guard lock(state_mutex_);
        if (broken_) throw SessionError("evaluator session unusable: " + broken_reason_);
        id = next_id_++;
        pending_.emplace(id, promise);
    }
    send(WireMessage{WireKind::Eval, id, assignment.to_json()});

    if (reply_future.wait_for(options_.response_timeout) != std::future_status::ready) {
        std::lock_guard lock(state_mutex_);
        if (pending_.erase(id) > 0) {
            throw SessionError("evaluator gave no reply to eval " + std::to_string(id) + " within " +
                               std::to_string(options_.response_timeout.count()) + " ms");
        }
        // The reply raced the timeout and is already set.
    }
    Reply reply = reply_future.get();
    switch (reply.status) {
        case Reply::Status::Loss: return reply.loss;
        case Reply::Status::EvalError:
            throw EvaluationError("evaluator reported an error for eval " + std::to_string(id) + " " +
                                  describe(assignment) + ": " + reply.message);
        case Reply::Status::SessionFailure: break;
    }
    throw SessionError(reply.message);
}

bool EvaluatorSession::alive() const {
    std::lock_guard lock(state_mutex_);
    return !broken_;
}

bool EvaluatorSession::close() {
    std::lock_guard lock(close_mutex_);
    if (closed_) return exited_cleanly_;
    closed_ = true;
    if (pid_ < 0) return false;

    std::int64_t id;
    {
        std::lock_guard state(state_mutex_);
        id = next_id_++;
    }
    try {
        send(WireMessage{WireKind::Shutdown, id, json::object()});
    } catch (const SessionError&) {
        // Child already gone; reaping below still applies.
    }
    ::shutdown(fd_, SHUT_WR);

    const auto deadline = std::chrono::steady_clock::now() + options_.shutdown_grace;
    int status = 0;
    bool exited = false;
    for (;;) {
        const pid_t r = ::waitpid(pid_, &status, WNOHANG);
        if (r == pid_ || (r < 0 && errno == ECHILD)) {
            exited = true;
            break;
        }
        if (std::chrono::steady_clock::now() >= deadline) break;
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (!exited) {
        ::kill(pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
    }
    exited_cleanly_ = exited;

    ::shutdown(fd_, SHUT_RDWR);
    if (reader_.joinable()) reader_.join();
    ::close(fd_);
    fail("evaluator session closed");
    return exited_cleanly_;
}

// ---------------------------------------------------------------------------

Objective make_session_objective(std::shared_ptr<EvaluatorSession> session, std::string name,
                                 const SearchSpace& space) {
    return Objective{std::move(name), space,
                     [session = std::move(session)](const Assignment& a) { return session->evaluate(a); }};
}

Objective make_extproc_objective(std::string_view objective_name, const SearchSpace& space, SessionOptions options) {
    constexpr std::string_view prefix = "extproc:";
    if (!objective_name.starts_with(prefix) || objective_name.size() == prefix.size()) {
        throw UsageError("external objective must be written 'extproc:<command>'");
    }
    auto session = EvaluatorSession::spawn(std::string(objective_name.substr(prefix.size())), space, options);
    return make_session_objective(std::move(session), std::string(objective_name), space);
}

std::vector<ConformanceCheck> check_evaluator_conformance(const std::string& command, const SearchSpace& space,
                                                          SessionOptions options) {
    std::vector<ConformanceCheck> checks;
    std::shared_ptr<EvaluatorSession> session;
    try {
        session = EvaluatorSession::spawn(command, space, options);
        checks.push_back({"handshake", true, "hello acknowledged"});
    } catch (const Error& e) {
        checks.push_back({"handshake", false, e.what()});
        return checks;
    }

    // Distinct sample points; errors are legal replies, so record either outcome.
    Rng rng(derive_seed(0x5eed, 1));
    std::vector<Assignment> points;
    for (int i = 0; i < 4; ++i) {
        Assignment a = space.fixed();
        for (const auto& name : space.objective_ordered()) a.set(name, uniform_rand_slot(space.spec(name), 1, 1, rng));
        points.push_back(std::move(a));
    }
    struct Outcome {
        bool ok = false;
        bool eval_error = false;
        double loss = 0.0;
        std::string message;
    };
    auto run = [&](const Assignment& a) {
        Outcome o;
        try {
            o.loss = session->evaluate(a);
            o.ok = true;
        } catch (const EvaluationError& e) {
            o.eval_error = true;
            o.message = e.what();
        } catch (const Error& e) {
            o.message = e.what();
        }
        return o;
    };

    const Outcome single = run(points[0]);
    checks.push_back({"eval-reply", single.ok || single.eval_error,
                      single.ok ? "loss " + std::to_string(single.loss) : single.message});

    std::vector<std::future<Outcome>> inflight;
    for (const auto& p : points) inflight.push_back(std::async(std::launch::async, run, std::cref(p)));
    std::vector<Outcome> concurrent;
    for (auto& f : inflight) concurrent.push_back(f.get());
    bool correlated = true;
    std::string detail = "4 concurrent requests answered and matched sequential replays";
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Outcome again = run(points[i]);
        const bool answered = concurrent[i].ok || concurrent[i].eval_error;
        const bool same = concurrent[i].ok == again.ok && (!again.ok || concurrent[i].loss == again.loss);
        if (!answered || !same) {
            correlated = false;
            detail = "request " + std::to_string(i) + ": " +
                     (answered ? "reply differs from sequential replay" : concurrent[i].message);
            break;
        }
    }
    checks.push_back({"id-correlation", correlated, detail});

    const bool clean = session->close();
    checks.push_back({"shutdown", clean,
                      clean ? "exited after shutdown" : "did not exit within the grace period; killed"});
    return checks;
}

}  // namespace hiertune

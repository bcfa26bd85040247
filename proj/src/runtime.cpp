#include "hiertune/runtime.hpp"

#include <exception>
#include <future>
#include <memory>

#include "hiertune/errors.hpp"
#include "hiertune/rng.hpp"

namespace hiertune {

json TuningReport::to_json() const {
    json doc;
    doc["incumbent"] = incumbent.to_json();
    doc["incumbent_response"] = incumbent_response;
    doc["iterations_run"] = iterations_run;
    doc["last_best_iteration"] = last_best_iteration;
    doc["evaluations"] = evaluations;
    json rows = json::array();
    for (const auto& e : trace) rows.push_back(json::array({e.iteration, e.incumbent, e.fresh_evaluations}));
    doc["trace"] = std::move(rows);
    return doc;
}

bool should_stop(const StopCriteria& criteria, std::span<const TraceEntry> trace) {
    if (trace.empty()) return false;
    if (static_cast<int>(trace.size()) >= criteria.max_iterations) return true;
    if (criteria.target && trace.back().incumbent <= *criteria.target) return true;
    if (criteria.patience) {
        int stalled = 0;
        for (std::size_t k = trace.size() - 1; k > 0; --k) {
            if (trace[k].incumbent < trace[k - 1].incumbent) break;
            ++stalled;
        }
        if (stalled >= *criteria.patience) return true;
    }
    return false;
}

std::string_view to_string(MessageKind kind) {
    return kind == MessageKind::Ask ? "ask" : "inform";
}

void MessageProbe::record(const MessageEvent& event) {
    std::lock_guard lock(mutex_);
    ++sent_[{event.iteration, event.from, event.kind}];
    ++received_[{event.iteration, event.to, event.kind}];
}

int MessageProbe::sent(int iteration, int node, MessageKind kind) const {
    std::lock_guard lock(mutex_);
    auto it = sent_.find({iteration, node, kind});
    return it == sent_.end() ? 0 : it->second;
}

int MessageProbe::received(int iteration, int node, MessageKind kind) const {
    std::lock_guard lock(mutex_);
    auto it = received_.find({iteration, node, kind});
    return it == received_.end() ? 0 : it->second;
}

std::int64_t MessageProbe::total() const {
    std::lock_guard lock(mutex_);
    std::int64_t n = 0;
    for (const auto& [key, count] : sent_) n += count;
    return n;
}

namespace {

enum class Phase { Start, Tune };

/// Ask payload: the feedback restricted to the receiver's primary set.
struct TuneRequest {
    Phase phase = Phase::Tune;
    int iteration = 0;
    std::map<std::string, Assignment> feedback;
    int omega = 1;
};

/// Inform payload.
struct TuneResult {
    int iteration = 0;
    SubResultSet results;
};

struct Context {
    const Hierarchy& tree;
    const TuningQuery& query;
    const Objective& objective;
    EvaluationLedger& ledger;
    const RuntimeOptions& options;

    void notify(int iteration, int from, int to, MessageKind kind) const {
        if (options.on_message) options.on_message(MessageEvent{iteration, from, to, kind});
    }
};

class Agent {
public:
    Agent(const HierarchyNode& node, const Context& ctx, std::uint64_t seed) : node_(node), ctx_(ctx), rng_(seed) {}

    void connect(std::vector<Agent*> children) { children_ = std::move(children); }

    TuneResult ask(const TuneRequest& request) {
        std::lock_guard lock(mutex_);
        TuneResult result = node_.terminal() ? run_terminal(request) : run_internal(request);
        if (node_.parent) ctx_.notify(request.iteration, node_.id, *node_.parent, MessageKind::Inform);
        return result;
    }

private:
    TuneResult run_terminal(const TuneRequest& request) {
        const auto& param = node_.primary.front();
        if (request.phase == Phase::Start) {
            // Bootstrap: report the user-supplied start point.
            const auto& start = ctx_.query.initial_values;
            double value = 0.0;
            try {
                value = ctx_.ledger.evaluate(ctx_.objective, start);
            } catch (const BudgetExhaustedError&) {
                throw;
            } catch (const EvaluationError& e) {
                throw AgentFailure(node_.id, param, describe(start), e.what());
            } catch (const SessionError& e) {
                throw AgentFailure(node_.id, param, describe(start), e.what());
            }
            return {request.iteration, {SubResult{param, start, value}}};
        }
        const auto& start = request.feedback.at(param);
        auto sub = run_tuning_algorithm(ctx_.query.space, node_, start, ctx_.query.eta, request.omega, ctx_.objective,
                                        ctx_.ledger, rng_);
        return {request.iteration, {std::move(sub)}};
    }

    TuneResult run_internal(const TuneRequest& request) {
        std::vector<TuneRequest> asks;
        asks.reserve(children_.size());
        for (const Agent* child : children_) {
            TuneRequest ask{request.phase, request.iteration, {}, request.omega};
            if (request.phase == Phase::Tune) {
                for (const auto& name : child->node_.primary) ask.feedback.emplace(name, request.feedback.at(name));
            }
            asks.push_back(std::move(ask));
        }

        std::vector<SubResultSet> parts(children_.size());
        std::vector<std::exception_ptr> errors(children_.size());
        std::vector<std::future<void>> pending;
        auto run_child = [&](std::size_t i) {
            try {
                parts[i] = children_[i]->ask(asks[i]).results;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        };
        for (std::size_t i = 0; i < children_.size(); ++i) {
            ctx_.notify(request.iteration, node_.id, children_[i]->node_.id, MessageKind::Ask);
            if (ctx_.options.concurrent && i > 0) {
                pending.push_back(std::async(std::launch::async, run_child, i));
            }
        }
        run_child(0);
        if (!ctx_.options.concurrent) {
            for (std::size_t i = 1; i < children_.size(); ++i) run_child(i);
        }
        for (auto& f : pending) f.get();
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
        return {request.iteration, aggregate_results(parts)};
    }

    const HierarchyNode& node_;
    const Context& ctx_;
    Rng rng_;
    std::mutex mutex_;
    std::vector<Agent*> children_;
};

const SubResult& best_of(const SearchSpace& space, const SubResultSet& results) {
    const SubResult* best = nullptr;
    for (const auto& name : space.objective_ordered()) {
        for (const auto& r : results) {
            if (r.param == name && (best == nullptr || r.best_response < best->best_response)) best = &r;
        }
    }
    if (best == nullptr) throw IncompleteResultsError("no results reached the root");
    return *best;
}

}  // namespace

TuningReport tune(const Hierarchy& tree, const TuningQuery& query, const Objective& objective,
                  std::uint64_t master_seed, EvaluationLedger& ledger, const RuntimeOptions& options) {
    query.validate();
    if (tree.root().primary != query.space.objective_ordered()) {
        throw InvalidQueryError("tree was not built for this query's objective set");
    }

    const Context ctx{tree, query, objective, ledger, options};
    std::vector<std::unique_ptr<Agent>> agents;
    agents.reserve(tree.size());
    for (const auto& node : tree.nodes()) {
        agents.push_back(std::make_unique<Agent>(node, ctx, derive_seed(master_seed, static_cast<std::uint64_t>(node.id))));
    }
    for (const auto& node : tree.nodes()) {
        std::vector<Agent*> children;
        for (int c : node.children) children.push_back(agents[static_cast<std::size_t>(c)].get());
        agents[static_cast<std::size_t>(node.id)]->connect(std::move(children));
    }
    Agent& root = *agents.front();

    const std::int64_t start_count = ledger.count();
    int omega = query.omega;

    auto boot = root.ask(TuneRequest{Phase::Start, 0, {}, omega}).results;
    Feedback feedback = prepare_feedback(query.space, boot);

    TuningReport report;
    {
        const auto& first = best_of(query.space, boot);
        report.incumbent = first.best_assignment;
        report.incumbent_response = first.best_response;
    }

    std::vector<double> history;
    for (int iteration = 1;; ++iteration) {
        const std::int64_t before = ledger.count();
        auto results = root.ask(TuneRequest{Phase::Tune, iteration, std::move(feedback.per_param), omega}).results;

        const auto& best = best_of(query.space, results);
        if (best.best_response < report.incumbent_response) {
            report.incumbent = best.best_assignment;
            report.incumbent_response = best.best_response;
            report.last_best_iteration = iteration;
        }
        report.trace.push_back({iteration, report.incumbent_response, ledger.count() - before});
        history.push_back(report.incumbent_response);

        if (should_stop(query.stop, report.trace)) break;
        feedback = prepare_feedback(query.space, results);
        omega = adapt_omega(history, omega, options.omega_policy);
    }

    report.iterations_run = static_cast<int>(report.trace.size());
    report.evaluations = ledger.count() - start_count;
    return report;
}

TuningReport tune(const Hierarchy& tree, const TuningQuery& query, const Objective& objective,
                  std::uint64_t master_seed, const RuntimeOptions& options) {
    EvaluationLedger ledger;
    return tune(tree, query, objective, master_seed, ledger, options);
}

}  // namespace hiertune

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "hiertune/domain.hpp"
#include "hiertune/grat.hpp"
#include "hiertune/hierarchy.hpp"
#include "hiertune/objectives.hpp"

namespace hiertune {

struct TraceEntry {
    int iteration = 0;
    double incumbent = 0.0;
    std::int64_t fresh_evaluations = 0;

    friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct TuningReport {
    Assignment incumbent;
    double incumbent_response = 0.0;
    int iterations_run = 0;
    /// Iteration at which the incumbent last improved (0 = never beat the start).
    int last_best_iteration = 0;
    std::int64_t evaluations = 0;
    std::vector<TraceEntry> trace;

    json to_json() const;

    friend bool operator==(const TuningReport&, const TuningReport&) = default;
};

/// True iff the trace reached max_iterations, the incumbent has not improved
/// for `patience` consecutive entries, or the incumbent reached `target`.
bool should_stop(const StopCriteria& criteria, std::span<const TraceEntry> trace);

enum class MessageKind { Ask, Inform };
std::string_view to_string(MessageKind kind);

/// One message between agents. Iteration 0 is the bootstrap (start) phase.
struct MessageEvent {
    int iteration = 0;
    int from = 0;
    int to = 0;
    MessageKind kind = MessageKind::Ask;
};

/// Counts messages per (iteration, sender, kind). Thread-safe.
class MessageProbe {
public:
    void record(const MessageEvent& event);
    int sent(int iteration, int node, MessageKind kind) const;
    int received(int iteration, int node, MessageKind kind) const;
    std::int64_t total() const;

private:
    mutable std::mutex mutex_;
    std::map<std::tuple<int, int, MessageKind>, int> sent_;
    std::map<std::tuple<int, int, MessageKind>, int> received_;
};

struct RuntimeOptions {
    /// Run sibling subtrees on separate threads.
    bool concurrent = true;
    OmegaPolicy omega_policy;
    /// Called for every Ask/Inform; may be called from several threads.
    std::function<void(const MessageEvent&)> on_message;
};

/// Drives the iterative tuning over a built tree. Fresh evaluations are
/// counted through `ledger`; the report's `evaluations` is the ledger delta.
/// The result depends only on the inputs and `master_seed`, never on thread
/// scheduling.
TuningReport tune(const Hierarchy& tree, const TuningQuery& query, const Objective& objective,
                  std::uint64_t master_seed, EvaluationLedger& ledger, const RuntimeOptions& options = {});

TuningReport tune(const Hierarchy& tree, const TuningQuery& query, const Objective& objective,
                  std::uint64_t master_seed, const RuntimeOptions& options = {});

}  // namespace hiertune

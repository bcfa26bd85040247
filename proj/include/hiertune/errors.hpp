#pragma once

#include <stdexcept>
#include <string>

namespace hiertune {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define HIERTUNE_DECLARE_ERROR(name, base)   \
    class name : public base {               \
    public:                                  \
        using base::base;                    \
    }

/// Malformed search space document or inconsistent space definition.
HIERTUNE_DECLARE_ERROR(SpaceError, Error);
/// Value outside its declared domain (benchmark box, parameter range).
HIERTUNE_DECLARE_ERROR(DomainError, Error);
HIERTUNE_DECLARE_ERROR(EmptySpaceError, Error);
HIERTUNE_DECLARE_ERROR(InvalidDivisionError, Error);
HIERTUNE_DECLARE_ERROR(InvalidQueryError, Error);
HIERTUNE_DECLARE_ERROR(DuplicateParamError, Error);
HIERTUNE_DECLARE_ERROR(IncompleteResultsError, Error);
HIERTUNE_DECLARE_ERROR(InvalidSlotError, Error);
HIERTUNE_DECLARE_ERROR(BudgetExhaustedError, Error);
/// The objective failed to produce a loss for an assignment.
HIERTUNE_DECLARE_ERROR(EvaluationError, Error);
/// The external evaluator process is unusable (exited, malformed output, timeout).
HIERTUNE_DECLARE_ERROR(SessionError, Error);
HIERTUNE_DECLARE_ERROR(UsageError, Error);

#undef HIERTUNE_DECLARE_ERROR

/// Raised by the runtime when a terminal agent's evaluation fails; names the
/// agent and the offending candidate.
class AgentFailure : public EvaluationError {
public:
    AgentFailure(int node_id, std::string param, std::string candidate, const std::string& cause)
        : EvaluationError("agent " + std::to_string(node_id) + " (" + param + ") failed on candidate " +
                          candidate + ": " + cause),
          node_id_(node_id),
          param_(std::move(param)),
          candidate_(std::move(candidate)) {}

    int node_id() const noexcept { return node_id_; }
    const std::string& param() const noexcept { return param_; }
    const std::string& candidate() const noexcept { return candidate_; }

private:
    int node_id_;
    std::string param_;
    std::string candidate_;
};

}  // namespace hiertune

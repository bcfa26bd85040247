#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hiertune/domain.hpp"

namespace hiertune {

/// One agent of the tuning tree. `primary` is the subset the agent is
/// responsible for; `complement` the other objective parameters it still
/// carries values for. Both are kept in declaration order.
struct HierarchyNode {
    int id = 0;
    int level = 0;
    std::vector<std::string> primary;
    std::vector<std::string> complement;
    std::optional<int> parent;
    std::vector<int> children;

    bool terminal() const noexcept { return primary.size() == 1; }

    friend bool operator==(const HierarchyNode&, const HierarchyNode&) = default;
};

struct StopCriteria {
    int max_iterations = 1;
    /// Stop after this many consecutive iterations without improvement.
    std::optional<int> patience;
    /// Stop once the incumbent is at or below this value.
    std::optional<double> target;
};

struct TuningQuery {
    SearchSpace space;
    Assignment initial_values;
    int c = 2;
    std::optional<int> budget;  ///< Per-agent child budget; unset = unbounded.
    int eta = 10;
    int omega = 3;
    StopCriteria stop;

    /// Throws InvalidQueryError on c <= 1, eta < 1, omega < 1, budget < 2,
    /// max_iterations < 1 or an invalid initial assignment.
    void validate() const;
};

/// Immutable agent tree. Node ids are breadth-first, root = 0.
class Hierarchy {
public:
    explicit Hierarchy(std::vector<HierarchyNode> nodes) : nodes_(std::move(nodes)) {}

    const HierarchyNode& root() const { return nodes_.front(); }
    const HierarchyNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    const std::vector<HierarchyNode>& nodes() const noexcept { return nodes_; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Largest node level (0 for a single-node tree).
    int height() const;
    std::vector<int> terminals() const;

    json to_json() const;

    friend bool operator==(const Hierarchy&, const Hierarchy&) = default;

private:
    std::vector<HierarchyNode> nodes_;
};

/// The i-th block (1-based) of the balanced contiguous partition of `primary`
/// into k blocks; larger blocks come first.
std::vector<std::string> divide(std::span<const std::string> primary, int i, int k);

/// Builds the tree by recursive primary/complement division of the objective
/// set. Each internal node gets min(c, |primary|, budget) children.
Hierarchy build_hierarchy(std::span<const std::string> objective, int c,
                          std::optional<int> budget = std::nullopt);

Hierarchy build_hierarchy(const TuningQuery& query);

}  // namespace hiertune

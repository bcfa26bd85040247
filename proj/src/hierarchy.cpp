#include "hiertune/hierarchy.hpp"

#include <algorithm>
#include <deque>

#include "hiertune/errors.hpp"

namespace hiertune {

void TuningQuery::validate() const {
    if (c <= 1) throw InvalidQueryError("c must be greater than 1");
    if (eta < 1) throw InvalidQueryError("eta must be at least 1");
    if (omega < 1) throw InvalidQueryError("omega must be at least 1");
    // A budget of 1 would give an internal node a single child with the same
    // primary set, and the division would never terminate.
    if (budget && *budget < 2) throw InvalidQueryError("agent budget must be at least 2");
    if (stop.max_iterations < 1) throw InvalidQueryError("max_iterations must be at least 1");
    if (stop.patience && *stop.patience < 1) throw InvalidQueryError("patience must be at least 1");
    auto violations = validate_assignment(space, initial_values);
    if (!violations.empty()) {
        std::string msg = "initial assignment is invalid:";
        for (const auto& v : violations) msg += " " + v.name + " (" + std::string(to_string(v.kind)) + ")";
        throw InvalidQueryError(msg);
    }
    for (const auto& [name, value] : space.fixed()) {
        if (initial_values.at(name) != value) {
            throw InvalidQueryError("initial value of fixed parameter '" + name + "' differs from its fixed value");
        }
    }
}

int Hierarchy::height() const {
    int h = 0;
    for (const auto& n : nodes_) h = std::max(h, n.level);
    return h;
}

std::vector<int> Hierarchy::terminals() const {
    std::vector<int> out;
    for (const auto& n : nodes_) {
        if (n.terminal()) out.push_back(n.id);
    }
    return out;
}

json Hierarchy::to_json() const {
    json nodes = json::array();
    for (const auto& n : nodes_) {
        json entry;
        entry["id"] = n.id;
        entry["level"] = n.level;
        entry["primary"] = n.primary;
        entry["complement"] = n.complement;
        entry["parent"] = n.parent ? json(*n.parent) : json(nullptr);
        entry["children"] = n.children;
        nodes.push_back(std::move(entry));
    }
    json doc;
    doc["height"] = height();
    doc["nodes"] = std::move(nodes);
    return doc;
}

std::vector<std::string> divide(std::span<const std::string> primary, int i, int k) {
    const int n = static_cast<int>(primary.size());
    if (k < 1 || k > n) {
        throw InvalidDivisionError("cannot divide " + std::to_string(n) + " parameters into " + std::to_string(k) +
                                   " blocks");
    }
    if (i < 1 || i > k) throw InvalidDivisionError("block index " + std::to_string(i) + " outside 1.." + std::to_string(k));
    const int base = n / k;
    const int extra = n % k;  // the first `extra` blocks get one more element
    const int block = i - 1;
    const int begin = block * base + std::min(block, extra);
    const int size = base + (block < extra ? 1 : 0);
    return {primary.begin() + begin, primary.begin() + begin + size};
}

Hierarchy build_hierarchy(std::span<const std::string> objective, int c, std::optional<int> budget) {
    if (objective.empty()) throw EmptySpaceError("objective parameter set is empty");
    if (c <= 1) throw InvalidQueryError("c must be greater than 1");
    if (budget && *budget < 2) throw InvalidQueryError("agent budget must be at least 2");

    std::vector<HierarchyNode> nodes;
    HierarchyNode root;
    root.id = 0;
    root.primary.assign(objective.begin(), objective.end());
    nodes.push_back(std::move(root));

    // Breadth-first expansion assigns ids level by level.
    std::deque<int> pending{0};
    while (!pending.empty()) {
        const int id = pending.front();
        pending.pop_front();
        if (nodes[static_cast<std::size_t>(id)].terminal()) continue;

        const auto primary = nodes[static_cast<std::size_t>(id)].primary;
        const auto complement = nodes[static_cast<std::size_t>(id)].complement;
        int k = std::min(c, static_cast<int>(primary.size()));
        if (budget) k = std::min(k, *budget);

        for (int i = 1; i <= k; ++i) {
            HierarchyNode child;
            child.id = static_cast<int>(nodes.size());
            child.level = nodes[static_cast<std::size_t>(id)].level + 1;
            child.parent = id;
            child.primary = divide(primary, i, k);
            // complement_i = (primary - primary_i) U complement, kept in declaration order
            // by merging against the objective order.
            for (const auto& name : objective) {
                const bool in_parent_primary = std::find(primary.begin(), primary.end(), name) != primary.end();
                const bool in_child_primary =
                    std::find(child.primary.begin(), child.primary.end(), name) != child.primary.end();
                const bool in_parent_complement =
                    std::find(complement.begin(), complement.end(), name) != complement.end();
                if ((in_parent_primary && !in_child_primary) || in_parent_complement) {
                    child.complement.push_back(name);
                }
            }
            nodes[static_cast<std::size_t>(id)].children.push_back(child.id);
            pending.push_back(child.id);
            nodes.push_back(std::move(child));
        }
    }
    return Hierarchy(std::move(nodes));
}

Hierarchy build_hierarchy(const TuningQuery& query) {
    query.validate();
    return build_hierarchy(query.space.objective_ordered(), query.c, query.budget);
}

}  // namespace hiertune

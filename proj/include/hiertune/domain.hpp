#pragma once

#include <cstddef>
#include <initializer_list>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace hiertune {

using json = nlohmann::ordered_json;

/// A hyper-parameter value: a real number or a nominal label.
using Value = std::variant<double, std::string>;

enum class ParamKind { Real, Nominal };
enum class Scale { Linear, Log10 };

std::string_view to_string(ParamKind kind);
std::string_view to_string(Scale scale);

/// One tunable dimension: a real interval (linear or log10 scale) or an
/// ordered set of nominal labels. Immutable after construction.
class HyperParameterSpec {
public:
    static HyperParameterSpec real(std::string name, double lo, double hi, Scale scale = Scale::Linear);
    static HyperParameterSpec nominal(std::string name, std::vector<std::string> values);

    const std::string& name() const noexcept { return name_; }
    ParamKind kind() const noexcept { return kind_; }
    bool is_real() const noexcept { return kind_ == ParamKind::Real; }
    bool is_nominal() const noexcept { return kind_ == ParamKind::Nominal; }

    // Real intervals only.
    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    Scale scale() const noexcept { return scale_; }

    // Nominal only.
    const std::vector<std::string>& labels() const noexcept { return labels_; }
    std::optional<std::size_t> label_index(std::string_view label) const;

    /// True iff `value` has the right type and lies in the domain.
    bool contains(const Value& value) const;

    json to_json() const;
    static HyperParameterSpec from_json(const json& doc);

    friend bool operator==(const HyperParameterSpec&, const HyperParameterSpec&) = default;

private:
    HyperParameterSpec() = default;

    std::string name_;
    ParamKind kind_ = ParamKind::Real;
    double lo_ = 0.0;
    double hi_ = 0.0;
    Scale scale_ = Scale::Linear;
    std::vector<std::string> labels_;
};

/// A value vector keyed by hyper-parameter name. Iteration is in name order.
class Assignment {
public:
    using Map = std::map<std::string, Value, std::less<>>;

    Assignment() = default;
    Assignment(std::initializer_list<Map::value_type> values) : values_(values) {}

    void set(std::string name, Value value) { values_.insert_or_assign(std::move(name), std::move(value)); }
    bool contains(std::string_view name) const { return values_.find(name) != values_.end(); }
    const Value& at(std::string_view name) const;
    double real(std::string_view name) const;
    const std::string& label(std::string_view name) const;

    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }
    Map::const_iterator begin() const noexcept { return values_.begin(); }
    Map::const_iterator end() const noexcept { return values_.end(); }

    json to_json() const;
    static Assignment from_json(const json& doc);

    friend bool operator==(const Assignment&, const Assignment&) = default;

private:
    Map values_;
};

/// The full parameter set: declared specs, the objective subset being tuned
/// and fixed values for the rest. Validated on construction.
class SearchSpace {
public:
    SearchSpace(std::vector<HyperParameterSpec> params, std::vector<std::string> objective, Assignment fixed);

    const std::vector<HyperParameterSpec>& params() const noexcept { return params_; }
    /// Objective names as given in the document.
    const std::vector<std::string>& objective() const noexcept { return objective_; }
    /// Objective names in parameter declaration order; this is the total
    /// order used for division and tie-breaking.
    const std::vector<std::string>& objective_ordered() const noexcept { return objective_ordered_; }
    const Assignment& fixed() const noexcept { return fixed_; }

    const HyperParameterSpec& spec(std::string_view name) const;
    std::optional<std::size_t> index_of(std::string_view name) const;
    bool is_objective(std::string_view name) const;

    json to_json() const;
    static SearchSpace from_json(const json& doc);

    friend bool operator==(const SearchSpace&, const SearchSpace&) = default;

private:
    std::vector<HyperParameterSpec> params_;
    std::vector<std::string> objective_;
    std::vector<std::string> objective_ordered_;
    Assignment fixed_;
};

enum class ViolationKind { Missing, Unknown, WrongType, NotInDomain };
std::string_view to_string(ViolationKind kind);

struct Violation {
    std::string name;
    ViolationKind kind;

    friend bool operator==(const Violation&, const Violation&) = default;
};

/// Empty result means the assignment covers exactly the space's names with
/// in-domain values.
std::vector<Violation> validate_assignment(const SearchSpace& space, const Assignment& assignment);

/// Order-independent cache key. Reals are rendered with 12 significant digits.
std::string canonical_key(const Assignment& assignment);

/// Human-readable rendering used in diagnostics.
std::string describe(const Assignment& assignment);

}  // namespace hiertune

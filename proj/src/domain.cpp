#include "hiertune/domain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "hiertune/errors.hpp"

namespace hiertune {

std::string_view to_string(ParamKind kind) {
    return kind == ParamKind::Real ? "real" : "nominal";
}

std::string_view to_string(Scale scale) {
    return scale == Scale::Linear ? "linear" : "log10";
}

std::string_view to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::Missing: return "missing";
        case ViolationKind::Unknown: return "unknown-name";
        case ViolationKind::WrongType: return "wrong-type";
        case ViolationKind::NotInDomain: return "not-in-domain";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// HyperParameterSpec

HyperParameterSpec HyperParameterSpec::real(std::string name, double lo, double hi, Scale scale) {
    if (name.empty()) throw SpaceError("parameter name must not be empty");
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
        throw SpaceError("parameter '" + name + "': real interval requires finite lo < hi");
    }
    if (scale == Scale::Log10 && !(lo > 0.0)) {
        throw SpaceError("parameter '" + name + "': log10 scale requires lo > 0");
    }
    HyperParameterSpec spec;
    spec.name_ = std::move(name);
    spec.kind_ = ParamKind::Real;
    spec.lo_ = lo;
    spec.hi_ = hi;
    spec.scale_ = scale;
    return spec;
}

HyperParameterSpec HyperParameterSpec::nominal(std::string name, std::vector<std::string> values) {
    if (name.empty()) throw SpaceError("parameter name must not be empty");
    if (values.empty()) throw SpaceError("parameter '" + name + "': nominal value list is empty");
    std::set<std::string_view> seen;
    for (const auto& v : values) {
        if (!seen.insert(v).second) {
            throw SpaceError("parameter '" + name + "': duplicate nominal value '" + v + "'");
        }
    }
    HyperParameterSpec spec;
    spec.name_ = std::move(name);
    spec.kind_ = ParamKind::Nominal;
    spec.labels_ = std::move(values);
    return spec;
}

std::optional<std::size_t> HyperParameterSpec::label_index(std::string_view label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels_.begin());
}

bool HyperParameterSpec::contains(const Value& value) const {
    if (is_real()) {
        const double* v = std::get_if<double>(&value);
        return v != nullptr && std::isfinite(*v) && *v >= lo_ && *v <= hi_;
    }
    const std::string* s = std::get_if<std::string>(&value);
    return s != nullptr && label_index(*s).has_value();
}

json HyperParameterSpec::to_json() const {
    json doc;
    doc["name"] = name_;
    doc["kind"] = to_string(kind_);
    if (is_real()) {
        doc["lo"] = lo_;
        doc["hi"] = hi_;
        doc["scale"] = to_string(scale_);
    } else {
        doc["values"] = labels_;
    }
    return doc;
}

HyperParameterSpec HyperParameterSpec::from_json(const json& doc) {
    try {
        const auto name = doc.at("name").get<std::string>();
        const auto kind = doc.at("kind").get<std::string>();
        if (kind == "real") {
            Scale scale = Scale::Linear;
            if (doc.contains("scale")) {
                const auto s = doc.at("scale").get<std::string>();
                if (s == "log10") {
                    scale = Scale::Log10;
                } else if (s != "linear") {
                    throw SpaceError("parameter '" + name + "': unknown scale '" + s + "'");
                }
            }
            return real(name, doc.at("lo").get<double>(), doc.at("hi").get<double>(), scale);
        }
        if (kind == "nominal") {
            return nominal(name, doc.at("values").get<std::vector<std::string>>());
        }
        throw SpaceError("parameter '" + name + "': unknown kind '" + kind + "'");
    } catch (const json::exception& e) {
        throw SpaceError(std::string("malformed parameter entry: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Assignment

const Value& Assignment::at(std::string_view name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw DomainError("assignment has no value for '" + std::string(name) + "'");
    return it->second;
}

double Assignment::real(std::string_view name) const {
    const auto* v = std::get_if<double>(&at(name));
    if (v == nullptr) throw DomainError("'" + std::string(name) + "' is not a real value");
    return *v;
}

const std::string& Assignment::label(std::string_view name) const {
    const auto* v = std::get_if<std::string>(&at(name));
    if (v == nullptr) throw DomainError("'" + std::string(name) + "' is not a nominal value");
    return *v;
}

namespace {

json value_to_json(const Value& value) {
    if (const auto* d = std::get_if<double>(&value)) return *d;
    return std::get<std::string>(value);
}

Value value_from_json(const std::string& name, const json& doc) {
    if (doc.is_number()) return doc.get<double>();
    if (doc.is_string()) return doc.get<std::string>();
    throw SpaceError("value of '" + name + "' must be a number or a string");
}

}  // namespace

json Assignment::to_json() const {
    json doc = json::object();
    for (const auto& [name, value] : values_) doc[name] = value_to_json(value);
    return doc;
}

Assignment Assignment::from_json(const json& doc) {
    if (!doc.is_object()) throw SpaceError("assignment must be a JSON object");
    Assignment a;
    for (const auto& [name, value] : doc.items()) a.set(name, value_from_json(name, value));
    return a;
}

// ---------------------------------------------------------------------------
// SearchSpace

SearchSpace::SearchSpace(std::vector<HyperParameterSpec> params, std::vector<std::string> objective,
                         Assignment fixed)
    : params_(std::move(params)), objective_(std::move(objective)), fixed_(std::move(fixed)) {
    std::set<std::string_view> names;
    for (const auto& p : params_) {
        if (!names.insert(p.name()).second) throw SpaceError("duplicate parameter name '" + p.name() + "'");
    }
    std::set<std::string_view> objective_names;
    for (const auto& name : objective_) {
        if (!names.contains(name)) throw SpaceError("objective name '" + name + "' is not a declared parameter");
        if (!objective_names.insert(name).second) throw SpaceError("objective name '" + name + "' listed twice");
        if (fixed_.contains(name)) throw SpaceError("'" + name + "' is both objective and fixed");
    }
    for (const auto& [name, value] : fixed_) {
        if (!names.contains(name)) throw SpaceError("fixed name '" + name + "' is not a declared parameter");
    }
    for (const auto& p : params_) {
        const bool in_objective = objective_names.contains(p.name());
        if (!in_objective && !fixed_.contains(p.name())) {
            throw SpaceError("parameter '" + p.name() + "' is neither objective nor fixed");
        }
        if (in_objective) {
            objective_ordered_.push_back(p.name());
        } else if (!p.contains(fixed_.at(p.name()))) {
            throw SpaceError("fixed value of '" + p.name() + "' is outside its domain");
        }
    }
}

const HyperParameterSpec& SearchSpace::spec(std::string_view name) const {
    auto idx = index_of(name);
    if (!idx) throw DomainError("unknown parameter '" + std::string(name) + "'");
    return params_[*idx];
}

std::optional<std::size_t> SearchSpace::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name() == name) return i;
    }
    return std::nullopt;
}

bool SearchSpace::is_objective(std::string_view name) const {
    return std::find(objective_.begin(), objective_.end(), name) != objective_.end();
}

json SearchSpace::to_json() const {
    json doc;
    doc["params"] = json::array();
    for (const auto& p : params_) doc["params"].push_back(p.to_json());
    doc["objective"] = objective_;
    json fixed = json::object();
    // Fixed values in declaration order, so a parsed document re-serializes identically.
    for (const auto& p : params_) {
        if (fixed_.contains(p.name())) fixed[p.name()] = value_to_json(fixed_.at(p.name()));
    }
    doc["fixed"] = std::move(fixed);
    return doc;
}

SearchSpace SearchSpace::from_json(const json& doc) {
    if (!doc.is_object()) throw SpaceError("search space document must be a JSON object");
    try {
        std::vector<HyperParameterSpec> params;
        for (const auto& entry : doc.at("params")) params.push_back(HyperParameterSpec::from_json(entry));
        std::vector<std::string> objective;
        if (doc.contains("objective")) {
            objective = doc.at("objective").get<std::vector<std::string>>();
        } else {
            for (const auto& p : params) objective.push_back(p.name());
        }
        Assignment fixed;
        if (doc.contains("fixed")) fixed = Assignment::from_json(doc.at("fixed"));
        return SearchSpace(std::move(params), std::move(objective), std::move(fixed));
    } catch (const json::exception& e) {
        throw SpaceError(std::string("malformed search space document: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

std::vector<Violation> validate_assignment(const SearchSpace& space, const Assignment& assignment) {
    std::vector<Violation> out;
    for (const auto& p : space.params()) {
        if (!assignment.contains(p.name())) {
            out.push_back({p.name(), ViolationKind::Missing});
            continue;
        }
        const Value& v = assignment.at(p.name());
        const bool type_ok = p.is_real() ? std::holds_alternative<double>(v) : std::holds_alternative<std::string>(v);
        if (!type_ok) {
            out.push_back({p.name(), ViolationKind::WrongType});
        } else if (!p.contains(v)) {
            out.push_back({p.name(), ViolationKind::NotInDomain});
        }
    }
    for (const auto& [name, value] : assignment) {
        if (!space.index_of(name)) out.push_back({name, ViolationKind::Unknown});
    }
    return out;
}

namespace {

std::string render_real(double v) {
    if (v == 0.0) v = 0.0;  // fold -0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

}  // namespace

std::string canonical_key(const Assignment& assignment) {
    std::string key;
    key.reserve(assignment.size() * 24);
    for (const auto& [name, value] : assignment) {
        key += std::to_string(name.size());
        key += ':';
        key += name;
        if (const auto* d = std::get_if<double>(&value)) {
            key += "=r";
            key += render_real(*d);
        } else {
            const auto& s = std::get<std::string>(value);
            key += "=s";
            key += std::to_string(s.size());
            key += ':';
            key += s;
        }
        key += ';';
    }
    return key;
}

std::string describe(const Assignment& assignment) {
    return assignment.to_json().dump();
}

}  // namespace hiertune

#include "hiertune/grat.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

#include "hiertune/errors.hpp"

namespace hiertune {

SubResultSet aggregate_results(std::span<const SubResultSet> parts) {
    SubResultSet merged;
    for (const auto& part : parts) {
        for (const auto& result : part) {
            auto it = std::find_if(merged.begin(), merged.end(),
                                   [&](const SubResult& r) { return r.param == result.param; });
            if (it == merged.end()) {
                merged.push_back(result);
            } else if (!(*it == result)) {
                throw DuplicateParamError("conflicting results for parameter '" + result.param + "'");
            }
        }
    }
    return merged;
}

Feedback prepare_feedback(const SearchSpace& space, const SubResultSet& results) {
    const auto& names = space.objective_ordered();
    std::vector<const SubResult*> by_index(names.size(), nullptr);
    for (const auto& r : results) {
        auto it = std::find(names.begin(), names.end(), r.param);
        if (it == names.end()) throw IncompleteResultsError("result for non-objective parameter '" + r.param + "'");
        auto& slot = by_index[static_cast<std::size_t>(it - names.begin())];
        if (slot != nullptr && !(*slot == r)) throw DuplicateParamError("two results for parameter '" + r.param + "'");
        slot = &r;
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (by_index[i] == nullptr) throw IncompleteResultsError("no result for parameter '" + names[i] + "'");
    }

    Feedback feedback;
    if (names.size() == 1) {
        feedback.per_param.emplace(names[0], by_index[0]->best_assignment);
        return feedback;
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
        std::size_t best = names.size();
        for (std::size_t j = 0; j < names.size(); ++j) {
            if (j == i) continue;
            if (best == names.size() || by_index[j]->best_response < by_index[best]->best_response) best = j;
        }
        feedback.per_param.emplace(names[i], by_index[best]->best_assignment);
    }
    return feedback;
}

// ---------------------------------------------------------------------------
// Slot geometry

namespace {

void check_slot(int eta, int slot) {
    if (eta < 1) throw InvalidSlotError("eta must be at least 1");
    if (slot < 1 || slot > eta) {
        throw InvalidSlotError("slot " + std::to_string(slot) + " outside 1.." + std::to_string(eta));
    }
}

void require_real(const HyperParameterSpec& spec) {
    if (!spec.is_real()) throw DomainError("'" + spec.name() + "' is not a real parameter");
}

/// Uniform real inside slot s; log10 specs are uniform in log-space.
double draw_in_slot(const HyperParameterSpec& spec, int eta, int slot, Rng& rng) {
    const auto [lower, upper] = slot_bounds(spec, eta, slot);
    const double u = uniform01(rng);
    double v;
    if (spec.scale() == Scale::Log10) {
        const double a = std::log10(spec.lo());
        const double w = (std::log10(spec.hi()) - a) / eta;
        const double la = a + (slot - 1) * w;
        const double lb = slot == eta ? std::log10(spec.hi()) : a + slot * w;
        v = std::pow(10.0, la + u * (lb - la));
    } else {
        v = lower + u * (upper - lower);
    }
    // Rounding may land on a boundary; keep the draw inside [lower, upper).
    if (v >= upper) v = std::nextafter(upper, -std::numeric_limits<double>::infinity());
    if (v < lower) v = lower;
    return v;
}

}  // namespace

std::pair<double, double> slot_bounds(const HyperParameterSpec& spec, int eta, int slot) {
    require_real(spec);
    check_slot(eta, slot);
    if (spec.scale() == Scale::Log10) {
        const double a = std::log10(spec.lo());
        const double w = (std::log10(spec.hi()) - a) / eta;
        const double lower = slot == 1 ? spec.lo() : std::pow(10.0, a + (slot - 1) * w);
        const double upper = slot == eta ? spec.hi() : std::pow(10.0, a + slot * w);
        return {lower, upper};
    }
    const double w = (spec.hi() - spec.lo()) / eta;
    const double lower = spec.lo() + (slot - 1) * w;
    const double upper = slot == eta ? spec.hi() : spec.lo() + slot * w;
    return {lower, upper};
}

int slot_of(const HyperParameterSpec& spec, int eta, double value) {
    require_real(spec);
    if (eta < 1) throw InvalidSlotError("eta must be at least 1");
    double position;
    if (spec.scale() == Scale::Log10) {
        const double a = std::log10(spec.lo());
        position = (std::log10(value) - a) / (std::log10(spec.hi()) - a);
    } else {
        position = (value - spec.lo()) / (spec.hi() - spec.lo());
    }
    int slot = std::clamp(static_cast<int>(std::floor(position * eta)) + 1, 1, eta);
    // Settle against the exact bounds used for sampling.
    while (slot > 1 && value < slot_bounds(spec, eta, slot).first) --slot;
    while (slot < eta && value >= slot_bounds(spec, eta, slot).second) ++slot;
    return slot;
}

SlotSampler::SlotSampler(const HyperParameterSpec& spec, int eta) : spec_(&spec), eta_(eta) {
    if (eta < 1) throw InvalidSlotError("eta must be at least 1");
    if (spec.is_nominal()) {
        remaining_.resize(spec.labels().size());
        std::iota(remaining_.begin(), remaining_.end(), std::size_t{0});
    }
}

Value SlotSampler::draw(int slot, Rng& rng) {
    check_slot(eta_, slot);
    if (spec_->is_real()) return draw_in_slot(*spec_, eta_, slot, rng);

    const auto& labels = spec_->labels();
    if (remaining_.empty()) return labels[uniform_index(rng, labels.size())];
    const std::size_t pick = uniform_index(rng, remaining_.size());
    const std::size_t label = remaining_[pick];
    remaining_.erase(remaining_.begin() + static_cast<std::ptrdiff_t>(pick));
    return labels[label];
}

Value uniform_rand_slot(const HyperParameterSpec& spec, int eta, int slot, Rng& rng) {
    SlotSampler session(spec, eta);
    return session.draw(slot, rng);
}

Value weighted_rand(const HyperParameterSpec& spec, const Value& current, int omega, int eta, Rng& rng) {
    if (!spec.contains(current)) throw DomainError("current value of '" + spec.name() + "' is outside its domain");
    if (omega < 1) throw DomainError("omega must be at least 1");
    if (eta < 1) throw InvalidSlotError("eta must be at least 1");

    if (spec.is_nominal()) {
        const auto& labels = spec.labels();
        const int slots = std::min<int>(eta, static_cast<int>(labels.size()));
        if (slots == 1) return current;
        const auto r = uniform_index(rng, static_cast<std::size_t>(omega + slots - 1));
        if (r < static_cast<std::size_t>(omega)) return current;
        const std::size_t cur = *spec.label_index(std::get<std::string>(current));
        std::size_t other = uniform_index(rng, labels.size() - 1);
        if (other >= cur) ++other;
        return labels[other];
    }

    if (eta == 1) return current;
    const auto r = uniform_index(rng, static_cast<std::size_t>(omega + eta - 1));
    if (r < static_cast<std::size_t>(omega)) return current;
    const int current_slot = slot_of(spec, eta, std::get<double>(current));
    int slot = static_cast<int>(r) - omega + 1;  // 1..eta-1 over the other slots
    if (slot >= current_slot) ++slot;
    return draw_in_slot(spec, eta, slot, rng);
}

// ---------------------------------------------------------------------------

std::vector<Assignment> generate_candidates(const SearchSpace& space, const HierarchyNode& agent,
                                            const Assignment& feedback_point, int eta, int omega, Rng& rng) {
    if (!agent.terminal()) throw InvalidQueryError("GRAT runs on terminal agents only");
    if (eta < 1) throw InvalidSlotError("eta must be at least 1");
    const auto& own = space.spec(agent.primary.front());

    std::vector<Assignment> candidates;
    candidates.reserve(static_cast<std::size_t>(eta) + 1);
    candidates.push_back(feedback_point);

    SlotSampler sampler(own, eta);
    for (int s = 1; s <= eta; ++s) {
        Assignment candidate = feedback_point;
        candidate.set(own.name(), sampler.draw(s, rng));
        for (const auto& name : agent.complement) {
            candidate.set(name, weighted_rand(space.spec(name), feedback_point.at(name), omega, eta, rng));
        }
        for (const auto& [name, value] : space.fixed()) candidate.set(name, value);
        candidates.push_back(std::move(candidate));
    }
    return candidates;
}

SubResult run_tuning_algorithm(const SearchSpace& space, const HierarchyNode& agent,
                               const Assignment& feedback_point, int eta, int omega, const Objective& objective,
                               EvaluationLedger& ledger, Rng& rng) {
    auto candidates = generate_candidates(space, agent, feedback_point, eta, omega, rng);
    auto evaluate = [&](const Assignment& candidate) {
        try {
            return ledger.evaluate(objective, candidate);
        } catch (const AgentFailure&) {
            throw;
        } catch (const EvaluationError& e) {
            throw AgentFailure(agent.id, agent.primary.front(), describe(candidate), e.what());
        } catch (const SessionError& e) {
            throw AgentFailure(agent.id, agent.primary.front(), describe(candidate), e.what());
        }
    };
    std::size_t best = 0;
    double best_value = evaluate(candidates[0]);
    for (std::size_t s = 1; s < candidates.size(); ++s) {
        const double value = evaluate(candidates[s]);
        if (value < best_value) {
            best = s;
            best_value = value;
        }
    }
    return SubResult{agent.primary.front(), std::move(candidates[best]), best_value};
}

// ---------------------------------------------------------------------------

OmegaPolicy OmegaPolicy::parse(std::string_view text) {
    if (text == "fixed") return fixed();
    if (text.starts_with("decay:")) {
        auto digits = text.substr(6);
        int p = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), p);
        if (ec == std::errc() && ptr == digits.data() + digits.size() && p >= 1) return decay_on_stall(p);
    }
    throw UsageError("omega policy must be 'fixed' or 'decay:<p>' with p >= 1, got '" + std::string(text) + "'");
}

int adapt_omega(std::span<const double> history, int omega, const OmegaPolicy& policy) {
    if (history.empty()) throw DomainError("omega adaptation needs a non-empty history");
    if (policy.kind == OmegaPolicy::Kind::Fixed) return omega;
    int stalled = 0;
    for (std::size_t k = history.size() - 1; k > 0; --k) {
        if (history[k] < history[k - 1]) break;
        ++stalled;
    }
    return stalled >= policy.patience ? std::max(1, omega - 1) : omega;
}

}  // namespace hiertune

#include "hiertune/objectives.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <exception>
#include <vector>

#include "hiertune/errors.hpp"

namespace hiertune {

// ---------------------------------------------------------------------------
// EvaluationLedger

double EvaluationLedger::evaluate(const Objective& objective, const Assignment& assignment) {
    if (auto violations = validate_assignment(objective.space, assignment); !violations.empty()) {
        throw DomainError("assignment " + describe(assignment) + " is invalid for objective '" + objective.name +
                          "': " + violations.front().name + " " + std::string(to_string(violations.front().kind)));
    }

    const std::string key = caching_ ? canonical_key(assignment) : std::string();
    std::promise<double> promise;
    {
        std::unique_lock lock(mutex_);
        if (caching_) {
            if (auto it = cache_.find(key); it != cache_.end()) {
                auto pending = it->second;
                lock.unlock();
                return pending.get();
            }
        }
        if (cap_ && count_ >= *cap_) {
            throw BudgetExhaustedError("evaluation budget of " + std::to_string(*cap_) + " exhausted");
        }
        ++count_;
        if (caching_) cache_.emplace(key, promise.get_future().share());
    }

    auto rollback = [&](std::exception_ptr error) {
        {
            std::lock_guard lock(mutex_);
            --count_;
            if (caching_) cache_.erase(key);
        }
        promise.set_exception(error);
        std::rethrow_exception(error);
    };

    double value = 0.0;
    try {
        value = objective.evaluate(assignment);
    } catch (const Error&) {
        rollback(std::current_exception());
    } catch (const std::exception& e) {
        rollback(std::make_exception_ptr(EvaluationError("objective '" + objective.name + "' failed on " +
                                                         describe(assignment) + ": " + e.what())));
    }
    if (!std::isfinite(value)) {
        rollback(std::make_exception_ptr(EvaluationError("objective '" + objective.name +
                                                         "' returned a non-finite value for " + describe(assignment))));
    }
    promise.set_value(value);
    return value;
}

std::int64_t EvaluationLedger::count() const {
    std::lock_guard lock(mutex_);
    return count_;
}

bool EvaluationLedger::contains(const std::string& key) const {
    std::lock_guard lock(mutex_);
    return cache_.contains(key);
}

// ---------------------------------------------------------------------------
// Benchmarks

namespace {

constexpr std::array<double, 4> kAlpha{1.0, 1.2, 3.0, 3.2};

constexpr double kA3[4][3] = {
    {3.0, 10.0, 30.0},
    {0.1, 10.0, 35.0},
    {3.0, 10.0, 30.0},
    {0.1, 10.0, 35.0},
};
constexpr double kP3[4][3] = {
    {0.3689, 0.1170, 0.2673},
    {0.4699, 0.4387, 0.7470},
    {0.1091, 0.8732, 0.5547},
    {0.0381, 0.5743, 0.8828},
};

constexpr double kA6[4][6] = {
    {10.0, 3.0, 17.0, 3.5, 1.7, 8.0},
    {0.05, 10.0, 17.0, 0.1, 8.0, 14.0},
    {3.0, 3.5, 1.7, 10.0, 17.0, 8.0},
    {17.0, 8.0, 0.05, 10.0, 0.1, 14.0},
};
constexpr double kP6[4][6] = {
    {0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
    {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
    {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
    {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381},
};

template <std::size_t Cols>
double hartmann_sum(const double (&a)[4][Cols], const double (&p)[4][Cols], std::span<const double> x) {
    double outer = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        double inner = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double diff = x[j] - p[i][j];
            inner += a[i][j] * diff * diff;
        }
        outer += kAlpha[i] * std::exp(-inner);
    }
    return outer;
}

}  // namespace

double hartmann(int d, std::span<const double> x) {
    if (d != 3 && d != 4 && d != 6) throw DomainError("hartmann is defined for d in {3, 4, 6}");
    if (static_cast<int>(x.size()) != d) throw DomainError("hartmann" + std::to_string(d) + " expects " +
                                                           std::to_string(d) + " coordinates");
    for (double v : x) {
        if (!(v >= 0.0 && v <= 1.0)) throw DomainError("hartmann coordinates must lie in [0, 1]");
    }
    switch (d) {
        case 3: return -hartmann_sum(kA3, kP3, x);
        case 4: return (1.1 - hartmann_sum(kA6, kP6, x)) / 0.839;
        default: return -hartmann_sum(kA6, kP6, x);
    }
}

double sphere(std::span<const double> x) {
    double sum = 0.0;
    for (double v : x) sum += v * v;
    return sum;
}

SearchSpace make_box_space(int d) {
    if (d < 1) throw DomainError("box dimension must be at least 1");
    std::vector<HyperParameterSpec> params;
    std::vector<std::string> names;
    for (int i = 1; i <= d; ++i) {
        names.push_back("x" + std::to_string(i));
        params.push_back(HyperParameterSpec::real(names.back(), 0.0, 1.0));
    }
    return SearchSpace(std::move(params), std::move(names), {});
}

namespace {

Objective make_box_objective(std::string name, int d, std::function<double(std::span<const double>)> fn) {
    auto space = make_box_space(d);
    std::vector<std::string> names = space.objective_ordered();
    return Objective{std::move(name), std::move(space),
                     [names = std::move(names), fn = std::move(fn)](const Assignment& a) {
                         std::vector<double> x;
                         x.reserve(names.size());
                         for (const auto& n : names) x.push_back(a.real(n));
                         return fn(x);
                     }};
}

}  // namespace

Objective make_hartmann_objective(int d) {
    if (d != 3 && d != 4 && d != 6) throw DomainError("hartmann is defined for d in {3, 4, 6}");
    return make_box_objective("hartmann" + std::to_string(d), d,
                              [d](std::span<const double> x) { return hartmann(d, x); });
}

Objective make_sphere_objective(int d) {
    auto name = d == 3 ? std::string("sphere") : "sphere:" + std::to_string(d);
    return make_box_objective(std::move(name), d, [](std::span<const double> x) { return sphere(x); });
}

std::optional<Objective> make_builtin_objective(std::string_view name) {
    if (name == "hartmann3") return make_hartmann_objective(3);
    if (name == "hartmann4") return make_hartmann_objective(4);
    if (name == "hartmann6") return make_hartmann_objective(6);
    if (name == "sphere") return make_sphere_objective(3);
    if (name.starts_with("sphere:")) {
        auto digits = name.substr(7);
        int d = 0;
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), d);
        if (ec != std::errc() || ptr != digits.data() + digits.size() || d < 1) return std::nullopt;
        return make_sphere_objective(d);
    }
    return std::nullopt;
}

Assignment default_initial_assignment(const SearchSpace& space) {
    Assignment a;
    for (const auto& p : space.params()) {
        if (space.fixed().contains(p.name())) {
            a.set(p.name(), space.fixed().at(p.name()));
        } else if (p.is_nominal()) {
            a.set(p.name(), p.labels().front());
        } else if (p.scale() == Scale::Log10) {
            a.set(p.name(), std::pow(10.0, 0.5 * (std::log10(p.lo()) + std::log10(p.hi()))));
        } else {
            a.set(p.name(), 0.5 * (p.lo() + p.hi()));
        }
    }
    return a;
}

}  // namespace hiertune

// Python extension module. Structured values (spaces, assignments, reports)
// cross the boundary as JSON text; hiertune/__init__.py wraps them as dicts.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hiertune/baselines.hpp"
#include "hiertune/errors.hpp"
#include "hiertune/experiment.hpp"
#include "hiertune/extproc.hpp"
#include "hiertune/grat.hpp"
#include "hiertune/hierarchy.hpp"
#include "hiertune/runtime.hpp"

namespace py = pybind11;
using namespace hiertune;

namespace {

Assignment parse_assignment(const std::string& text) {
    return Assignment::from_json(json::parse(text));
}

SearchSpace parse_space(const std::string& text) {
    return SearchSpace::from_json(json::parse(text));
}

/// Builtin name, "extproc:<cmd>" (with a space), or a Python callable that
/// receives the assignment as a JSON string.
Objective resolve(const py::object& objective, const std::optional<std::string>& space_json) {
    if (py::isinstance<py::str>(objective)) {
        const auto name = objective.cast<std::string>();
        if (name.rfind("extproc:", 0) == 0) {
            if (!space_json) throw UsageError("extproc objectives need a search space");
            return make_extproc_objective(name, parse_space(*space_json));
        }
        auto builtin = make_builtin_objective(name);
        if (!builtin) throw UsageError("unknown objective '" + name + "'");
        return *builtin;
    }
    if (!space_json) throw UsageError("callable objectives need a search space");
    // Copies of the handle may be released on worker threads.
    std::shared_ptr<py::object> holder(new py::object(objective), [](py::object* p) {
        py::gil_scoped_acquire gil;
        delete p;
    });
    return Objective{"python", parse_space(*space_json), [holder](const Assignment& a) -> double {
                         py::gil_scoped_acquire gil;
                         try {
                             return (*holder)(a.to_json().dump()).cast<double>();
                         } catch (py::error_already_set& e) {
                             throw std::runtime_error(e.what());
                         } catch (const py::cast_error& e) {
                             throw std::runtime_error(std::string("objective must return a float: ") + e.what());
                         }
                     }};
}

TuningQuery make_query(const Objective& objective, const std::optional<std::string>& initial, int c,
                       std::optional<int> budget, int eta, int omega, int iters, std::optional<int> patience,
                       std::optional<double> target) {
    TuningQuery q{objective.space,
                  initial ? parse_assignment(*initial) : default_initial_assignment(objective.space)};
    q.c = c;
    q.budget = budget;
    q.eta = eta;
    q.omega = omega;
    q.stop = StopCriteria{iters, patience, target};
    return q;
}

std::string tune_py(const py::object& objective, const std::optional<std::string>& space,
                    const std::optional<std::string>& initial, int eta, int omega, int c, std::optional<int> budget,
                    int iters, std::optional<int> patience, std::optional<double> target, std::uint64_t seed,
                    const std::string& omega_policy, bool concurrent) {
    const auto obj = resolve(objective, space);
    const auto q = make_query(obj, initial, c, budget, eta, omega, iters, patience, target);
    RuntimeOptions options;
    options.concurrent = concurrent;
    options.omega_policy = OmegaPolicy::parse(omega_policy);
    const auto tree = build_hierarchy(q);
    py::gil_scoped_release release;
    return tune(tree, q, obj, seed, options).to_json().dump();
}

std::string baseline_py(Method method, const py::object& objective, const std::optional<std::string>& space,
                        std::int64_t budget, std::uint64_t seed) {
    const auto obj = resolve(objective, space);
    py::gil_scoped_release release;
    Rng rng(seed);
    EvaluationLedger ledger;
    const auto report = method == Method::Random ? random_search(obj.space, obj, ledger, budget, rng)
                                                 : latin_hypercube(obj.space, obj, ledger, budget, rng);
    return report.to_json().dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Hierarchical agent-based hyper-parameter tuning";

    auto& base = py::register_exception<Error>(m, "HiertuneError", PyExc_RuntimeError);
    py::register_exception<SpaceError>(m, "SpaceError", base.ptr());
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<InvalidQueryError>(m, "InvalidQueryError", base.ptr());
    py::register_exception<EvaluationError>(m, "EvaluationError", base.ptr());
    py::register_exception<SessionError>(m, "SessionError", base.ptr());
    py::register_exception<UsageError>(m, "UsageError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const json::exception& e) {
            py::set_error(PyExc_ValueError, e.what());
        }
    });

    m.def("hartmann", [](int d, const std::vector<double>& x) { return hartmann(d, x); }, py::arg("d"), py::arg("x"));
    m.def("sphere", [](const std::vector<double>& x) { return sphere(x); }, py::arg("x"));

    m.def("normalize_space", [](const std::string& s) { return parse_space(s).to_json().dump(); }, py::arg("space"));
    m.def("builtin_space", [](const std::string& name) {
        auto obj = make_builtin_objective(name);
        if (!obj) throw UsageError("unknown objective '" + name + "'");
        return obj->space.to_json().dump();
    });
    m.def("canonical_key", [](const std::string& a) { return canonical_key(parse_assignment(a)); },
          py::arg("assignment"));
    m.def(
        "validate_assignment",
        [](const std::string& space, const std::string& a) {
            std::vector<std::pair<std::string, std::string>> out;
            for (const auto& v : validate_assignment(parse_space(space), parse_assignment(a))) {
                out.emplace_back(v.name, std::string(to_string(v.kind)));
            }
            return out;
        },
        py::arg("space"), py::arg("assignment"));

    m.def(
        "divide",
        [](const std::vector<std::string>& names, int i, int k) { return divide(names, i, k); }, py::arg("names"),
        py::arg("i"), py::arg("k"));
    m.def(
        "build_hierarchy",
        [](const std::vector<std::string>& names, int c, std::optional<int> budget) {
            return build_hierarchy(names, c, budget).to_json().dump();
        },
        py::arg("names"), py::arg("c") = 2, py::arg("budget") = py::none());
    m.def(
        "prepare_feedback",
        [](const std::string& space, const std::vector<std::tuple<std::string, std::string, double>>& results) {
            SubResultSet set;
            for (const auto& [param, assignment, response] : results) {
                set.push_back({param, parse_assignment(assignment), response});
            }
            std::map<std::string, std::string> out;
            for (const auto& [name, a] : prepare_feedback(parse_space(space), set).per_param) {
                out.emplace(name, a.to_json().dump());
            }
            return out;
        },
        py::arg("space"), py::arg("results"));

    m.def("tune", &tune_py, py::arg("objective"), py::arg("space") = py::none(), py::arg("initial") = py::none(),
          py::arg("eta") = 10, py::arg("omega") = 3, py::arg("c") = 2, py::arg("budget") = py::none(),
          py::arg("iters") = 15, py::arg("patience") = py::none(), py::arg("target") = py::none(),
          py::arg("seed") = 0, py::arg("omega_policy") = "fixed", py::arg("concurrent") = true);
    m.def(
        "random_search",
        [](const py::object& objective, const std::optional<std::string>& space, std::int64_t budget,
           std::uint64_t seed) { return baseline_py(Method::Random, objective, space, budget, seed); },
        py::arg("objective"), py::arg("space") = py::none(), py::arg("budget") = 100, py::arg("seed") = 0);
    m.def(
        "latin_hypercube",
        [](const py::object& objective, const std::optional<std::string>& space, std::int64_t budget,
           std::uint64_t seed) { return baseline_py(Method::Lhs, objective, space, budget, seed); },
        py::arg("objective"), py::arg("space") = py::none(), py::arg("budget") = 100, py::arg("seed") = 0);

    m.def(
        "run_experiment",
        [](const std::string& objective, int eta, int omega, int c, int iters, int trials, std::uint64_t seed,
           const std::vector<std::string>& methods, const std::string& budget_mode, int workers) {
            auto obj = make_builtin_objective(objective);
            if (!obj) throw UsageError("unknown objective '" + objective + "'");
            ExperimentConfig cfg{*obj};
            cfg.eta = eta;
            cfg.omega = omega;
            cfg.c = c;
            cfg.iters = iters;
            cfg.trials = trials;
            cfg.seed = seed;
            cfg.methods.clear();
            for (const auto& name : methods) cfg.methods.push_back(parse_method(name));
            cfg.budget_mode = parse_budget_mode(budget_mode);
            cfg.workers = workers;
            py::gil_scoped_release release;
            const ExperimentResult results[] = {run_experiment(cfg)};
            return std::make_pair(to_csv(results), to_json(results).dump());
        },
        py::arg("objective"), py::arg("eta") = 10, py::arg("omega") = 3, py::arg("c") = 2, py::arg("iters") = 15,
        py::arg("trials") = 1, py::arg("seed") = 0, py::arg("methods") = std::vector<std::string>{"grat"},
        py::arg("budget_mode") = "measured", py::arg("workers") = 1);
}

// hier-tune: runs hierarchical agent-based tuning experiments from the command
// line. See README.md for the flag reference.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hiertune/errors.hpp"
#include "hiertune/experiment.hpp"
#include "hiertune/extproc.hpp"

using namespace hiertune;

namespace {

struct Settings {
    std::string objective;
    std::string config_path;
    int eta = 10;
    int omega = 3;
    int c = 2;
    int iters = 15;
    int trials = 1;
    std::uint64_t seed = 0;
    std::vector<std::string> methods;
    std::string baseline = "none";
    std::string budget_mode = "measured";
    std::string omega_policy = "fixed";
    int workers = 1;
    std::optional<int> patience;
    std::optional<double> target;
    std::optional<int> agent_budget;
    std::string sweep_axis;
    std::vector<int> sweep_values;
    std::string out;
    std::string trace;
    bool dump_tree = false;
    std::string check_evaluator;
    int timeout_ms = 30000;
};

/// Collects every problem before failing so one run reports them all.
class Diagnostics {
public:
    void add(std::string field, std::string problem) { items_.push_back(field + ": " + problem); }
    bool empty() const { return items_.empty(); }
    [[noreturn]] void raise() const {
        std::string msg = "invalid configuration";
        for (const auto& i : items_) msg += "\n  " + i;
        throw UsageError(msg);
    }

private:
    std::vector<std::string> items_;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("--config: cannot read '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

/// Config fields apply only where the flag was not given on the command line.
class ConfigOverlay {
public:
    ConfigOverlay(const json& run, const CLI::App& app, Diagnostics& diag) : run_(run), app_(app), diag_(diag) {}

    template <typename T>
    void apply(const char* key, const char* flag, T& target) {
        if (!run_.contains(key) || app_.count(flag) > 0) return;
        try {
            target = run_.at(key).get<T>();
        } catch (const json::exception&) {
            diag_.add(std::string("run.") + key, "unexpected type " + std::string(run_.at(key).type_name()));
        }
    }

    template <typename T>
    void apply(const char* key, const char* flag, std::optional<T>& target) {
        T value{};
        if (!run_.contains(key) || app_.count(flag) > 0) return;
        apply(key, flag, value);
        target = value;
    }

private:
    const json& run_;
    const CLI::App& app_;
    Diagnostics& diag_;
};

struct Loaded {
    std::optional<SearchSpace> space;
    Assignment initial;
};

Loaded load_config(Settings& s, const CLI::App& app, Diagnostics& diag) {
    Loaded loaded;
    if (s.config_path.empty()) return loaded;
    json doc;
    try {
        doc = json::parse(read_file(s.config_path));
    } catch (const json::parse_error& e) {
        throw UsageError("--config: not valid JSON: " + std::string(e.what()));
    }
    if (!doc.is_object()) throw UsageError("--config: top level must be an object");
    if (doc.contains("params")) {
        try {
            loaded.space = SearchSpace::from_json(doc);
        } catch (const SpaceError& e) {
            diag.add("params", e.what());
        }
    }
    const json run = doc.value("run", json::object());
    if (!run.is_object()) {
        diag.add("run", "must be an object");
        return loaded;
    }
    ConfigOverlay overlay(run, app, diag);
    overlay.apply("objective", "--objective", s.objective);
    overlay.apply("eta", "--eta", s.eta);
    overlay.apply("omega", "--omega", s.omega);
    overlay.apply("c", "--c", s.c);
    overlay.apply("iters", "--iters", s.iters);
    overlay.apply("trials", "--trials", s.trials);
    overlay.apply("seed", "--seed", s.seed);
    overlay.apply("methods", "--method", s.methods);
    overlay.apply("baseline", "--baseline", s.baseline);
    overlay.apply("budget_mode", "--budget-mode", s.budget_mode);
    overlay.apply("omega_policy", "--omega-policy", s.omega_policy);
    overlay.apply("workers", "--workers", s.workers);
    overlay.apply("patience", "--patience", s.patience);
    overlay.apply("target", "--target", s.target);
    overlay.apply("agent_budget", "--agent-budget", s.agent_budget);
    overlay.apply("timeout_ms", "--timeout-ms", s.timeout_ms);
    if (run.contains("initial")) {
        try {
            loaded.initial = Assignment::from_json(run.at("initial"));
        } catch (const Error& e) {
            diag.add("run.initial", e.what());
        }
    }
    return loaded;
}

Objective resolve_objective(const Settings& s, const Loaded& loaded, Diagnostics& diag) {
    SessionOptions session;
    session.response_timeout = std::chrono::milliseconds(s.timeout_ms);
    if (s.objective.rfind("extproc:", 0) == 0) {
        if (!loaded.space) throw UsageError("--objective: extproc objectives need a search space from --config");
        return make_extproc_objective(s.objective, *loaded.space, session);
    }
    if (loaded.space) diag.add("params", "a search space is only used with extproc objectives");
    return *make_builtin_objective(s.objective);
}

std::vector<Method> resolve_methods(const Settings& s, Diagnostics& diag) {
    std::vector<Method> methods;
    for (const auto& m : s.methods) {
        try {
            const Method parsed = parse_method(m);
            if (std::find(methods.begin(), methods.end(), parsed) == methods.end()) methods.push_back(parsed);
        } catch (const UsageError& e) {
            diag.add("--method", e.what());
        }
    }
    if (methods.empty()) methods.push_back(Method::Grat);
    if (s.baseline != "none") {
        try {
            const Method b = parse_method(s.baseline);
            if (b == Method::Grat) diag.add("--baseline", "must be random, lhs or none");
            else if (std::find(methods.begin(), methods.end(), b) == methods.end()) methods.push_back(b);
        } catch (const UsageError&) {
            diag.add("--baseline", "must be random, lhs or none, got '" + s.baseline + "'");
        }
    }
    return methods;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
}

int check_evaluator(const Settings& s, const Loaded& loaded) {
    std::optional<SearchSpace> space = loaded.space;
    if (!space) {
        auto builtin = make_builtin_objective(s.objective.empty() ? "hartmann3" : s.objective);
        if (!builtin) throw UsageError("--check-evaluator: needs a search space from --config or a builtin --objective");
        space = builtin->space;
    }
    SessionOptions options;
    options.response_timeout = std::chrono::milliseconds(s.timeout_ms);
    bool all = true;
    for (const auto& check : check_evaluator_conformance(s.check_evaluator, *space, options)) {
        std::printf("%s  %-16s %s\n", check.passed ? "PASS" : "FAIL", check.name.c_str(), check.detail.c_str());
        all = all && check.passed;
    }
    return all ? 0 : 1;
}

int run(Settings& s, const CLI::App& app) {
    Diagnostics diag;
    Loaded loaded = load_config(s, app, diag);
    if (!s.check_evaluator.empty()) {
        if (!diag.empty()) diag.raise();
        return check_evaluator(s, loaded);
    }
    if (s.objective.empty()) {
        diag.add("--objective", "required (flag or run.objective in --config)");
    } else if (s.objective.rfind("extproc:", 0) != 0 && !make_builtin_objective(s.objective)) {
        diag.add("--objective", "unknown objective '" + s.objective +
                                    "' (expected hartmann3, hartmann4, hartmann6, sphere, sphere:<d> or extproc:<command>)");
    }

    const auto methods = resolve_methods(s, diag);
    std::optional<BudgetMode> budget_mode;
    try {
        budget_mode = parse_budget_mode(s.budget_mode);
    } catch (const UsageError& e) {
        diag.add("--budget-mode", e.what());
    }
    std::optional<OmegaPolicy> omega_policy;
    try {
        omega_policy = OmegaPolicy::parse(s.omega_policy);
    } catch (const UsageError& e) {
        diag.add("--omega-policy", e.what());
    }
    std::optional<SweepAxis> axis;
    if (!s.sweep_axis.empty()) {
        try {
            axis = parse_sweep_axis(s.sweep_axis);
        } catch (const UsageError& e) {
            diag.add("--sweep", e.what());
        }
        if (s.sweep_values.empty()) diag.add("--values", "required with --sweep");
    } else if (!s.sweep_values.empty()) {
        diag.add("--values", "only valid with --sweep");
    }
    const bool csv_out = s.out.size() > 4 && s.out.compare(s.out.size() - 4, 4, ".csv") == 0;
    const bool json_out = s.out.size() > 5 && s.out.compare(s.out.size() - 5, 5, ".json") == 0;
    if (!s.out.empty() && !csv_out && !json_out) diag.add("--out", "path must end in .csv or .json");
    if (s.eta < 1) diag.add("--eta", "must be >= 1, got " + std::to_string(s.eta));
    if (s.omega < 1) diag.add("--omega", "must be >= 1, got " + std::to_string(s.omega));
    if (s.c < 2) diag.add("--c", "must be >= 2, got " + std::to_string(s.c));
    if (s.iters < 1) diag.add("--iters", "must be >= 1, got " + std::to_string(s.iters));
    if (s.trials < 1) diag.add("--trials", "must be >= 1, got " + std::to_string(s.trials));
    if (s.workers < 1) diag.add("--workers", "must be >= 1, got " + std::to_string(s.workers));
    if (s.agent_budget && *s.agent_budget < 2) diag.add("--agent-budget", "must be >= 2");
    if (s.patience && *s.patience < 1) diag.add("--patience", "must be >= 1");
    if (s.timeout_ms < 1) diag.add("--timeout-ms", "must be >= 1");
    if (!diag.empty()) diag.raise();

    Objective objective = resolve_objective(s, loaded, diag);
    if (!diag.empty()) diag.raise();
    if (!loaded.initial.empty()) {
        const auto violations = validate_assignment(objective.space, loaded.initial);
        for (const auto& v : violations) diag.add("run.initial." + v.name, std::string(to_string(v.kind)));
        if (!diag.empty()) diag.raise();
    }

    ExperimentConfig config{objective};
    config.initial = loaded.initial;
    config.eta = s.eta;
    config.omega = s.omega;
    config.c = s.c;
    config.iters = s.iters;
    config.agent_budget = s.agent_budget;
    config.patience = s.patience;
    config.target = s.target;
    config.trials = s.trials;
    config.seed = s.seed;
    config.methods = methods;
    config.budget_mode = *budget_mode;
    config.omega_policy = *omega_policy;
    config.workers = s.workers;

    if (s.dump_tree) {
        TuningQuery query{objective.space,
                          loaded.initial.empty() ? default_initial_assignment(objective.space) : loaded.initial};
        query.c = s.c;
        query.budget = s.agent_budget;
        std::cout << build_hierarchy(query).to_json().dump(2) << '\n';
        return 0;
    }

    std::mutex trace_mutex;
    std::string trace_text = "iter,node,kind\n";
    if (!s.trace.empty()) {
        config.on_message = [&](const MessageEvent& e) {
            const int node = e.kind == MessageKind::Ask ? e.to : e.from;
            const std::string line =
                std::to_string(e.iteration) + ',' + std::to_string(node) + ',' + std::string(to_string(e.kind)) + '\n';
            std::lock_guard lock(trace_mutex);
            trace_text += line;
        };
    }

    std::vector<ExperimentResult> results;
    if (axis) {
        results = sweep(config, *axis, s.sweep_values);
    } else {
        results.push_back(run_experiment(config));
    }

    for (const auto& r : results) std::cout << summary_table(r);
    if (csv_out) write_file(s.out, to_csv(results));
    if (json_out) write_file(s.out, to_json(results).dump(2) + '\n');
    if (!s.trace.empty()) write_file(s.trace, trace_text);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical agent-based hyper-parameter tuning"};
    app.name("hier-tune");
    Settings s;

    app.add_option("--objective", s.objective,
                   "hartmann3|hartmann4|hartmann6|sphere|sphere:<d>|extproc:<command>");
    app.add_option("--config", s.config_path, "JSON search space document with an optional 'run' section");
    app.add_option("--eta", s.eta, "slots per terminal agent")->capture_default_str();
    app.add_option("--omega", s.omega, "keep weight of the feedback value")->capture_default_str();
    app.add_option("--c", s.c, "maximum children per agent")->capture_default_str();
    app.add_option("--iters", s.iters, "maximum iterations")->capture_default_str();
    app.add_option("--trials", s.trials, "independent repetitions")->capture_default_str();
    app.add_option("--seed", s.seed, "master seed")->capture_default_str();
    app.add_option("--method", s.methods, "grat|random|lhs, repeatable (default grat)")->take_all();
    app.add_option("--baseline", s.baseline, "random|lhs|none, compared against grat")->capture_default_str();
    app.add_option("--budget-mode", s.budget_mode, "formula|measured")->capture_default_str();
    app.add_option("--omega-policy", s.omega_policy, "fixed|decay:<p>")->capture_default_str();
    app.add_option("--workers", s.workers, "trials run concurrently")->capture_default_str();
    app.add_option("--patience", s.patience, "stop after this many iterations without improvement");
    app.add_option("--target", s.target, "stop once the incumbent reaches this value");
    app.add_option("--agent-budget", s.agent_budget, "cap on children per agent");
    app.add_option("--sweep", s.sweep_axis, "eta|iterations");
    app.add_option("--values", s.sweep_values, "sweep values, e.g. 2,4,8")->delimiter(',');
    app.add_option("--out", s.out, "write per-trial results to <path>.csv or <path>.json");
    app.add_option("--trace", s.trace, "write the agent message trace (iter,node,kind) of trial 0");
    app.add_flag("--dump-tree", s.dump_tree, "print the agent tree as JSON and exit");
    app.add_option("--check-evaluator", s.check_evaluator, "run protocol conformance checks against a command");
    app.add_option("--timeout-ms", s.timeout_ms, "external evaluator response timeout")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        return run(s, app);
    } catch (const UsageError& e) {
        std::cerr << "hier-tune: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "hier-tune: error: " << e.what() << '\n';
        return 1;
    }
}

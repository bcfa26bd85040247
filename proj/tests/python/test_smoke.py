import math

import pytest

import hiertune

SVC_SPACE = {
    "params": [
        {"name": "C", "kind": "real", "lo": 0.01, "hi": 1e13, "scale": "log10"},
        {"name": "gamma", "kind": "real", "lo": 0.0, "hi": 1.0, "scale": "linear"},
        {"name": "kernel", "kind": "nominal", "values": ["poly", "linear", "rbf", "sigmoid"]},
    ],
    "objective": ["C", "gamma", "kernel"],
}


def svc_like(a):
    return (math.log10(a["C"]) - 2) ** 2 / 100 + (a["gamma"] - 0.4) ** 2 + (a["kernel"] != "rbf")


def test_hartmann_optimum():
    x = [0.114614, 0.555649, 0.852547]
    assert abs(hiertune.hartmann(3, x) + 3.86278) < 1e-4


def test_space_and_keys():
    assert hiertune.normalize_space(SVC_SPACE)["objective"] == ["C", "gamma", "kernel"]
    assert hiertune.canonical_key({"b": 1.0, "a": 2.0}) == hiertune.canonical_key({"a": 2.0, "b": 1.0})
    assert hiertune.validate_assignment(SVC_SPACE, {"C": 1.0, "gamma": 0.5}) == [("kernel", "missing")]
    with pytest.raises(hiertune.SpaceError):
        hiertune.normalize_space({"params": [{"name": "x", "kind": "real", "lo": 1, "hi": 0}]})


def test_hierarchy():
    assert hiertune.divide(["a", "b", "c", "d", "e"], 1, 2) == ["a", "b", "c"]
    tree = hiertune.build_hierarchy([f"l{i}" for i in range(1, 6)], c=2)
    assert tree["height"] == 3
    assert len(tree["nodes"]) == 9


def test_feedback():
    space = {"params": [{"name": n, "kind": "real", "lo": 0, "hi": 1} for n in ("l1", "l2", "l3")]}
    fb = hiertune.prepare_feedback(space, [("l1", {"v": 1.0}, 0.5), ("l2", {"v": 2.0}, 0.3), ("l3", {"v": 3.0}, 0.7)])
    assert fb == {"l1": {"v": 2.0}, "l2": {"v": 1.0}, "l3": {"v": 2.0}}


def test_tune_builtin_is_deterministic():
    a = hiertune.tune("hartmann6", eta=5, iters=4, seed=3)
    b = hiertune.tune("hartmann6", eta=5, iters=4, seed=3, concurrent=False)
    assert a == b
    assert a["iterations_run"] == 4
    assert a["evaluations"] <= 6 * 6 * 4 + 1


def test_tune_python_callable():
    report = hiertune.tune(svc_like, SVC_SPACE, eta=6, iters=5, seed=1)
    assert report["incumbent"]["kernel"] in ("poly", "linear", "rbf", "sigmoid")
    assert report["incumbent_response"] == pytest.approx(svc_like(report["incumbent"]))
    start = svc_like({"C": 10 ** 5.5, "gamma": 0.5, "kernel": "poly"})
    assert report["incumbent_response"] <= start


def test_callable_failure_names_the_cause():
    def broken(a):
        raise ValueError("no convergence")

    with pytest.raises(hiertune.EvaluationError, match="no convergence"):
        hiertune.tune(broken, SVC_SPACE, eta=2, iters=1)


def test_baselines_spend_their_budget():
    assert hiertune.random_search("hartmann3", budget=50, seed=2)["evaluations"] == 50
    assert hiertune.latin_hypercube(svc_like, SVC_SPACE, budget=20)["evaluations"] == 20


def test_run_experiment():
    csv_text, results = hiertune.run_experiment("hartmann3", iters=3, trials=4, methods=["grat", "random"], workers=2)
    lines = csv_text.strip().splitlines()
    assert lines[0] == "trial,method,objective,eta,omega,iters,best,evals,last_best_iter"
    assert len(lines) == 9
    assert len(results[0]["summary"]) == 2


def test_usage_errors():
    with pytest.raises(hiertune.UsageError):
        hiertune.tune("not-a-function")
    with pytest.raises(hiertune.InvalidQueryError):
        hiertune.tune("hartmann3", eta=0)

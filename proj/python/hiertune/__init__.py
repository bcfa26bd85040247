"""Hierarchical agent-based hyper-parameter tuning.

Search spaces and assignments are plain dicts in the same JSON layout the
``hier-tune`` CLI reads::

    space = {
        "params": [
            {"name": "C", "kind": "real", "lo": 1e-2, "hi": 1e13, "scale": "log10"},
            {"name": "kernel", "kind": "nominal", "values": ["rbf", "poly"]},
        ],
        "objective": ["C", "kernel"],
    }
    report = hiertune.tune(lambda a: loss(a["C"], a["kernel"]), space, iters=5)
"""

import json as _json

from . import _core
from ._core import (
    DomainError,
    EvaluationError,
    HiertuneError,
    InvalidQueryError,
    SessionError,
    SpaceError,
    UsageError,
    divide,
    hartmann,
    sphere,
)

__all__ = [
    "DomainError",
    "EvaluationError",
    "HiertuneError",
    "InvalidQueryError",
    "SessionError",
    "SpaceError",
    "UsageError",
    "build_hierarchy",
    "builtin_space",
    "canonical_key",
    "divide",
    "hartmann",
    "latin_hypercube",
    "normalize_space",
    "prepare_feedback",
    "random_search",
    "run_experiment",
    "sphere",
    "tune",
    "validate_assignment",
]


def _dump(value):
    return None if value is None else _json.dumps(value)


def _objective(objective):
    if isinstance(objective, str):
        return objective
    return lambda text: float(objective(_json.loads(text)))


def normalize_space(space):
    """Validates a space document and returns its canonical form."""
    return _json.loads(_core.normalize_space(_dump(space)))


def builtin_space(name):
    return _json.loads(_core.builtin_space(name))


def canonical_key(assignment):
    return _core.canonical_key(_dump(assignment))


def validate_assignment(space, assignment):
    """List of (name, violation) pairs; empty when the assignment is valid."""
    return [tuple(v) for v in _core.validate_assignment(_dump(space), _dump(assignment))]


def build_hierarchy(names, c=2, budget=None):
    return _json.loads(_core.build_hierarchy(list(names), c, budget))


def prepare_feedback(space, results):
    """``results`` holds (param, assignment, response) triples."""
    encoded = [(p, _dump(a), float(r)) for p, a, r in results]
    return {k: _json.loads(v) for k, v in _core.prepare_feedback(_dump(space), encoded).items()}


def tune(objective, space=None, initial=None, *, eta=10, omega=3, c=2, budget=None, iters=15,
         patience=None, target=None, seed=0, omega_policy="fixed", concurrent=True):
    """Runs the agent hierarchy and returns the report as a dict.

    ``objective`` is a builtin name ("hartmann6", "sphere:4", ...), an
    "extproc:<command>" string, or a callable taking an assignment dict and
    returning a float to minimize. Callables and extproc objectives need
    ``space``.
    """
    text = _core.tune(_objective(objective), _dump(space), _dump(initial), eta=eta, omega=omega, c=c,
                      budget=budget, iters=iters, patience=patience, target=target, seed=seed,
                      omega_policy=omega_policy, concurrent=concurrent)
    return _json.loads(text)


def random_search(objective, space=None, *, budget=100, seed=0):
    return _json.loads(_core.random_search(_objective(objective), _dump(space), budget, seed))


def latin_hypercube(objective, space=None, *, budget=100, seed=0):
    return _json.loads(_core.latin_hypercube(_objective(objective), _dump(space), budget, seed))


def run_experiment(objective, *, eta=10, omega=3, c=2, iters=15, trials=1, seed=0, methods=("grat",),
                   budget_mode="measured", workers=1):
    """Multi-trial comparison on a builtin objective. Returns (csv_text, results)."""
    csv_text, results = _core.run_experiment(objective, eta, omega, c, iters, trials, seed, list(methods),
                                             budget_mode, workers)
    return csv_text, _json.loads(results)

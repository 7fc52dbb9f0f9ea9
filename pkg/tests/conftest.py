import sys
import time
from pathlib import Path

import pytest

from polyabs.accel import AccelParams
from polyabs.net import PetriNet
from polyabs.pipeline import CheckOptions, check_rule
from polyabs.solver import SolverConfig, SolverUnavailable

REPO = Path(__file__).resolve().parent.parent
RULES = REPO / "rules"

# Solver commands used to exercise the driver without a real solver.
STUB = Path(__file__).parent / "stub_solver.py"


def stub_command(mode: str) -> str:
    return f"{sys.executable} {STUB} {mode}"


@pytest.fixture(scope="session")
def solver_config():
    try:
        return SolverConfig.default(timeout_ms=60000)
    except SolverUnavailable as exc:
        pytest.skip(f"no SMT solver available: {exc}")


@pytest.fixture(scope="session")
def rules_dir():
    return RULES


@pytest.fixture(scope="session")
def checked(solver_config, rules_dir):
    """Memoized full checks of the fixture rules, with wall time."""
    from polyabs.loader import load_rule

    cache = {}

    def run(name, timeout_ms=30000, accel=None, rule=None):
        if name not in cache:
            loaded = rule if rule is not None else load_rule(rules_dir / name)
            options = CheckOptions(
                solver=SolverConfig(solver_config.command, timeout_ms,
                                    solver_config.env),
                accel=accel or AccelParams(probe_timeout_ms=timeout_ms))
            start = time.perf_counter()
            verdict = check_rule(loaded, options)
            cache[name] = (loaded, verdict, time.perf_counter() - start)
        return cache[name]

    return run


def concat_initial() -> PetriNet:
    return PetriNet(
        places=("y1", "y2"),
        transitions=("a", "t", "b"),
        pre={"a": {}, "t": {"y1": 1}, "b": {"y2": 1}},
        post={"a": {"y1": 1}, "t": {"y2": 1}, "b": {}},
        label={"a": "a", "t": None, "b": "b"},
        name="concat_initial")


def concat_reduced() -> PetriNet:
    return PetriNet(
        places=("x",),
        transitions=("a", "b"),
        pre={"a": {}, "b": {"x": 1}},
        post={"a": {"x": 1}, "b": {}},
        label={"a": "a", "b": "b"},
        name="concat_reduced")


def fake_concat_initial() -> PetriNet:
    base = concat_initial()
    return PetriNet(
        places=base.places,
        transitions=base.transitions + ("d",),
        pre={**base.pre, "d": {}},
        post={**base.post, "d": {"y2": 1}},
        label={**base.label, "d": "d"},
        name="fake_concat_initial")

import importlib.resources
import math
import time

import numpy as np
import pytest

from ctxnav.world import load_scenario


def bundled(name: str):
    return load_scenario((importlib.resources.files("ctxnav") / "scenarios" / f"{name}.json").read_text())


def regular_polygon(n: int, radius: float = 1.0, phase: float = 0.0) -> np.ndarray:
    a = phase + 2.0 * math.pi * np.arange(n) / n
    return radius * np.column_stack([np.cos(a), np.sin(a)])


def random_rigid(rng: np.random.Generator):
    theta = rng.uniform(-math.pi, math.pi)
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    shift = rng.uniform(-50.0, 50.0, 2)
    return lambda xy: np.asarray(xy) @ rot.T + shift


@pytest.fixture(scope="session")
def scenario():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = bundled(name)
        return cache[name]

    return get


@pytest.fixture(scope="session")
def sim_run(scenario):
    """Memoized closed-loop runs shared by the scenario tests."""
    from ctxnav.sim import run_simulation

    cache = {}

    def get(name, mode="social"):
        key = (name, mode)
        if key not in cache:
            start = time.perf_counter()
            result = run_simulation(scenario(name), mode=mode)
            RUN_SECONDS[key] = time.perf_counter() - start
            cache[key] = result
        return cache[key]

    return get


RUN_SECONDS: dict = {}
# acceptance criterion number -> (passed, detail)
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")

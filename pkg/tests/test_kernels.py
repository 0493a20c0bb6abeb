import math
import os
import subprocess
import sys

import numpy as np
import pytest

from ctxnav import _pykernels, kernels

try:
    from ctxnav import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None

needs_compiled = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def _random_grid(rng, shape=(60, 80), density=0.08):
    return (rng.random(shape) < density).astype(np.uint8)


def test_backend_reports_choice():
    assert kernels.BACKEND in ("cython", "python")
    if _ckernels is not None and os.environ.get("CTXNAV_PURE_PYTHON") is None:
        assert kernels.BACKEND == "cython"


def test_fallback_selected_by_environment():
    env = dict(os.environ, CTXNAV_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import ctxnav.kernels as k; print(k.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"


@needs_compiled
def test_raycast_backends_agree():
    rng = np.random.default_rng(0)
    for _ in range(20):
        occ = _random_grid(rng)
        sx, sy = rng.uniform(0.5, 3.5), rng.uniform(0.5, 2.5)
        ang = rng.uniform(-math.pi, math.pi, 300)
        args = (occ, 0.0, 0.0, 0.05, sx, sy, np.cos(ang), np.sin(ang), 8.0)
        np.testing.assert_array_equal(_pykernels.raycast(*args), _ckernels.raycast(*args))


@needs_compiled
def test_nondominated_backends_agree():
    rng = np.random.default_rng(1)
    for _ in range(200):
        v = rng.integers(0, 5, (int(rng.integers(1, 60)), int(rng.integers(2, 5)))).astype(float)
        np.testing.assert_array_equal(
            np.asarray(_pykernels.nondominated(v), bool), np.asarray(_ckernels.nondominated(v), bool)
        )


@needs_compiled
def test_gauge_backends_agree():
    rng = np.random.default_rng(2)
    for _ in range(200):
        d = int(rng.integers(2, 6))
        front = rng.random((int(rng.integers(1, 20)), d))
        front[rng.random(front.shape) < 0.1] = 0.0
        cands = rng.random((int(rng.integers(1, 40)), d))
        cands[rng.random(cands.shape) < 0.1] = 0.0
        np.testing.assert_allclose(_pykernels.gauge(front, cands, 1e-9), _ckernels.gauge(front, cands, 1e-9),
                                   rtol=0, atol=1e-15)


def test_raycast_axis_aligned_wall():
    occ = np.zeros((40, 40), np.uint8)
    occ[:, 30] = 1  # wall face at x = 3.0
    d = kernels.raycast(occ, 0.0, 0.0, 0.1, 0.05, 2.05, np.array([1.0, 0.0]), np.array([0.0, 1.0]), 8.0)
    assert d[0] == pytest.approx(2.95)
    assert math.isinf(d[1])

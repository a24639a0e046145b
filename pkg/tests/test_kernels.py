import math
import os
import subprocess
import sys

import numpy as np
import pytest

from deepobike import kernels
from deepobike.plant import BicycleParams

py = kernels.python
cy = kernels.compiled
needs_ext = pytest.mark.skipif(cy is None, reason="compiled extension not built")
ARGS = BicycleParams().kernel_args
IDEAL_ARGS = BicycleParams(actuator_pole=math.inf).kernel_args


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")
    assert (kernels.BACKEND == "cython") == (cy is not None)


def test_pure_python_switch():
    env = dict(os.environ, DEEPOBIKE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import deepobike; print(deepobike.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@pytest.mark.parametrize("impl", [py, cy] if cy is not None else [py],
                         ids=lambda m: m.__name__.rsplit(".", 1)[1])
def test_singular_inputs(impl):
    assert impl.bicycle_rhs(math.pi / 2, 0, 0, 0, 0, *ARGS) is None
    assert math.isnan(impl.fl_input(math.pi / 2, 0, 0, 0, 0, 0, 1, 6, *IDEAL_ARGS[:-1]))


@needs_ext
class TestAgreement:
    def test_rhs(self, rng):
        for args in (ARGS, IDEAL_ARGS):
            for _ in range(200):
                x = rng.uniform(-1.2, 1.2, 4)
                u = rng.uniform(-4, 4)
                np.testing.assert_allclose(cy.bicycle_rhs(*x, u, *args),
                                           py.bicycle_rhs(*x, u, *args), rtol=1e-13, atol=1e-13)

    def test_rk4(self, rng):
        for _ in range(50):
            x = rng.uniform(-0.3, 0.3, 4)
            a, oka = cy.bicycle_rk4(x, 0.7, 0.01, 10, *ARGS)
            b, okb = py.bicycle_rk4(x, 0.7, 0.01, 10, *ARGS)
            assert oka and okb
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)

    def test_rk4_failure_flag(self):
        x = np.array([math.pi / 2 - 2e-3, 5.0, 0.0, 0.0])
        assert not cy.bicycle_rk4(x, 0.0, 0.01, 10, *ARGS)[1]
        assert not py.bicycle_rk4(x, 0.0, 0.01, 10, *ARGS)[1]

    def test_fl(self, rng):
        for _ in range(200):
            s = rng.uniform(-1, 1, 6)
            args = (*s, 1.0, 6.0, *IDEAL_ARGS[:-1])
            assert cy.fl_input(*args) == pytest.approx(py.fl_input(*args), rel=1e-13, abs=1e-13)

    def test_cov_rank_one(self, rng):
        G = rng.standard_normal((3, 3))
        Phi = G @ G.T + np.eye(3)
        mats = [(Phi.copy(), np.linalg.inv(Phi), rng.standard_normal((2, 3))) for _ in range(2)]
        mats[1] = tuple(m.copy() for m in mats[0])
        for _ in range(20):
            phi, xn = rng.standard_normal(3), rng.standard_normal(2)
            da = cy.cov_rank_one(*mats[0], phi, xn, 0.999, 50.0)
            db = py.cov_rank_one(*mats[1], phi, xn, 0.999, 50.0)
            assert da == pytest.approx(db, rel=1e-13)
        for ma, mb in zip(*mats):
            np.testing.assert_allclose(ma, mb, rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8])
    def test_dlyap(self, rng, n):
        A = rng.standard_normal((n, n))
        A *= 0.9 / np.abs(np.linalg.eigvals(A)).max()
        Q = np.eye(n)
        np.testing.assert_allclose(cy.dlyap_small(A, Q), py.dlyap_small(A, Q), rtol=1e-10)

import math

import numpy as np
import pytest

from deepobike.errors import Fallen, Singularity
from deepobike.numerics import is_controllable
from deepobike.plant import (U_MAX, BicycleParams, BicyclePlant, PlantState, SensorNoise,
                             dynamics_rhs, linearize_upright, make_test_lti, measure, saturate,
                             step)

P = BicycleParams()
IDEAL = BicycleParams(actuator_pole=math.inf)


class TestParams:
    def test_table_values(self):
        assert (P.a, P.h, P.b, P.g, P.v) == (0.55, 0.70, 1.20, 9.82, 2.22)

    @pytest.mark.parametrize("kw", [{"a": 0.0}, {"h": -1.0}, {"v": -0.1}, {"nu": 1.0},
                                    {"actuator_pole": 0.0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            BicycleParams(**kw)

    def test_scaled(self):
        q = P.scaled(a=1.1, h=0.9)
        assert q.a == pytest.approx(0.605) and q.h == pytest.approx(0.63) and q.b == P.b


class TestRhs:
    def test_equilibrium(self):
        assert not dynamics_rhs(np.zeros(4), 0.0, P).any()

    def test_pendulum_term(self):
        phi = 0.01
        d = dynamics_rhs([phi, 0.0, 0.0, 0.0], 0.0, P)
        assert d[1] == pytest.approx(P.g / P.h * math.sin(phi), abs=1e-15)

    def test_steering_rate_term(self):
        d = dynamics_rhs([0.0, 0.0, 0.0, 1.0], 0.0, P)
        assert d[1] == pytest.approx(1.453571428571429, abs=1e-12)
        assert d[2] == 1.0

    def test_actuator_lag(self):
        d = dynamics_rhs([0.0, 0.0, 0.0, 0.0], 1.0, P)
        assert d[3] == pytest.approx(100.0)

    def test_ideal_actuator_uses_input(self):
        d = dynamics_rhs([0.0, 0.0, 0.0, 0.0], 1.0, IDEAL)
        assert d[2] == 1.0 and d[1] == pytest.approx(1.453571428571429, abs=1e-12)

    def test_centrifugal_sign(self):
        x = [0.0, 0.0, 0.1, 0.0]
        plus = dynamics_rhs(x, 0.0, P)[1]
        minus = dynamics_rhs(x, 0.0, BicycleParams(centrifugal_sign=-1.0))[1]
        assert plus == pytest.approx(math.tan(0.1) * P.v**2 / (P.b * P.h))
        assert minus == pytest.approx(-plus)

    def test_singularity(self):
        with pytest.raises(Singularity):
            dynamics_rhs([math.pi / 2 - 1e-4, 0, 0, 0], 0.0, P)
        with pytest.raises(Singularity):
            dynamics_rhs([0, 0, -math.pi / 2 + 1e-4, 0], 0.0, P)

    def test_state_object(self):
        np.testing.assert_array_equal(dynamics_rhs(PlantState(0.1), 0.0, P),
                                      dynamics_rhs([0.1, 0, 0, 0], 0.0, P))


class TestStep:
    def test_saturation(self):
        assert saturate(10.0) == U_MAX and saturate(-10.0) == -U_MAX and saturate(1.0) == 1.0
        a, _ = step(np.zeros(4), 10.0, 0.01, IDEAL)
        b, _ = step(np.zeros(4), 4.0, 0.01, IDEAL)
        np.testing.assert_array_equal(a, b)

    def test_equilibrium_fixed_point(self):
        x, y = step(np.zeros(4), 0.0, 0.01, P)
        assert np.abs(x).max() <= 1e-12 and np.abs(y).max() <= 1e-12

    def test_open_loop_diverges(self):
        x = np.array([math.radians(1.0), 0, 0, 0])
        phis = [x[0]]
        for _ in range(100):
            x, _ = step(x, 0.0, 0.01, P)
            phis.append(x[0])
        assert np.all(np.diff(np.abs(phis)) > 0)
        assert abs(phis[-1]) > 10 * abs(phis[0])

    def test_falls(self):
        x = np.array([math.radians(10.0), 0, 0, 0])
        with pytest.raises(Fallen):
            for _ in range(1000):
                x, _ = step(x, 0.0, 0.01, P)

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            step(np.zeros(4), 0.0, 0.0, P)

    def test_rk4_convergence(self):
        def run(sub):
            x = np.array([0.02, 0.0, 0.01, 0.0])
            for k in range(100):
                x, _ = step(x, 0.3 * math.sin(0.05 * k), 0.01, P, substeps=sub)
            return x
        assert np.abs(run(10) - run(20)).max() <= 1e-8

    def test_pendulum_identity_at_zero_speed(self):
        q = BicycleParams(v=0.0, actuator_pole=math.inf)
        x = np.array([0.05, 0.0, 0.0, 0.0])
        for _ in range(50):
            x, _ = step(x, 0.0, 0.01, q)
            d = dynamics_rhs(x, 0.0, q)
            assert abs(d[1] * q.h - q.g * math.sin(x[0])) <= 1e-12


class TestNoise:
    def test_noiseless(self):
        x = np.array([0.1, 0.2, 0.3, 0.4])
        np.testing.assert_array_equal(measure(x, None, None), x[:3])
        zero = SensorNoise(0.0, 0.0, 0.0)
        np.testing.assert_array_equal(measure(x, zero, np.random.default_rng(0)), x[:3])

    def test_reproducible(self):
        a = BicyclePlant(P, SensorNoise(seed=3), state=[0.01, 0, 0, 0])
        b = BicyclePlant(P, SensorNoise(seed=3), state=[0.01, 0, 0, 0])
        for _ in range(10):
            np.testing.assert_array_equal(a.step(0.1), b.step(0.1))

    def test_std(self):
        n = SensorNoise()
        r = np.random.default_rng(1)
        ys = np.array([measure(np.zeros(4), n, r) for _ in range(40000)])
        np.testing.assert_allclose(ys.std(axis=0), np.radians(0.5), rtol=0.02)

    def test_negative(self):
        with pytest.raises(ValueError):
            SensorNoise(sigma_phi=-1.0)


class TestLinearization:
    def test_entries(self):
        A, B = linearize_upright(P)
        assert A[1, 0] == pytest.approx(14.02857142857143, abs=1e-12)
        assert B[1, 0] == pytest.approx(1.453571428571429, abs=1e-12)

    def test_pendulum_pole(self):
        A, _ = linearize_upright(P)
        poles = np.linalg.eigvals(A[:2, :2])
        assert np.abs(poles).max() == pytest.approx(3.745473458532503, abs=1e-6)

    def test_finite_difference(self):
        A, B = linearize_upright(IDEAL)
        h = 1e-6
        J = np.zeros((3, 3))
        for j in range(3):
            e = np.zeros(4)
            e[j] = h
            J[:, j] = (dynamics_rhs(e, 0.0, IDEAL) - dynamics_rhs(-e, 0.0, IDEAL))[:3] / (2 * h)
        np.testing.assert_allclose(J, A, atol=1e-6)
        Bfd = (dynamics_rhs(np.zeros(4), h, IDEAL) - dynamics_rhs(np.zeros(4), -h, IDEAL))[:3]
        np.testing.assert_allclose(Bfd / (2 * h), B[:, 0], atol=1e-6)

    def test_open_loop_unstable(self):
        A, _ = linearize_upright(P)
        assert np.linalg.eigvals(A).real.max() > 0


class TestTestLti:
    def test_scalar_controllable(self):
        assert is_controllable(np.array([[1.1]]), np.array([[1.0]]))

    @pytest.mark.parametrize("n,m", [(1, 1), (2, 1), (3, 2), (4, 1)])
    def test_properties(self, n, m):
        for seed in range(10):
            A, B, noise = make_test_lti(n, m, seed)
            rho = np.abs(np.linalg.eigvals(A)).max()
            assert 0.8 - 1e-12 <= rho <= 1.2 + 1e-12
            C = np.hstack([np.linalg.matrix_power(A, k) @ B for k in range(n)])
            assert np.linalg.matrix_rank(C) == n
            assert noise == 1e-3

    def test_reproducible(self):
        a = make_test_lti(3, 1, 42)
        b = make_test_lti(3, 1, 42)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    def test_invalid(self):
        with pytest.raises(ValueError):
            make_test_lti(0, 1, 0)

import math

import numpy as np
import pytest

from deepobike.errors import Singularity
from deepobike.fl import (ZERO_REFERENCE, FlParams, Reference, ReferenceSpec, compute, f_term,
                          p_term, reference_array, reference_signal)
from deepobike.plant import BicycleParams, dynamics_rhs, step

IDEAL = BicycleParams(actuator_pole=math.inf)
FL = FlParams(model=IDEAL)


def test_zero_state_zero_reference():
    assert compute((0.0, 0.0, 0.0), Reference(), FL) == 0.0


def test_hand_value():
    u = compute((0.0, 0.0, 0.0), Reference(0.1, 0.0, 0.0), FL)
    assert u == pytest.approx(0.41277641277641264, abs=1e-14)
    assert u == pytest.approx(0.6 / 1.4536, rel=1e-4)


def test_exact_cancellation(rng):
    worst = 0.0
    for _ in range(1000):
        phi, delta = rng.uniform(-1.2, 1.2, 2)
        phi_dot = rng.uniform(-3, 3)
        ref = Reference(*rng.uniform(-0.5, 0.5, 3))
        u = compute((phi, phi_dot, delta), ref, FL)
        w = ref.y_ddot + FL.k1 * (ref.y_dot - phi_dot) + FL.k2 * (ref.y - phi)
        phi_ddot = dynamics_rhs([phi, phi_dot, delta, 0.0], u, IDEAL)[1]
        worst = max(worst, abs(phi_ddot - w) / max(1.0, abs(w)))
    assert worst <= 1e-10


def test_terms_match_rhs(rng):
    for _ in range(50):
        x = rng.uniform(-1, 1, 3)
        d0 = dynamics_rhs([*x, 0.0], 0.0, IDEAL)[1]
        d1 = dynamics_rhs([*x, 0.0], 1.0, IDEAL)[1]
        assert f_term(x, IDEAL) == pytest.approx(d0, abs=1e-12)
        assert p_term(x, IDEAL) == pytest.approx(d1 - d0, abs=1e-12)


def test_error_envelope():
    dt, x = 0.01, np.array([math.radians(5.0), 0.0, 0.0, 0.0])
    errs = []
    for _ in range(1000):
        e = -x[0]
        errs.append(e)
        x, _ = step(x, compute(x[:3], Reference(), FL), dt, IDEAL)
    errs = np.abs(errs)
    peaks = [k for k in range(1, len(errs) - 1) if errs[k - 1] < errs[k] >= errs[k + 1]]
    t = np.array(peaks) * dt
    slope = np.polyfit(t, np.log(errs[peaks]), 1)[0]
    assert len(peaks) >= 3
    assert abs(slope / -0.5 - 1) <= 0.1


def test_singularity():
    with pytest.raises(Singularity):
        compute((math.pi / 2 - 1e-4, 0.0, 0.0), Reference(), FL)
    with pytest.raises(Singularity):
        compute((0.0, 0.0, math.pi / 2), Reference(), FL)


def test_gain_validation():
    with pytest.raises(ValueError):
        FlParams(k1=0.0)


class TestReference:
    def test_zero(self):
        for t in (0.0, 3.3, 59.9):
            assert reference_signal(t, ZERO_REFERENCE) == Reference()

    def test_sine_derivatives(self):
        spec = ReferenceSpec(kind="sine", amplitude=0.1, omega=2.0)
        h = 1e-5
        for t in np.linspace(0.1, 10, 17):
            r = reference_signal(t, spec)
            rp, rm = reference_signal(t + h, spec), reference_signal(t - h, spec)
            assert r.y_dot == pytest.approx(0.2 * math.cos(2 * t), abs=1e-14)
            assert (rp.y - rm.y) / (2 * h) == pytest.approx(r.y_dot, abs=1e-8)
            assert (rp.y_dot - rm.y_dot) / (2 * h) == pytest.approx(r.y_ddot, abs=1e-8)

    def test_steps_shape(self):
        spec = ReferenceSpec()
        A = spec.amplitude
        assert reference_signal(5.0, spec) == Reference()
        assert reference_signal(15.0, spec) == Reference(A, 0.0, 0.0)
        assert reference_signal(25.0, spec) == Reference(-A, 0.0, 0.0)
        assert reference_signal(35.0, spec) == Reference(A, 0.0, 0.0)

    def test_steps_ramp_is_smooth(self):
        spec = ReferenceSpec()
        h = 1e-6
        for t in np.linspace(20.01, 20.49, 13):
            r = reference_signal(t, spec)
            rp, rm = reference_signal(t + h, spec), reference_signal(t - h, spec)
            assert (rp.y - rm.y) / (2 * h) == pytest.approx(r.y_dot, abs=1e-6)
            assert (rp.y_dot - rm.y_dot) / (2 * h) == pytest.approx(r.y_ddot, abs=1e-4)
        # continuity at the knots
        for knot in (10.0, 10.5, 20.0, 20.5):
            a, b = reference_signal(knot - 1e-9, spec), reference_signal(knot + 1e-9, spec)
            assert a.y == pytest.approx(b.y, abs=1e-9)

    def test_array(self):
        arr = reference_array([0.0, 15.0], ReferenceSpec())
        assert arr.shape == (2, 3) and arr[1, 0] == pytest.approx(math.radians(2))

    def test_invalid(self):
        with pytest.raises(ValueError):
            ReferenceSpec(kind="square")
        with pytest.raises(ValueError):
            reference_signal(-1.0)

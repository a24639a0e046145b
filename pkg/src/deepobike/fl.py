"""Inner-loop output feedback linearization of the lean angle.

With ``y = phi`` the law ``u = (w - f(x)) / p(x)`` with
``w = yr_ddot + k1 (yr_dot - phi_dot) + k2 (yr - phi)`` turns the lean
dynamics of the nominal model into ``phi_ddot = w``; the steering angle
remains an internal state.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import Singularity
from .plant import SING_MARGIN, BicycleParams


@dataclass(frozen=True)
class FlParams:
    k1: float = 1.0
    k2: float = 6.0
    model: BicycleParams = field(default_factory=BicycleParams)

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("k1 and k2 must be positive")


@dataclass(frozen=True)
class Reference:
    y: float = 0.0
    y_dot: float = 0.0
    y_ddot: float = 0.0


def compute(meas, ref, params=FlParams()):
    """Steering-rate command for measurement ``(phi, phi_dot, delta)``."""
    phi, phi_dot, delta = float(meas[0]), float(meas[1]), float(meas[2])
    lim = math.pi / 2 - SING_MARGIN
    if abs(phi) > lim or abs(delta) > lim:
        raise Singularity("measurement too close to +-90 deg")
    mdl = params.model
    u = kernels.fl_input(phi, phi_dot, delta, ref.y, ref.y_dot, ref.y_ddot,
                         params.k1, params.k2, mdl.a, mdl.h, mdl.b, mdl.g, mdl.v,
                         mdl.centrifugal_sign)
    if not math.isfinite(u):
        raise Singularity("p(x) vanished")
    return u


def f_term(x, model=BicycleParams()):
    phi, delta = x[0], x[2]
    td = math.tan(delta)
    return (model.centrifugal_sign * (1 / (model.b * model.h) - td * math.tan(phi) / model.b**2)
            * td * model.v**2 + model.g / model.h * math.sin(phi))


def p_term(x, model=BicycleParams()):
    return model.a / (model.b * model.h) * math.cos(x[0]) * model.v


@dataclass(frozen=True)
class ReferenceSpec:
    """Lean-angle reference waveform.

    ``kind`` is ``"zero"``, ``"sine"`` (``amplitude`` sin(``omega`` t)) or
    ``"steps"``: levels 0, +A, -A, +A, ... each held ``dwell`` seconds and
    joined by cosine ramps of length ``ramp``. Angles in radians.
    """

    kind: str = "steps"
    amplitude: float = math.radians(2.0)
    omega: float = 1.0
    dwell: float = 10.0
    ramp: float = 0.5

    def __post_init__(self):
        if self.kind not in ("zero", "sine", "steps"):
            raise ValueError(f"unknown reference kind {self.kind!r}")
        if self.kind == "steps" and not 0 < self.ramp <= self.dwell:
            raise ValueError("ramp must be positive and no longer than dwell")


ZERO_REFERENCE = ReferenceSpec(kind="zero")


def _level(k, amp):
    if k <= 0:
        return 0.0
    return amp if k % 2 == 1 else -amp


def reference_signal(t, spec=ReferenceSpec()):
    if t < 0:
        raise ValueError("t must be non-negative")
    if spec.kind == "zero":
        return Reference()
    if spec.kind == "sine":
        A, w = spec.amplitude, spec.omega
        return Reference(A * math.sin(w * t), A * w * math.cos(w * t),
                         -A * w * w * math.sin(w * t))
    k = int(t // spec.dwell)
    s = t - k * spec.dwell
    y1 = _level(k, spec.amplitude)
    if k == 0 or s >= spec.ramp:
        return Reference(y1, 0.0, 0.0)
    y0 = _level(k - 1, spec.amplitude)
    dy, tau = y1 - y0, spec.ramp
    c = math.pi * s / tau
    return Reference(y0 + 0.5 * dy * (1 - math.cos(c)),
                     0.5 * dy * math.pi / tau * math.sin(c),
                     0.5 * dy * (math.pi / tau) ** 2 * math.cos(c))


def reference_array(times, spec=ReferenceSpec()):
    return np.array([[*vars(reference_signal(t, spec)).values()] for t in times])

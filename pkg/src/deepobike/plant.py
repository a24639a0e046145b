"""Point-mass bicycle with steering-rate actuator, saturation and sensor noise.

State vector ``[phi, phi_dot, delta, delta_rate]`` in rad and rad/s. The
input is the commanded steering rate ``u`` (rad/s), clamped to
``+-U_MAX`` and passed through a first-order lag ``pole / (s + pole)``
(``pole = inf`` makes the actuator ideal, ``delta_dot = u``).
"""
import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import Fallen, Singularity
from .numerics import is_controllable, spectral_radius

U_MAX = 4.0
SUBSTEPS = 10
SING_MARGIN = kernels.SING_MARGIN
SOFT_FALL = math.radians(45.0)


@dataclass(frozen=True)
class BicycleParams:
    a: float = 0.55
    h: float = 0.70
    b: float = 1.20
    g: float = 9.82
    v: float = 2.22
    nu: float = math.pi / 2
    # +1: steering-induced lateral acceleration has the same sign from delta
    # and delta_dot (stable steering zero dynamics); -1 flips the delta term
    centrifugal_sign: float = 1.0
    actuator_pole: float = 100.0

    def __post_init__(self):
        if min(self.a, self.h, self.b) <= 0:
            raise ValueError("a, h and b must be positive")
        # v = 0 is allowed: the model then reduces to an inverted pendulum
        if self.v < 0:
            raise ValueError("v must be non-negative")
        if abs(self.nu - math.pi / 2) > 1e-12:
            raise ValueError("only a vertical steering axis (nu = pi/2) is modelled")
        if self.actuator_pole <= 0:
            raise ValueError("actuator_pole must be positive (inf for an ideal actuator)")

    def scaled(self, **factors):
        """Copy with selected parameters multiplied by the given factors."""
        return replace(self, **{k: getattr(self, k) * f for k, f in factors.items()})

    @property
    def kernel_args(self):
        return (self.a, self.h, self.b, self.g, self.v, self.centrifugal_sign,
                self.actuator_pole)


@dataclass
class PlantState:
    phi: float = 0.0
    phi_dot: float = 0.0
    delta: float = 0.0
    delta_dot: float = 0.0

    def as_array(self):
        return np.array([self.phi, self.phi_dot, self.delta, self.delta_dot])

    @classmethod
    def from_array(cls, x):
        return cls(*(float(v) for v in x))


@dataclass(frozen=True)
class SensorNoise:
    """Measurement noise standard deviations in degrees (deg/s for the rate)."""

    sigma_phi: float = 0.5
    sigma_phi_dot: float = 0.5
    sigma_delta: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if min(self.sigma_phi, self.sigma_phi_dot, self.sigma_delta) < 0:
            raise ValueError("noise levels must be non-negative")

    @property
    def std_rad(self):
        return np.radians([self.sigma_phi, self.sigma_phi_dot, self.sigma_delta])


def _as_state(state):
    if isinstance(state, PlantState):
        return state.as_array()
    x = np.asarray(state, dtype=float).reshape(-1)
    if x.size == 3:
        x = np.append(x, 0.0)
    return x


def dynamics_rhs(state, u, params=BicycleParams()):
    """Derivatives ``(phi_dot, phi_ddot, delta_dot, delta_rate_dot)``."""
    x = _as_state(state)
    d = kernels.bicycle_rhs(x[0], x[1], x[2], x[3], float(u), *params.kernel_args)
    if d is None:
        raise Singularity(f"state {x[:3]} within {SING_MARGIN} rad of a tan singularity")
    return np.array(d)


def saturate(u):
    return min(max(float(u), -U_MAX), U_MAX)


def measure(x, noise, rng):
    """Noisy ``(phi, phi_dot, delta)``; exact state if ``noise`` is None."""
    y = np.array(x[:3], dtype=float)
    if noise is None or rng is None:
        return y
    return y + noise.std_rad * rng.standard_normal(3)


def step(state, u, dt, params=BicycleParams(), rng=None, noise=None, substeps=SUBSTEPS):
    """Advance one control period with the saturated input held constant.

    Returns ``(new_state, measurement)`` as arrays.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    x = _as_state(state)
    x_new, ok = kernels.bicycle_rk4(x, saturate(u), float(dt), int(substeps),
                                    *params.kernel_args)
    if not ok:
        # an intermediate RK stage hit a singularity; blame the larger angle
        if abs(x_new[0]) >= abs(x_new[2]):
            raise Fallen(f"lean angle reached {math.degrees(x_new[0]):.1f} deg")
        raise Singularity(f"steering angle reached {math.degrees(x_new[2]):.1f} deg")
    if abs(x_new[0]) >= math.pi / 2:
        raise Fallen(f"lean angle reached {math.degrees(x_new[0]):.1f} deg")
    return x_new, measure(x_new, noise, rng)


class BicyclePlant:
    """Stateful plant with its own measurement-noise stream."""

    def __init__(self, params=BicycleParams(), noise=None, dt=0.01, state=None,
                 substeps=SUBSTEPS):
        self.params = params
        self.noise = noise
        self.dt = dt
        self.substeps = substeps
        self.rng = np.random.default_rng(noise.seed) if noise is not None else None
        self.x = _as_state(state if state is not None else PlantState())
        self.y = measure(self.x, noise, self.rng)

    def step(self, u):
        self.x, self.y = step(self.x, u, self.dt, self.params, self.rng, self.noise,
                              self.substeps)
        return self.y


def linearize_upright(params=BicycleParams(), actuator=False):
    """Continuous Jacobians at the upright equilibrium, states (phi, phi_dot, delta),
    input the steering rate (ideal actuator).

    With ``actuator=True`` and a finite pole the actuator output is appended
    as a fourth state and the input becomes the commanded rate.
    """
    a, h, b, g, v = params.a, params.h, params.b, params.g, params.v
    s = params.centrifugal_sign
    A = np.array([
        [0.0, 1.0, 0.0],
        [g / h, 0.0, s * v * v / (b * h)],
        [0.0, 0.0, 0.0],
    ])
    B = np.array([[0.0], [a * v / (b * h)], [1.0]])
    if not actuator or math.isinf(params.actuator_pole):
        return A, B
    pole = params.actuator_pole
    A4 = np.zeros((4, 4))
    A4[:3, :3] = A
    A4[:3, 3] = B[:, 0]
    A4[3, 3] = -pole
    B4 = np.array([[0.0], [0.0], [0.0], [pole]])
    return A4, B4


def make_test_lti(n, m, seed, noise_level=1e-3, max_tries=100):
    """Random controllable pair with ``rho(A)`` uniform in [0.8, 1.2]."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        A = rng.standard_normal((n, n))
        r = spectral_radius(A)
        if r < 1e-8:
            continue
        A *= rng.uniform(0.8, 1.2) / r
        B = rng.standard_normal((n, m))
        if is_controllable(A, B):
            return A, B, noise_level
    raise RuntimeError("could not draw a controllable pair")

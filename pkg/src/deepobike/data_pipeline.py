"""Trajectory data matrices and the exponentially weighted covariance.

A :class:`WeightedCovariance` is the only memory the adaptive controller
keeps about past data: the input/state covariance ``Phi`` with its inverse,
and the successor-state covariance ``Xbar1``. ``update`` applies the
rank-one recursion with a Sherman-Morrison inverse update; ``build_batch``
computes the same quantities directly from stored data.
"""
import csv
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import IllConditioned, RankDeficient

EPS_PE = 1e-6
EPS_DEN = 1e-12
REFRESH_EVERY = 500


def fmt_float(x):
    """17 significant digits; parses back to the identical double."""
    return f"{float(x):.16e}"


@dataclass
class TrajectoryLog:
    """Input, state and successor-state histories, one column per sample."""

    U0: np.ndarray
    X0: np.ndarray
    X1: np.ndarray

    def __post_init__(self):
        self.U0 = np.atleast_2d(np.asarray(self.U0, dtype=float))
        self.X0 = np.atleast_2d(np.asarray(self.X0, dtype=float))
        self.X1 = np.atleast_2d(np.asarray(self.X1, dtype=float))
        t = self.U0.shape[1]
        if self.X0.shape[1] != t or self.X1.shape[1] != t:
            raise ValueError("U0, X0 and X1 must have the same number of columns")
        if self.X0.shape[0] != self.X1.shape[0]:
            raise ValueError("X0 and X1 must have the same number of rows")
        if t < 1:
            raise ValueError("trajectory log needs at least one sample")
        if not (np.all(np.isfinite(self.U0)) and np.all(np.isfinite(self.X0))
                and np.all(np.isfinite(self.X1))):
            raise ValueError("trajectory log contains non-finite entries")

    @property
    def m(self):
        return self.U0.shape[0]

    @property
    def n(self):
        return self.X0.shape[0]

    @property
    def t(self):
        return self.U0.shape[1]

    @property
    def D(self):
        return np.vstack([self.U0, self.X0])

    @classmethod
    def from_samples(cls, inputs, states):
        """Build from ``t`` inputs and ``t + 1`` consecutive states."""
        inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
        states = np.atleast_2d(np.asarray(states, dtype=float))
        col_major = inputs.shape[1] + 1 == states.shape[1]
        row_major = inputs.shape[0] + 1 == states.shape[0]
        if row_major and (not col_major or inputs.shape[0] > inputs.shape[1]):
            # sample-major arrays; ambiguous shapes resolve to more samples than channels
            inputs, states = inputs.T, states.T
        if inputs.shape[1] + 1 != states.shape[1]:
            raise ValueError("need exactly one more state than inputs")
        return cls(inputs, states[:, :-1], states[:, 1:])

    def tail(self, count):
        return TrajectoryLog(self.U0[:, -count:], self.X0[:, -count:], self.X1[:, -count:])

    def to_csv(self, path):
        header = (["k"] + [f"u{i}" for i in range(self.m)] + [f"x{i}" for i in range(self.n)]
                  + [f"x1_{i}" for i in range(self.n)])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for k in range(self.t):
                row = np.concatenate([self.U0[:, k], self.X0[:, k], self.X1[:, k]])
                w.writerow([k] + [fmt_float(x) for x in row])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        m = sum(1 for h in header if h.startswith("u"))
        n = sum(1 for h in header if h.startswith("x1_"))
        data = np.array([[float(x) for x in r[1:]] for r in body if r]).T
        if data.size == 0:
            raise ValueError(f"{path}: no samples")
        return cls(data[:m], data[m:m + n], data[m + n:m + 2 * n])


@dataclass
class WeightedCovariance:
    Phi: np.ndarray
    PhiInv: np.ndarray
    Xbar1: np.ndarray
    t: float
    lam: float
    m: int
    since_refresh: int = 0
    fresh: int = field(default=10**9)

    @property
    def n(self):
        return self.Xbar1.shape[0]

    @property
    def U0bar(self):
        return self.Phi[: self.m]

    @property
    def X0bar(self):
        return self.Phi[self.m:]

    def copy(self):
        return replace(self, Phi=self.Phi.copy(), PhiInv=self.PhiInv.copy(),
                       Xbar1=self.Xbar1.copy())

    def push(self, phi, x_next):
        """In-place version of :func:`update`."""
        phi = np.ascontiguousarray(phi, dtype=float).reshape(-1)
        x_next = np.ascontiguousarray(x_next, dtype=float).reshape(-1)
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(x_next))):
            raise ValueError("non-finite sample")
        den = self.lam * self.t + float(phi @ self.PhiInv @ phi)
        if not den >= EPS_DEN:
            raise IllConditioned(f"Sherman-Morrison denominator {den:.3e} below {EPS_DEN}")
        kernels.cov_rank_one(self.Phi, self.PhiInv, self.Xbar1, phi, x_next,
                             float(self.lam), float(self.t))
        self.t += 1
        self.fresh += 1
        self.since_refresh += 1
        if self.since_refresh >= REFRESH_EVERY:
            self.refresh()
        return self

    def refresh(self):
        """Recompute ``PhiInv`` directly to bound accumulated rounding drift."""
        inv = np.linalg.inv(self.Phi)
        self.PhiInv[...] = 0.5 * (inv + inv.T)
        self.since_refresh = 0


def _weights(t, lam):
    return lam ** np.arange(t - 1, -1, -1, dtype=float)


def build_batch(log, lam=1.0):
    """Weighted covariance of a whole log, ``Phi = D S D^T / t``."""
    if not 0.0 < lam <= 1.0:
        raise ValueError("forgetting factor must lie in (0, 1]")
    D = log.D
    t = log.t
    if t < D.shape[0] or np.linalg.matrix_rank(D) < D.shape[0]:
        raise RankDeficient(f"data matrix has rank < {D.shape[0]} (t = {t})")
    s = _weights(t, lam)
    Phi = (D * s) @ D.T / t
    Phi = 0.5 * (Phi + Phi.T)
    Xbar1 = (log.X1 * s) @ D.T / t
    PhiInv = np.linalg.inv(Phi)
    return WeightedCovariance(Phi=Phi, PhiInv=0.5 * (PhiInv + PhiInv.T), Xbar1=Xbar1,
                              t=float(t), lam=float(lam), m=log.m)


def update(cov, phi, x_next):
    """Covariance after one more sample ``phi = [u; x]`` with successor ``x_next``."""
    return cov.copy().push(phi, x_next)


@dataclass(frozen=True)
class PeResult:
    ok: bool
    min_singular_value: float
    max_singular_value: float


def pe_check(log, eps=EPS_PE):
    """Persistency-of-excitation test: full row rank of ``[U0; X0]``."""
    D = log.D
    s = np.linalg.svd(D, compute_uv=False)
    if s.size < D.shape[0]:
        return PeResult(False, 0.0, float(s.max(initial=0.0)))
    smax = float(s[0])
    smin = float(s[-1])
    return PeResult(bool(smax > 0.0 and smin > eps * smax), smin, smax)


def reset(cov, t_reset=1.0):
    """Reset ``Phi`` and its inverse to identity; ``Xbar1`` is zeroed."""
    d = cov.Phi.shape[0]
    return WeightedCovariance(Phi=np.eye(d), PhiInv=np.eye(d), Xbar1=np.zeros_like(cov.Xbar1),
                              t=float(t_reset), lam=cov.lam, m=cov.m, fresh=0)

"""Data-enabled policy optimization (DeePO) for adaptive LQR.

The gain ``K`` is represented through the weighted data covariance as
``[K; I] = Phi V``. Each sample triggers one projected gradient step on the
certainty-equivalent LQR cost ``J(V)``; the recovered gain ``K = U0bar V'``
is applied every ``xi`` samples. A step that would break the closed-loop
certificate ``rho(Xbar1 V') < 1`` is discarded.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from .data_pipeline import reset as reset_covariance
from .errors import IllConditioned, NotStable, RankDeficient
from .numerics import solve_dlyap, spectral_radius

log = logging.getLogger(__name__)

EPS_STEP_DEN = 1e-9
COND_MAX = 1e12
SIGMA_FLOOR = 0.01


@dataclass
class DeepoConfig:
    Q: np.ndarray = field(default_factory=lambda: np.diag([1.0, 0.01]))
    R: np.ndarray = field(default_factory=lambda: np.array([[1e-4]]))
    eta0: float = 1e-3
    lam: float = 1.0 - 1e-4
    xi: int = 1
    reset_period: int = 0
    probe_scale: float = 0.2
    sigma_floor: float = SIGMA_FLOOR
    # recover from IllConditioned by resetting instead of failing
    reset_safeguard: bool = True
    t_reset: float = 1.0
    # "applied": parameterize the gain in use; "latest": the last recovered one
    parameterize_from: str = "applied"

    def __post_init__(self):
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        self.R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if np.linalg.eigvalsh(self.Q).min() <= 0 or np.linalg.eigvalsh(self.R).min() <= 0:
            raise ValueError("Q and R must be positive definite")
        if self.eta0 < 0:
            raise ValueError("eta0 must be non-negative")
        if not 0.0 < self.lam <= 1.0:
            raise ValueError("lam must lie in (0, 1]")
        if int(self.xi) < 1:
            raise ValueError("xi must be >= 1")
        self.xi = int(self.xi)
        if self.parameterize_from not in ("applied", "latest"):
            raise ValueError("parameterize_from must be 'applied' or 'latest'")


@dataclass
class Policy:
    """Applied gain ``K``, its parameterization ``V`` and certificate status.

    ``K_latest`` is the most recent recovered gain, which differs from ``K``
    between scheduled gain updates when ``xi > 1``.
    """

    K: np.ndarray
    V: np.ndarray | None = None
    stabilizing: bool = False
    rho: float = np.nan
    K_latest: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.K = np.atleast_2d(np.asarray(self.K, dtype=float))
        if self.K_latest is None:
            self.K_latest = self.K.copy()


def parameterize(K, cov):
    """``V = Phi^{-1} [K; I_n]``."""
    K = np.atleast_2d(K)
    n = cov.n
    Phi, PhiInv = cov.Phi, cov.PhiInv
    cond = np.abs(Phi).sum(axis=0).max() * np.abs(PhiInv).sum(axis=0).max()
    if not np.isfinite(cond) or cond > COND_MAX:
        raise IllConditioned(f"covariance condition estimate {cond:.3e}")
    return PhiInv @ np.vstack([K, np.eye(n)])


def recover_gain(U0bar, V):
    return U0bar @ V


def _sigma(V, cov):
    return solve_dlyap(cov.Xbar1 @ V, np.eye(cov.n))


def cost(V, cov, Q, R):
    """Certainty-equivalent LQR cost ``Tr((Q + V^T U^T R U V) Sigma(V))``."""
    KV = cov.U0bar @ V
    sigma = _sigma(V, cov)
    return float(np.trace((Q + KV.T @ R @ KV) @ sigma))


def gradient(V, cov, Q, R):
    """Gradient of :func:`cost` with respect to ``V``."""
    U0bar, Xbar1 = cov.U0bar, cov.Xbar1
    Acl = Xbar1 @ V
    sigma = solve_dlyap(Acl, np.eye(cov.n))
    KV = U0bar @ V
    P = solve_dlyap(Acl.T, Q + KV.T @ R @ KV)
    return 2.0 * (U0bar.T @ R @ U0bar + Xbar1.T @ P @ Xbar1) @ V @ sigma


def projection(cov):
    """Orthogonal projector onto the nullspace of ``X0bar``."""
    X0bar = cov.X0bar
    G = X0bar @ X0bar.T
    # full row rank lets the pseudoinverse be written as X^T (X X^T)^{-1}
    if np.linalg.cond(G) > 1e24:
        raise RankDeficient("X0bar lacks full row rank")
    return np.eye(X0bar.shape[1]) - X0bar.T @ np.linalg.solve(G, X0bar)


def adaptive_stepsize(eta0, cov, Pi=None):
    """SNR-scaled stepsize ``eta0 / ||U0bar Pi U0bar^T||``."""
    if Pi is None:
        Pi = projection(cov)
    U0bar = cov.U0bar
    M = U0bar @ Pi @ U0bar.T
    nrm = abs(float(M[0, 0])) if M.shape == (1, 1) else float(np.linalg.norm(M, 2))
    return eta0 / max(nrm, EPS_STEP_DEN)


def step(policy, cov, config, t):
    """One DeePO iteration on an already-updated covariance.

    ``t`` counts online samples; the recovered gain is applied only when
    ``t % xi == 0``. Failure to certify the new iterate keeps the old gain.
    """
    K_param = policy.K if config.parameterize_from == "applied" else policy.K_latest
    V = parameterize(K_param, cov)
    if config.eta0 == 0.0:
        return Policy(K=policy.K, V=V, stabilizing=policy.stabilizing, rho=policy.rho,
                      K_latest=K_param, meta=policy.meta)
    try:
        Pi = projection(cov)
        eta = adaptive_stepsize(config.eta0, cov, Pi)
        V_new = V - eta * (Pi @ gradient(V, cov, config.Q, config.R))
    except NotStable:
        log.debug("t=%d: current iterate not certified, step skipped", t)
        return Policy(K=policy.K, V=V, stabilizing=policy.stabilizing, rho=policy.rho,
                      K_latest=policy.K_latest, meta=policy.meta)
    rho = spectral_radius(cov.Xbar1 @ V_new)
    if not rho < 1.0:
        log.debug("t=%d: step rejected, rho=%.4f", t, rho)
        return Policy(K=policy.K, V=V, stabilizing=policy.stabilizing, rho=policy.rho,
                      K_latest=policy.K_latest, meta=policy.meta)
    K_new = cov.U0bar @ V_new
    if t % config.xi == 0:
        return Policy(K=K_new, V=V_new, stabilizing=True, rho=rho, K_latest=K_new,
                      meta=policy.meta)
    return Policy(K=policy.K, V=V_new, stabilizing=policy.stabilizing, rho=policy.rho,
                  K_latest=K_new, meta=policy.meta)


def probing_noise(u_deepo, probe_scale, rng, sigma_floor=SIGMA_FLOOR):
    """Gaussian probe with per-channel std ``max(probe_scale |u|, sigma_floor)``."""
    u = np.atleast_1d(np.asarray(u_deepo, dtype=float))
    std = np.maximum(probe_scale * np.abs(u), sigma_floor)
    if not np.any(std > 0):
        return np.zeros_like(u)
    return std * rng.standard_normal(u.shape)


class DeepoController:
    """Stateful wrapper running the covariance update, reset schedule and step.

    Call :meth:`observe` with each new sample ``(u_t, x_t, x_{t+1})`` and read
    the gain to apply from :attr:`policy`.
    """

    def __init__(self, cov, policy, config):
        self.cov = cov.copy()
        self.policy = policy
        self.config = config
        self.cov.lam = config.lam
        self.t = 0
        self.resets = 0

    def _reset(self):
        self.cov = reset_covariance(self.cov, self.config.t_reset)
        self.resets += 1

    def observe(self, u, x, x_next):
        cfg = self.config
        phi = np.concatenate([np.atleast_1d(u), np.atleast_1d(x)])
        self.t += 1
        try:
            self.cov.push(phi, x_next)
        except IllConditioned:
            if not cfg.reset_safeguard:
                raise
            log.warning("t=%d: covariance update ill-conditioned, resetting", self.t)
            self._reset()
            self.cov.push(phi, x_next)
        if cfg.reset_period and self.t % cfg.reset_period == 0:
            self._reset()
        m_plus_n = self.cov.Phi.shape[0]
        if self.cov.fresh < m_plus_n:
            return self.policy
        try:
            self.policy = step(self.policy, self.cov, cfg, self.t)
        except (IllConditioned, RankDeficient):
            if not cfg.reset_safeguard:
                raise
            log.warning("t=%d: step failed on degenerate covariance, resetting", self.t)
            self._reset()
        return self.policy

    def control(self, x):
        return self.policy.K @ np.atleast_1d(x)

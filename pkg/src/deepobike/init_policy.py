"""Initial stabilizing policy from offline data.

Solves the regularized covariance-parameterized LQR

    minimize   J(V) + gamma * Tr(V Sigma V^T Phi)
    subject to Sigma >= I + Xbar1 V Sigma V^T Xbar1^T,  X0bar V = I

as a semidefinite program in ``Y = V Sigma`` (so ``Sigma = X0bar Y``), with the
three quadratic terms bounded by Schur-complement LMIs. The recovered policy
is accepted only if ``rho(Xbar1 V) < 1 - CERT_MARGIN``.
"""
import json
from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from .data_pipeline import build_batch
from .deepo import Policy, cost
from .errors import Infeasible, NotStabilizing
from .numerics import solve_dlyap, spectral_radius

CERT_MARGIN = 1e-6
SOLVER_TOL = 1e-8


@dataclass
class RegularizedProblem:
    cov: object
    Q: np.ndarray
    R: np.ndarray
    gamma: float = 1.0

    def __post_init__(self):
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        self.R = np.atleast_2d(np.asarray(self.R, dtype=float))
        if self.gamma < 0:
            raise ValueError("gamma must be non-negative")


def _psd_sqrt(M):
    w, U = np.linalg.eigh(0.5 * (M + M.T))
    return (U * np.sqrt(np.clip(w, 0.0, None))) @ U.T


def _solve(problem, solver):
    if solver is not None:
        problem.solve(solver=solver)
        return solver
    try:
        problem.solve(solver=cp.CLARABEL, tol_gap_abs=SOLVER_TOL, tol_gap_rel=SOLVER_TOL,
                      tol_feas=SOLVER_TOL)
        return "CLARABEL"
    except cp.error.SolverError:
        problem.solve(solver=cp.SCS, eps=SOLVER_TOL, max_iters=200000)
        return "SCS"


def solve_regularized(prob, solver=None):
    """Solve the regularized program; returns a certified :class:`Policy`.

    ``policy.meta`` carries the objective, regularizer value, ``Sigma`` and
    solver information.
    """
    cov = prob.cov
    m, n = cov.m, cov.n
    d = m + n
    # rescale data so the conic solver sees O(1) entries; the optimal K and the
    # closed-loop matrix are invariant and gamma is adjusted to match
    scale = float(np.trace(cov.Phi)) / d
    Phi = cov.Phi / scale
    U0bar = Phi[:m]
    X0bar = Phi[m:]
    Xbar1 = cov.Xbar1 / scale
    gamma_s = prob.gamma / scale

    Y = cp.Variable((d, n))
    S = cp.Variable((n, n), symmetric=True)
    W = cp.Variable((m, m), symmetric=True)
    Z = cp.Variable((d, d), symmetric=True)
    Rh = _psd_sqrt(prob.R)
    # gamma folded into the factor so Z is on the scale of the objective
    Ph = np.sqrt(gamma_s) * _psd_sqrt(Phi)
    cons = [
        X0bar @ Y == S,
        cp.bmat([[S - np.eye(n), Xbar1 @ Y], [(Xbar1 @ Y).T, S]]) >> 0,
        cp.bmat([[W, Rh @ U0bar @ Y], [(Rh @ U0bar @ Y).T, S]]) >> 0,
    ]
    obj = cp.trace(prob.Q @ S) + cp.trace(W)
    if prob.gamma > 0:
        cons.append(cp.bmat([[Z, Ph @ Y], [(Ph @ Y).T, S]]) >> 0)
        obj = obj + cp.trace(Z)
    problem = cp.Problem(cp.Minimize(obj), cons)
    used = _solve(problem, solver)
    if problem.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or Y.value is None:
        raise Infeasible(f"SDP status: {problem.status}")

    Sv = 0.5 * (S.value + S.value.T)
    V_s = Y.value @ np.linalg.inv(Sv)
    # back to the caller's data scale: Phi V = [K; I] with Phi = scale * Phi_s
    V = V_s / scale
    K = cov.U0bar @ V
    rho = spectral_radius(cov.Xbar1 @ V)
    if not rho < 1.0 - CERT_MARGIN:
        raise NotStabilizing(f"recovered policy has rho(Xbar1 V) = {rho:.6f}")
    sigma = solve_dlyap(cov.Xbar1 @ V, np.eye(n))
    reg = regularizer(V, sigma, cov.Phi)
    J = cost(V, cov, prob.Q, prob.R)
    meta = {
        "objective": J + prob.gamma * reg,
        "cost": J,
        "regularizer": reg,
        "gamma": prob.gamma,
        "sdp_objective": float(problem.value) * 1.0,
        "solver": used,
        "status": problem.status,
        "Sigma": sigma,
        "constraint_residual": float(np.abs(cov.X0bar @ V - np.eye(n)).max()),
    }
    return Policy(K=K, V=V, stabilizing=True, rho=rho, meta=meta)


def regularizer(V, sigma, Phi):
    """``Tr(V Sigma V^T Phi)``, the robustness-promoting penalty."""
    return float(np.trace(V @ sigma @ V.T @ Phi))


@dataclass(frozen=True)
class GapReport:
    regularizer: float
    gap: float | None


def gap_diagnostic(V, cov, log=None, W0=None):
    """Regularizer value and, given the true noise, the Lyapunov-equation gap.

    The gap is the 2-norm of the difference between the certainty-equivalent
    and true right-hand sides; it needs the (normally unmeasurable) noise
    sequence ``W0`` matching ``log``.
    """
    sigma = solve_dlyap(cov.Xbar1 @ V, np.eye(cov.n))
    reg = regularizer(V, sigma, cov.Phi)
    if W0 is None or log is None:
        return GapReport(reg, None)
    W0 = np.atleast_2d(W0)
    t = log.t
    s = cov.lam ** np.arange(t - 1, -1, -1, dtype=float)
    W0bar = (W0 * s) @ log.D.T / t
    M = V @ sigma @ V.T
    G = W0bar @ M @ W0bar.T - W0bar @ M @ cov.Xbar1.T - cov.Xbar1 @ M @ W0bar.T
    return GapReport(reg, float(np.linalg.norm(G, 2)))


def initial_policy_from_log(log, Q, R, gamma=1.0, lam=1.0, solver=None):
    cov = build_batch(log, lam)
    return solve_regularized(RegularizedProblem(cov, Q, R, gamma), solver=solver), cov


def save_policy(policy, path):
    m, n = policy.K.shape
    rec = {
        "m": m,
        "n": n,
        "K": policy.K.ravel().tolist(),
        "V": None if policy.V is None else policy.V.ravel().tolist(),
        "certificate_rho": float(policy.rho),
        "stabilizing": bool(policy.stabilizing),
    }
    for key, val in policy.meta.items():
        if isinstance(val, np.ndarray):
            continue
        rec[key] = val
    with open(path, "w") as fh:
        json.dump(rec, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_policy(path):
    with open(path) as fh:
        rec = json.load(fh)
    m, n = rec["m"], rec["n"]
    K = np.array(rec["K"], dtype=float).reshape(m, n)
    V = None if rec.get("V") is None else np.array(rec["V"], dtype=float).reshape(m + n, n)
    meta = {k: v for k, v in rec.items()
            if k not in ("m", "n", "K", "V", "certificate_rho", "stabilizing")}
    return Policy(K=K, V=V, stabilizing=rec.get("stabilizing", False),
                  rho=rec.get("certificate_rho", np.nan), meta=meta)

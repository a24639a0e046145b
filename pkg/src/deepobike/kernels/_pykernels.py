"""Pure-Python reference implementation of the hot kernels.

Mirrors ``_ckernels.pyx`` operation by operation; used when the compiled
extension is unavailable or ``DEEPOBIKE_PURE_PYTHON=1`` is set.
"""
import math

import numpy as np

SING_MARGIN = 1e-3
_HALF_PI = 0.5 * math.pi


def bicycle_rhs(phi, phi_dot, delta, delta_rate, u, a, h, b, g, v, sign, pole):
    """Time derivatives of (phi, phi_dot, delta, delta_rate).

    Returns ``None`` when the state is within ``SING_MARGIN`` of a tangent
    singularity.
    """
    if abs(phi) > _HALF_PI - SING_MARGIN or abs(delta) > _HALF_PI - SING_MARGIN:
        return None
    if math.isinf(pole):
        ddelta = u
        drate = 0.0
    else:
        ddelta = delta_rate
        drate = pole * (u - delta_rate)
    td = math.tan(delta)
    tp = math.tan(phi)
    phi_ddot = (
        (g / h) * math.sin(phi)
        + (a / (b * h)) * math.cos(phi) * v * ddelta
        + sign * (1.0 / (b * h) - td * tp / (b * b)) * td * v * v
    )
    return phi_dot, phi_ddot, ddelta, drate


def bicycle_rk4(state, u, dt, nsub, a, h, b, g, v, sign, pole):
    """Integrate ``nsub`` RK4 substeps of length ``dt / nsub`` with input held.

    Returns ``(new_state, ok)``; ``ok`` is False if a singularity was met, in
    which case ``new_state`` is the last good state.
    """
    x0, x1, x2, x3 = float(state[0]), float(state[1]), float(state[2]), float(state[3])
    hs = dt / nsub
    for _ in range(nsub):
        k1 = bicycle_rhs(x0, x1, x2, x3, u, a, h, b, g, v, sign, pole)
        if k1 is None:
            return np.array([x0, x1, x2, x3]), False
        k2 = bicycle_rhs(x0 + 0.5 * hs * k1[0], x1 + 0.5 * hs * k1[1],
                         x2 + 0.5 * hs * k1[2], x3 + 0.5 * hs * k1[3],
                         u, a, h, b, g, v, sign, pole)
        if k2 is None:
            return np.array([x0, x1, x2, x3]), False
        k3 = bicycle_rhs(x0 + 0.5 * hs * k2[0], x1 + 0.5 * hs * k2[1],
                         x2 + 0.5 * hs * k2[2], x3 + 0.5 * hs * k2[3],
                         u, a, h, b, g, v, sign, pole)
        if k3 is None:
            return np.array([x0, x1, x2, x3]), False
        k4 = bicycle_rhs(x0 + hs * k3[0], x1 + hs * k3[1],
                         x2 + hs * k3[2], x3 + hs * k3[3],
                         u, a, h, b, g, v, sign, pole)
        if k4 is None:
            return np.array([x0, x1, x2, x3]), False
        c = hs / 6.0
        x0 = x0 + c * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        x1 = x1 + c * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        x2 = x2 + c * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        x3 = x3 + c * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
    if math.isinf(pole):
        x3 = u
    return np.array([x0, x1, x2, x3]), True


def fl_input(phi, phi_dot, delta, y_r, y_r_dot, y_r_ddot, k1, k2, a, h, b, g, v, sign):
    """Feedback-linearizing steering rate; NaN if ``p(x)`` vanishes."""
    p = (a / (b * h)) * math.cos(phi) * v
    if abs(math.cos(phi)) <= SING_MARGIN:
        return math.nan
    td = math.tan(delta)
    f = sign * (1.0 / (b * h) - td * math.tan(phi) / (b * b)) * td * v * v + (g / h) * math.sin(phi)
    w = y_r_ddot + k1 * (y_r_dot - phi_dot) + k2 * (y_r - phi)
    return (w - f) / p


def cov_rank_one(Phi, PhiInv, Xbar1, phi, x_next, lam, t):
    """In-place exponentially weighted rank-one update; returns the
    Sherman-Morrison denominator ``lam * t + phi^T PhiInv phi``.

    Nothing is modified when the denominator is not positive.
    """
    lt = lam * t
    g = PhiInv @ phi
    den = lt + phi @ g
    if not den > 0.0:
        return den
    s = 1.0 / (t + 1.0)
    Phi *= lt * s
    Phi += s * np.outer(phi, phi)
    Phi[...] = 0.5 * (Phi + Phi.T)
    PhiInv -= np.outer(g, g) / den
    PhiInv *= (t + 1.0) / lt
    PhiInv[...] = 0.5 * (PhiInv + PhiInv.T)
    Xbar1 *= lt * s
    Xbar1 += s * np.outer(x_next, phi)
    return den


def dlyap_small(A, Q):
    """Solve ``P = Q + A P A^T`` through the Kronecker system (row-major vec)."""
    n = A.shape[0]
    lhs = np.eye(n * n) - (A[:, None, :, None] * A[None, :, None, :]).reshape(n * n, n * n)
    P = np.linalg.solve(lhs, Q.reshape(-1)).reshape(n, n)
    return 0.5 * (P + P.T)

"""Small dense linear-algebra helpers used throughout the package.

All routines take and return plain ``numpy`` arrays. Problem sizes are tiny
(state dimension 2 to 6), so the Lyapunov solver uses the exact Kronecker
formulation instead of an iterative scheme.
"""
import numpy as np
import scipy.linalg

from . import kernels
from .errors import NonSymmetric, NotStable

EPS_STAB = 1e-9
SYM_TOL = 1e-9
_KRON_MAX = 8


def _check_symmetric(M, tol):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NonSymmetric(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.abs(M).max())) if M.size else 1.0
    if M.size and float(np.abs(M - M.T).max()) > tol * scale:
        raise NonSymmetric("matrix is not symmetric within tolerance")
    return M


def spectral_radius(A):
    """Largest eigenvalue modulus of a square matrix."""
    A = np.asarray(A, dtype=float)
    if A.shape == (1, 1):
        return abs(float(A[0, 0]))
    if A.shape == (2, 2):
        # closed form avoids LAPACK overhead in the control loop
        tr = A[0, 0] + A[1, 1]
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        disc = 0.25 * tr * tr - det
        if disc >= 0.0:
            r = np.sqrt(disc)
            return float(max(abs(0.5 * tr + r), abs(0.5 * tr - r)))
        return float(np.sqrt(det))
    return float(np.max(np.abs(np.linalg.eigvals(A))))


def solve_dlyap(A, Q):
    """Solve ``P = Q + A P A^T`` for Schur-stable ``A``.

    Raises NotStable if ``rho(A) >= 1 - EPS_STAB`` and NonSymmetric if ``Q``
    is not symmetric.
    """
    A = np.asarray(A, dtype=float)
    Q = _check_symmetric(Q, SYM_TOL)
    n = A.shape[0]
    if A.shape != (n, n) or Q.shape != (n, n):
        raise ValueError("A and Q must be square and of equal size")
    if spectral_radius(A) >= 1.0 - EPS_STAB:
        raise NotStable("Lyapunov equation needs rho(A) < 1")
    if n <= _KRON_MAX:
        # row-major vec: vec(A P A^T) = kron(A, A) vec(P)
        return kernels.dlyap_small(A, Q)
    else:
        P = scipy.linalg.solve_discrete_lyapunov(A, Q)
    return 0.5 * (P + P.T)


def pinv(M):
    """Moore-Penrose pseudoinverse (SVD based)."""
    return np.linalg.pinv(np.asarray(M, dtype=float))


def is_psd(M, tol=1e-9):
    """True iff the symmetric matrix ``M`` has min eigenvalue >= -tol."""
    M = _check_symmetric(M, max(tol, SYM_TOL))
    return bool(np.linalg.eigvalsh(0.5 * (M + M.T)).min() >= -tol)


def riccati_gain(A, B, Q, R):
    """Optimal LQR gain for ``u = K x`` (note the sign) and the Riccati solution."""
    A, B = np.atleast_2d(A), np.atleast_2d(B)
    Q, R = np.atleast_2d(Q), np.atleast_2d(R)
    P = scipy.linalg.solve_discrete_are(A, B, Q, R)
    K = -np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
    return K, P


def lqr_cost(A, B, K, Q, R):
    """Model-based cost ``Tr((Q + K^T R K) Sigma_K)``; inf if not stabilizing."""
    Acl = A + B @ K
    if spectral_radius(Acl) >= 1.0:
        return np.inf
    sigma = solve_dlyap(Acl, np.eye(A.shape[0]))
    return float(np.trace((Q + K.T @ R @ K) @ sigma))


def is_controllable(A, B, tol=1e-9):
    n = A.shape[0]
    blocks = [B]
    for _ in range(n - 1):
        blocks.append(A @ blocks[-1])
    s = np.linalg.svd(np.hstack(blocks), compute_uv=False)
    return bool(s[-1] > tol * s[0])

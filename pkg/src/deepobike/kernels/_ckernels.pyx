# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot kernels; see ``_pykernels`` for the contract."""
import numpy as np

from libc.math cimport sin, cos, tan, fabs, isinf, NAN, M_PI

cdef double SING_MARGIN = 1e-3
cdef double HALF_PI = 0.5 * M_PI


cdef inline bint _rhs(double phi, double phi_dot, double delta, double rate, double u,
                      double a, double h, double b, double g, double v,
                      double sign, double pole, double* out) nogil:
    cdef double ddelta, drate, td, tp
    if fabs(phi) > HALF_PI - SING_MARGIN or fabs(delta) > HALF_PI - SING_MARGIN:
        return 0
    if isinf(pole):
        ddelta = u
        drate = 0.0
    else:
        ddelta = rate
        drate = pole * (u - rate)
    td = tan(delta)
    tp = tan(phi)
    out[0] = phi_dot
    out[1] = ((g / h) * sin(phi)
              + (a / (b * h)) * cos(phi) * v * ddelta
              + sign * (1.0 / (b * h) - td * tp / (b * b)) * td * v * v)
    out[2] = ddelta
    out[3] = drate
    return 1


def bicycle_rhs(double phi, double phi_dot, double delta, double delta_rate, double u,
                double a, double h, double b, double g, double v, double sign, double pole):
    cdef double out[4]
    if not _rhs(phi, phi_dot, delta, delta_rate, u, a, h, b, g, v, sign, pole, out):
        return None
    return out[0], out[1], out[2], out[3]


def bicycle_rk4(state, double u, double dt, int nsub, double a, double h, double b,
                double g, double v, double sign, double pole):
    cdef double x[4]
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef double hs = dt / nsub
    cdef double c = hs / 6.0
    cdef int i, j
    cdef bint ok = 1
    for j in range(4):
        x[j] = state[j]
    with nogil:
        for i in range(nsub):
            if not _rhs(x[0], x[1], x[2], x[3], u, a, h, b, g, v, sign, pole, k1):
                ok = 0
                break
            if not _rhs(x[0] + 0.5 * hs * k1[0], x[1] + 0.5 * hs * k1[1],
                        x[2] + 0.5 * hs * k1[2], x[3] + 0.5 * hs * k1[3],
                        u, a, h, b, g, v, sign, pole, k2):
                ok = 0
                break
            if not _rhs(x[0] + 0.5 * hs * k2[0], x[1] + 0.5 * hs * k2[1],
                        x[2] + 0.5 * hs * k2[2], x[3] + 0.5 * hs * k2[3],
                        u, a, h, b, g, v, sign, pole, k3):
                ok = 0
                break
            if not _rhs(x[0] + hs * k3[0], x[1] + hs * k3[1],
                        x[2] + hs * k3[2], x[3] + hs * k3[3],
                        u, a, h, b, g, v, sign, pole, k4):
                ok = 0
                break
            for j in range(4):
                x[j] = x[j] + c * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        if ok and isinf(pole):
            x[3] = u
    return np.array([x[0], x[1], x[2], x[3]]), bool(ok)


def fl_input(double phi, double phi_dot, double delta, double y_r, double y_r_dot,
             double y_r_ddot, double k1, double k2, double a, double h, double b,
             double g, double v, double sign):
    cdef double p, td, f, w
    p = (a / (b * h)) * cos(phi) * v
    if fabs(cos(phi)) <= SING_MARGIN:
        return NAN
    td = tan(delta)
    f = sign * (1.0 / (b * h) - td * tan(phi) / (b * b)) * td * v * v + (g / h) * sin(phi)
    w = y_r_ddot + k1 * (y_r_dot - phi_dot) + k2 * (y_r - phi)
    return (w - f) / p


def cov_rank_one(double[:, ::1] Phi, double[:, ::1] PhiInv, double[:, ::1] Xbar1,
                 const double[::1] phi, const double[::1] x_next, double lam, double t):
    cdef Py_ssize_t d = Phi.shape[0]
    cdef Py_ssize_t n = Xbar1.shape[0]
    cdef Py_ssize_t i, j
    cdef double lt = lam * t
    cdef double den, s, r, acc, sym
    cdef double[::1] gv = np.empty(d)
    for i in range(d):
        acc = 0.0
        for j in range(d):
            acc = acc + PhiInv[i, j] * phi[j]
        gv[i] = acc
    den = lt
    for i in range(d):
        den = den + phi[i] * gv[i]
    if not den > 0.0:
        return den
    s = 1.0 / (t + 1.0)
    r = (t + 1.0) / lt
    for i in range(d):
        for j in range(d):
            Phi[i, j] = Phi[i, j] * (lt * s) + s * phi[i] * phi[j]
            PhiInv[i, j] = (PhiInv[i, j] - gv[i] * gv[j] / den) * r
    for i in range(d):
        for j in range(i + 1, d):
            sym = 0.5 * (Phi[i, j] + Phi[j, i])
            Phi[i, j] = sym
            Phi[j, i] = sym
            sym = 0.5 * (PhiInv[i, j] + PhiInv[j, i])
            PhiInv[i, j] = sym
            PhiInv[j, i] = sym
    for i in range(n):
        for j in range(d):
            Xbar1[i, j] = Xbar1[i, j] * (lt * s) + s * x_next[i] * phi[j]
    return den


def dlyap_small(A, Q):
    """Kronecker solve by Gaussian elimination with partial pivoting."""
    cdef double[:, ::1] a = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[:, ::1] q = np.ascontiguousarray(Q, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t N = n * n
    cdef double[:, ::1] M = np.empty((N, N))
    cdef double[::1] rhs = np.empty(N)
    cdef Py_ssize_t i, j, k, l, r, c, piv
    cdef double best, tmp, fac
    for i in range(n):
        for j in range(n):
            r = i * n + j
            rhs[r] = q[i, j]
            for k in range(n):
                for l in range(n):
                    c = k * n + l
                    M[r, c] = (1.0 if r == c else 0.0) - a[i, k] * a[j, l]
    for c in range(N):
        piv = c
        best = fabs(M[c, c])
        for r in range(c + 1, N):
            if fabs(M[r, c]) > best:
                best = fabs(M[r, c])
                piv = r
        if best == 0.0:
            raise np.linalg.LinAlgError("singular Kronecker system")
        if piv != c:
            for k in range(N):
                tmp = M[c, k]
                M[c, k] = M[piv, k]
                M[piv, k] = tmp
            tmp = rhs[c]
            rhs[c] = rhs[piv]
            rhs[piv] = tmp
        for r in range(c + 1, N):
            fac = M[r, c] / M[c, c]
            if fac != 0.0:
                for k in range(c, N):
                    M[r, k] = M[r, k] - fac * M[c, k]
                rhs[r] = rhs[r] - fac * rhs[c]
    for r in range(N - 1, -1, -1):
        tmp = rhs[r]
        for k in range(r + 1, N):
            tmp = tmp - M[r, k] * rhs[k]
        rhs[r] = tmp / M[r, r]
    P = np.empty((n, n))
    cdef double[:, ::1] p = P
    for i in range(n):
        for j in range(n):
            p[i, j] = 0.5 * (rhs[i * n + j] + rhs[j * n + i])
    return P

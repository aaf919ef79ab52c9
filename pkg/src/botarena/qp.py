"""Dense strictly convex QP solver for the safety filter.

Solves::

    minimize    ||u - u_nom||^2
    subject to  A u <= b,   lo <= u <= hi

with the Goldfarb-Idnani dual active-set method. Because the Hessian is the
identity, the unconstrained minimiser is ``u_nom`` itself and the method
returns it untouched whenever it is already feasible. The factorisation
``N_active = J [R; 0]`` with orthogonal ``J`` is updated by Givens rotations
as constraints enter and leave the active set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

OPTIMAL = 0
INFEASIBLE = 1
MAX_ITER = 2

_STATUS_NAMES = {OPTIMAL: "optimal", INFEASIBLE: "infeasible", MAX_ITER: "max_iterations"}


class QPInfeasibleError(RuntimeError):
    pass


@dataclass
class QuadraticProgram:
    u_nom: np.ndarray
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None

    def __post_init__(self):
        self.u_nom = np.asarray(self.u_nom, dtype=np.float64).ravel()
        n = self.u_nom.size
        if self.A is None:
            self.A = np.zeros((0, n))
            self.b = np.zeros(0)
        self.A = np.asarray(self.A, dtype=np.float64).reshape(-1, n)
        self.b = np.asarray(self.b, dtype=np.float64).ravel()
        if self.b.size != self.A.shape[0]:
            raise ValueError(f"A has {self.A.shape[0]} rows but b has {self.b.size} entries")
        self.lo = np.full(n, -np.inf) if self.lo is None else np.broadcast_to(
            np.asarray(self.lo, dtype=np.float64), (n,)).copy()
        self.hi = np.full(n, np.inf) if self.hi is None else np.broadcast_to(
            np.asarray(self.hi, dtype=np.float64), (n,)).copy()
        if np.any(self.lo > self.hi):
            raise ValueError("box bounds must satisfy lo <= hi")

    @property
    def n(self) -> int:
        return self.u_nom.size

    def stacked(self) -> tuple[np.ndarray, np.ndarray]:
        """Inequality rows with the finite box bounds appended."""
        n = self.n
        eye = np.eye(n)
        up = np.isfinite(self.hi)
        dn = np.isfinite(self.lo)
        A = np.vstack([self.A, eye[up], -eye[dn]])
        b = np.concatenate([self.b, self.hi[up], -self.lo[dn]])
        return A, b

    def objective(self, u) -> float:
        d = np.asarray(u, dtype=np.float64) - self.u_nom
        return float(d @ d)


@dataclass
class QPResult:
    u: np.ndarray
    multipliers: np.ndarray  # one per row of ``QuadraticProgram.stacked()``
    status: int
    iterations: int
    kkt: float = field(default=math.nan)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL

    @property
    def status_name(self) -> str:
        return _STATUS_NAMES[self.status]


@nb.njit(cache=True, nogil=True)
def _givens(a, b):
    r = math.hypot(a, b)
    if r == 0.0:
        return 1.0, 0.0, 0.0
    return a / r, b / r, r


@nb.njit(cache=True, nogil=True)
def _rotate_cols(J, i, j, c, s):
    for k in range(J.shape[0]):
        a = J[k, i]
        b = J[k, j]
        J[k, i] = c * a + s * b
        J[k, j] = -s * a + c * b


@nb.njit(cache=True, nogil=True)
def _drop(J, R, active, u, q, k):
    """Remove active constraint at position ``k``; returns new q."""
    n = J.shape[0]
    for j in range(k, q - 1):
        for i in range(n):
            R[i, j] = R[i, j + 1]
        active[j] = active[j + 1]
        u[j] = u[j + 1]
    for i in range(n):
        R[i, q - 1] = 0.0
    u[q - 1] = 0.0
    active[q - 1] = -1
    q -= 1
    # restore triangularity of the Hessenberg block
    for j in range(k, q):
        c, s, r = _givens(R[j, j], R[j + 1, j])
        if s == 0.0:
            continue
        R[j, j] = r
        R[j + 1, j] = 0.0
        for col in range(j + 1, q):
            a = R[j, col]
            b = R[j + 1, col]
            R[j, col] = c * a + s * b
            R[j + 1, col] = -s * a + c * b
        _rotate_cols(J, j, j + 1, c, s)
    return q


@nb.njit(cache=True, nogil=True)
def _gi_solve(u_nom, A, b, tol, max_iter):
    """Goldfarb-Idnani for min ||x - u_nom||^2 s.t. A x <= b.

    Returns (x, multipliers, status, iterations).
    """
    n = u_nom.shape[0]
    m = A.shape[0]
    x = u_nom.copy()
    lam = np.zeros(m)
    J = np.eye(n)
    R = np.zeros((n, n))
    active = np.full(n, -1, dtype=np.int64)
    is_active = np.zeros(m, dtype=np.bool_)
    u = np.zeros(n + 1)
    d = np.zeros(n)
    z = np.zeros(n)
    r = np.zeros(n)
    q = 0
    it = 0
    # rows in G-I orientation: nvec = -A[i], bound = -b[i], feasible iff nvec.x >= bound
    while True:
        # step 1: most violated constraint, scaled by row norm
        p = -1
        worst = 0.0
        for i in range(m):
            if is_active[i]:
                continue
            nrm = 0.0
            s = 0.0
            for k in range(n):
                nrm += A[i, k] * A[i, k]
                s += A[i, k] * x[k]
            viol = s - b[i]
            if nrm > 0.0:
                viol /= math.sqrt(nrm)
            if viol > tol and viol > worst:
                worst = viol
                p = i
            elif nrm == 0.0 and b[i] < -tol:
                for k in range(q):
                    lam[active[k]] = u[k]
                return x, lam, 1, it
        if p < 0:
            for k in range(q):
                lam[active[k]] = u[k]
            return x, lam, 0, it
        u[q] = 0.0
        # step 2: move towards satisfying constraint p
        while True:
            it += 1
            if it > max_iter:
                for k in range(q):
                    lam[active[k]] = u[k]
                return x, lam, 2, it
            for k in range(n):
                acc = 0.0
                for i in range(n):
                    acc -= J[i, k] * A[p, i]
                d[k] = acc
            znorm = 0.0
            for k in range(q, n):
                znorm += d[k] * d[k]
            for i in range(n):
                acc = 0.0
                for k in range(q, n):
                    acc += J[i, k] * d[k]
                z[i] = acc
            for j in range(q - 1, -1, -1):
                acc = d[j]
                for k in range(j + 1, q):
                    acc -= R[j, k] * r[k]
                r[j] = acc / R[j, j]
            t1 = np.inf
            kdrop = -1
            for j in range(q):
                if r[j] > 0.0:
                    ratio = u[j] / r[j]
                    if ratio < t1:
                        t1 = ratio
                        kdrop = j
            nrm_p = 0.0
            s_p = 0.0
            for k in range(n):
                nrm_p += A[p, k] * A[p, k]
                s_p += A[p, k] * x[k]
            s_p = b[p] - s_p  # G-I slack, negative while violated
            if znorm <= 1e-24 * nrm_p:
                t2 = np.inf
            else:
                t2 = -s_p / znorm
            if t1 == np.inf and t2 == np.inf:
                for k in range(q):
                    lam[active[k]] = u[k]
                return x, lam, 1, it
            if t2 == np.inf:
                for j in range(q):
                    u[j] -= t1 * r[j]
                u[q] += t1
                is_active[active[kdrop]] = False
                uq = u[q]
                q = _drop(J, R, active, u, q, kdrop)
                u[q] = uq
                continue
            t = t1 if t1 < t2 else t2
            for i in range(n):
                x[i] += t * z[i]
            for j in range(q):
                u[j] -= t * r[j]
            u[q] += t
            if t2 <= t1:
                # full step: add p
                for j in range(n - 1, q, -1):
                    c, s, rr = _givens(d[j - 1], d[j])
                    if s == 0.0:
                        continue
                    d[j - 1] = rr
                    d[j] = 0.0
                    _rotate_cols(J, j - 1, j, c, s)
                for j in range(q + 1):
                    R[j, q] = d[j]
                active[q] = p
                is_active[p] = True
                q += 1
                break
            is_active[active[kdrop]] = False
            uq = u[q]
            q = _drop(J, R, active, u, q, kdrop)
            u[q] = uq


def kkt_residual(qp: QuadraticProgram, u, multipliers) -> float:
    """Max-norm of stationarity, primal, dual and complementarity violations."""
    A, b = qp.stacked()
    u = np.asarray(u, dtype=np.float64)
    lam = np.asarray(multipliers, dtype=np.float64)
    slack = A @ u - b
    parts = [np.abs((u - qp.u_nom) + A.T @ lam).max(initial=0.0),
             np.maximum(slack, 0.0).max(initial=0.0),
             np.maximum(-lam, 0.0).max(initial=0.0),
             np.abs(lam * slack).max(initial=0.0)]
    return float(max(parts))


def solve_qp(qp: QuadraticProgram, tolerance: float = 1e-9, max_iterations: int = 200,
             *, raise_on_infeasible: bool = False) -> QPResult:
    """Solve ``qp``; see module docstring.

    Infeasible problems return the last iterate with ``status == INFEASIBLE``
    unless ``raise_on_infeasible`` is set. Hitting the iteration cap returns
    the current iterate flagged ``MAX_ITER``.
    """
    A, b = qp.stacked()
    x, lam, status, it = _gi_solve(qp.u_nom, np.ascontiguousarray(A), b, float(tolerance), int(max_iterations))
    if status == INFEASIBLE and raise_on_infeasible:
        raise QPInfeasibleError("quadratic program has no feasible point")
    res = QPResult(u=x, multipliers=lam, status=int(status), iterations=int(it))
    res.kkt = kkt_residual(qp, x, lam)
    return res

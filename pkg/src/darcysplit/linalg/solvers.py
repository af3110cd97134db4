"""Krylov solvers, ILU(0) preconditioning and the Darcy Schur-complement solve."""
import logging
import math

import numpy as np
import scipy.linalg as sla
from scipy.sparse.csgraph import reverse_cuthill_mckee

from ..errors import ConvergenceError, SolverError
from . import kernels
from .sparse import SparseMatrix, spmv

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DENSE_LIMIT = 2000


def rcm_permutation(A):
    """Reverse Cuthill-McKee ordering of the symmetrised pattern of ``A``.

    Incomplete factorisations of finite element matrices lose much of their
    quality in the order produced by uniform refinement; a banded ordering
    roughly halves the Krylov iteration counts.
    """
    return np.asarray(reverse_cuthill_mckee(A.to_scipy(), symmetric_mode=False), dtype=np.int64)


def _relres(A, x, b, bnorm):
    return float(np.linalg.norm(b - spmv(A, x)) / bnorm)


def solve_spd_cg(A, b, tol=DEFAULT_TOL, maxit=None, x0=None, precond=None, info=None):
    """Preconditioned conjugate gradients, Jacobi unless ``precond`` is given.

    ``precond`` needs a ``solve`` method applying a symmetric positive
    definite approximate inverse. Stops on the true relative residual
    ``|b - Ax| / |b| <= tol``. Iteration count and final residual are written
    into ``info`` when given.
    """
    info = {} if info is None else info
    b = np.asarray(b, dtype=float)
    n = len(b)
    maxit = maxit or max(1000, 10 * n)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        info.update(iterations=0, residual=0.0)
        return np.zeros(n)
    d = A.diag()
    if np.any(d <= 0):
        raise SolverError("matrix has a nonpositive diagonal entry; not SPD")
    if precond is None:
        dinv = 1.0 / d
        apply_m = dinv.__mul__
    else:
        apply_m = precond.solve
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    r = b - spmv(A, x)
    z = apply_m(r)
    p = z.copy()
    rz = r @ z
    it = 0
    while it < maxit:
        if np.linalg.norm(r) <= tol * bnorm:
            # Recurrence residual can drift; confirm against the true one.
            r = b - spmv(A, x)
            if np.linalg.norm(r) <= tol * bnorm:
                break
            z = apply_m(r)
            p = z.copy()
            rz = r @ z
        Ap = spmv(A, p)
        pAp = p @ Ap
        if pAp <= 0:
            raise SolverError("nonpositive curvature in CG: matrix is not SPD")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = apply_m(r)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
        it += 1
    res = _relres(A, x, b, bnorm)
    info.update(iterations=it, residual=res)
    if res > tol:
        raise ConvergenceError(f"CG did not converge in {maxit} iterations (residual {res:.3e})", res, it)
    return x



class ILU0:
    """Zero fill-in incomplete LU factorisation on the pattern of ``A``.

    For a symmetric matrix the factors satisfy ``U = D L^T``, so the
    preconditioner is symmetric; it is positive definite when every pivot is.
    """

    def __init__(self, A):
        self.A = A
        try:
            self.lu, self.diag = kernels.ilu0_factor(A.indptr, A.indices, A.data)
        except ZeroDivisionError as exc:
            raise SolverError(f"ILU(0) breakdown: {exc}") from None

    @property
    def pivots(self):
        return self.lu[self.diag]

    def solve(self, b):
        return kernels.ilu0_solve(self.A.indptr, self.A.indices, self.lu, self.diag, np.ascontiguousarray(b, dtype=float))


def gmres(A, b, tol=DEFAULT_TOL, maxit=None, restart=50, precond=None, x0=None, info=None):
    """Right-preconditioned restarted GMRES; minimises the true residual."""
    info = {} if info is None else info
    b = np.asarray(b, dtype=float)
    n = len(b)
    maxit = maxit or max(2000, 4 * n)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        info.update(iterations=0, residual=0.0)
        return np.zeros(n)
    apply_m = precond.solve if precond is not None else (lambda v: v)
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    m = min(restart, n)
    total = 0
    while True:
        r = b - spmv(A, x)
        beta = np.linalg.norm(r)
        if beta <= tol * bnorm or total >= maxit:
            break
        V = np.zeros((m + 1, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        k = 0
        for k in range(m):
            w = spmv(A, apply_m(V[k]))
            # Classical Gram-Schmidt, applied twice for stability.
            Vk = V[: k + 1]
            for _ in range(2):
                c = Vk @ w
                H[: k + 1, k] += c
                w -= c @ Vk
            H[k + 1, k] = np.linalg.norm(w)
            breakdown = H[k + 1, k] == 0
            if not breakdown:
                V[k + 1] = w / H[k + 1, k]
            for j in range(k):
                t = cs[j] * H[j, k] + sn[j] * H[j + 1, k]
                H[j + 1, k] = -sn[j] * H[j, k] + cs[j] * H[j + 1, k]
                H[j, k] = t
            denom = math.hypot(H[k, k], H[k + 1, k])
            cs[k] = H[k, k] / denom
            sn[k] = H[k + 1, k] / denom
            H[k, k] = denom
            H[k + 1, k] = 0.0
            g[k + 1] = -sn[k] * g[k]
            g[k] = cs[k] * g[k]
            total += 1
            if abs(g[k + 1]) <= 0.5 * tol * bnorm or breakdown or total >= maxit:
                break
        kk = k + 1
        y = sla.solve_triangular(H[:kk, :kk], g[:kk])
        x += apply_m(V[:kk].T @ y)
    res = _relres(A, x, b, bnorm)
    info.update(iterations=total, residual=res)
    if res > tol:
        raise ConvergenceError(f"GMRES did not converge in {total} iterations (residual {res:.3e})", res, total)
    return x



def solve_dense_lu(A, b):
    dense = A.toarray() if isinstance(A, SparseMatrix) else np.asarray(A, dtype=float)
    lu, piv = sla.lu_factor(dense, check_finite=True)
    if np.any(np.diag(lu) == 0):
        raise SolverError("singular pivot in dense LU")
    return sla.lu_solve((lu, piv), np.asarray(b, dtype=float))


def solve_nonsym(A, b, tol=DEFAULT_TOL, maxit=None, method="auto", restart=50, info=None):
    """Solve a general square system.

    ``method="gmres"`` runs ILU(0)-preconditioned GMRES in reverse
    Cuthill-McKee order, ``"lu"`` a dense LU,
    and ``"auto"`` tries GMRES first and falls back to dense LU for systems of
    at most ``DENSE_LIMIT`` unknowns.
    """
    info = {} if info is None else info
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"square matrix required, got {A.shape}")
    if method == "lu":
        x = solve_dense_lu(A, b)
        info.update(method="lu", residual=_relres(A, x, b, max(np.linalg.norm(b), 1e-300)))
        return x
    if method not in ("auto", "gmres"):
        raise ValueError(f"unknown method {method!r}")
    try:
        info["method"] = "gmres"
        perm = rcm_permutation(A)
        Ap = A.submatrix(perm, perm)
        xp = gmres(Ap, np.asarray(b, dtype=float)[perm], tol=tol, maxit=maxit, restart=restart, precond=ILU0(Ap), info=info)
        x = np.empty_like(xp)
        x[perm] = xp
        return x
    except SolverError:
        if method == "auto" and A.shape[0] <= DENSE_LIMIT:
            log.warning("GMRES failed; using dense LU on %d unknowns", A.shape[0])
            x = solve_dense_lu(A, b)
            res = _relres(A, x, b, max(np.linalg.norm(b), 1e-300))
            if res <= tol or not np.any(b):
                info.update(method="lu", residual=res)
                return x
        raise


def schur_darcy_solve(M, B, F, G, tol=DEFAULT_TOL, maxit=None, info=None):
    """Solve ``M u + B^T p = F``, ``B u = G`` for diagonal positive ``M``.

    Velocities are eliminated, the SPD system ``(B M^-1 B^T) p = B M^-1 F - G``
    is solved by CG, and ``u = M^-1 (F - B^T p)`` recovered element-wise.
    CG is preconditioned by ILU(0) of the Schur matrix, i.e. incomplete
    Cholesky, falling back to Jacobi on a nonpositive pivot.
    ``info["residual"]`` is ``|B u - G|`` relative to the Schur right-hand side.
    """
    info = {} if info is None else info
    m = M.diag() if isinstance(M, SparseMatrix) else np.asarray(M, dtype=float)
    if np.any(m <= 0):
        raise SolverError("velocity mass matrix has a nonpositive entry")
    minv = 1.0 / m
    Bs = B.to_scipy()
    S = Bs @ (Bs.T.multiply(minv[:, None])).tocsr()
    # The sparse product drops entries that cancel to exactly zero on one side
    # only; symmetrising restores a symmetric pattern for the factorisation.
    S = SparseMatrix.from_scipy(0.5 * (S + S.T))
    rhs = spmv(B, minv * F) - G
    perm = rcm_permutation(S)
    S = S.submatrix(perm, perm)
    try:
        precond = ILU0(S)
        if np.any(precond.pivots <= 0):
            raise SolverError("nonpositive incomplete Cholesky pivot")
    except SolverError as exc:
        log.info("Schur preconditioner falls back to Jacobi: %s", exc)
        precond = None
    cg_info = {}
    p = np.empty(len(rhs))
    p[perm] = solve_spd_cg(S, rhs[perm], tol=tol, maxit=maxit, precond=precond, info=cg_info)
    u = minv * (F - spmv(B.T, p))
    scale = max(np.linalg.norm(rhs), 1e-300)
    info.update(
        cg_iterations=cg_info["iterations"],
        preconditioner="ilu0" if precond is not None else "jacobi",
        residual=float(np.linalg.norm(spmv(B, u) - G) / scale),
    )
    return u, p

# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled CSR kernels: matrix-vector product and ILU(0)."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t idx_t


def csr_matvec(const idx_t[::1] indptr, const idx_t[::1] indices, const double[::1] data,
               const double[::1] x):
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, k
    cdef double s
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] y = out
    with nogil:
        for i in range(n):
            s = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                s = s + data[k] * x[indices[k]]
            y[i] = s
    return out


def ilu0_factor(const idx_t[::1] indptr, const idx_t[::1] indices, const double[::1] data):
    """In-pattern incomplete LU. Returns (lu, diag) where diag[i] is the position of A[i, i]."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, k, kk, jj, pos, j
    cdef double l, piv
    lu_arr = np.array(data, dtype=np.float64, copy=True)
    diag_arr = np.full(n, -1, dtype=np.int64)
    work_arr = np.full(n, -1, dtype=np.int64)
    cdef double[::1] lu = lu_arr
    cdef idx_t[::1] diag = diag_arr
    cdef idx_t[::1] work = work_arr
    cdef Py_ssize_t bad = -1
    with nogil:
        for i in range(n):
            for kk in range(indptr[i], indptr[i + 1]):
                work[indices[kk]] = kk
                if indices[kk] == i:
                    diag[i] = kk
            if diag[i] < 0:
                bad = i
                break
            for kk in range(indptr[i], diag[i]):
                k = indices[kk]
                lu[kk] = lu[kk] / lu[diag[k]]
                l = lu[kk]
                for jj in range(diag[k] + 1, indptr[k + 1]):
                    pos = work[indices[jj]]
                    if pos >= 0:
                        lu[pos] = lu[pos] - l * lu[jj]
            piv = lu[diag[i]]
            for kk in range(indptr[i], indptr[i + 1]):
                work[indices[kk]] = -1
            if piv == 0.0:
                bad = i
                break
    if bad >= 0:
        raise ZeroDivisionError(f"zero or missing pivot in row {bad}")
    return lu_arr, diag_arr


def ilu0_solve(const idx_t[::1] indptr, const idx_t[::1] indices, const double[::1] lu,
               const idx_t[::1] diag, const double[::1] b):
    """Solve (L U) x = b with unit-lower L and upper U stored in ``lu``."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    cdef Py_ssize_t i, k
    cdef double s
    out = np.array(b, dtype=np.float64, copy=True)
    cdef double[::1] x = out
    with nogil:
        for i in range(n):
            s = x[i]
            for k in range(indptr[i], diag[i]):
                s = s - lu[k] * x[indices[k]]
            x[i] = s
        for i in range(n - 1, -1, -1):
            s = x[i]
            for k in range(diag[i] + 1, indptr[i + 1]):
                s = s - lu[k] * x[indices[k]]
            x[i] = s / lu[diag[i]]
    return out

"""Pure-Python twins of the compiled kernels in ``_kernels.pyx``.

Same algorithms and same floating-point operation order, so results agree
bit for bit with the compiled versions.
"""
import numpy as np


def csr_matvec(indptr, indices, data, x):
    n = len(indptr) - 1
    rows = np.repeat(np.arange(n), np.diff(indptr))
    # bincount accumulates in storage order, like the compiled row loop.
    return np.bincount(rows, weights=data * x[indices], minlength=n).astype(np.float64)


def ilu0_factor(indptr, indices, data):
    n = len(indptr) - 1
    ptr = indptr.tolist()
    col = indices.tolist()
    lu = np.array(data, dtype=np.float64).tolist()
    diag = [-1] * n
    work = [-1] * n
    for i in range(n):
        start, stop = ptr[i], ptr[i + 1]
        for kk in range(start, stop):
            work[col[kk]] = kk
            if col[kk] == i:
                diag[i] = kk
        if diag[i] < 0:
            raise ZeroDivisionError(f"zero or missing pivot in row {i}")
        for kk in range(start, diag[i]):
            k = col[kk]
            lu[kk] = lu[kk] / lu[diag[k]]
            l = lu[kk]
            for jj in range(diag[k] + 1, ptr[k + 1]):
                pos = work[col[jj]]
                if pos >= 0:
                    lu[pos] = lu[pos] - l * lu[jj]
        for kk in range(start, stop):
            work[col[kk]] = -1
        if lu[diag[i]] == 0.0:
            raise ZeroDivisionError(f"zero or missing pivot in row {i}")
    return np.array(lu, dtype=np.float64), np.array(diag, dtype=np.int64)


def ilu0_solve(indptr, indices, lu, diag, b):
    n = len(indptr) - 1
    ptr = indptr.tolist()
    col = indices.tolist()
    vals = lu.tolist()
    dg = diag.tolist()
    x = np.array(b, dtype=np.float64).tolist()
    for i in range(n):
        s = x[i]
        for k in range(ptr[i], dg[i]):
            s = s - vals[k] * x[col[k]]
        x[i] = s
    for i in range(n - 1, -1, -1):
        s = x[i]
        for k in range(dg[i] + 1, ptr[i + 1]):
            s = s - vals[k] * x[col[k]]
        x[i] = s / vals[dg[i]]
    return np.array(x, dtype=np.float64)

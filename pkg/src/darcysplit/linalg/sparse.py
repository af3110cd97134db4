"""Compressed sparse row storage."""
import numpy as np
import scipy.sparse as sp

from . import kernels


class SparseMatrix:
    """CSR matrix with sorted, duplicate-free column indices in every row.

    Algebra (sums, products, transposes, slicing) goes through scipy; the
    matrix-vector product uses the package kernels so its summation order is
    fixed by the storage.
    """

    __slots__ = ("indptr", "indices", "data", "shape")

    def __init__(self, indptr, indices, data, shape):
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self.shape = (int(shape[0]), int(shape[1]))
        if len(self.indptr) != self.shape[0] + 1:
            raise ValueError("indptr length does not match the row count")

    @classmethod
    def from_scipy(cls, mat):
        mat = sp.csr_matrix(mat)
        mat.sum_duplicates()
        mat.sort_indices()
        return cls(mat.indptr, mat.indices, mat.data, mat.shape)

    @classmethod
    def from_coo(cls, rows, cols, vals, shape):
        """Assemble from triplets, summing duplicates."""
        return cls.from_scipy(sp.coo_matrix((vals, (rows, cols)), shape=shape))

    @classmethod
    def from_dense(cls, array):
        return cls.from_scipy(sp.csr_matrix(np.asarray(array, dtype=float)))

    @classmethod
    def diagonal(cls, values):
        values = np.asarray(values, dtype=float)
        n = len(values)
        return cls(np.arange(n + 1), np.arange(n), values, (n, n))

    @classmethod
    def identity(cls, n):
        return cls.diagonal(np.ones(n))

    def to_scipy(self):
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=self.shape)

    def toarray(self):
        return self.to_scipy().toarray()

    @property
    def nnz(self):
        return len(self.data)

    def diag(self):
        return self.to_scipy().diagonal()

    @property
    def T(self):
        return SparseMatrix.from_scipy(self.to_scipy().T)

    def submatrix(self, rows, cols):
        return SparseMatrix.from_scipy(self.to_scipy()[rows][:, cols])

    def is_canonical(self):
        if np.any(np.diff(self.indptr) < 0):
            return False
        for i in range(self.shape[0]):
            row = self.indices[self.indptr[i] : self.indptr[i + 1]]
            if np.any(np.diff(row) <= 0):
                return False
        return True

    def __add__(self, other):
        return SparseMatrix.from_scipy(self.to_scipy() + other.to_scipy())

    def __sub__(self, other):
        return SparseMatrix.from_scipy(self.to_scipy() - other.to_scipy())

    def __matmul__(self, other):
        if isinstance(other, SparseMatrix):
            return SparseMatrix.from_scipy(self.to_scipy() @ other.to_scipy())
        return spmv(self, other)

    def __repr__(self):
        return f"SparseMatrix(shape={self.shape}, nnz={self.nnz})"


def spmv(A, x):
    """y = A x."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (A.shape[1],):
        raise ValueError(f"shape mismatch: matrix {A.shape} times vector {x.shape}")
    return kernels.csr_matvec(A.indptr, A.indices, A.data, x)

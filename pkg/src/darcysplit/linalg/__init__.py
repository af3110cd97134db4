"""Sparse storage and linear solvers."""
from .kernels import BACKEND
from .solvers import DEFAULT_TOL, ILU0, gmres, schur_darcy_solve, solve_dense_lu, solve_nonsym, solve_spd_cg
from .sparse import SparseMatrix, spmv

__all__ = [
    "BACKEND", "DEFAULT_TOL", "ILU0", "SparseMatrix", "gmres", "schur_darcy_solve",
    "solve_dense_lu", "solve_nonsym", "solve_spd_cg", "spmv",
]

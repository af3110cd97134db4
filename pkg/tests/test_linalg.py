import numpy as np
import pytest
import scipy.sparse as sp

from darcysplit import fem
from darcysplit.errors import ConvergenceError, SolverError
from darcysplit.linalg import (
    ILU0, SparseMatrix, gmres, schur_darcy_solve, solve_dense_lu, solve_nonsym, solve_spd_cg, spmv,
)
from darcysplit.linalg.kernels import backends
from darcysplit.verify import preset_annulus_radial
from darcysplit.driver import convdiff_system
from darcysplit.fem import P1Space


def _random_sparse(n, density, seed, shift=4.0):
    rng = np.random.default_rng(seed)
    A = sp.random(n, n, density=density, random_state=rng, format="csr")
    A = A + sp.eye(n) * shift
    return SparseMatrix.from_scipy(A)


def test_spmv_matches_dense():
    A = _random_sparse(60, 0.1, 1)
    x = np.random.default_rng(2).standard_normal(60)
    np.testing.assert_allclose(spmv(A, x), A.toarray() @ x, rtol=1e-14, atol=1e-14)
    assert A.is_canonical()
    with pytest.raises(ValueError):
        spmv(A, np.ones(3))


def test_from_coo_sums_duplicates():
    A = SparseMatrix.from_coo([0, 0, 1], [1, 1, 0], [1.0, 2.0, 5.0], (2, 2))
    np.testing.assert_array_equal(A.toarray(), [[0, 3], [5, 0]])
    assert A.nnz == 2


def test_matrix_algebra():
    A = _random_sparse(20, 0.2, 3)
    B = _random_sparse(20, 0.2, 4)
    np.testing.assert_allclose((A + B).toarray(), A.toarray() + B.toarray())
    np.testing.assert_allclose((A @ B).toarray(), A.toarray() @ B.toarray())
    np.testing.assert_allclose(A.T.toarray(), A.toarray().T)
    np.testing.assert_allclose(A.submatrix([1, 3], [0, 2, 4]).toarray(), A.toarray()[[1, 3]][:, [0, 2, 4]])


def test_cg_on_stiffness(annulus_coarse):
    space = P1Space(annulus_coarse)
    K = fem.assemble_stiffness(annulus_coarse).submatrix(space.free, space.free)
    b = np.random.default_rng(0).standard_normal(K.shape[0])
    info = {}
    x = solve_spd_cg(K, b, tol=1e-12, info=info)
    np.testing.assert_allclose(x, np.linalg.solve(K.toarray(), b), rtol=1e-9, atol=1e-10)
    assert info["residual"] <= 1e-12
    assert np.all(solve_spd_cg(K, np.zeros_like(b)) == 0)


def test_cg_rejects_indefinite():
    A = SparseMatrix.from_dense([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(SolverError):
        solve_spd_cg(A, np.array([1.0, 0.0]))


def test_ilu0_is_exact_for_tridiagonal():
    # no fill-in pattern: ILU(0) equals the complete LU factorisation
    n = 40
    A = SparseMatrix.from_scipy(sp.diags([-1.0, 2.5, -1.2], [-1, 0, 1], shape=(n, n)))
    b = np.arange(1.0, n + 1)
    np.testing.assert_allclose(ILU0(A).solve(b), np.linalg.solve(A.toarray(), b), rtol=1e-13)


def test_ilu0_zero_pivot():
    A = SparseMatrix.from_dense([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(SolverError):
        ILU0(A)


def test_gmres_matches_dense_lu():
    A = _random_sparse(150, 0.05, 7, shift=2.0)
    b = np.random.default_rng(8).standard_normal(150)
    ref = solve_dense_lu(A, b)
    x = gmres(A, b, tol=1e-12, precond=ILU0(A))
    np.testing.assert_allclose(x, ref, rtol=1e-9, atol=1e-10)
    x = gmres(A, b, tol=1e-12, restart=5)
    np.testing.assert_allclose(x, ref, rtol=1e-9, atol=1e-10)


def test_gmres_reports_nonconvergence():
    A = _random_sparse(80, 0.1, 9, shift=0.1)
    with pytest.raises(ConvergenceError) as exc:
        gmres(A, np.ones(80), tol=1e-14, restart=2, maxit=3)
    assert exc.value.iterations == 3


def test_auto_falls_back_to_lu():
    A = SparseMatrix.from_dense([[0.0, 1.0], [1.0, 1.0]])
    info = {}
    x = solve_nonsym(A, np.array([1.0, 2.0]), info=info)
    np.testing.assert_allclose(x, [1.0, 1.0])
    assert info["method"] == "lu"
    with pytest.raises(SolverError):
        solve_nonsym(A, np.array([1.0, 2.0]), method="gmres")


def test_kernel_backends_agree_bitwise(annulus_coarse):
    mods = backends()
    if "cython" not in mods:
        pytest.skip("compiled kernels not built")
    spec = preset_annulus_radial("g0", mesh=annulus_coarse)
    A, _ = convdiff_system(spec)
    x = np.random.default_rng(0).standard_normal(A.shape[0])
    outs = {}
    for name, mod in mods.items():
        y = mod.csr_matvec(A.indptr, A.indices, A.data, x)
        lu, diag = mod.ilu0_factor(A.indptr, A.indices, A.data)
        z = mod.ilu0_solve(A.indptr, A.indices, lu, diag, x)
        outs[name] = (np.asarray(y), np.asarray(lu), np.asarray(diag), np.asarray(z))
    for a, b in zip(outs["cython"], outs["python"]):
        assert np.array_equal(a, b)


def test_schur_patch_test():
    # a constant velocity and linear pressure are reproduced exactly
    from darcysplit.mesh import generate_rectangle

    m = generate_rectangle(0, 1, 0, 1, 4, 4)
    alpha = np.full(m.n_vertices, 2.0)
    M, B = fem.assemble_darcy(m, alpha)
    u_true = np.tile([0.3, -0.7], m.n_triangles)
    grad_p = np.array([1.0, 2.0])
    p_true = m.vertices @ grad_p
    F = spmv(M, u_true) + spmv(B.T, p_true)
    G = spmv(B, u_true)
    # pin one pressure value to remove the constant mode
    keep = np.arange(1, m.n_vertices)
    Bk = B.submatrix(keep, np.arange(B.shape[1]))
    F = F - B.toarray()[0] * p_true[0]
    info = {}
    u, p = schur_darcy_solve(M, Bk, F, G[keep], tol=1e-13, info=info)
    np.testing.assert_allclose(u, u_true, atol=1e-10)
    np.testing.assert_allclose(p, p_true[keep], atol=1e-10)
    assert info["residual"] < 1e-10


def test_pure_python_backend_selected_by_environment():
    import os
    import subprocess
    import sys

    code = (
        "import numpy as np\n"
        "from darcysplit.linalg import BACKEND, SparseMatrix, solve_nonsym\n"
        "A = SparseMatrix.from_dense([[4.0, 1.0, 0.0], [1.0, 3.0, -1.0], [0.0, 2.0, 5.0]])\n"
        "x = solve_nonsym(A, np.array([1.0, 2.0, 3.0]), method='gmres', tol=1e-12)\n"
        "print(BACKEND, float(np.abs(A.toarray() @ x - [1, 2, 3]).max()) < 1e-10)\n"
    )
    env = {**os.environ, "DARCYSPLIT_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["python", "True"]

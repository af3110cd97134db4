"""The discrete splitting pipeline.

1. solve the convection-diffusion problem for ``q`` (``q = 1`` on GammaW),
2. check that ``q_h`` stays positive,
3. form ``alpha_tilde = alpha0 / q_h`` at the vertices,
4. solve the linear Darcy problem with that coefficient.
"""
from contextlib import contextmanager
from dataclasses import dataclass, replace
import logging

import numpy as np

from . import fem
from .errors import DarcySplitError, DataConditionError, NonPositiveQ
from .expr import CoefficientField
from .linalg import DEFAULT_TOL, schur_darcy_solve, solve_nonsym, spmv
from .mesh import GAMMA, Mesh

log = logging.getLogger(__name__)

DEFAULT_EPS_POS = 1e-12
DEFAULT_TOL_SIGN = 1e-12


@dataclass(frozen=True)
class ProblemSpec:
    """Physical parameters, data fields and the mesh. ``divf=None`` means finite differences."""

    gamma: float
    alpha0: float
    f: CoefficientField
    divf: CoefficientField
    g: CoefficientField
    mesh: Mesh

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not self.alpha0 > 0:
            raise ValueError(f"alpha0 must be positive, got {self.alpha0}")
        if self.f.kind != "vector2":
            raise ValueError("f must be a vector field")
        if self.divf is not None and self.divf.kind != "scalar":
            raise ValueError("div f must be a scalar field")
        if self.g.kind != "scalar":
            raise ValueError("g must be a scalar field")

    def with_mesh(self, mesh):
        return replace(self, mesh=mesh)


@dataclass(frozen=True)
class SignCheck:
    name: str
    minimum: float
    point: tuple
    passed: bool

    def describe(self):
        x, y = self.point
        return f"{self.name}: minimum {self.minimum:.6e} at ({x:.6g}, {y:.6g})"


@dataclass(frozen=True)
class DataReport:
    """Worst values of -div f (volume), f.n and g (on Gamma) over quadrature points."""

    neg_divf: SignCheck
    f_dot_n: SignCheck
    g: SignCheck
    tol_sign: float

    @property
    def checks(self):
        return (self.neg_divf, self.f_dot_n, self.g)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def violations(self):
        return [c.describe() for c in self.checks if not c.passed]

    def summary(self):
        lines = []
        for c in self.checks:
            lines.append(("PASS " if c.passed else "FAIL ") + c.describe())
        return "\n".join(lines)


def _worst(name, values, xs, ys, tol):
    values = np.ravel(values)
    if values.size == 0:
        return SignCheck(name, float("inf"), (float("nan"), float("nan")), True)
    k = int(np.argmin(values))
    m = float(values[k]) + 0.0  # no negative zero in reports
    return SignCheck(name, m, (float(np.ravel(xs)[k]), float(np.ravel(ys)[k])), m >= -tol)


def check_data_conditions(spec, tol_sign=DEFAULT_TOL_SIGN):
    """Evaluate div f <= 0 in the domain, f.n >= 0 and g >= 0 on Gamma at assembly quadrature points."""
    mesh = spec.mesh
    x, y = fem.quadrature_points(mesh, fem.TRIANGLE_DEG4)
    divf = fem.divergence_values(spec.f, spec.divf, x, y, fem.fd_step(mesh))
    exy, enrm, _, _ = fem.edge_quadrature(mesh, GAMMA)
    if exy.shape[1]:
        fn = (spec.f(exy[0], exy[1]) * enrm).sum(axis=0)
        gv = spec.g(exy[0], exy[1], normal=enrm)
    else:
        fn = gv = np.empty(0)
    return DataReport(
        _worst("-div f >= 0 in Omega", -divf, x, y, tol_sign),
        _worst("f.n >= 0 on Gamma", fn, exy[0], exy[1], tol_sign),
        _worst("g >= 0 on Gamma", gv, exy[0], exy[1], tol_sign),
        tol_sign,
    )


def convdiff_system(spec):
    """Matrix and load of the problem for z = q - 1, before restriction to free DOFs."""
    A = fem.assemble_convdiff(spec.mesh, spec.f, spec.divf, spec.gamma)
    b = fem.assemble_convdiff_rhs(spec.mesh, spec.f, spec.divf, spec.g, spec.gamma, spec.alpha0)
    return A, b


def solve_q(spec, tol=DEFAULT_TOL, method="auto", info=None):
    """Nodal values of q_h; exactly 1 at GammaW vertices."""
    space = fem.P1Space(spec.mesh)
    A, b = convdiff_system(spec)
    free = space.free
    z = np.zeros(space.n_dofs)
    z[free] = solve_nonsym(A.submatrix(free, free), b[free], tol=tol, method=method, info=info)
    q = z + 1.0
    q[space.dirichlet] = 1.0
    return q


def positivity_guard(q_nodal, eps_pos=DEFAULT_EPS_POS, mesh=None):
    """Return min q_h; raise NonPositiveQ if it does not exceed ``eps_pos``."""
    q_nodal = np.asarray(q_nodal)
    k = int(np.argmin(q_nodal))
    m = float(q_nodal[k])
    if not m > eps_pos:
        point = tuple(mesh.vertices[k]) if mesh is not None else None
        raise NonPositiveQ(m, k, point)
    return m


def compute_alpha_tilde(q_nodal, alpha0):
    return alpha0 / np.asarray(q_nodal, dtype=float)


def recovered_pressure(q_nodal, gamma):
    """Diagnostic -ln(q_h)/gamma; never a substitute for the Darcy pressure."""
    q_nodal = np.asarray(q_nodal, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        return -np.log(q_nodal) / gamma


@contextmanager
def _stage(name):
    try:
        yield
    except DarcySplitError as exc:
        if exc.stage is None:
            exc.stage = name
        raise


def solve_darcy(spec, alpha_nodal, tol=DEFAULT_TOL, info=None):
    """Velocity (n_triangles, 2) and nodal pressure of the linear Darcy problem."""
    mesh = spec.mesh
    space = fem.P1Space(mesh)
    M, B = fem.assemble_darcy(mesh, alpha_nodal)
    F, G = fem.assemble_darcy_rhs(mesh, spec.f, spec.g)
    free = space.free
    Bf = B.submatrix(free, np.arange(B.shape[1]))
    u, p_free = schur_darcy_solve(M, Bf, F, G[free], tol=tol, info=info)
    p = np.zeros(space.n_dofs)
    p[free] = p_free
    return u.reshape(-1, 2), p


def solve_splitting(
    spec,
    override_sign_checks=False,
    tol=DEFAULT_TOL,
    eps_pos=DEFAULT_EPS_POS,
    tol_sign=DEFAULT_TOL_SIGN,
    method="auto",
):
    """Run the full pipeline and return a :class:`~darcysplit.fem.FemSolution`."""
    info = {}
    with _stage("check-data"):
        report = check_data_conditions(spec, tol_sign)
        info["data_report"] = report
        if not report.passed:
            if not override_sign_checks:
                raise DataConditionError(report)
            log.warning("sign conditions violated, continuing on override: %s", "; ".join(report.violations()))
    q_info = {}
    with _stage("solve-q"):
        q = solve_q(spec, tol=tol, method=method, info=q_info)
    with _stage("positivity-guard"):
        info["min_q"] = positivity_guard(q, eps_pos, spec.mesh)
    alpha = compute_alpha_tilde(q, spec.alpha0)
    d_info = {}
    with _stage("solve-darcy"):
        u, p = solve_darcy(spec, alpha, tol=tol, info=d_info)
    info["q_solver"] = q_info
    info["darcy_solver"] = d_info
    return fem.FemSolution(q, p, u, alpha, info)


def darcy_residuals(spec, solution):
    """Independent residuals of both discrete Darcy equations (over X_h and M_h)."""
    mesh = spec.mesh
    space = fem.P1Space(mesh)
    M, B = fem.assemble_darcy(mesh, solution.alpha_nodal)
    F, G = fem.assemble_darcy_rhs(mesh, spec.f, spec.g)
    u = solution.u_elem.ravel()
    momentum = spmv(M, u) + spmv(B.T, solution.p_nodal) - F
    mass = (spmv(B, u) - G)[space.free]
    return {
        "momentum": float(np.linalg.norm(momentum) / max(np.linalg.norm(F), 1e-300)),
        "mass": mass,
    }


def convdiff_residual(spec, q_nodal):
    """Residual of the discrete convection-diffusion equations against each free basis function."""
    space = fem.P1Space(spec.mesh)
    A, b = convdiff_system(spec)
    return (spmv(A, np.asarray(q_nodal) - 1.0) - b)[space.free]

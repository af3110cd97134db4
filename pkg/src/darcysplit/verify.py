"""Reference problems and refinement studies.

Two presets reproduce the published experiments:

* :func:`preset_annulus_radial` -- annulus 1 < r < 4 with a radial forcing of
  strength ``kappa``; used to study positivity of q_h.
* :func:`preset_square_manufactured` -- square with a centred square hole and a
  corner notch, with data manufactured from a known (u, p).
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import math

import numpy as np

from . import driver, fem
from .errors import DarcySplitError, NonPositiveQ
from .expr import CoefficientField
from .mesh import generate_annulus, generate_square_with_holes, refine_uniform

ANNULUS_CASES = {
    # case: (kappa, g)
    "g0": (0.6, 0.0),
    "gpos": (1.0, 0.1),
}


def preset_zero(mesh, gamma=2.0, alpha0=1.0):
    """f = 0, g = 0: q = 1, u = 0, p = 0 exactly."""
    zero = CoefficientField.constant(0.0)
    return driver.ProblemSpec(gamma, alpha0, CoefficientField.constant(0.0, 0.0), zero, zero, mesh)


def annulus_fields(kappa, g=0.0):
    f = CoefficientField.vector("kappa*(r-5)^2/r*x/r", "kappa*(r-5)^2/r*y/r", kappa=kappa)
    # d/dr of r*F(r) over r for the radial profile F = kappa (r-5)^2 / r.
    divf = CoefficientField.scalar("2*kappa*(r-5)/r", kappa=kappa)
    return f, divf, CoefficientField.scalar("gval", gval=g)


def preset_annulus_radial(case="g0", target_h=0.2, mesh=None, kappa=None, gamma=2.0, alpha0=1.0):
    if case not in ANNULUS_CASES:
        raise ValueError(f"unknown annulus case {case!r}; expected one of {sorted(ANNULUS_CASES)}")
    k, g = ANNULUS_CASES[case]
    if kappa is not None:
        k = kappa
    if mesh is None:
        mesh = generate_annulus(1.0, 4.0, target_h)
    f, divf, gf = annulus_fields(k, g)
    return driver.ProblemSpec(gamma, alpha0, f, divf, gf, mesh)


def annulus_exact_min_q(kappa, gamma=2.0, r_inner=1.0, r_outer=4.0):
    """min of the exact radial q for g = 0: q(r) = exp(-gamma int_1^r F)."""
    def antiderivative(s):
        return s * s / 2 - 10 * s + 25 * math.log(s)

    return math.exp(-gamma * kappa * (antiderivative(r_outer) - antiderivative(r_inner)))


SQUARE_GEOMETRY = {"c": 0.65, "a": 0.1, "b": 0.02}

# Exact pressure, velocity and their combinations as expression text.
_P = "((x^2 - a^2)*(y^2 - a^2))"
_UX = "(x/(x^2 + y^2) + y)"
_UY = "(y/(x^2 + y^2) - x)"
_PX = "(2*x*(y^2 - a^2))"
_PY = "(2*y*(x^2 - a^2))"
_ALPHA = f"(alpha0*exp(gamma*{_P}))"


def square_manufactured_fields(a=0.1, gamma=2.0, alpha0=None):
    """Data (f, div f, g) and exact fields for the manufactured solution on the notched square."""
    if alpha0 is None:
        alpha0 = 4.0 * math.exp(gamma)
    params = {"a": a, "gamma": gamma, "alpha0": alpha0}
    f = CoefficientField.vector(f"{_ALPHA}*{_UX} + {_PX}", f"{_ALPHA}*{_UY} + {_PY}", **params)
    # u is divergence free, so div f = gamma alpha(p) grad p . u + laplacian p.
    divf = CoefficientField.scalar(
        f"gamma*{_ALPHA}*({_PX}*{_UX} + {_PY}*{_UY}) + 2*(x^2 - a^2) + 2*(y^2 - a^2)", **params
    )
    g = CoefficientField.scalar(f"{_UX}*nx + {_UY}*ny", **params)
    exact = fem.ExactSolution(
        q=CoefficientField.scalar(f"exp(-gamma*{_P})", **params),
        p=CoefficientField.scalar(_P, **params),
        u=CoefficientField.vector(_UX, _UY, **params),
        grad_q=CoefficientField.vector(f"-gamma*exp(-gamma*{_P})*{_PX}", f"-gamma*exp(-gamma*{_P})*{_PY}", **params),
        grad_p=CoefficientField.vector(_PX, _PY, **params),
    )
    return f, divf, g, exact, alpha0


def preset_square_manufactured(target_h=0.04, mesh=None, gamma=2.0, alpha0=None, **geometry):
    """Returns ``(spec, exact)`` for the manufactured problem."""
    geo = {**SQUARE_GEOMETRY, **geometry}
    if mesh is None:
        mesh = generate_square_with_holes(geo["c"], geo["a"], geo["b"], target_h)
    f, divf, g, exact, alpha0 = square_manufactured_fields(geo["a"], gamma, alpha0)
    return driver.ProblemSpec(gamma, alpha0, f, divf, g, mesh), exact


def square_exact_min_q(c=0.65, a=0.1, gamma=2.0):
    """Exact min of q = exp(-gamma p), reached at the three unnotched outer corners."""
    return math.exp(-gamma * (c * c - a * a) ** 2)


def refinement_levels(mesh, levels):
    meshes = [mesh]
    for _ in range(levels - 1):
        meshes.append(refine_uniform(meshes[-1]))
    return meshes


def annulus_levels(r_inner, r_outer, target_h, levels):
    """Annulus meshes regenerated at halved target size, keeping boundary nodes on the circles."""
    return [generate_annulus(r_inner, r_outer, target_h / 2**k) for k in range(levels)]


def rate_fit(hs, errors):
    """Least-squares slope of log(error) against log(h)."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if hs.shape != errors.shape or hs.ndim != 1 or len(hs) < 2:
        raise ValueError("rate_fit needs two equal-length sequences of at least two values")
    if np.any(hs <= 0) or np.any(errors <= 0):
        raise ValueError("rate_fit needs positive mesh sizes and errors")
    lh = np.log(hs)
    if np.ptp(lh) == 0:
        raise ValueError("rate_fit needs at least two distinct mesh sizes")
    le = np.log(errors)
    lh_c = lh - lh.mean()
    return float((lh_c * (le - le.mean())).sum() / (lh_c**2).sum())


@dataclass
class StudyResult:
    columns: list
    rows: list = field(default_factory=list)
    rates: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def column(self, name):
        return np.array([row[name] for row in self.rows], dtype=float)


def _map(fn, items, workers):
    if workers and workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _positivity_row(args):
    level, spec, tol, eps_pos = args
    mesh = spec.mesh
    row = {"level": level, "ndofs": mesh.n_vertices, "h": mesh.h, "min_q": float("nan"), "status": "ok"}
    try:
        q = driver.solve_q(spec, tol=tol)
    except DarcySplitError as exc:
        row["status"] = f"solver-error: {exc}"
        return row
    row["min_q"] = float(q.min())
    try:
        driver.positivity_guard(q, eps_pos, mesh)
    except NonPositiveQ:
        row["status"] = "nonpositive"
    return row


def positivity_study(spec, levels, meshes=None, tol=driver.DEFAULT_TOL, eps_pos=driver.DEFAULT_EPS_POS, workers=1):
    """min q_h per refinement level; a failing level is recorded and the study continues."""
    if levels < 2:
        raise ValueError("a study needs at least two levels")
    meshes = list(meshes) if meshes is not None else refinement_levels(spec.mesh, levels)
    jobs = [(k, spec.with_mesh(m), tol, eps_pos) for k, m in enumerate(meshes[:levels])]
    result = StudyResult(["level", "ndofs", "h", "min_q", "status"])
    result.rows = _map(_positivity_row, jobs, workers)
    return result


ERROR_COLUMNS = ("h1semi_q", "l2_u", "h1semi_p", "l2_q", "linf_q")
RATE_COLUMNS = ("h1semi_q", "l2_u", "h1semi_p")


def _convergence_row(args):
    level, spec, exact, tol, override = args
    mesh = spec.mesh
    row = {"level": level, "ndofs": mesh.n_vertices, "h": mesh.h, "status": "ok"}
    try:
        sol = driver.solve_splitting(spec, override_sign_checks=override, tol=tol)
    except DarcySplitError as exc:
        row.update({c: float("nan") for c in ERROR_COLUMNS + ("min_q", "consistency")})
        row["status"] = f"{type(exc).__name__}: {exc}"
        return row
    row.update(fem.error_norms(mesh, sol, exact))
    row["min_q"] = float(sol.q_nodal.min())
    row["consistency"] = fem.l2_norm(mesh, sol.p_nodal - driver.recovered_pressure(sol.q_nodal, spec.gamma))
    return row


def convergence_study(
    spec, exact, levels, meshes=None, tol=driver.DEFAULT_TOL, override_sign_checks=True, workers=1
):
    """Full splitting solve per level with error norms and least-squares rates."""
    if levels < 2:
        raise ValueError("a study needs at least two levels")
    meshes = list(meshes) if meshes is not None else refinement_levels(spec.mesh, levels)
    jobs = [(k, spec.with_mesh(m), exact, tol, override_sign_checks) for k, m in enumerate(meshes[:levels])]
    result = StudyResult(["level", "ndofs", "h", *ERROR_COLUMNS, "min_q", "consistency", "status"])
    result.rows = _map(_convergence_row, jobs, workers)
    ok = [r for r in result.rows if r["status"] == "ok"]
    if len(ok) >= 2:
        hs = [r["h"] for r in ok]
        for name in RATE_COLUMNS:
            result.rates[name] = rate_fit(hs, [r[name] for r in ok])
    for name in ERROR_COLUMNS + ("consistency",):
        vals = [r[name] for r in ok]
        for k in range(1, len(vals)):
            if not vals[k] < vals[k - 1]:
                result.flags.append(f"{name} not decreasing at level {ok[k]['level']}")
    return result

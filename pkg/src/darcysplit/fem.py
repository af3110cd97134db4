"""P1 / P0-vector finite element spaces, quadrature and assembly.

Scalars (q, p) live in continuous piecewise-linear space; velocities are
piecewise-constant 2-vectors with DOF ``2*t + k`` for component ``k`` of
triangle ``t``. Assembly is vectorised over triangles.
"""
from dataclasses import dataclass, field

import numpy as np

from .expr import divergence_fd
from .linalg import SparseMatrix
from .mesh import GAMMA, GAMMA_W


@dataclass(frozen=True)
class QuadratureRule:
    """Points in barycentric (triangle) or [0, 1] parametric (edge) coordinates.

    Weights are normalised to sum to one, i.e. they integrate against the
    element measure divided by its size.
    """

    points: np.ndarray
    weights: np.ndarray
    degree: int


def _orbit3(a):
    b = 1.0 - 2.0 * a
    return [(b, a, a), (a, b, a), (a, a, b)]


def _orbit6(a, b):
    c = 1.0 - a - b
    return [(a, b, c), (b, a, c), (a, c, b), (c, a, b), (b, c, a), (c, b, a)]


def _triangle_rule(orbits, degree):
    pts, wts = [], []
    for w, lams in orbits:
        pts += lams
        wts += [w] * len(lams)
    return QuadratureRule(np.array(pts), np.array(wts), degree)


# Symmetric Dunavant rules.
TRIANGLE_DEG4 = _triangle_rule(
    [
        (0.2233815896780114657, _orbit3(0.44594849091596488632)),
        (0.10995174365532186764, _orbit3(0.09157621350977074346)),
    ],
    4,
)
TRIANGLE_DEG6 = _triangle_rule(
    [
        (0.11678627572637936603, _orbit3(0.24928674517091042129)),
        (0.050844906370206816921, _orbit3(0.06308901449150222834)),
        (0.082851075618373575194, _orbit6(0.053145049844816947353, 0.31035245103378440542)),
    ],
    6,
)
_gl_x, _gl_w = np.polynomial.legendre.leggauss(3)
EDGE_GAUSS3 = QuadratureRule(0.5 * (_gl_x + 1.0), 0.5 * _gl_w, 5)


class P1Space:
    """Continuous piecewise linears; Dirichlet nodes are those on GammaW."""

    def __init__(self, mesh):
        self.mesh = mesh
        self.n_dofs = mesh.n_vertices
        self.dirichlet = mesh.boundary_nodes(GAMMA_W)
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.dirichlet] = False
        self.free = np.flatnonzero(mask)


class P0VecSpace:
    def __init__(self, mesh):
        self.mesh = mesh
        self.n_dofs = 2 * mesh.n_triangles


@dataclass
class FemSolution:
    q_nodal: np.ndarray
    p_nodal: np.ndarray
    u_elem: np.ndarray
    alpha_nodal: np.ndarray
    info: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ExactSolution:
    """Exact fields for error measurement; gradients fall back to finite differences."""

    q: object
    p: object
    u: object
    grad_q: object = None
    grad_p: object = None


def quadrature_points(mesh, rule=TRIANGLE_DEG4):
    """Physical quadrature points, shape (2, n_triangles, n_points)."""
    p = mesh.vertices[mesh.triangles]
    xy = np.einsum("qi,tid->dtq", rule.points, p)
    return xy


def edge_quadrature(mesh, tag=GAMMA, rule=EDGE_GAUSS3):
    """Points (2, n_edges, nq), outward normals (2, n_edges, nq), lengths and edge vertex pairs."""
    sel = mesh.boundary_tags == tag
    edges = mesh.boundary_edges[sel]
    lengths, normals = mesh.edge_geometry
    lengths, normals = lengths[sel], normals[sel]
    a = mesh.vertices[edges[:, 0]]
    b = mesh.vertices[edges[:, 1]]
    t = rule.points
    xy = a.T[:, :, None] * (1.0 - t) + b.T[:, :, None] * t
    nrm = np.broadcast_to(normals.T[:, :, None], xy.shape)
    return xy, nrm, lengths, edges


def divergence_values(f, divf, x, y, step):
    """div f at points; uses the analytic field when given, central differences otherwise."""
    if divf is not None:
        return divf(x, y)
    return divergence_fd(f, (x, y), step)


def fd_step(mesh):
    return 1e-6 * mesh.diameter


def _scatter(mesh, local):
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    n = mesh.n_vertices
    return SparseMatrix.from_coo(rows, cols, local.ravel(), (n, n))


def local_stiffness(mesh):
    G = mesh.barycentric_gradients
    return mesh.areas[:, None, None] * np.einsum("tid,tjd->tij", G, G)


def assemble_stiffness(mesh):
    return _scatter(mesh, local_stiffness(mesh))


def assemble_convdiff(mesh, f, divf, gamma, rule=TRIANGLE_DEG4, edge_rule=EDGE_GAUSS3):
    """Matrix of the convection-diffusion form with its Robin term on Gamma.

    ``A[i, j] = int grad(phi_j).grad(phi_i) - gamma (f.grad(phi_j)) phi_i
    - gamma div(f) phi_j phi_i dx + gamma int_Gamma (f.n) phi_j phi_i ds``.
    """
    G = mesh.barycentric_gradients
    wa = mesh.areas[:, None] * rule.weights[None, :]
    lam = rule.points
    x, y = quadrature_points(mesh, rule)
    fq = f(x, y)
    dq = divergence_values(f, divf, x, y, fd_step(mesh))

    f_dot_grad = np.einsum("dtq,tjd->tqj", fq, G)
    conv = -gamma * np.einsum("tq,qi,tqj->tij", wa, lam, f_dot_grad)
    react = -gamma * np.einsum("tq,qi,qj->tij", wa * dq, lam, lam)
    A = _scatter(mesh, local_stiffness(mesh) + conv + react)

    exy, enrm, lengths, edges = edge_quadrature(mesh, GAMMA, edge_rule)
    if len(edges):
        fe = f(exy[0], exy[1])
        fn = (fe * enrm).sum(axis=0)
        phi = np.stack([1.0 - edge_rule.points, edge_rule.points], axis=1)
        we = lengths[:, None] * edge_rule.weights[None, :]
        robin = gamma * np.einsum("eq,qi,qj->eij", we * fn, phi, phi)
        rows = np.repeat(edges, 2, axis=1).ravel()
        cols = np.tile(edges, (1, 2)).ravel()
        R = SparseMatrix.from_coo(rows, cols, robin.ravel(), A.shape)
        A = A + R
    return A


def _edge_load(mesh, values, lengths, edges, edge_rule):
    phi = np.stack([1.0 - edge_rule.points, edge_rule.points], axis=1)
    we = lengths[:, None] * edge_rule.weights[None, :]
    local = np.einsum("eq,qi->ei", we * values, phi)
    return np.bincount(edges.ravel(), weights=local.ravel(), minlength=mesh.n_vertices)


def boundary_load(mesh, g, tag=GAMMA, edge_rule=EDGE_GAUSS3):
    """Vector of int_tag g phi_i ds; ``g`` may use the edge normal (nx, ny)."""
    exy, enrm, lengths, edges = edge_quadrature(mesh, tag, edge_rule)
    if not len(edges):
        return np.zeros(mesh.n_vertices)
    gv = g(exy[0], exy[1], normal=enrm)
    return _edge_load(mesh, gv, lengths, edges, edge_rule)


def assemble_convdiff_rhs(mesh, f, divf, g, gamma, alpha0, rule=TRIANGLE_DEG4, edge_rule=EDGE_GAUSS3):
    """Load for the shifted unknown z = q - 1:
    ``gamma int div(f) phi_i dx + gamma int_Gamma (alpha0 g - f.n) phi_i ds``."""
    wa = mesh.areas[:, None] * rule.weights[None, :]
    x, y = quadrature_points(mesh, rule)
    dq = divergence_values(f, divf, x, y, fd_step(mesh))
    local = gamma * np.einsum("tq,qi->ti", wa * dq, rule.points)
    b = np.bincount(mesh.triangles.ravel(), weights=local.ravel(), minlength=mesh.n_vertices)

    exy, enrm, lengths, edges = edge_quadrature(mesh, GAMMA, edge_rule)
    if len(edges):
        fn = (f(exy[0], exy[1]) * enrm).sum(axis=0)
        gv = g(exy[0], exy[1], normal=enrm)
        b += gamma * _edge_load(mesh, alpha0 * gv - fn, lengths, edges, edge_rule)
    return b


def assemble_darcy(mesh, alpha_nodal):
    """Weighted velocity mass matrix M (diagonal) and coupling B (P1 rows x P0-vector columns)."""
    alpha_nodal = np.asarray(alpha_nodal, dtype=float)
    if np.any(alpha_nodal <= 0):
        bad = int(np.argmin(alpha_nodal))
        raise ValueError(f"nonpositive alpha at vertex {bad}: {alpha_nodal[bad]}")
    w = mesh.areas * alpha_nodal[mesh.triangles].mean(axis=1)
    nt = mesh.n_triangles
    M = SparseMatrix.diagonal(np.repeat(w, 2))
    G = mesh.barycentric_gradients
    rows = np.repeat(mesh.triangles, 2, axis=1).ravel()
    cols = np.tile(2 * np.arange(nt)[:, None] + np.arange(2)[None, :], (1, 3)).ravel()
    vals = (mesh.areas[:, None, None] * G).ravel()
    B = SparseMatrix.from_coo(rows, cols, vals, (mesh.n_vertices, 2 * nt))
    return M, B


def assemble_darcy_rhs(mesh, f, g, rule=TRIANGLE_DEG4, edge_rule=EDGE_GAUSS3):
    wa = mesh.areas[:, None] * rule.weights[None, :]
    x, y = quadrature_points(mesh, rule)
    fq = f(x, y)
    F = np.einsum("tq,dtq->td", wa, fq).ravel()
    G = boundary_load(mesh, g, GAMMA, edge_rule)
    return F, G


def element_gradients(mesh, nodal):
    """Constant gradient of a P1 function on each triangle, shape (n_triangles, 2)."""
    return np.einsum("ti,tid->td", np.asarray(nodal)[mesh.triangles], mesh.barycentric_gradients)


def interpolate(mesh, field):
    return field(mesh.vertices[:, 0], mesh.vertices[:, 1])


def _fd_gradient(field, x, y, step):
    gx = (field(x + step, y) - field(x - step, y)) / (2 * step)
    gy = (field(x, y + step) - field(x, y - step)) / (2 * step)
    return np.stack([gx, gy])


def error_norms(mesh, solution, exact, rule=TRIANGLE_DEG6):
    """Discretisation errors against exact fields, integrated with a degree-6 rule."""
    wa = mesh.areas[:, None] * rule.weights[None, :]
    x, y = quadrature_points(mesh, rule)
    step = fd_step(mesh)
    lam = rule.points
    tri = mesh.triangles

    q_h = np.einsum("qi,ti->tq", lam, solution.q_nodal[tri])
    dq = exact.q(x, y) - q_h
    grad_q = exact.grad_q(x, y) if exact.grad_q is not None else _fd_gradient(exact.q, x, y, step)
    grad_p = exact.grad_p(x, y) if exact.grad_p is not None else _fd_gradient(exact.p, x, y, step)
    gq_h = element_gradients(mesh, solution.q_nodal).T[:, :, None]
    gp_h = element_gradients(mesh, solution.p_nodal).T[:, :, None]
    u_h = np.asarray(solution.u_elem).T[:, :, None]

    def l2(sq):
        return float(np.sqrt((wa * sq).sum()))

    vertex_err = np.abs(interpolate(mesh, exact.q) - solution.q_nodal)
    return {
        "l2_u": l2(((exact.u(x, y) - u_h) ** 2).sum(axis=0)),
        "h1semi_p": l2(((grad_p - gp_h) ** 2).sum(axis=0)),
        "h1semi_q": l2(((grad_q - gq_h) ** 2).sum(axis=0)),
        "l2_q": l2(dq**2),
        "linf_q": float(max(np.abs(dq).max(), vertex_err.max())),
    }


def l2_norm(mesh, nodal, rule=TRIANGLE_DEG6):
    """L2 norm of a P1 function."""
    wa = mesh.areas[:, None] * rule.weights[None, :]
    vals = np.einsum("qi,ti->tq", rule.points, np.asarray(nodal)[mesh.triangles])
    return float(np.sqrt((wa * vals**2).sum()))

"""Triangulations of annulus-type domains.

A :class:`Mesh` stores counter-clockwise triangles and its boundary edges,
each tagged ``"Gamma"`` (outer loop) or ``"GammaW"`` (inner hole loops).
Boundary edges are oriented so that the domain lies on their left, hence the
outward normal of edge ``(a, b)`` is the clockwise rotation of ``b - a``.
"""
from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np
import triangle

from .errors import MeshError, MeshFormatError

GAMMA = "Gamma"
GAMMA_W = "GammaW"
TAGS = (GAMMA, GAMMA_W)

# Triangle's minimum angle; bounds diameter / inradius of every generated element.
MIN_ANGLE = 30.0
# Generated elements satisfy diameter <= DIAMETER_FACTOR * target_h.
DIAMETER_FACTOR = 2.0
# Largest diameter / inradius ratio of a triangle whose angles all exceed MIN_ANGLE
# (attained by the isosceles triangle with two MIN_ANGLE angles); about 7.46.
QUALITY_BOUND = math.sin(math.radians(MIN_ANGLE)) / math.sin(math.radians(MIN_ANGLE / 2)) ** 2


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", _readonly(np.asarray(self.vertices, dtype=float)))
        object.__setattr__(self, "triangles", _readonly(np.asarray(self.triangles, dtype=np.int64)))
        object.__setattr__(
            self, "boundary_edges", _readonly(np.asarray(self.boundary_edges, dtype=np.int64).reshape(-1, 2))
        )
        object.__setattr__(self, "boundary_tags", _readonly(np.asarray(self.boundary_tags, dtype=object)))

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (
            np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.triangles, other.triangles)
            and np.array_equal(self.boundary_edges, other.boundary_edges)
            and list(self.boundary_tags) == list(other.boundary_tags)
        )

    __hash__ = object.__hash__

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @cached_property
    def areas(self):
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def diameters(self):
        p = self.vertices[self.triangles]
        lengths = np.stack(
            [np.linalg.norm(p[:, (i + 1) % 3] - p[:, i], axis=1) for i in range(3)], axis=1
        )
        return lengths.max(axis=1)

    @cached_property
    def inradii(self):
        p = self.vertices[self.triangles]
        perimeter = sum(np.linalg.norm(p[:, (i + 1) % 3] - p[:, i], axis=1) for i in range(3))
        return 2.0 * self.areas / perimeter

    @property
    def h(self):
        return float(self.diameters.max())

    @cached_property
    def barycentric_gradients(self):
        """(n_triangles, 3, 2) gradients of the three P1 basis functions."""
        p = self.vertices[self.triangles]
        grads = np.empty((self.n_triangles, 3, 2))
        twice_area = 2.0 * self.areas
        for i in range(3):
            j, k = (i + 1) % 3, (i + 2) % 3
            grads[:, i, 0] = (p[:, j, 1] - p[:, k, 1]) / twice_area
            grads[:, i, 1] = (p[:, k, 0] - p[:, j, 0]) / twice_area
        return grads

    def edges_with_tag(self, tag):
        return self.boundary_edges[self.boundary_tags == tag]

    @cached_property
    def edge_geometry(self):
        """Lengths and outward unit normals of all boundary edges."""
        a = self.vertices[self.boundary_edges[:, 0]]
        b = self.vertices[self.boundary_edges[:, 1]]
        d = b - a
        lengths = np.linalg.norm(d, axis=1)
        normals = np.stack([d[:, 1], -d[:, 0]], axis=1) / lengths[:, None]
        return lengths, normals

    def boundary_nodes(self, tag):
        return np.unique(self.edges_with_tag(tag))

    def boundary_length(self, tag=None):
        lengths, _ = self.edge_geometry
        if tag is None:
            return float(lengths.sum())
        return float(lengths[self.boundary_tags == tag].sum())

    @property
    def area(self):
        return float(self.areas.sum())

    @property
    def diameter(self):
        """Diameter of the bounding box; a cheap proxy for the domain diameter."""
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def quality(self):
        return float(self.diameters.max() / self.inradii.min())


def _edge_keys(edges, n):
    e = np.sort(edges, axis=1)
    return e[:, 0] * n + e[:, 1]


def _all_edges(triangles):
    """Directed edges of every triangle, in CCW order: (3*n_triangles, 2)."""
    t = triangles
    return np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])


def boundary_loops(edges):
    """Split oriented boundary edges into closed loops (lists of edge indices)."""
    succ = {}
    for k, (a, b) in enumerate(edges):
        if a in succ:
            raise MeshError(f"boundary vertex {a} starts two boundary edges")
        succ[int(a)] = k
    seen = np.zeros(len(edges), dtype=bool)
    loops = []
    for start in range(len(edges)):
        if seen[start]:
            continue
        loop = []
        k = start
        while not seen[k]:
            seen[k] = True
            loop.append(k)
            nxt = int(edges[k][1])
            if nxt not in succ:
                raise MeshError(f"boundary loop is not closed at vertex {nxt}")
            k = succ[nxt]
        if k != start:
            raise MeshError("boundary edges do not form simple loops")
        loops.append(loop)
    return loops


def _loop_bbox_size(vertices, edges, loop):
    pts = vertices[edges[loop].ravel()]
    ext = pts.max(axis=0) - pts.min(axis=0)
    return float(ext[0] * ext[1])


def from_triangles(vertices, triangles):
    """Build a tagged mesh from raw triangles; orients them CCW and tags boundary loops."""
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.array(triangles, dtype=np.int64)
    p = vertices[triangles]
    signed = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (
        p[:, 2, 0] - p[:, 0, 0]
    )
    flip = signed < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]

    directed = _all_edges(triangles)
    keys = _edge_keys(directed, len(vertices))
    uniq, counts = np.unique(keys, return_counts=True)
    if counts.max(initial=0) > 2:
        raise MeshError("an edge is shared by more than two triangles")
    single = np.isin(keys, uniq[counts == 1])
    bedges = directed[single]

    loops = boundary_loops(bedges)
    sizes = [_loop_bbox_size(vertices, bedges, loop) for loop in loops]
    outer = int(np.argmax(sizes))
    order = [outer] + [i for i in range(len(loops)) if i != outer]
    edges_out, tags_out = [], []
    for li in order:
        tag = GAMMA if li == outer else GAMMA_W
        for k in loops[li]:
            edges_out.append(bedges[k])
            tags_out.append(tag)
    return Mesh(vertices, triangles, np.array(edges_out).reshape(-1, 2), np.array(tags_out, dtype=object))


def validate_mesh(mesh):
    """Raise MeshError unless every structural invariant of ``mesh`` holds."""
    if mesh.n_triangles == 0:
        raise MeshError("mesh has no triangles")
    if mesh.triangles.min() < 0 or mesh.triangles.max() >= mesh.n_vertices:
        raise MeshError("triangle references a nonexistent vertex")
    if np.any(mesh.areas <= 0):
        bad = int(np.argmin(mesh.areas))
        raise MeshError(f"triangle {bad} has nonpositive signed area {mesh.areas[bad]:.3e}")

    directed = _all_edges(mesh.triangles)
    n = mesh.n_vertices
    keys = _edge_keys(directed, n)
    uniq, counts = np.unique(keys, return_counts=True)
    if counts.max() > 2:
        raise MeshError("nonconforming mesh: edge shared by more than two triangles")
    # Interior edges must be traversed once in each direction by CCW neighbours.
    dkeys = directed[:, 0] * n + directed[:, 1]
    if len(np.unique(dkeys)) != len(dkeys):
        raise MeshError("inconsistent orientation: a directed edge appears twice")

    boundary_keys = uniq[counts == 1]
    bk = _edge_keys(mesh.boundary_edges, n)
    if len(bk) != len(boundary_keys) or not np.array_equal(np.sort(bk), boundary_keys):
        raise MeshError("boundary edge list does not match edges owned by a single triangle")
    # Orientation: each boundary edge must coincide with its triangle's CCW edge.
    if not np.all(np.isin(mesh.boundary_edges[:, 0] * n + mesh.boundary_edges[:, 1], dkeys)):
        raise MeshError("boundary edge is not oriented with the domain on its left")

    tags = list(mesh.boundary_tags)
    if any(t not in TAGS for t in tags):
        raise MeshError("untagged or unknown boundary tag")
    loops = boundary_loops(mesh.boundary_edges)
    sizes = [_loop_bbox_size(mesh.vertices, mesh.boundary_edges, loop) for loop in loops]
    outer = int(np.argmax(sizes))
    for li, loop in enumerate(loops):
        expected = GAMMA if li == outer else GAMMA_W
        if any(tags[k] != expected for k in loop):
            raise MeshError(f"boundary loop {li} should be tagged {expected}")
    return True


def _circle_points(radius, target_h):
    if target_h >= 2 * radius:
        n = 3
    else:
        n = max(3, math.ceil(math.pi / math.asin(target_h / (2 * radius))))
    theta = 2 * math.pi * np.arange(n) / n
    return radius * np.stack([np.cos(theta), np.sin(theta)], axis=1)


def _polyline(corners, target_h):
    """Subdivide a closed polygon so that no segment exceeds ``target_h``."""
    pts = []
    corners = np.asarray(corners, dtype=float)
    for i in range(len(corners)):
        a, b = corners[i], corners[(i + 1) % len(corners)]
        n = max(1, math.ceil(np.linalg.norm(b - a) / target_h - 1e-12))
        t = np.arange(n) / n
        pts.append(a + t[:, None] * (b - a))
    return np.concatenate(pts)


def _loop_segments(offset, n):
    idx = np.arange(n) + offset
    return np.stack([idx, np.roll(idx, -1)], axis=1)


def _triangulate(loops, holes, target_h):
    vertices = np.concatenate(loops)
    segments, offset = [], 0
    for loop in loops:
        segments.append(_loop_segments(offset, len(loop)))
        offset += len(loop)
    max_area = math.sqrt(3) / 4 * target_h**2
    out = triangle.triangulate(
        {"vertices": vertices, "segments": np.concatenate(segments), "holes": np.asarray(holes, dtype=float)},
        f"pq{MIN_ANGLE:g}a{max_area:.17g}Q",
    )
    mesh = from_triangles(out["vertices"], out["triangles"])
    validate_mesh(mesh)
    return mesh


def generate_annulus(r_inner, r_outer, target_h):
    """Inscribed-polygon triangulation of the annulus r_inner < |x| < r_outer."""
    if not (0 < r_inner < r_outer):
        raise MeshError(f"invalid radii: need 0 < r_inner < r_outer, got {r_inner}, {r_outer}")
    if not target_h > 0:
        raise MeshError("target_h must be positive")
    if target_h > r_outer - r_inner:
        raise MeshError(f"target_h={target_h} cannot resolve annulus width {r_outer - r_inner}")
    outer = _circle_points(r_outer, target_h)
    inner = _circle_points(r_inner, target_h)[::-1]
    return _triangulate([outer, inner], [[0.0, 0.0]], target_h)


def generate_square_with_holes(c, a, b, target_h):
    """Triangulate (-c, c)^2 minus the centred hole (-a, a)^2 and the corner notch (c-b, c)^2."""
    if not (0 < b and 0 < a < c and a + b < c):
        raise MeshError(f"degenerate parameters c={c}, a={a}, b={b}: need 0 < b, 0 < a < c, a + b < c")
    if not target_h > 0:
        raise MeshError("target_h must be positive")
    outer = [(-c, -c), (c, -c), (c, c - b), (c - b, c - b), (c - b, c), (-c, c)]
    hole = [(-a, -a), (-a, a), (a, a), (a, -a)]
    return _triangulate([_polyline(outer, target_h), _polyline(hole, target_h)], [[0.0, 0.0]], target_h)


def generate_rectangle(x0, x1, y0, y1, nx, ny):
    """Structured right-triangle mesh of a rectangle; the whole boundary is Gamma."""
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.stack([X.ravel(), Y.ravel()], axis=1)
    tris = []
    for j in range(ny):
        for i in range(nx):
            v0 = j * (nx + 1) + i
            v1, v2, v3 = v0 + 1, v0 + nx + 2, v0 + nx + 1
            tris += [(v0, v1, v2), (v0, v2, v3)]
    return from_triangles(vertices, tris)


def refine_uniform(mesh):
    """Split every triangle into four congruent children through its edge midpoints."""
    n = mesh.n_vertices
    directed = _all_edges(mesh.triangles)
    keys = _edge_keys(directed, n)
    uniq, inverse = np.unique(keys, return_inverse=True)
    inverse = inverse.ravel()
    lo, hi = uniq // n, uniq % n
    midpoints = 0.5 * (mesh.vertices[lo] + mesh.vertices[hi])
    vertices = np.concatenate([mesh.vertices, midpoints])

    nt = mesh.n_triangles
    m01 = n + inverse[:nt]
    m12 = n + inverse[nt : 2 * nt]
    m20 = n + inverse[2 * nt :]
    v0, v1, v2 = mesh.triangles.T
    children = np.stack(
        [
            np.stack([v0, m01, m20], axis=1),
            np.stack([m01, v1, m12], axis=1),
            np.stack([m20, m12, v2], axis=1),
            np.stack([m01, m12, m20], axis=1),
        ],
        axis=1,
    ).reshape(-1, 3)

    bmid = n + np.searchsorted(uniq, _edge_keys(mesh.boundary_edges, n))
    a, b = mesh.boundary_edges.T
    bedges = np.stack([np.stack([a, bmid], axis=1), np.stack([bmid, b], axis=1)], axis=1).reshape(-1, 2)
    btags = np.repeat(mesh.boundary_tags, 2)
    return Mesh(vertices, children, bedges, btags)


def write_mesh(mesh, path):
    with open(path, "w") as fh:
        fh.write(f"VERTICES {mesh.n_vertices}\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r}\n")
        fh.write(f"TRIANGLES {mesh.n_triangles}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"{a} {b} {c}\n")
        fh.write(f"BOUNDARY {len(mesh.boundary_edges)}\n")
        for (a, b), tag in zip(mesh.boundary_edges, mesh.boundary_tags):
            fh.write(f"{a} {b} {tag}\n")


def _section(lines, pos, name, width):
    if pos >= len(lines):
        raise MeshFormatError(f"unexpected end of file, expected section {name}", pos + 1)
    head = lines[pos].split()
    if len(head) != 2 or head[0] != name:
        raise MeshFormatError(f"expected '{name} <count>'", pos + 1)
    try:
        count = int(head[1])
    except ValueError:
        raise MeshFormatError(f"invalid record count {head[1]!r}", pos + 1) from None
    records = []
    for k in range(count):
        lineno = pos + 2 + k
        if lineno > len(lines):
            raise MeshFormatError(f"truncated {name} section: expected {count} records, got {k}", lineno)
        fields = lines[lineno - 1].split()
        if len(fields) != width:
            raise MeshFormatError(f"expected {width} fields, got {len(fields)}", lineno)
        records.append((lineno, fields))
    return records, pos + 1 + count


def read_mesh(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    verts, pos = _section(lines, 0, "VERTICES", 2)
    tris, pos = _section(lines, pos, "TRIANGLES", 3)
    bnd, pos = _section(lines, pos, "BOUNDARY", 3)
    if any(line.strip() for line in lines[pos:]):
        raise MeshFormatError("trailing content after BOUNDARY section", pos + 1)

    def parse(records, conv, ncols):
        out = []
        for lineno, fields in records:
            try:
                out.append([conv(f) for f in fields[:ncols]])
            except ValueError:
                raise MeshFormatError(f"malformed field in {fields!r}", lineno) from None
        return out

    vertices = np.array(parse(verts, float, 2), dtype=float).reshape(-1, 2)
    triangles = np.array(parse(tris, int, 3), dtype=np.int64).reshape(-1, 3)
    edges = np.array(parse(bnd, int, 2), dtype=np.int64).reshape(-1, 2)
    tags = []
    for lineno, fields in bnd:
        if fields[2] not in TAGS:
            raise MeshFormatError(f"unknown boundary tag {fields[2]!r}", lineno)
        tags.append(fields[2])
    for name, arr in (("TRIANGLES", triangles), ("BOUNDARY", edges)):
        if arr.size and (arr.min() < 0 or arr.max() >= len(vertices)):
            raise MeshFormatError(f"{name} references a vertex index out of range")
    return Mesh(vertices, triangles, edges, np.array(tags, dtype=object))

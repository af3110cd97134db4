import math

import numpy as np
import pytest

from darcysplit.errors import MeshError, MeshFormatError
from darcysplit.mesh import (
    GAMMA, GAMMA_W, QUALITY_BOUND, from_triangles, generate_annulus, generate_rectangle,
    generate_square_with_holes, read_mesh, refine_uniform, validate_mesh, write_mesh,
)


def _signed_areas(mesh):
    p = mesh.vertices[mesh.triangles]
    d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def test_annulus_area_and_boundary(annulus_medium):
    m = annulus_medium
    validate_mesh(m)
    assert np.all(_signed_areas(m) > 0)
    # polygonal inscribed approximation of 15 pi from below
    assert m.area < 15 * math.pi
    assert m.area == pytest.approx(15 * math.pi, rel=5e-3)
    r = np.hypot(*m.vertices[m.boundary_nodes(GAMMA)].T)
    np.testing.assert_allclose(r, 4.0, atol=1e-12)
    r = np.hypot(*m.vertices[m.boundary_nodes(GAMMA_W)].T)
    np.testing.assert_allclose(r, 1.0, atol=1e-12)
    assert m.boundary_length(GAMMA) == pytest.approx(8 * math.pi, rel=5e-3)


def test_annulus_mesh_size_follows_target():
    m = generate_annulus(1.0, 4.0, 0.3)
    assert m.h <= 2.0 * 0.3


def test_square_with_holes_area_exact(square_coarse):
    m = square_coarse
    validate_mesh(m)
    c, a, b = 0.65, 0.1, 0.02
    expected = 4 * c * c - 4 * a * a - b * b
    assert m.area == pytest.approx(expected, rel=1e-12)
    xw, yw = m.vertices[m.boundary_nodes(GAMMA_W)].T
    assert np.all(np.isclose(np.abs(xw), a) | np.isclose(np.abs(yw), a))


def test_min_angle_and_per_element_quality(square_coarse, annulus_medium):
    for m in (square_coarse, annulus_medium):
        ratio = m.diameters / m.inradii
        assert ratio.max() <= QUALITY_BOUND


def test_refinement_halves_h_and_keeps_area(annulus_coarse):
    m0 = annulus_coarse
    m1 = refine_uniform(m0)
    m2 = refine_uniform(m1)
    validate_mesh(m2)
    assert m2.n_triangles == 16 * m0.n_triangles
    assert m2.h == pytest.approx(m0.h / 4, rel=1e-12)
    assert m2.area == pytest.approx(m0.area, rel=1e-12)
    assert m2.quality() == pytest.approx(m0.quality(), rel=1e-9)
    assert m2.boundary_length(GAMMA) == pytest.approx(m0.boundary_length(GAMMA), rel=1e-12)
    assert set(m2.boundary_tags) == {GAMMA, GAMMA_W}


def test_rectangle_is_all_gamma():
    m = generate_rectangle(0, 2, 0, 1, 4, 2)
    assert m.area == pytest.approx(2.0)
    assert set(m.boundary_tags) == {GAMMA}
    assert m.boundary_length() == pytest.approx(6.0)


def test_from_triangles_orients_ccw():
    v = np.array([[0, 0], [1, 0], [0, 1.0]])
    m = from_triangles(v, np.array([[0, 2, 1]]))
    assert _signed_areas(m)[0] > 0


def test_generator_rejects_bad_input():
    with pytest.raises(MeshError):
        generate_annulus(2.0, 1.0, 0.1)
    with pytest.raises(MeshError):
        generate_annulus(1.0, 4.0, 10.0)


def test_round_trip(tmp_path, square_coarse):
    path = tmp_path / "m.txt"
    write_mesh(square_coarse, path)
    back = read_mesh(path)
    assert back == square_coarse
    np.testing.assert_array_equal(back.vertices, square_coarse.vertices)


@pytest.mark.parametrize(
    "text, line",
    [
        ("VERTICES 3\n0 0\n1 0\n", 4),
        ("VERTICES 1\n0 0\nTRIANGLES x\n", 3),
        ("VERTICES 3\n0 0\n1 0\n0 1\nTRIANGLES 1\n0 1 2\nBOUNDARY 1\n0 1 Wall\n", 8),
        ("VERTICES 3\n0 0\n1 0\n0 1\nTRIANGLES 1\n0 1 2\nBOUNDARY 0\nextra\n", 8),
        ("VERTICES 3\n0 0\n1 zero\n0 1\nTRIANGLES 0\nBOUNDARY 0\n", 3),
    ],
)
def test_malformed_files_report_line(tmp_path, text, line):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(MeshFormatError) as exc:
        read_mesh(path)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)

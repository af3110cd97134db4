"""Writers for VTK legacy files and study CSV tables."""
import csv
import math

import numpy as np

VTK_TRIANGLE = 5


def write_vtk(path, mesh, solution, extra_point_data=None):
    """Legacy ASCII unstructured grid with point scalars q, p and cell vectors u."""
    point_data = {"q": solution.q_nodal, "p": solution.p_nodal, "alpha_tilde": solution.alpha_nodal}
    point_data.update(extra_point_data or {})
    nv, nt = mesh.n_vertices, mesh.n_triangles
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 2.0\n")
        fh.write("darcysplit solution\n")
        fh.write("ASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {nv} double\n")
        for x, y in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g} 0\n")
        fh.write(f"CELLS {nt} {4 * nt}\n")
        for a, b, c in mesh.triangles:
            fh.write(f"3 {a} {b} {c}\n")
        fh.write(f"CELL_TYPES {nt}\n")
        fh.write(f"{VTK_TRIANGLE}\n" * nt)
        fh.write(f"POINT_DATA {nv}\n")
        for name, values in point_data.items():
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in np.asarray(values, dtype=float):
                fh.write(f"{v:.17g}\n")
        fh.write(f"CELL_DATA {nt}\n")
        fh.write("VECTORS u double\n")
        for ux, uy in np.asarray(solution.u_elem, dtype=float):
            fh.write(f"{ux:.17g} {uy:.17g} 0\n")


def _format(value):
    if isinstance(value, (bool, np.bool_)):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return "nan"
        return f"{value:.8e}"
    return str(value)


def write_study_csv(fh, result):
    """Header row, one row per level and, when fitted, a trailing ``rate`` row."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([_format(row.get(c, "")) for c in result.columns])
    if result.rates:
        writer.writerow(["rate"] + [_format(result.rates[c]) if c in result.rates else "" for c in result.columns[1:]])

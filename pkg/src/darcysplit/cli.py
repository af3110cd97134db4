"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 data sign conditions
violated, 3 positivity guard failure, 4 solver non-convergence.
"""
import argparse
import logging
import sys

import numpy as np

from . import config as cfgmod
from . import driver, verify
from .errors import (
    ConfigError, ConvergenceError, DarcySplitError, DataConditionError, MeshError, NonPositiveQ, SolverError,
)
from .mesh import write_mesh
from .output import write_study_csv, write_vtk

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_POSITIVITY = 3
EXIT_SOLVER = 4

log = logging.getLogger("darcysplit")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def cmd_mesh_gen(cfg, args):
    mesh = cfgmod.build_mesh(cfg)
    path = args.output or cfg.run.get("mesh_output", "mesh.txt")
    write_mesh(mesh, path)
    print(f"wrote {path}: {mesh.n_vertices} vertices, {mesh.n_triangles} triangles, h = {mesh.h:.6g}")
    return EXIT_OK


def cmd_check_data(cfg, args):
    spec, _ = cfgmod.build_problem(cfg)
    report = driver.check_data_conditions(spec, cfg.tol_sign)
    print(report.summary())
    if not report.passed:
        for line in report.violations():
            print(f"violation: {line}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def cmd_solve(cfg, args):
    spec, _ = cfgmod.build_problem(cfg)
    sol = driver.solve_splitting(
        spec,
        override_sign_checks=args.override_sign_checks or cfg.override_sign_checks,
        tol=cfg.tol,
        eps_pos=cfg.eps_pos,
        tol_sign=cfg.tol_sign,
        method=cfg.solver,
    )
    path = args.output or cfg.run.get("vtk_output", "solution.vtk")
    write_vtk(path, spec.mesh, sol, {"p_recovered": driver.recovered_pressure(sol.q_nodal, spec.gamma)})
    u_norm = float(np.sqrt((spec.mesh.areas[:, None] * sol.u_elem**2).sum()))
    res = driver.darcy_residuals(spec, sol)
    print(f"vertices          {spec.mesh.n_vertices}")
    print(f"min_q             {sol.info['min_q']:.8e}")
    print(f"max_q             {sol.q_nodal.max():.8e}")
    print(f"velocity_l2       {u_norm:.8e}")
    print(f"q_residual        {sol.info['q_solver'].get('residual', 0.0):.3e}")
    print(f"darcy_residual    {sol.info['darcy_solver'].get('residual', 0.0):.3e}")
    print(f"momentum_residual {res['momentum']:.3e}")
    print(f"wrote {path}")
    return EXIT_OK


def _write_study(result, cfg, args):
    fh, close = _open_out(args.output or cfg.run.get("csv_output"))
    try:
        write_study_csv(fh, result)
    finally:
        if close:
            fh.close()
    for flag in result.flags:
        print(f"warning: {flag}", file=sys.stderr)


def cmd_study_positivity(cfg, args):
    meshes = cfgmod.build_levels(cfg)
    spec, _ = cfgmod.build_problem(cfg, meshes[0])
    report = driver.check_data_conditions(spec, cfg.tol_sign)
    if not report.passed and not (args.override_sign_checks or cfg.override_sign_checks):
        raise DataConditionError(report)
    result = verify.positivity_study(
        spec, len(meshes), meshes=meshes, tol=cfg.tol, eps_pos=cfg.eps_pos, workers=args.workers
    )
    _write_study(result, cfg, args)
    return EXIT_OK


def cmd_study_convergence(cfg, args):
    meshes = cfgmod.build_levels(cfg)
    spec, exact = cfgmod.build_problem(cfg, meshes[0])
    if exact is None:
        raise ConfigError("study-convergence needs exact fields: a manufactured preset or an [exact] section")
    override = args.override_sign_checks or cfg.override_sign_checks
    report = driver.check_data_conditions(spec, cfg.tol_sign)
    if not report.passed and not override:
        raise DataConditionError(report)
    result = verify.convergence_study(
        spec, exact, len(meshes), meshes=meshes, tol=cfg.tol, override_sign_checks=True, workers=args.workers
    )
    _write_study(result, cfg, args)
    return EXIT_OK


COMMANDS = {
    "mesh-gen": cmd_mesh_gen,
    "check-data": cmd_check_data,
    "solve": cmd_solve,
    "study-positivity": cmd_study_positivity,
    "study-convergence": cmd_study_convergence,
}


def build_parser():
    parser = _Parser(prog="darcysplit", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="INI run configuration")
    parser.add_argument("--override-sign-checks", action="store_true", help="run even if data sign conditions fail")
    parser.add_argument("--workers", type=int, default=1, help="parallel study levels")
    parser.add_argument("-o", "--output", help="output path, overriding the [run] section")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _exit_code(exc):
    if isinstance(exc, DataConditionError):
        return EXIT_DATA
    if isinstance(exc, NonPositiveQ):
        return EXIT_POSITIVITY
    if isinstance(exc, (ConvergenceError, SolverError)):
        return EXIT_SOLVER
    if isinstance(exc, (ConfigError, MeshError)):
        return EXIT_USAGE
    return EXIT_USAGE


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    if args.workers < 1:
        print("darcysplit: error: --workers must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = cfgmod.load_config(args.config)
        return COMMANDS[args.command](cfg, args)
    except DarcySplitError as exc:
        print(f"darcysplit: error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except (OSError, ValueError) as exc:
        print(f"darcysplit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

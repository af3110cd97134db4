"""INI-style run configuration.

Example::

    [domain]
    type = annulus            ; or square_with_holes
    r_inner = 1
    r_outer = 4
    target_h = 0.2
    refine = 0                ; uniform refinements of the generated mesh
    levels = 4                ; study levels

    [physics]
    gamma = 2
    alpha0 = 1

    [data]
    preset = annulus_radial   ; or zero, square_manufactured
    case = g0
    ; ...or explicit expressions instead of a preset:
    ; f_x = ..., f_y = ..., divf = ..., g = ...

    [parameters]
    kappa = 0.6

    [run]
    tol = 1e-10
    override_sign_checks = false
    vtk_output = solution.vtk
"""
import configparser
from dataclasses import dataclass, field
import math

from . import driver, fem, verify
from .errors import ConfigError, ExprError
from .expr import CoefficientField
from .mesh import generate_annulus, generate_square_with_holes, refine_uniform

PRESETS = ("zero", "annulus_radial", "square_manufactured")
DATA_KEYS = ("f_x", "f_y", "divf", "g")
EXACT_KEYS = ("q", "p", "u_x", "u_y", "grad_q_x", "grad_q_y", "grad_p_x", "grad_p_y")


@dataclass
class RunConfig:
    domain: dict
    physics: dict
    data: dict
    parameters: dict
    exact: dict
    run: dict = field(default_factory=dict)

    def run_value(self, key, default=None, conv=str):
        if key not in self.run:
            return default
        try:
            return conv(self.run[key])
        except ValueError:
            raise ConfigError(f"[run] {key}: invalid value {self.run[key]!r}") from None

    @property
    def tol(self):
        return self.run_value("tol", driver.DEFAULT_TOL, float)

    @property
    def eps_pos(self):
        return self.run_value("eps_pos", driver.DEFAULT_EPS_POS, float)

    @property
    def tol_sign(self):
        return self.run_value("tol_sign", driver.DEFAULT_TOL_SIGN, float)

    @property
    def override_sign_checks(self):
        return self.run_value("override_sign_checks", False, _boolean)

    @property
    def solver(self):
        method = self.run_value("solver", "auto")
        if method not in ("auto", "gmres", "lu"):
            raise ConfigError(f"[run] solver must be auto, gmres or lu, got {method!r}")
        return method


def _boolean(text):
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def load_config(path):
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    known = {"domain", "physics", "data", "parameters", "exact", "run"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")
    if not parser.has_section("domain"):
        raise ConfigError("config needs a [domain] section")
    if not parser.has_section("data"):
        raise ConfigError("config needs a [data] section")

    def section(name):
        return dict(parser[name]) if parser.has_section(name) else {}

    return RunConfig(
        section("domain"), section("physics"), section("data"), section("parameters"), section("exact"), section("run")
    )


def _number(block, name, key, default=None, conv=float):
    if key not in block:
        if default is None:
            raise ConfigError(f"[{name}] missing required key {key!r}")
        return default
    try:
        return conv(block[key])
    except ValueError:
        raise ConfigError(f"[{name}] {key}: expected a number, got {block[key]!r}") from None


def domain_type(cfg):
    kind = cfg.domain.get("type")
    if kind not in ("annulus", "square_with_holes"):
        raise ConfigError(f"[domain] type must be annulus or square_with_holes, got {kind!r}")
    return kind


def build_mesh(cfg, target_h=None):
    """Generated mesh after ``refine`` uniform refinements."""
    d = cfg.domain
    kind = domain_type(cfg)
    h = target_h if target_h is not None else _number(d, "domain", "target_h")
    if kind == "annulus":
        mesh = generate_annulus(_number(d, "domain", "r_inner", 1.0), _number(d, "domain", "r_outer", 4.0), h)
    else:
        geo = verify.SQUARE_GEOMETRY
        mesh = generate_square_with_holes(
            _number(d, "domain", "c", geo["c"]), _number(d, "domain", "a", geo["a"]), _number(d, "domain", "b", geo["b"]), h
        )
    for _ in range(_number(d, "domain", "refine", 0, int)):
        mesh = refine_uniform(mesh)
    return mesh


def build_levels(cfg):
    """Mesh sequence for studies: uniform refinement, or regeneration at halved size."""
    d = cfg.domain
    levels = _number(d, "domain", "levels", 4, int)
    if levels < 2:
        raise ConfigError("[domain] levels must be at least 2 for a study")
    kind = domain_type(cfg)
    hierarchy = d.get("hierarchy", "regenerate" if kind == "annulus" else "refine")
    if hierarchy == "refine":
        return verify.refinement_levels(build_mesh(cfg), levels)
    if hierarchy == "regenerate":
        h = _number(d, "domain", "target_h")
        return [build_mesh(cfg, h / 2**k) for k in range(levels)]
    raise ConfigError(f"[domain] hierarchy must be refine or regenerate, got {hierarchy!r}")


def _parameters(cfg):
    out = {}
    for key, text in cfg.parameters.items():
        try:
            out[key] = float(text)
        except ValueError:
            raise ConfigError(f"[parameters] {key}: expected a number, got {text!r}") from None
    return out


def _field(text, key, params, vector_with=None):
    try:
        if vector_with is not None:
            return CoefficientField.vector(text, vector_with, **params)
        return CoefficientField.scalar(text, **params)
    except ExprError as exc:
        raise ConfigError(f"[{key}]: {exc}") from None


def _check_bound(field_, label, boundary=False):
    missing = field_.unbound(boundary)
    if missing:
        raise ConfigError(f"{label}: unbound identifier(s) {', '.join(missing)}")


def build_problem(cfg, mesh=None):
    """Returns ``(spec, exact)``; ``exact`` is None unless known."""
    mesh = mesh if mesh is not None else build_mesh(cfg)
    params = _parameters(cfg)
    preset = cfg.data.get("preset")
    explicit = [k for k in DATA_KEYS if k in cfg.data]
    phys = cfg.physics

    if preset is not None:
        if explicit:
            raise ConfigError(f"[data] preset {preset!r} conflicts with explicit field(s) {', '.join(explicit)}")
        if preset not in PRESETS:
            raise ConfigError(f"[data] unknown preset {preset!r}; expected one of {', '.join(PRESETS)}")
        gamma = _number(phys, "physics", "gamma", 2.0)
        if preset == "zero":
            spec = verify.preset_zero(mesh, gamma, _number(phys, "physics", "alpha0", 1.0))
            exact = fem.ExactSolution(
                CoefficientField.constant(1.0), CoefficientField.constant(0.0), CoefficientField.constant(0.0, 0.0),
                CoefficientField.constant(0.0, 0.0), CoefficientField.constant(0.0, 0.0),
            )
            return spec, _user_exact(cfg, params) or exact
        if preset == "annulus_radial":
            case = cfg.data.get("case", "g0")
            if case not in verify.ANNULUS_CASES:
                raise ConfigError(f"[data] case must be one of {', '.join(verify.ANNULUS_CASES)}, got {case!r}")
            spec = verify.preset_annulus_radial(
                case, mesh=mesh, kappa=params.get("kappa"), gamma=gamma, alpha0=_number(phys, "physics", "alpha0", 1.0)
            )
            return spec, _user_exact(cfg, params)
        alpha0 = _number(phys, "physics", "alpha0", 4.0 * math.exp(gamma))
        spec, exact = verify.preset_square_manufactured(
            mesh=mesh, gamma=gamma, alpha0=alpha0, a=params.get("a", verify.SQUARE_GEOMETRY["a"])
        )
        return spec, exact

    for key in ("f_x", "f_y", "g"):
        if key not in cfg.data:
            raise ConfigError(f"[data] needs either a preset or the expression {key!r}")
    f = _field(cfg.data["f_x"], "data f_x/f_y", params, cfg.data["f_y"])
    g = _field(cfg.data["g"], "data g", params)
    divf = _field(cfg.data["divf"], "data divf", params) if "divf" in cfg.data else None
    _check_bound(f, "[data] f")
    _check_bound(g, "[data] g", boundary=True)
    if divf is not None:
        _check_bound(divf, "[data] divf")
    try:
        spec = driver.ProblemSpec(
            _number(phys, "physics", "gamma"), _number(phys, "physics", "alpha0"), f, divf, g, mesh
        )
    except ValueError as exc:
        raise ConfigError(f"[physics] {exc}") from None
    return spec, _user_exact(cfg, params)


def _user_exact(cfg, params):
    if not cfg.exact:
        return None
    ex = cfg.exact
    for key in ("q", "p", "u_x", "u_y"):
        if key not in ex:
            raise ConfigError(f"[exact] missing {key!r}")

    def vec(prefix):
        kx, ky = f"{prefix}_x", f"{prefix}_y"
        if kx in ex and ky in ex:
            return _field(ex[kx], f"exact {prefix}", params, ex[ky])
        return None

    fields = fem.ExactSolution(
        _field(ex["q"], "exact q", params),
        _field(ex["p"], "exact p", params),
        _field(ex["u_x"], "exact u", params, ex["u_y"]),
        vec("grad_q"),
        vec("grad_p"),
    )
    for label, fld in (("q", fields.q), ("p", fields.p), ("u", fields.u)):
        _check_bound(fld, f"[exact] {label}")
    return fields

"""Problem configuration: JSON schema, validation, assembly.

A configuration file is a JSON object with the sections

    fields       {"preset": "heisenberg1" | "heisenberg<j>" | "euclidean", ...}
                 or {"custom": {"n", "m", "tau": [[expr, ...], ...]}}
    domain       {"preset": "koranyi_ball" | "euclidean_ball", "radius", ...}
    hamiltonian  {"kind": "constant"|"source"|"separable"|"gauss"|"transport",
                  ...}
    boundary_g   expression string, {"expression": ...}, or
                 {"samples": [[x1, ..., xn, value], ...], "tol": ...}
    grid         {"h", "anisotropic_t", "frames_K", "arm_scale"}
    solver       {"mode", "tol_update", "tol_res", "max_iters",
                  "subsolution"}
    outputs      {"grid_csv", "report", "oracle"}

Every invariant violation maps to a distinct ConfigError diagnostic.
"""

import json
import re
from dataclasses import dataclass, field

import numpy as np

from . import domains as _domains
from . import fields as _fields
from .constructions import explicit_heisenberg_oracle
from .errors import ConfigError, ExpressionError
from .expressions import compile_expression
from .functions import ClosedFormFunction, constant_function, fit_polynomial
from .grids import build_grid
from .operators import Hamiltonian

__all__ = [
    "GridOptions",
    "SolverOptions",
    "OutputOptions",
    "ProblemSpec",
    "load_problem",
]

ORACLE_PRESETS = ("w_quartic", "koranyi_norm")


@dataclass
class GridOptions:
    h: float = 0.1
    anisotropic_t: bool = False
    frames_k: int = 8
    arm_scale: float = 1.0


@dataclass
class SolverOptions:
    mode: str = "jacobi"
    tol_update: float = 1e-8
    tol_res: float = 1e-6
    max_iters: int = 20000
    threads: int = 1


@dataclass
class OutputOptions:
    grid_csv: str = None
    report: str = None
    oracle: str = None


@dataclass
class ProblemSpec:
    family: object
    domain: object
    hamiltonian: Hamiltonian
    boundary_g: object
    grid_options: GridOptions
    solver_options: SolverOptions
    outputs: OutputOptions
    subsolution: object = None
    raw: dict = field(default_factory=dict)

    def build_grid(self):
        opts = self.grid_options
        return build_grid(self.domain, opts.h, self.family,
                          frames_k=opts.frames_k,
                          anisotropic_t=opts.anisotropic_t,
                          arm_scale=opts.arm_scale)

    def oracle_callable(self):
        if self.outputs.oracle is None:
            return None
        return explicit_heisenberg_oracle(self.outputs.oracle)

    def summary(self):
        lines = [
            f"fields:      {self.family!r}",
            f"domain:      {self.domain!r}",
            f"hamiltonian: {self.hamiltonian!r}",
            f"grid:        h = {self.grid_options.h}, frames_K = "
            f"{self.grid_options.frames_k}, anisotropic_t = "
            f"{self.grid_options.anisotropic_t}",
            f"solver:      {self.solver_options.mode}, tol_update = "
            f"{self.solver_options.tol_update}, tol_res = "
            f"{self.solver_options.tol_res}, max_iters = "
            f"{self.solver_options.max_iters}",
        ]
        if self.outputs.oracle:
            lines.append(f"oracle:      {self.outputs.oracle}")
        return "\n".join(lines)


def _require(cond, message):
    if not cond:
        raise ConfigError(message)


def _parse_fields(cfg):
    _require(isinstance(cfg, dict), "fields: must be an object")
    if "preset" in cfg:
        preset = cfg["preset"]
        if preset == "euclidean":
            n = cfg.get("n", 3)
            _require(isinstance(n, int) and n >= 1,
                     "fields: euclidean preset needs an integer n >= 1")
            return _fields.euclidean(n)
        match = re.fullmatch(r"heisenberg(\d+)", str(preset))
        _require(match is not None,
                 f"fields: unknown preset {preset!r}")
        return _fields.heisenberg(int(match.group(1)))
    _require("custom" in cfg, "fields: need 'preset' or 'custom'")
    custom = cfg["custom"]
    _require(isinstance(custom, dict), "fields: custom must be an object")
    for key in ("n", "m", "tau"):
        _require(key in custom, f"fields: custom needs {key!r}")
    n, m = custom["n"], custom["m"]
    _require(isinstance(n, int) and isinstance(m, int) and 1 <= m <= n,
             "fields: custom needs integers 1 <= m <= n")
    rows = custom["tau"]
    _require(isinstance(rows, list) and len(rows) == n - m,
             f"fields: tau must be a list of {n - m} rows")
    compiled = []
    for i, row in enumerate(rows):
        _require(isinstance(row, list) and len(row) == m,
                 f"fields: tau row {i} must have {m} entries")
        compiled.append([compile_expression(entry, n) for entry in row])

    def tau(x):
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape[:-1] + (n - m, m))
        for i, row in enumerate(compiled):
            for j, fn in enumerate(row):
                out[..., i, j] = fn(x)
        return out

    return _fields.carnot_type_family(n, m, tau, name="custom")


def _parse_domain(cfg, family):
    _require(isinstance(cfg, dict), "domain: must be an object")
    preset = cfg.get("preset")
    _require(preset in ("koranyi_ball", "euclidean_ball"),
             f"domain: unknown preset {preset!r} (expected koranyi_ball or "
             "euclidean_ball)")
    radius = cfg.get("radius", 1.0)
    _require(isinstance(radius, (int, float)) and radius > 0,
             "domain: radius must be a positive number")
    if preset == "koranyi_ball":
        _require(family.n == 3,
                 "domain: koranyi_ball needs a family on R^3")
        return _domains.koranyi_ball(radius)
    center = cfg.get("center")
    if center is not None:
        _require(isinstance(center, list) and len(center) == family.n,
                 f"domain: center must be a list of {family.n} numbers")
    return _domains.euclidean_ball(radius, center=center, n=family.n)


def _parse_hamiltonian(cfg, family):
    _require(isinstance(cfg, dict), "hamiltonian: must be an object")
    kind = cfg.get("kind")
    n, m = family.n, family.m
    if kind == "constant":
        value = cfg.get("value", 0.0)
        _require(isinstance(value, (int, float)) and value >= 0,
                 "hamiltonian: constant value must be >= 0")
        return Hamiltonian.constant(value)
    if kind == "source":
        _require("f" in cfg, "hamiltonian: source needs an 'f' expression")
        f = compile_expression(cfg["f"], n)
        return Hamiltonian.source(f, describe=f"f = {cfg['f']}")
    if kind == "separable":
        _require("k" in cfg and "alpha" in cfg,
                 "hamiltonian: separable needs 'k' and 'alpha'")
        alpha = cfg["alpha"]
        _require(isinstance(alpha, (int, float)) and alpha >= 0,
                 "hamiltonian: alpha must be >= 0")
        k = compile_expression(cfg["k"], n)
        return Hamiltonian.separable(k, alpha,
                                     describe=f"k = {cfg['k']}")
    if kind == "gauss":
        _require("k" in cfg, "hamiltonian: gauss needs a 'k' expression")
        k = compile_expression(cfg["k"], n)
        return Hamiltonian.gauss(k, m, describe=f"k = {cfg['k']}")
    if kind == "transport":
        _require("f" in cfg and "alpha" in cfg,
                 "hamiltonian: transport needs 'f' and 'alpha'")
        f = compile_expression(cfg["f"], n)
        return Hamiltonian.transport_power(f, cfg["alpha"])
    raise ConfigError(f"hamiltonian: unknown kind {kind!r}")


def _parse_boundary(cfg, family):
    n = family.n
    if isinstance(cfg, str):
        fn = compile_expression(cfg, n)
        grad_probe = None
        # expressions stay value-only; constant expressions get exact jets
        try:
            probe = fn(np.zeros((4, n)))
            if np.ptp(probe) == 0 and np.allclose(
                    fn(np.random.default_rng(0).standard_normal((8, n))),
                    probe[0]):
                return constant_function(float(probe[0]), n)
        except ExpressionError:
            pass
        return ClosedFormFunction(fn, name=f"g = {cfg}")
    _require(isinstance(cfg, dict),
             "boundary_g: must be an expression string or an object")
    if "expression" in cfg:
        return _parse_boundary(cfg["expression"], family)
    _require("samples" in cfg,
             "boundary_g: need 'expression' or 'samples'")
    samples = np.asarray(cfg["samples"], dtype=float)
    _require(samples.ndim == 2 and samples.shape[1] == n + 1,
             f"boundary_g: samples must be rows of {n} coordinates plus a "
             "value")
    tol = cfg.get("tol", 1e-3)
    max_degree = int(cfg.get("max_degree", 10))
    best = None
    for degree in range(1, max_degree + 1):
        poly, err = fit_polynomial(samples[:, :n], samples[:, n], degree,
                                   name="g-fit")
        best = (poly, err)
        if err < tol:
            return poly
    raise ConfigError(
        f"boundary_g: polynomial smoothing could not reach tol = {tol:g} "
        f"by degree {max_degree} (best uniform error {best[1]:.3e})")


def _parse_grid(cfg):
    cfg = cfg or {}
    _require(isinstance(cfg, dict), "grid: must be an object")
    h = cfg.get("h", 0.1)
    _require(isinstance(h, (int, float)) and h > 0,
             "grid: h must be a positive number")
    frames_k = cfg.get("frames_K", 8)
    _require(isinstance(frames_k, int) and frames_k >= 1,
             "grid: frames_K must be a positive integer")
    arm_scale = cfg.get("arm_scale", 1.0)
    _require(isinstance(arm_scale, (int, float)) and arm_scale > 0,
             "grid: arm_scale must be positive")
    anisotropic = cfg.get("anisotropic_t", False)
    _require(isinstance(anisotropic, bool),
             "grid: anisotropic_t must be a boolean")
    return GridOptions(h=float(h), anisotropic_t=anisotropic,
                       frames_k=frames_k, arm_scale=float(arm_scale))


def _parse_solver(cfg):
    cfg = cfg or {}
    _require(isinstance(cfg, dict), "solver: must be an object")
    mode = cfg.get("mode", "jacobi")
    _require(mode in ("jacobi", "gauss_seidel"),
             f"solver: unknown mode {mode!r}")
    tol_update = cfg.get("tol_update", 1e-8)
    _require(isinstance(tol_update, (int, float)) and tol_update > 0,
             "solver: tol_update must be positive")
    tol_res = cfg.get("tol_res", 1e-6)
    _require(isinstance(tol_res, (int, float)) and tol_res > 0,
             "solver: tol_res must be positive")
    max_iters = cfg.get("max_iters", 20000)
    _require(isinstance(max_iters, int) and max_iters >= 1,
             "solver: max_iters must be a positive integer")
    return SolverOptions(mode=mode, tol_update=float(tol_update),
                         tol_res=float(tol_res), max_iters=max_iters)


def _parse_outputs(cfg):
    cfg = cfg or {}
    _require(isinstance(cfg, dict), "outputs: must be an object")
    oracle = cfg.get("oracle")
    if oracle is not None:
        _require(oracle in ORACLE_PRESETS,
                 f"outputs: unknown oracle preset {oracle!r} (expected one "
                 f"of {ORACLE_PRESETS})")
    return OutputOptions(grid_csv=cfg.get("grid_csv"),
                         report=cfg.get("report"), oracle=oracle)


def load_problem(source, h_override=None, threads=None):
    """Load and validate a problem configuration.

    ``source`` is a path to a JSON file or an already-parsed dict.  Raises
    ConfigError with a specific diagnostic for every schema violation.
    """
    if isinstance(source, dict):
        raw = source
    else:
        try:
            with open(source) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"config is not valid JSON (line {exc.lineno}, column "
                f"{exc.colno}): {exc.msg}") from exc
    _require(isinstance(raw, dict), "config: top level must be an object")
    for section in ("fields", "domain", "hamiltonian", "boundary_g"):
        _require(section in raw, f"config: missing section {section!r}")

    family = _parse_fields(raw["fields"])
    domain = _parse_domain(raw["domain"], family)
    hamiltonian = _parse_hamiltonian(raw["hamiltonian"], family)
    boundary_g = _parse_boundary(raw["boundary_g"], family)
    grid_options = _parse_grid(raw.get("grid"))
    solver_options = _parse_solver(raw.get("solver"))
    outputs = _parse_outputs(raw.get("outputs"))
    if outputs.oracle is not None:
        _require(family.name == "heisenberg1",
                 "outputs: oracle presets need the heisenberg1 family")

    subsolution = None
    sub_cfg = (raw.get("solver") or {}).get("subsolution")
    if sub_cfg is not None and sub_cfg != "auto":
        _require(isinstance(sub_cfg, str),
                 "solver: subsolution must be 'auto' or an expression")
        subsolution = compile_expression(sub_cfg, family.n)

    if h_override is not None:
        _require(h_override > 0, "grid: h override must be positive")
        grid_options.h = float(h_override)
    if threads is not None:
        _require(isinstance(threads, int) and threads >= 1,
                 "solver: threads must be a positive integer")
        solver_options.threads = threads

    return ProblemSpec(family=family, domain=domain, hamiltonian=hamiltonian,
                       boundary_g=boundary_g, grid_options=grid_options,
                       solver_options=solver_options, outputs=outputs,
                       subsolution=subsolution, raw=raw)

"""
Run configurations.

A config file is flat ``key = value`` text, one key per line, ``#`` comments
allowed.  Values are parsed as JSON (numbers, lists, ``null``, quoted
strings) with a fallback to the bare string, so ``geometry = disk`` and
``deltas = [1e-3, 1e-2]`` both work.  A JSON summary written by the CLI is
also accepted: its ``"config"`` entry is read back verbatim.
"""

from __future__ import annotations

import configparser
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .experiments import CauchyProblem
from .geometry import BoundaryGeometry, ExactSolution
from .regularization import AlphaGrid

__all__ = ["RunConfig", "load_config", "parse_config", "bundled_configs", "resolve_config_path"]

GEOMETRIES = ("disk", "cassini", "annulus")
SOLUTIONS = ("exp_trig", "dipole", "inverse_radial")
MODES = ("NR", "M")
RESIDUALS = ("compatible", "full")


@dataclass
class RunConfig:
    """Every knob of one experiment; see the bundled ``*.cfg`` files for examples.

    ``R`` is the outer source radius, ``R_in`` the inner one (annulus only).
    ``alpha`` set to a number overrides the L-curve corner.  ``deltas`` and
    ``seeds`` drive ``sweep-noise``; ``N_values``/``R_values`` or ``M_values``
    drive ``scan-params`` according to ``mode``.
    """

    geometry: str
    solution: str = "exp_trig"
    cassini_a: float = 1.0
    cassini_b: float = 1.01
    r_inner: float = 0.5
    r_outer: float = 1.0
    dipole_offset: float = 0.2
    M: int = 600
    N: int = 28
    R: float = 3.2
    R_in: float | None = None
    outer_sources: int | None = None
    delta: float = 0.05
    seed: int = 0
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    deltas: list = field(default_factory=list)
    alpha_min: float = 1e-10
    alpha_max: float = 1.0
    alpha_points: int = 200
    eval_points: int = 2000
    alpha: float | None = None
    extra_alphas: list = field(default_factory=list)
    N_values: list = field(default_factory=list)
    R_values: list = field(default_factory=list)
    M_values: list = field(default_factory=list)
    mode: str = "NR"
    residual: str = "compatible"

    # ---------------------------------------------------------------- parsing

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "geometry" not in data:
            raise ConfigError("missing required key 'geometry'")
        try:
            cfg = cls(**{k: _coerce(known[k].name, v) for k, v in data.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        return cfg

    def override(self, **changes) -> "RunConfig":
        """Copy with the non-``None`` entries of ``changes`` applied, re-validated."""
        changes = {k: v for k, v in changes.items() if v is not None}
        try:
            cfg = replace(self, **{k: _coerce(k, v) for k, v in changes.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    # ------------------------------------------------------------- validation

    def validate(self):
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.geometry in GEOMETRIES, f"geometry must be one of {GEOMETRIES}, got {self.geometry!r}")
        need(self.solution in SOLUTIONS, f"solution must be one of {SOLUTIONS}, got {self.solution!r}")
        need(self.mode in MODES, f"mode must be one of {MODES}, got {self.mode!r}")
        need(self.residual in RESIDUALS, f"residual must be one of {RESIDUALS}, got {self.residual!r}")
        need(self.M >= 1 and self.N >= 1, "M and N must be positive")
        need(self.eval_points >= 1, "eval_points must be positive")
        need(self.delta >= 0, "delta must be >= 0")
        need(all(0 <= s < 2 ** 64 for s in [self.seed, *self.seeds]), "seeds must be unsigned 64-bit integers")
        need(0 < self.alpha_min < self.alpha_max, "need 0 < alpha_min < alpha_max")
        need(self.alpha_points >= 10, "alpha_points must be >= 10")
        need(self.alpha is None or self.alpha >= 0, "alpha override must be >= 0")
        need(all(a >= 0 for a in self.extra_alphas), "extra_alphas must be >= 0")
        need(all(math.isfinite(x) for x in [self.R, self.delta, self.alpha_min, self.alpha_max]),
             "numeric fields must be finite")
        if self.geometry == "annulus":
            need(self.R_in is not None, "annulus geometry needs R_in")
        # geometry and solution constructors carry their own checks
        try:
            self.boundary()
            self.exact()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    # ----------------------------------------------------------- conversions

    def boundary(self) -> BoundaryGeometry:
        if self.geometry == "disk":
            return BoundaryGeometry.unit_disk()
        if self.geometry == "cassini":
            return BoundaryGeometry.cassini(self.cassini_a, self.cassini_b)
        return BoundaryGeometry.annulus(self.r_inner, self.r_outer)

    def exact(self) -> ExactSolution:
        if self.solution == "exp_trig":
            return ExactSolution.exp_trig()
        if self.solution == "dipole":
            return ExactSolution.dipole(self.dipole_offset)
        return ExactSolution.inverse_radial()

    def radii(self, R=None) -> tuple:
        R = self.R if R is None else R
        if self.geometry == "annulus":
            if isinstance(R, (list, tuple)):
                return tuple(float(r) for r in R)
            return float(R), float(self.R_in)
        return (float(R),)

    def problem(self, M=None, N=None, R=None) -> CauchyProblem:
        return CauchyProblem(
            self.boundary(),
            self.exact(),
            int(self.M if M is None else M),
            int(self.N if N is None else N),
            self.radii(R),
            outer_sources=self.outer_sources,
            eval_points=self.eval_points,
        )

    def grid(self) -> AlphaGrid:
        return AlphaGrid(self.alpha_min, self.alpha_max, self.alpha_points)


_INT_KEYS = {"M", "N", "seed", "alpha_points", "eval_points"}
_OPT_INT_KEYS = {"outer_sources"}
_FLOAT_KEYS = {"cassini_a", "cassini_b", "r_inner", "r_outer", "dipole_offset", "R", "delta", "alpha_min",
               "alpha_max"}
_OPT_FLOAT_KEYS = {"R_in", "alpha"}
_STR_KEYS = {"geometry", "solution", "mode", "residual"}


def _as_int(key, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) or v != int(v):
        raise ConfigError(f"{key} must be an integer, got {v!r}")
    return int(v)


def _as_float(key, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key} must be a number, got {v!r}")
    return float(v)


def _as_list(key, v):
    if not isinstance(v, (list, tuple)):
        v = [v]
    return list(v)


def _coerce(key, v):
    if key in _STR_KEYS:
        if not isinstance(v, str):
            raise ConfigError(f"{key} must be a string, got {v!r}")
        return v
    if key in _INT_KEYS:
        return _as_int(key, v)
    if key in _OPT_INT_KEYS:
        return None if v is None else _as_int(key, v)
    if key in _FLOAT_KEYS:
        return _as_float(key, v)
    if key in _OPT_FLOAT_KEYS:
        return None if v is None else _as_float(key, v)
    if key in ("seeds", "N_values", "M_values"):
        return [_as_int(key, x) for x in _as_list(key, v)]
    if key in ("deltas", "extra_alphas"):
        return [_as_float(key, x) for x in _as_list(key, v)]
    if key == "R_values":
        out = []
        for x in _as_list(key, v):
            out.append([_as_float(key, y) for y in x] if isinstance(x, (list, tuple)) else _as_float(key, x))
        return out
    return v


def _value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def parse_config(text: str) -> RunConfig:
    """Parse config text (``key = value`` lines or a JSON summary)."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from None
        if isinstance(data, dict) and isinstance(data.get("config"), dict):
            data = data["config"]
        if not isinstance(data, dict):
            raise ConfigError("JSON config must be an object")
        return RunConfig.from_mapping(data)
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",), strict=True)
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    data = {k: _value(v) for k, v in parser["run"].items()}
    return RunConfig.from_mapping(data)


def bundled_configs() -> list:
    """Names of the configs shipped with the package."""
    root = resources.files("mfs_cauchy") / "configs"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".cfg"))


def resolve_config_path(name_or_path):
    """A filesystem path if it exists, else a bundled config (``.cfg`` optional)."""
    p = Path(name_or_path)
    if p.is_file():
        return p
    name = p.name if p.name.endswith(".cfg") else p.name + ".cfg"
    res = resources.files("mfs_cauchy") / "configs" / name
    if res.is_file():
        return res
    raise ConfigError(f"config not found: {name_or_path}")


def load_config(name_or_path) -> RunConfig:
    path = resolve_config_path(name_or_path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {name_or_path}: {exc}") from None
    return parse_config(text)

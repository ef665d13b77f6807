"""Flat ``key = value`` experiment configuration.

Lines are ``key = value``; ``#`` starts a comment. Lists are comma
separated. ``param.<name>`` keys are passed to the problem factory as
overrides. Any other key not listed in :class:`ExperimentConfig` is an error.
"""

from __future__ import annotations

import dataclasses
import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import get_type_hints

from ..clstep import SCHEMES, Grid1D, GridFunction
from ..problem import Problem, get_problem
from ..sdestep import SDE_SCHEMES
from ..weights import WeightSpec

log = logging.getLogger(__name__)

__all__ = ["ExperimentConfig", "ConfigError", "parse_config", "load_config", "config_hash"]

# keys that do not change any computed number
_NON_SEMANTIC = frozenset({"workers", "out"})


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    problem: str = "burgers-cos"
    params: dict = field(default_factory=dict)
    initial: str = ""
    left: float = -2.0
    right: float = 3.0
    ncells0: int = 5
    T: float = 0.5
    ladder: tuple = (3, 4, 5, 6, 7)
    ref_level: int = 10
    path_level: int = 10
    n_paths: int = 400
    seed: int = 20240607
    rho: float = 1.0
    cl_scheme: str = "godunov"
    sde_scheme: str = "milstein"
    out: str = "out"
    workers: int = 1
    chunk: int = 25
    midtimes: tuple = ()
    # acceptance thresholds for `converge`
    min_order: float = 0.30
    max_halfwidth: float = 0.08
    # diagnose suite
    diag_level: int = 5
    diag_fracbv: bool = True
    diag_modulus: bool = True
    diag_lp: bool = True
    diag_entropy: bool = True
    fracbv_r: tuple = (4, 8, 16)
    modulus_seps: int = 6
    modulus_min: float = 0.40
    modulus_max: float = 0.60
    lp_p: tuple = (2.0, 4.0)
    lp_R: float = 1.9
    entropy_c: tuple = (0.0, 0.5, 1.0)
    entropy_delta: float = 0.05
    entropy_a: float = 0.05
    entropy_center: float = 0.5
    entropy_width: float = 1.0

    def __post_init__(self):
        self.validate()

    # {{{ validation

    def validate(self) -> None:
        if self.n_paths < 30:
            raise ConfigError("n_paths must be at least 30")
        if self.T <= 0:
            raise ConfigError("T must be positive")
        if self.ncells0 < 1:
            raise ConfigError("ncells0 must be positive")
        if not self.right > self.left:
            raise ConfigError("right must exceed left")
        if list(self.ladder) != sorted(set(self.ladder)):
            raise ConfigError("ladder must be strictly increasing")
        if self.ladder and self.ref_level < max(self.ladder) + 3:
            raise ConfigError("reference dt must be at most min(ladder dt)/8 (ref_level >= max(ladder) + 3)")
        if self.path_level < max([self.ref_level, self.diag_level, *self.ladder]):
            raise ConfigError("path_level must resolve every time step in use")
        if self.cl_scheme not in SCHEMES:
            raise ConfigError(f"cl_scheme must be one of {SCHEMES}")
        if self.sde_scheme not in SDE_SCHEMES:
            raise ConfigError(f"sde_scheme must be one of {SDE_SCHEMES}")
        if self.chunk < 1 or self.workers < 1:
            raise ConfigError("chunk and workers must be positive")
        for t in self.midtimes:
            if not 0 < t < self.T:
                raise ConfigError("midtimes must lie in (0, T)")
        try:
            self.build_problem()
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
        except TypeError as exc:
            raise ConfigError(f"bad problem parameter: {exc}") from None

    # }}}

    def build_problem(self) -> Problem:
        params = dict(self.params)
        if self.initial:
            params["initial"] = self.initial
        return get_problem(self.problem, **params)

    @property
    def weight(self) -> WeightSpec:
        return WeightSpec(self.rho)

    def dt(self, k: int) -> float:
        return self.T / 2 ** k

    def grid(self, k: int) -> Grid1D:
        return Grid1D(self.left, self.right, self.ncells0 * 2 ** k)

    def initial_state(self, k: int) -> GridFunction:
        return GridFunction.from_initial(self.grid(k), self.build_problem().initial)

    def to_text(self, semantic_only: bool = False) -> str:
        lines = []
        for f in dataclasses.fields(self):
            if semantic_only and f.name in _NON_SEMANTIC:
                continue
            val = getattr(self, f.name)
            if f.name == "params":
                lines += [f"param.{k} = {v}" for k, v in sorted(val.items())]
                continue
            if isinstance(val, (tuple, list)):
                val = ",".join(repr(v) for v in val)
            lines.append(f"{f.name} = {val}")
        return "\n".join(lines) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    """Hash of every setting that affects the numbers (not ``workers`` or ``out``)."""
    return hashlib.sha256(cfg.to_text(semantic_only=True).encode()).hexdigest()[:16]


def _convert(name: str, typ, raw: str):
    raw = raw.strip()
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        if typ is tuple:
            default = getattr(ExperimentConfig, name, ()) if hasattr(ExperimentConfig, name) else ()
            items = [s.strip() for s in raw.split(",") if s.strip()]
            kind = type(default[0]) if default else float
            return tuple(kind(s) for s in items)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def _param_value(raw: str):
    raw = raw.strip()
    try:
        return float(raw)
    except ValueError:
        return raw


def parse_config(text: str, **overrides) -> ExperimentConfig:
    hints = get_type_hints(ExperimentConfig)
    fields = {f.name for f in dataclasses.fields(ExperimentConfig)} - {"params"}
    values: dict = {}
    params: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key.startswith("param."):
            params[key[6:]] = _param_value(raw)
        elif key in fields:
            values[key] = _convert(key, hints[key], raw)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    for key, val in overrides.items():
        if val is not None:
            values[key] = val
    return ExperimentConfig(params=params, **values)


def load_config(path, **overrides) -> ExperimentConfig:
    return parse_config(Path(path).read_text(), **overrides)

"""Run configuration: flat ``key = value`` files merged with command-line flags."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .dynamics import IntegratorConfig
from .entanglement import EntanglementConfig
from .model import ModelParams
from .paths import PathSpec, get_path, grid


class UsageError(ValueError):
    """Invalid configuration or command-line input (exit code 2)."""


def _opt_float(s):
    s = str(s).strip()
    return None if s.lower() in ("", "none", "auto") else float(s)


def _opt_str(s):
    s = str(s).strip()
    return None if s.lower() in ("", "none") else s


def _bool(s):
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {s!r}")


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI command needs; every field is echoed into the output header."""

    # model, kappa units
    J: float = 10.0
    omega_m: float = 20.0
    g: float = 0.02
    gamma_m: float = 0.01
    Delta: float | None = None  # default: J
    Lambda: float | None = None  # default: 3
    nbar: float = 0.0
    # cuts and grids
    path: str = "1"
    sweep: str | None = None  # custom cut: "Lambda" or "Delta"
    grid: str | None = None  # MIN:MAX:STEP of the swept parameter
    delta_grid: str = "8:12:0.05"
    nbar_list: str = "0,1,10,50"
    offset: float = 0.01
    delta_cuts: str = "9.25,9.5,9.75,10,10.25,10.5"
    lambda_cuts: str = "7"
    crosscheck_fraction: float = 0.01
    # integration
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_step: float = 0.05
    t_transient: float | None = None
    t_observe: float | None = None
    init_scale: float = 1.0
    # entanglement
    convention: str = "quadrature"
    method: str = "auto"
    t_max: float | None = None
    n_periods: int = 10
    series: bool = False
    # run
    seed: int = 0
    threads: int = 0
    out: str = "."
    tag: str | None = None
    log_level: str = "WARNING"

    @classmethod
    def keys(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_mapping(cls, mapping: dict) -> "RunConfig":
        """Build from string values; unknown keys are a usage error."""
        known = {k.lower(): k for k in cls.keys()}
        kwargs = {}
        for raw_key, raw in mapping.items():
            key = known.get(raw_key.strip().replace("-", "_").lower())
            if key is None:
                raise UsageError(f"unknown configuration key {raw_key!r}")
            kwargs[key] = _convert(key, raw)
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise UsageError(str(exc)) from exc

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def items(self) -> list[tuple[str, str]]:
        return [(k, _render(getattr(self, k))) for k in self.keys()]

    # derived objects -------------------------------------------------------

    def model(self) -> ModelParams:
        try:
            return ModelParams(
                J=self.J,
                omega_m=self.omega_m,
                g=self.g,
                gamma_m=self.gamma_m,
                Delta=self.J if self.Delta is None else self.Delta,
                Lambda=3.0 if self.Lambda is None else self.Lambda,
                nbar=self.nbar,
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from exc

    def integrator(self) -> IntegratorConfig:
        try:
            return IntegratorConfig(
                rel_tol=self.rel_tol,
                abs_tol=self.abs_tol,
                max_step=self.max_step,
                t_transient=self.t_transient,
                t_observe=self.t_observe,
                init_scale=self.init_scale,
                seed=self.seed,
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from exc

    def entanglement(self) -> EntanglementConfig:
        try:
            return EntanglementConfig(
                n_periods=self.n_periods,
                t_max=self.t_max,
                method=self.method,
                convention=self.convention,
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from exc

    def cut(self) -> PathSpec:
        """The reference path, or a custom cut when ``sweep`` is set."""
        if self.sweep is None:
            try:
                path = get_path(self.path)
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
        else:
            if self.sweep not in ("Lambda", "Delta"):
                raise UsageError("sweep must be 'Lambda' or 'Delta'")
            other = "Delta" if self.sweep == "Lambda" else "Lambda"
            value = getattr(self, other)
            if value is None:
                raise UsageError(f"a custom {self.sweep} cut needs a fixed {other}")
            if self.grid is None:
                raise UsageError("a custom cut needs --grid MIN:MAX:STEP")
            path = PathSpec("custom", self.sweep, {other: float(value)})
        if self.grid is not None:
            path = path.with_values(parse_grid(self.grid))
        return path

    def nbars(self) -> list[float]:
        return parse_list(self.nbar_list, "nbar list", nonneg=True)

    def output_tag(self, default: str) -> str:
        return self.tag if self.tag else default


_CONVERTERS = {}
for _f in fields(RunConfig):
    t = str(_f.type)
    if t == "float":
        _CONVERTERS[_f.name] = float
    elif t == "float | None":
        _CONVERTERS[_f.name] = _opt_float
    elif t == "int":
        _CONVERTERS[_f.name] = int
    elif t == "bool":
        _CONVERTERS[_f.name] = _bool
    elif t == "str | None":
        _CONVERTERS[_f.name] = _opt_str
    else:
        _CONVERTERS[_f.name] = lambda s: str(s).strip()  # noqa: E731


def _convert(key, raw):
    try:
        return _CONVERTERS[key](raw)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad value for {key}: {raw!r}") from exc


def _render(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def parse_grid(spec: str) -> np.ndarray:
    """``"MIN:MAX:STEP"`` -> inclusive grid; a single number is a one-point grid."""
    parts = str(spec).split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError as exc:
        raise UsageError(f"bad grid {spec!r}; expected MIN:MAX:STEP") from exc
    if len(nums) == 1:
        return np.array(nums)
    if len(nums) != 3:
        raise UsageError(f"bad grid {spec!r}; expected MIN:MAX:STEP")
    try:
        return grid(*nums)
    except ValueError as exc:
        raise UsageError(f"bad grid {spec!r}: {exc}") from exc


def parse_list(spec: str, what: str, *, nonneg: bool = False) -> list[float]:
    items = [s for s in str(spec).replace(";", ",").split(",") if s.strip()]
    if not items:
        raise UsageError(f"{what} is empty")
    try:
        values = [float(s) for s in items]
    except ValueError as exc:
        raise UsageError(f"bad {what}: {spec!r}") from exc
    if any(not math.isfinite(v) for v in values):
        raise UsageError(f"{what} must be finite")
    if nonneg and any(v < 0 for v in values):
        raise UsageError(f"{what} must be non-negative")
    return values


def read_config_file(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out

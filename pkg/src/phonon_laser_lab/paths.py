"""One-dimensional cuts through the (Lambda, Delta) plane."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams

SWEEPABLE = ("Lambda", "Delta")


@dataclass(frozen=True)
class PathSpec:
    """A straight cut: ``swept`` varies over ``values``, ``fixed`` is held constant.

    ``fixed`` may reference the tunnelling rate symbolically with the string
    ``"J"`` (resonant driving of the upper supermode).
    """

    name: str
    swept: str
    fixed: dict = field(default_factory=dict)
    values: tuple = ()

    def __post_init__(self):
        if self.swept not in SWEEPABLE:
            raise ValueError(f"swept parameter must be one of {SWEEPABLE}")

    def with_values(self, values) -> "PathSpec":
        return PathSpec(self.name, self.swept, dict(self.fixed), tuple(float(v) for v in values))

    def base_params(self, template: ModelParams) -> ModelParams:
        fixed = {k: (template.J if v == "J" else float(v)) for k, v in self.fixed.items()}
        return template.replace(**fixed)

    def params_at(self, template: ModelParams, value: float) -> ModelParams:
        return self.base_params(template).replace(**{self.swept: float(value)})

    def points(self, template: ModelParams):
        return [self.params_at(template, v) for v in self.values]


def grid(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive, monotone grid ``start, start+step, ..., <= stop``."""
    if step <= 0:
        raise ValueError("grid step must be positive")
    if stop < start:
        raise ValueError("grid stop must not be below start")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    # round away the accumulated representation error of start + k*step
    return np.round(start + step * np.arange(n), 12)


PATH1 = PathSpec("path1", "Lambda", {"Delta": "J"}, tuple(grid(0.0, 12.0, 0.05)))
PATH2 = PathSpec("path2", "Delta", {"Lambda": 7.0}, tuple(grid(8.0, 12.0, 0.02)))
PATH3 = PathSpec("path3", "Lambda", {"Delta": 9.5}, tuple(grid(0.0, 12.0, 0.05)))
PATHS = {"1": PATH1, "2": PATH2, "3": PATH3}


def get_path(path_id) -> PathSpec:
    key = str(path_id).removeprefix("path")
    try:
        return PATHS[key]
    except KeyError:
        raise ValueError(f"unknown path {path_id!r}; expected 1, 2 or 3") from None

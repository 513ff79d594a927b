"""Discretized input space: parameter grids, normalization, LHS, candidate enumeration.

All machine settings live on a regular grid (min, max, step per parameter).
Surrogates and acquisition work in normalized [0, 1]^d coordinates; everything
user-facing stays in parameter units.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

REL_TOL = 1e-9


class SpaceError(ValueError):
    """Invalid parameter specification or out-of-range value."""


@dataclass(frozen=True)
class ParameterSpec:
    """One gridded parameter: values min, min+step, ..., max."""

    name: str
    min: float
    max: float
    step: float
    unit: str = ""

    def __post_init__(self):
        if not self.name:
            raise SpaceError("parameter name must be non-empty")
        if not (self.max > self.min):
            raise SpaceError(f"{self.name}: max ({self.max}) must exceed min ({self.min})")
        if not (self.step > 0):
            raise SpaceError(f"{self.name}: step must be positive, got {self.step}")
        span = self.max - self.min
        ratio = span / self.step
        if abs(ratio - round(ratio)) > REL_TOL * max(1.0, abs(ratio)):
            raise SpaceError(
                f"{self.name}: range {span} is not an integer multiple of step {self.step}"
            )
        if self.step_count < 2:
            raise SpaceError(f"{self.name}: grid needs at least 2 values")

    @property
    def step_count(self) -> int:
        return int(round((self.max - self.min) / self.step)) + 1

    def grid_values(self) -> np.ndarray:
        return self.min + self.step * np.arange(self.step_count)

    def contains(self, value: float) -> bool:
        eps = REL_TOL * max(1.0, abs(self.max - self.min))
        return self.min - eps <= value <= self.max + eps

    def snap(self, value: float) -> float:
        """Nearest grid value; ties round away from the lower bound."""
        idx = (value - self.min) / self.step
        idx = min(max(int(math.floor(idx + 0.5)), 0), self.step_count - 1)
        return self.min + idx * self.step

    def to_dict(self) -> dict:
        return {"name": self.name, "min": self.min, "max": self.max,
                "step": self.step, "unit": self.unit}

    @classmethod
    def from_dict(cls, d: dict) -> "ParameterSpec":
        return cls(name=d["name"], min=float(d["min"]), max=float(d["max"]),
                   step=float(d["step"]), unit=d.get("unit", ""))


@dataclass(frozen=True)
class ParameterSpace:
    """Ordered collection of parameter grids (the machine's control panel)."""

    params: tuple[ParameterSpec, ...]

    def __post_init__(self):
        if len(self.params) == 0:
            raise SpaceError("space needs at least one parameter")
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise SpaceError("duplicate parameter names")

    @property
    def ndim(self) -> int:
        return len(self.params)

    @property
    def mins(self) -> np.ndarray:
        return np.array([p.min for p in self.params])

    @property
    def maxs(self) -> np.ndarray:
        return np.array([p.max for p in self.params])

    def names(self) -> list[str]:
        return [p.name for p in self.params]

    def to_list(self) -> list[dict]:
        return [p.to_dict() for p in self.params]

    @classmethod
    def from_list(cls, items: Sequence[dict]) -> "ParameterSpace":
        return cls(params=tuple(ParameterSpec.from_dict(d) for d in items))


def default_space() -> ParameterSpace:
    """The five flash-lamp control parameters and their stock grids."""
    return ParameterSpace(params=(
        ParameterSpec("radiant_energy", 1.0, 7.0, 0.2, "J/cm^2"),
        ParameterSpec("pulse_count", 1, 20, 1, "count"),
        ParameterSpec("pulse_length", 1, 20, 1, "ms"),
        ParameterSpec("micropulse_count", 1, 30, 1, "count"),
        ParameterSpec("duty_cycle", 20, 70, 5, "%"),
    ))


# Finer settings used for acquisition candidate pools: the machine accepts
# intermediate values between the coarse sampling grid.
DEFAULT_REFINEMENT = (0.1, 1.0, 1.0, 1.0, 1.0)


def grid_size(space: ParameterSpace, refinement: Sequence[float] | None = None) -> int:
    """Number of grid points, optionally under per-parameter step overrides."""
    specs = _refined_specs(space, refinement)
    n = 1
    for s in specs:
        n *= s.step_count
    return n


def condition_key(values: Sequence[float], decimals: int = 9) -> tuple:
    """Hashable identity for a condition, stable under float noise."""
    return tuple(round(float(v), decimals) for v in values)


def validate_condition(space: ParameterSpace, values: Sequence[float]) -> np.ndarray:
    vals = np.asarray(values, dtype=float)
    if vals.shape != (space.ndim,):
        raise SpaceError(f"condition needs {space.ndim} values, got {vals.shape}")
    for p, v in zip(space.params, vals):
        if not p.contains(v):
            raise SpaceError(f"{p.name}: value {v} outside [{p.min}, {p.max}]")
    return vals


def normalize(space: ParameterSpace, values) -> np.ndarray:
    """Map condition(s) to [0, 1]^d. Accepts a single condition or an (n, d) array."""
    vals = np.asarray(values, dtype=float)
    single = vals.ndim == 1
    vals = np.atleast_2d(vals)
    mins, maxs = space.mins, space.maxs
    if np.any(vals < mins - REL_TOL) or np.any(vals > maxs + REL_TOL):
        bad = vals[np.any((vals < mins - REL_TOL) | (vals > maxs + REL_TOL), axis=1)][0]
        raise SpaceError(f"condition {bad.tolist()} outside space bounds")
    unit = (vals - mins) / (maxs - mins)
    return unit[0] if single else unit


def normalize_axis(space: ParameterSpace, index: int, values) -> np.ndarray:
    """Normalize values of a single parameter to [0, 1]."""
    p = space.params[index]
    return (np.asarray(values, dtype=float) - p.min) / (p.max - p.min)


def denormalize(space: ParameterSpace, unit) -> np.ndarray:
    u = np.asarray(unit, dtype=float)
    single = u.ndim == 1
    u = np.atleast_2d(u)
    if np.any(u < -REL_TOL) or np.any(u > 1 + REL_TOL):
        raise SpaceError("unit coordinates outside [0, 1]")
    vals = space.mins + u * (space.maxs - space.mins)
    return vals[0] if single else vals


def _lhs_unit(n: int, ndim: int, rng: np.random.Generator) -> np.ndarray:
    """Latin hypercube in the unit cube: one sample per stratum per dimension."""
    out = np.empty((n, ndim))
    for j in range(ndim):
        perm = rng.permutation(n)
        out[:, j] = (perm + rng.random(n)) / n
    return out


def snap_to_grid(space: ParameterSpace, unit_points: np.ndarray) -> np.ndarray:
    """Snap normalized points to the nearest grid condition (parameter units)."""
    vals = denormalize(space, np.atleast_2d(unit_points))
    snapped = np.empty_like(vals)
    for j, p in enumerate(space.params):
        snapped[:, j] = [p.snap(v) for v in vals[:, j]]
    return snapped


def lhs_sample(space: ParameterSpace, n: int, seed: int) -> np.ndarray:
    """n space-filling on-grid conditions, deterministic per seed.

    Stratification holds in unit coordinates before snapping; snapping can
    collide full tuples, in which case the offending rows are redrawn within
    their own strata until distinct (bounded retries).
    """
    if n < 1:
        raise SpaceError("n must be >= 1")
    rng = np.random.default_rng(seed)
    unit = _lhs_unit(n, space.ndim, rng)
    conditions = snap_to_grid(space, unit)
    strata = np.floor(unit * n)  # stratum index per row/dim, preserved across redraws
    for _ in range(1000):
        keys = [condition_key(row) for row in conditions]
        seen: dict[tuple, int] = {}
        dup_rows = []
        for i, k in enumerate(keys):
            if k in seen:
                dup_rows.append(i)
            else:
                seen[k] = i
        if not dup_rows:
            return conditions
        for i in dup_rows:
            u = (strata[i] + rng.random(space.ndim)) / n
            conditions[i] = snap_to_grid(space, u[None, :])[0]
    raise SpaceError(
        f"could not draw {n} distinct conditions; grid may be too small"
    )


def _refined_specs(space: ParameterSpace,
                   refinement: Sequence[float] | None) -> list[ParameterSpec]:
    if refinement is None:
        return list(space.params)
    if len(refinement) != space.ndim:
        raise SpaceError("refinement needs one step per parameter")
    specs = []
    for p, step in zip(space.params, refinement):
        specs.append(ParameterSpec(p.name, p.min, p.max, float(step), p.unit))
    return specs


def enumerate_candidates(space: ParameterSpace,
                         refinement: Sequence[float] | None = None,
                         exclude: Iterable[Sequence[float]] = (),
                         chunk_size: int = 4096) -> Iterator[np.ndarray]:
    """Yield chunks of refined-grid conditions not in `exclude`, in a stable
    lexicographic order (first parameter slowest)."""
    specs = _refined_specs(space, refinement)
    excluded = {condition_key(c) for c in exclude}
    axes = [s.grid_values() for s in specs]
    counts = np.array([len(a) for a in axes], dtype=np.int64)
    total = int(np.prod(counts))
    # radix decode of flat indices, vectorized per chunk
    divisors = np.ones(len(axes), dtype=np.int64)
    for j in range(len(axes) - 2, -1, -1):
        divisors[j] = divisors[j + 1] * counts[j + 1]
    for start in range(0, total, chunk_size):
        flat = np.arange(start, min(start + chunk_size, total), dtype=np.int64)
        rows = np.empty((len(flat), len(axes)))
        for j in range(len(axes)):
            rows[:, j] = axes[j][(flat // divisors[j]) % counts[j]]
        if excluded:
            keep = np.array([condition_key(r) not in excluded for r in rows])
            rows = rows[keep]
        if len(rows):
            yield rows


def sample_candidates(space: ParameterSpace, n: int, seed: int,
                      refinement: Sequence[float] | None = None,
                      exclude: Iterable[Sequence[float]] = ()) -> np.ndarray:
    """Deterministic subsample of the refined grid, for acquisition pools too
    large to score exhaustively. Draws distinct points, none in `exclude`."""
    specs = _refined_specs(space, refinement)
    excluded = {condition_key(c) for c in exclude}
    total = grid_size(space, refinement)
    rng = np.random.default_rng(seed)
    counts = [s.step_count for s in specs]
    picked: dict[tuple, np.ndarray] = {}
    attempts = 0
    target = min(n, total - len(excluded))
    while len(picked) < target and attempts < 200 * max(n, 1):
        attempts += 1
        row = np.array([s.min + s.step * rng.integers(0, c)
                        for s, c in zip(specs, counts)])
        k = condition_key(row)
        if k in excluded or k in picked:
            continue
        picked[k] = row
    if not picked:
        raise SpaceError("candidate pool exhausted: every grid point excluded")
    return np.array(list(picked.values()))

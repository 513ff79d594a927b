"""Batch selection: UCB, exact bi-objective expected hypervolume improvement
with greedy believer batching, and Pareto-UCB subset picking.

Both pickers consume a materialized candidate pool (normalized coordinates)
and an optional per-candidate feasibility probability that multiplies the
acquisition value elementwise. Selection is deterministic: ties resolve to the
lowest candidate index.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.stats import norm

from . import pareto
from .gpr import SurrogateModel


class Strategy(str, Enum):
    LHS = "lhs"
    EHVI_GREEDY = "ehvi_greedy"
    PARETO_UCB = "pareto_ucb"


@dataclass(frozen=True)
class AcquisitionConfig:
    strategy: Strategy = Strategy.EHVI_GREEDY
    beta: float = 2.0
    q: int = 5
    ref: tuple[float, float] = (1.0, 0.0)
    constraint_enabled: bool = True

    def __post_init__(self):
        if self.q < 1:
            raise ValueError("batch size must be >= 1")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")

    def to_dict(self) -> dict:
        return {"strategy": self.strategy.value, "beta": self.beta, "q": self.q,
                "ref": list(self.ref), "constraint_enabled": self.constraint_enabled}

    @classmethod
    def from_dict(cls, d: dict) -> "AcquisitionConfig":
        return cls(strategy=Strategy(d["strategy"]), beta=float(d["beta"]),
                   q=int(d["q"]), ref=tuple(d["ref"]),
                   constraint_enabled=bool(d["constraint_enabled"]))


def ucb(mean, std, beta: float):
    """mean + sqrt(beta) * std, the optimism-in-uncertainty score."""
    std_arr = np.asarray(std, dtype=float)
    if np.any(std_arr < 0):
        raise ValueError("std must be non-negative")
    out = np.asarray(mean, dtype=float) + np.sqrt(beta) * std_arr
    return float(out) if np.ndim(mean) == 0 and np.ndim(std) == 0 else out


def _gain_above(mu, sd, t):
    """E[(Y - t)+] for Y ~ N(mu, sd^2); max(mu - t, 0) when sd = 0 or t = inf."""
    mu_b, sd_b, t_b = np.broadcast_arrays(np.asarray(mu, dtype=float),
                                          np.asarray(sd, dtype=float),
                                          np.asarray(t, dtype=float))
    out = np.maximum(mu_b - t_b, 0.0)
    mask = (sd_b > 0) & np.isfinite(t_b)
    if np.any(mask):
        z = (mu_b[mask] - t_b[mask]) / sd_b[mask]
        out = np.array(out)
        out[mask] = sd_b[mask] * norm.pdf(z) + (mu_b[mask] - t_b[mask]) * norm.cdf(z)
    return out


def _front_strips(front_points, ref) -> tuple[np.ndarray, np.ndarray]:
    """Vertical-strip decomposition of the not-yet-dominated region.

    Strip i spans edges[i]..edges[i+1] in the first objective (edges[0] = ref1,
    edges[-1] = +inf); heights[i] is the second-objective level already
    dominated inside that strip. Left of front point i (front sorted ascending
    in f1) the staircase sits at that point's f2; right of the last point
    nothing dominates, so the level drops to ref2.
    """
    ref = np.asarray(ref, dtype=float)
    pts = np.atleast_2d(np.asarray(front_points, dtype=float))
    if pts.size:
        front, _ = pareto.pareto_front(pareto.clip_to_ref(pts, ref), ref)
    else:
        front = np.empty((0, 2))
    edges = np.concatenate([[ref[0]], front[:, 0], [np.inf]])
    heights = np.concatenate([front[:, 1], [ref[1]]])
    return edges, heights


def ehvi_2d(mu1, sd1, mu2, sd2, front_points, ref) -> float | np.ndarray:
    """Exact expected hypervolume gain of sampling Y ~ (N(mu1,sd1), N(mu2,sd2))
    independently, relative to the given front and reference point.

    Decomposes the improvement region into strips and integrates each in
    closed form; there is no sampling involved.
    """
    edges, heights = _front_strips(front_points, ref)
    mu1 = np.asarray(mu1, dtype=float)
    scalar = mu1.ndim == 0
    mu1a = np.atleast_1d(mu1)[:, None]
    sd1a = np.atleast_1d(np.asarray(sd1, dtype=float))[:, None]
    mu2a = np.atleast_1d(np.asarray(mu2, dtype=float))[:, None]
    sd2a = np.atleast_1d(np.asarray(sd2, dtype=float))[:, None]
    if np.any(sd1a < 0) or np.any(sd2a < 0):
        raise ValueError("posterior std must be non-negative")
    lower = _gain_above(mu1a, sd1a, edges[:-1][None, :])
    upper = _gain_above(mu1a, sd1a, edges[1:][None, :])
    width = np.maximum(lower - upper, 0.0)
    height = _gain_above(mu2a, sd2a, heights[None, :])
    values = np.sum(width * height, axis=1)
    return float(values[0]) if scalar else values


class PoolExhausted(RuntimeError):
    """No candidates remain to suggest."""


def _constrained(values: np.ndarray, p_constraint: np.ndarray | None) -> np.ndarray:
    if p_constraint is None:
        return values
    return values * p_constraint


def ehvi_greedy_batch(model1: SurrogateModel, model2: SurrogateModel,
                      candidates_unit: np.ndarray, front_points,
                      config: AcquisitionConfig,
                      p_constraint: np.ndarray | None = None) -> list[int]:
    """Pick q candidates by greedy one-at-a-time EHVI with believer updates.

    After each pick the models are conditioned on their own posterior means at
    the picked point (hyperparameters untouched) and the working front absorbs
    that fantasy outcome, so near-duplicates stop scoring.
    """
    cands = np.atleast_2d(np.asarray(candidates_unit, dtype=float))
    if len(cands) == 0:
        raise PoolExhausted("empty candidate pool")
    front = np.atleast_2d(np.asarray(front_points, dtype=float)) if np.size(front_points) else np.empty((0, 2))
    m1, m2 = model1, model2
    available = np.ones(len(cands), dtype=bool)
    picked: list[int] = []
    for _ in range(config.q):
        if not np.any(available):
            break
        mu1, sd1 = m1.posterior(cands)
        mu2, sd2 = m2.posterior(cands)
        scores = ehvi_2d(mu1, sd1, mu2, sd2, front, config.ref)
        scores = _constrained(scores, p_constraint)
        scores = np.where(available, scores, -np.inf)
        best = int(np.argmax(scores))  # argmax takes the first max: lowest index
        picked.append(best)
        available[best] = False
        f1, f2 = float(mu1[best]), float(mu2[best])
        m1 = m1.with_extra_point(cands[best], f1)
        m2 = m2.with_extra_point(cands[best], f2)
        front = np.vstack([front, [f1, f2]]) if front.size else np.array([[f1, f2]])
    return picked


def pareto_ucb_batch(model1: SurrogateModel, model2: SurrogateModel,
                     candidates_unit: np.ndarray, config: AcquisitionConfig,
                     p_constraint: np.ndarray | None = None) -> list[int]:
    """Pick q candidates from the Pareto layers of per-objective UCB pairs.

    Per candidate: the UCB of each objective (times the feasibility
    probability when enabled) forms a pair; the nondominated pairs are ranked
    by greedy hypervolume contribution. If the first layer holds fewer than q
    points, successive layers are peeled and selection continues inside each.
    """
    cands = np.atleast_2d(np.asarray(candidates_unit, dtype=float))
    if len(cands) == 0:
        raise PoolExhausted("empty candidate pool")
    mu1, sd1 = model1.posterior(cands)
    mu2, sd2 = model2.posterior(cands)
    pairs = np.column_stack([ucb(mu1, sd1, config.beta),
                             ucb(mu2, sd2, config.beta)])
    if p_constraint is not None:
        pairs = pairs * p_constraint[:, None]
    picked: list[int] = []
    remaining = np.arange(len(cands))
    ref = np.asarray(config.ref, dtype=float)
    while len(picked) < config.q and len(remaining):
        layer_local = pareto.nondominated(pairs[remaining])
        layer = remaining[layer_local]
        need = config.q - len(picked)
        chosen_local = pareto.greedy_hv_subset(pairs[layer], ref, min(need, len(layer)))
        picked.extend(int(layer[i]) for i in chosen_local)
        keep = np.ones(len(remaining), dtype=bool)
        keep[layer_local] = False
        remaining = remaining[keep]
    return picked


def acquisition_map(model: SurrogateModel, sweep_axes: tuple[np.ndarray, np.ndarray],
                    sweep_indices: tuple[int, int], fixed_unit: np.ndarray,
                    beta: float,
                    constraint_values: np.ndarray | None = None) -> dict:
    """UCB over a 2-D slice of the input space, raw and optionally constrained.

    sweep_axes hold normalized grid values for the two swept parameters;
    fixed_unit holds normalized values for every parameter (swept entries are
    overwritten). constraint_values, when given, must match the grid layout.
    """
    i, j = sweep_indices
    if i == j:
        raise ValueError("sweep indices must be distinct")
    ax_i, ax_j = sweep_axes
    grid_i, grid_j = np.meshgrid(ax_i, ax_j, indexing="ij")
    queries = np.tile(fixed_unit, (grid_i.size, 1))
    queries[:, i] = grid_i.ravel()
    queries[:, j] = grid_j.ravel()
    mean, std = model.posterior(queries)
    raw = ucb(mean, std, beta).reshape(grid_i.shape)
    out = {"raw": raw}
    if constraint_values is not None:
        out["constrained"] = raw * constraint_values.reshape(grid_i.shape)
    return out

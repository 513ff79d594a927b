"""Read-side computations shared by the CLI and the HTTP API: on-demand model
fits over current campaign data, heatmap slices, the model-predicted front,
and what-if queries. Fits are memoized on the exact training data so polling
clients do not pay for refits."""
from __future__ import annotations

import numpy as np

from . import design_space as ds
from . import gpr, hitl, pareto
from .acquisition import acquisition_map
from .campaign import Campaign, CampaignError, Observation

_MODEL_CACHE: dict[tuple, gpr.SurrogateModel] = {}


def _cache_get(key):
    return _MODEL_CACHE.get(key)


def _cache_put(key, model):
    if len(_MODEL_CACHE) > 32:
        _MODEL_CACHE.clear()
    _MODEL_CACHE[key] = model


def fit_objective_model(campaign: Campaign,
                        target: str) -> tuple[gpr.SurrogateModel, list[Observation]]:
    if target not in ("dispersion", "leakage"):
        raise CampaignError(f"unknown objective {target!r}")
    obs = campaign.functional_observations()
    if len(obs) < 2:
        raise CampaignError(
            f"only {len(obs)} measured observations; need at least 2")
    y = [getattr(o, target).mean for o in obs]
    key = (target, tuple(o.id for o in obs), tuple(y), campaign.config.seed,
           campaign.config.pin_noise)
    model = _cache_get(key)
    if model is None:
        x = ds.normalize(campaign.space, np.array([o.condition for o in obs]))
        model = gpr.fit(x, y, gpr.FitConfig(
            restarts=campaign.config.fit_restarts,
            seed=campaign._derived_seed(len(campaign.rounds), tag=11),
            pin_noise=campaign.config.pin_noise))
        _cache_put(key, model)
    return model, obs


def fit_conversion(campaign: Campaign) -> tuple[gpr.SurrogateModel, list[Observation]]:
    obs = campaign.scored_observations()
    if len(obs) < 2:
        raise CampaignError("need at least 2 scored observations")
    scores = [hitl.score_to_value(o.label) for o in obs]
    key = ("conversion", tuple(o.id for o in obs), tuple(scores),
           campaign.config.seed, campaign.config.pin_noise)
    model = _cache_get(key)
    if model is None:
        x = ds.normalize(campaign.space, np.array([o.condition for o in obs]))
        model = hitl.fit_conversion_model(x, scores, gpr.FitConfig(
            restarts=campaign.config.fit_restarts,
            seed=campaign._derived_seed(len(campaign.rounds), tag=12),
            pin_noise=campaign.config.pin_noise))
        _cache_put(key, model)
    return model, obs


def _slice_axes(campaign: Campaign, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    refinement = campaign.config.refinement
    steps = refinement if refinement else [p.step for p in campaign.space.params]
    ax = []
    for idx in (i, j):
        p = campaign.space.params[idx]
        ax.append(ds.ParameterSpec(p.name, p.min, p.max, steps[idx], p.unit)
                  .grid_values())
    return ax[0], ax[1]


def _fixed_values(campaign: Campaign, fixes: dict[str, float]) -> np.ndarray:
    """Anchor for unswept parameters: explicit fixes win, then the median of
    the latest suggested batch, then mid-range."""
    space = campaign.space
    values = (space.mins + space.maxs) / 2.0
    if campaign.rounds:
        last = campaign.rounds[-1]
        conds = np.array([campaign.observation(s).condition
                          for s in last.suggested])
        values = np.median(conds, axis=0)
    for name, v in fixes.items():
        if name not in space.names():
            raise CampaignError(f"unknown parameter {name!r}")
        values[space.names().index(name)] = v
    return values


def acquisition_heatmap(campaign: Campaign, target: str,
                        sweep: tuple[int, int],
                        fixes: dict[str, float] | None = None) -> dict:
    i, j = sweep
    if not (0 <= i < campaign.space.ndim and 0 <= j < campaign.space.ndim) or i == j:
        raise CampaignError("sweep indices must be two distinct parameter indices")
    model, _ = fit_objective_model(campaign, target)
    ax_i, ax_j = _slice_axes(campaign, i, j)
    anchor = _fixed_values(campaign, fixes or {})
    anchor_unit = ds.normalize(campaign.space, anchor)
    unit_i = ds.normalize_axis(campaign.space, i, ax_i)
    unit_j = ds.normalize_axis(campaign.space, j, ax_j)
    constraint = None
    if campaign.config.hitl_enabled and len(campaign.scored_observations()) >= 2:
        conv, _ = fit_conversion(campaign)
        grid_i, grid_j = np.meshgrid(unit_i, unit_j, indexing="ij")
        queries = np.tile(anchor_unit, (grid_i.size, 1))
        queries[:, i] = grid_i.ravel()
        queries[:, j] = grid_j.ravel()
        constraint = hitl.constraint_map(conv, queries, campaign.config.tau)
    maps = acquisition_map(model, (unit_i, unit_j), (i, j), anchor_unit,
                           campaign.config.acquisition.beta, constraint)
    return {
        "target": target,
        "axis_i": [float(v) for v in ax_i],
        "axis_j": [float(v) for v in ax_j],
        "pair": [i, j],
        "fixed": [float(v) for v in anchor],
        "raw": maps["raw"].tolist(),
        "constrained": maps["constrained"].tolist() if "constrained" in maps else None,
    }


def constraint_heatmap(campaign: Campaign, sweep: tuple[int, int],
                       fixes: dict[str, float] | None = None) -> dict:
    i, j = sweep
    if not (0 <= i < campaign.space.ndim and 0 <= j < campaign.space.ndim) or i == j:
        raise CampaignError("sweep indices must be two distinct parameter indices")
    conv, _ = fit_conversion(campaign)
    ax_i, ax_j = _slice_axes(campaign, i, j)
    anchor = _fixed_values(campaign, fixes or {})
    anchor_unit = ds.normalize(campaign.space, anchor)
    unit_i = ds.normalize_axis(campaign.space, i, ax_i)
    unit_j = ds.normalize_axis(campaign.space, j, ax_j)
    grid_i, grid_j = np.meshgrid(unit_i, unit_j, indexing="ij")
    queries = np.tile(anchor_unit, (grid_i.size, 1))
    queries[:, i] = grid_i.ravel()
    queries[:, j] = grid_j.ravel()
    mu, _ = conv.posterior(queries)
    p = hitl.p_constraint(mu, campaign.config.tau)
    return {
        "axis_i": [float(v) for v in ax_i],
        "axis_j": [float(v) for v in ax_j],
        "pair": [i, j],
        "fixed": [float(v) for v in anchor],
        "mu_conversion": mu.reshape(len(ax_i), len(ax_j)).tolist(),
        "p_constraint": p.reshape(len(ax_i), len(ax_j)).tolist(),
    }


def model_front(campaign: Campaign) -> dict:
    """Model-predicted front: nondominated posterior means over the candidate
    pool, each with its per-objective posterior std (the plotted band)."""
    m_disp, _ = fit_objective_model(campaign, "dispersion")
    m_leak, _ = fit_objective_model(campaign, "leakage")
    pool = campaign.candidate_pool(len(campaign.rounds))
    pool_unit = ds.normalize(campaign.space, pool)
    mu1, sd1 = m_disp.posterior(pool_unit)
    mu2, sd2 = m_leak.posterior(pool_unit)
    means = np.column_stack([mu1, mu2])
    idx = pareto.nondominated(means)
    front = means[idx]
    order = np.argsort(front[:, 0])
    idx = [idx[k] for k in order]
    return {
        "points": [{"dispersion": float(mu1[k]), "leakage": float(mu2[k]),
                    "dispersion_std": float(sd1[k]), "leakage_std": float(sd2[k]),
                    "condition": [float(v) for v in pool[k]]}
                   for k in idx],
    }


def whatif(campaign: Campaign, condition) -> dict:
    cond = ds.validate_condition(campaign.space, condition)
    unit = ds.normalize(campaign.space, cond)
    out = {"condition": [float(v) for v in cond]}
    for target in ("dispersion", "leakage"):
        model, _ = fit_objective_model(campaign, target)
        mu, sd = model.posterior(unit[None, :])
        out[target] = {"mean": float(mu[0]), "std": float(sd[0])}
    if len(campaign.scored_observations()) >= 2:
        conv, _ = fit_conversion(campaign)
        mu, _ = conv.posterior(unit[None, :])
        out["p_constraint"] = float(hitl.p_constraint(float(mu[0]),
                                                      campaign.config.tau))
    return out

"""Human conversion scoring and the feasibility probability it induces.

A scientist grades each processed film on a five-level scale centred on
full conversion (0). The scores train a GP over the input space, and a
Gaussian transform of that model's posterior mean gives the probability of a
usable film, which multiplies the acquisition function. Both failure
directions (under-conversion and burning) are suppressed symmetrically,
unlike a binary feasible/infeasible classifier.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from . import gpr


class ConversionLabel(str, Enum):
    UNCONVERTED = "unconverted"
    PARTIALLY_CONVERTED = "partially_converted"
    CONVERTED = "converted"
    PARTIALLY_BURNED = "partially_burned"
    BURNED = "burned"


SCORE_VALUES: dict[ConversionLabel, float] = {
    ConversionLabel.UNCONVERTED: -1.0,
    ConversionLabel.PARTIALLY_CONVERTED: -0.5,
    ConversionLabel.CONVERTED: 0.0,
    ConversionLabel.PARTIALLY_BURNED: 0.5,
    ConversionLabel.BURNED: 1.0,
}


DEFAULT_TAU = 0.2


@dataclass(frozen=True)
class HitlConfig:
    tau: float = DEFAULT_TAU

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")


def score_to_value(label: ConversionLabel) -> float:
    return SCORE_VALUES[label]


def value_to_nearest_label(value: float) -> ConversionLabel:
    """Snap a numeric score to the nearest of the five levels, ties toward 0."""
    if not np.isfinite(value):
        raise ValueError("score must be finite")
    best, best_key = None, None
    for label, v in SCORE_VALUES.items():
        key = (abs(value - v), abs(v))
        if best_key is None or key < best_key:
            best, best_key = label, key
    return best


def fit_conversion_model(conditions_unit, scores,
                         config: gpr.FitConfig | None = None) -> gpr.SurrogateModel:
    """GP over conversion scores. Unlike the objective models this one ingests
    every scored condition, including failures; targets are left in score
    units (clamped to [-1, 1]) so the Gaussian transform applies directly."""
    scores = np.clip(np.asarray(scores, dtype=float), -1.0, 1.0)
    if len(scores) < 2:
        raise ValueError("need at least 2 scored observations")
    cfg = config or gpr.FitConfig()
    if cfg.standardize:
        cfg = replace(cfg, standardize=False)
    return gpr.fit(conditions_unit, scores, cfg)


def p_constraint(mu_conv, tau: float = DEFAULT_TAU):
    """Probability of a usable film given the conversion model's mean:
    exp(-1/2 (mu/tau)^2). Exactly 1 at full conversion, symmetric in the
    failure direction, vanishing at |mu| = 1 for small tau."""
    if np.any(np.asarray(tau) <= 0):
        raise ValueError("tau must be positive")
    mu = np.asarray(mu_conv, dtype=float)
    p = np.exp(-0.5 * (mu / tau) ** 2)
    # keep strictly positive even where exp underflows; the contract is (0, 1]
    p = np.maximum(p, 5e-324)
    if np.ndim(mu_conv) == 0:
        return float(p)
    return p


def constraint_map(model: gpr.SurrogateModel, candidates_unit,
                   tau: float = DEFAULT_TAU) -> np.ndarray:
    """Per-candidate feasibility probability from the posterior mean only
    (the model's uncertainty is reported elsewhere but never weighted in)."""
    mean, _ = model.posterior(candidates_unit)
    return p_constraint(mean, tau)

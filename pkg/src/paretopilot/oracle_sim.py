"""Synthetic lab: a seeded stand-in for processing, measurement, and scoring.

A latent dose (weighted sum of the normalized inputs) decides the conversion
outcome through four band thresholds, from under-converted through good
conversion to burned. Conditions in the measurable bands emit two competing
objectives: one decreasing and one increasing in dose, plus seeded noise.
Because the dose mixes all five inputs, no single parameter can be boxed away
to dodge the failure regions, which is what makes the feasibility model earn
its keep in the A/B benchmark.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from . import design_space as ds
from .acquisition import AcquisitionConfig, Strategy
from .campaign import Campaign, CampaignConfig, Measurement
from .hitl import ConversionLabel


@dataclass(frozen=True)
class SyntheticLab:
    """Band thresholds are on the latent dose scale; defaults are calibrated so
    roughly two thirds of the space fails (matching a high-failure process)
    while the dose direction stays learnable from a 30-condition batch."""

    dose_weights: tuple[float, ...] = (0.5, 0.3, 0.1, 0.05, 0.05)
    thresholds: tuple[float, float, float, float] = (0.426, 0.48, 0.52, 0.574)
    dispersion_scale: float = 2.2
    leakage_scale: float = 5.0
    noise_dispersion: float = 0.05
    noise_leakage: float = 0.10
    seed: int = 0
    measurable_prob: float = 1.0   # chance a measurable-band film yields devices
    measurable_labels: tuple[ConversionLabel, ...] = (
        ConversionLabel.PARTIALLY_CONVERTED,
        ConversionLabel.CONVERTED,
        ConversionLabel.PARTIALLY_BURNED,
    )

    def __post_init__(self):
        t = self.thresholds
        if not (t[0] < t[1] < t[2] < t[3]):
            raise ValueError("thresholds must be strictly increasing")
        if self.noise_dispersion < 0 or self.noise_leakage < 0:
            raise ValueError("noise levels must be non-negative")
        if not (0.0 <= self.measurable_prob <= 1.0):
            raise ValueError("measurable_prob must be in [0, 1]")

    def to_dict(self) -> dict:
        return {"dose_weights": list(self.dose_weights),
                "thresholds": list(self.thresholds),
                "dispersion_scale": self.dispersion_scale,
                "leakage_scale": self.leakage_scale,
                "noise_dispersion": self.noise_dispersion,
                "noise_leakage": self.noise_leakage,
                "seed": self.seed,
                "measurable_prob": self.measurable_prob,
                "measurable_labels": [l.value for l in self.measurable_labels]}

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticLab":
        kwargs = dict(d)
        if "dose_weights" in kwargs:
            kwargs["dose_weights"] = tuple(kwargs["dose_weights"])
        if "thresholds" in kwargs:
            kwargs["thresholds"] = tuple(kwargs["thresholds"])
        if "measurable_labels" in kwargs:
            kwargs["measurable_labels"] = tuple(
                ConversionLabel(v) for v in kwargs["measurable_labels"])
        return cls(**kwargs)


def latent_dose(lab: SyntheticLab, space: ds.ParameterSpace, condition) -> float:
    unit = ds.normalize(space, condition)
    return float(np.dot(lab.dose_weights, unit))


def label_for_dose(lab: SyntheticLab, d: float) -> ConversionLabel:
    t1, t2, t3, t4 = lab.thresholds
    if d <= t1:
        return ConversionLabel.UNCONVERTED
    if d <= t2:
        return ConversionLabel.PARTIALLY_CONVERTED
    if d <= t3:
        return ConversionLabel.CONVERTED
    if d <= t4:
        return ConversionLabel.PARTIALLY_BURNED
    return ConversionLabel.BURNED


def _condition_rng(lab: SyntheticLab, condition) -> np.random.Generator:
    """Seed derived from the lab seed and the condition itself, so outcomes do
    not depend on evaluation order."""
    key = ds.condition_key(condition)
    digest = hashlib.sha256(
        json.dumps([lab.seed, key]).encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def simulate_condition(lab: SyntheticLab, space: ds.ParameterSpace,
                       condition) -> dict:
    """Outcome of processing one condition: a label always, measurements only
    when the label admits them."""
    d = latent_dose(lab, space, condition)
    label = label_for_dose(lab, d)
    out = {"label": label, "dose": d}
    if label in lab.measurable_labels:
        rng = _condition_rng(lab, condition)
        if lab.measurable_prob < 1.0 and rng.random() >= lab.measurable_prob:
            return out
        t1, t4 = lab.thresholds[0], lab.thresholds[3]
        s = (d - t1) / (t4 - t1)  # position across the measurable band
        disp = 1.0 + lab.dispersion_scale * (1.0 - s) \
            + rng.normal(0.0, lab.noise_dispersion)
        leak = 1.0 + lab.leakage_scale * s + rng.normal(0.0, lab.noise_leakage)
        out["dispersion"] = Measurement(max(disp, 1.0), lab.noise_dispersion)
        out["leakage"] = Measurement(max(leak, 0.0), lab.noise_leakage)
    return out


def apply_outcome(camp: Campaign, obs_id: str, outcome: dict):
    camp.set_score(obs_id, outcome["label"])
    if "dispersion" in outcome:
        camp.set_objectives(obs_id, dispersion=outcome["dispersion"],
                            leakage=outcome["leakage"])
    elif outcome["label"] not in (ConversionLabel.UNCONVERTED,
                                  ConversionLabel.BURNED):
        camp.set_objectives(obs_id, unmeasurable=True)


def run_campaign_arm(lab: SyntheticLab, space: ds.ParameterSpace,
                     with_hitl: bool, rounds: int, q: int, n_init: int,
                     seed: int,
                     strategy: Strategy = Strategy.PARETO_UCB) -> dict:
    """One simulated campaign: initial sampling plus `rounds` suggested
    batches, every suggestion resolved by the lab."""
    cfg = CampaignConfig(
        acquisition=AcquisitionConfig(strategy=strategy, q=q),
        hitl_enabled=with_hitl, seed=seed)
    camp = Campaign(space, cfg)
    camp.start(n_init)
    yields = []
    for rnd in list(camp.rounds):
        measurable = 0
        for obs_id in rnd.suggested:
            outcome = simulate_condition(lab, space, camp.observation(obs_id).condition)
            apply_outcome(camp, obs_id, outcome)
            measurable += outcome["label"] in lab.measurable_labels
        yields.append(measurable / len(rnd.suggested))
    for _ in range(rounds):
        rnd = camp.suggest_round()
        measurable = 0
        for obs_id in rnd.suggested:
            outcome = simulate_condition(lab, space, camp.observation(obs_id).condition)
            apply_outcome(camp, obs_id, outcome)
            measurable += outcome["label"] in lab.measurable_labels
        yields.append(measurable / len(rnd.suggested))
    return {
        "with_hitl": with_hitl,
        "seed": seed,
        "yields": yields,
        "hypervolume": camp.hypervolume_history(),
        "campaign": camp,
    }


def run_benchmark(lab: SyntheticLab, space: ds.ParameterSpace | None = None,
                  rounds: int = 2, q: int = 5, n_init: int = 30,
                  seeds: tuple[int, ...] = (0,),
                  ab: bool = True) -> list[dict]:
    """Yield/hypervolume comparison across seeds; with ab=True both the
    feasibility-aware and plain arms run on identical initial data."""
    space = space or ds.default_space()
    results = []
    for seed in seeds:
        arms = (True, False) if ab else (True,)
        for with_hitl in arms:
            r = run_campaign_arm(lab, space, with_hitl, rounds, q, n_init, seed)
            r.pop("campaign")
            results.append(r)
    return results

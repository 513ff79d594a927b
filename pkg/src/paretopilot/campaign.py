"""Campaign orchestration: rounds, observations, persistence, convergence.

A campaign owns the parameter space, every tested condition with its human
score and measurements, the per-round strategy record, and snapshots of the
models that produced each batch. Objective models train only on observations
that produced measurements; the conversion model trains on every scored
observation, failures included. All randomness derives from the campaign seed
and the round index, so replaying a command sequence reproduces the file
byte for byte.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable

import numpy as np

from . import design_space as ds
from . import gpr, hitl, pareto
from .acquisition import (AcquisitionConfig, PoolExhausted, Strategy,
                          ehvi_greedy_batch, pareto_ucb_batch)

SCHEMA_VERSION = "1.0.0"

CSV_COLUMNS = [
    "condition_id", "radiant_energy_J_cm2", "pulse_count", "pulse_length_ms",
    "micropulse_count", "duty_cycle_pct", "pulse_voltage_V", "conversion_score",
    "dispersion_mean", "dispersion_std", "leakage_mean", "leakage_std",
]
MISSING = "-"

FAILURE_LABELS = (hitl.ConversionLabel.UNCONVERTED, hitl.ConversionLabel.BURNED)


class CampaignError(RuntimeError):
    """Invariant violation or precondition failure on campaign state."""


class NotFoundError(CampaignError):
    """Referenced observation or round does not exist."""


class RoundStatus(str, Enum):
    PENDING_SCORES = "pending_scores"
    PENDING_OBJECTIVES = "pending_objectives"
    COMPLETE = "complete"


@dataclass
class Measurement:
    mean: float
    std: float

    def __post_init__(self):
        if not np.isfinite(self.mean):
            raise CampaignError("measurement mean must be finite")
        if not (np.isfinite(self.std) and self.std >= 0):
            raise CampaignError("measurement std must be finite and >= 0")

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std": self.std}


@dataclass
class Observation:
    """One tested condition: the human's conversion call plus, when the film
    yielded devices, the measured objective pair."""

    id: str
    condition: np.ndarray
    round_index: int
    pulse_voltage: float | None = None       # equipment metadata, never modeled
    label: hitl.ConversionLabel | None = None
    dispersion: Measurement | None = None
    leakage: Measurement | None = None
    unmeasurable: bool = False
    device_count: int = 5

    def validate(self):
        if (self.dispersion is None) != (self.leakage is None):
            raise CampaignError(
                f"observation {self.id}: objectives must be supplied together")
        if self.label in FAILURE_LABELS and self.dispersion is not None:
            raise CampaignError(
                f"observation {self.id}: a {self.label.value} film cannot carry "
                "device measurements")
        if self.unmeasurable and self.dispersion is not None:
            raise CampaignError(
                f"observation {self.id}: unmeasurable flag conflicts with measurements")

    @property
    def functional(self) -> bool:
        return self.dispersion is not None

    @property
    def scored(self) -> bool:
        return self.label is not None

    @property
    def resolved(self) -> bool:
        """Nothing further expected from the lab for this condition."""
        if not self.scored:
            return False
        if self.label in FAILURE_LABELS:
            return True
        return self.functional or self.unmeasurable

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "condition": [float(v) for v in self.condition],
            "round": self.round_index,
            "pulse_voltage": self.pulse_voltage,
            "label": self.label.value if self.label else None,
            "dispersion": self.dispersion.to_dict() if self.dispersion else None,
            "leakage": self.leakage.to_dict() if self.leakage else None,
            "unmeasurable": self.unmeasurable,
            "device_count": self.device_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Observation":
        obs = cls(
            id=str(d["id"]),
            condition=np.array(d["condition"], dtype=float),
            round_index=int(d["round"]),
            pulse_voltage=d.get("pulse_voltage"),
            label=hitl.ConversionLabel(d["label"]) if d.get("label") else None,
            dispersion=Measurement(**d["dispersion"]) if d.get("dispersion") else None,
            leakage=Measurement(**d["leakage"]) if d.get("leakage") else None,
            unmeasurable=bool(d.get("unmeasurable", False)),
            device_count=int(d.get("device_count", 5)),
        )
        obs.validate()
        return obs


@dataclass
class RoundRecord:
    index: int
    strategy: Strategy
    hitl_enabled: bool
    suggested: list[str] = field(default_factory=list)
    status: RoundStatus = RoundStatus.PENDING_SCORES

    def to_dict(self) -> dict:
        return {"index": self.index, "strategy": self.strategy.value,
                "hitl_enabled": self.hitl_enabled, "suggested": list(self.suggested),
                "status": self.status.value}

    @classmethod
    def from_dict(cls, d: dict) -> "RoundRecord":
        return cls(index=int(d["index"]), strategy=Strategy(d["strategy"]),
                   hitl_enabled=bool(d["hitl_enabled"]),
                   suggested=[str(s) for s in d["suggested"]],
                   status=RoundStatus(d["status"]))


@dataclass(frozen=True)
class CampaignConfig:
    acquisition: AcquisitionConfig = AcquisitionConfig()
    hitl_enabled: bool = True
    tau: float = hitl.DEFAULT_TAU
    seed: int = 0
    pool_size: int = 2048
    refinement: tuple[float, ...] | None = ds.DEFAULT_REFINEMENT
    fit_restarts: int = 8
    pin_noise: float | None = None   # fix model noise instead of fitting it

    def to_dict(self) -> dict:
        d = self.acquisition.to_dict()
        d.update({"hitl": self.hitl_enabled, "tau": self.tau, "seed": self.seed,
                  "pool_size": self.pool_size,
                  "refinement": list(self.refinement) if self.refinement else None,
                  "fit_restarts": self.fit_restarts,
                  "pin_noise": self.pin_noise})
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignConfig":
        return cls(acquisition=AcquisitionConfig.from_dict(d),
                   hitl_enabled=bool(d["hitl"]), tau=float(d["tau"]),
                   seed=int(d["seed"]), pool_size=int(d["pool_size"]),
                   refinement=tuple(d["refinement"]) if d.get("refinement") else None,
                   fit_restarts=int(d.get("fit_restarts", 8)),
                   pin_noise=d.get("pin_noise"))


class Campaign:
    """Mutable campaign state. All mutation goes through methods that
    re-validate the touched invariants."""

    def __init__(self, space: ds.ParameterSpace, config: CampaignConfig):
        self.space = space
        self.config = config
        self.observations: list[Observation] = []
        self.rounds: list[RoundRecord] = []
        self.model_snapshots: dict[str, dict] = {}

    # ------------------------------------------------------------------ lookup

    def observation(self, obs_id: str) -> Observation:
        for o in self.observations:
            if o.id == str(obs_id):
                return o
        raise NotFoundError(f"no observation with id {obs_id!r}")

    def functional_observations(self) -> list[Observation]:
        return [o for o in self.observations if o.functional]

    def scored_observations(self) -> list[Observation]:
        return [o for o in self.observations if o.scored]

    def tested_keys(self) -> set[tuple]:
        return {ds.condition_key(o.condition) for o in self.observations}

    def _next_id(self) -> int:
        mx = 0
        for o in self.observations:
            try:
                mx = max(mx, int(o.id))
            except ValueError:
                continue
        return mx + 1

    def _derived_seed(self, round_index: int, tag: int) -> int:
        return (self.config.seed * 1_000_003 + round_index * 101 + tag) % (2**32)

    # --------------------------------------------------------------- mutation

    def add_observation(self, obs: Observation):
        obs.validate()
        ds.validate_condition(self.space, obs.condition)
        if any(o.id == obs.id for o in self.observations):
            raise CampaignError(f"duplicate observation id {obs.id!r}")
        if ds.condition_key(obs.condition) in self.tested_keys():
            raise CampaignError(
                f"condition {list(obs.condition)} already present in the campaign")
        self.observations.append(obs)

    def set_score(self, obs_id: str, label: hitl.ConversionLabel):
        obs = self.observation(obs_id)
        if label in FAILURE_LABELS and obs.dispersion is not None:
            raise CampaignError(
                f"observation {obs.id}: cannot mark a measured condition "
                f"{label.value}")
        obs.label = label
        obs.validate()
        self._refresh_round_status()

    def set_objectives(self, obs_id: str,
                       dispersion: Measurement | None = None,
                       leakage: Measurement | None = None,
                       unmeasurable: bool = False):
        obs = self.observation(obs_id)
        if unmeasurable:
            if dispersion is not None or leakage is not None:
                raise CampaignError("unmeasurable excludes measurements")
            obs.unmeasurable = True
            obs.dispersion = None
            obs.leakage = None
        else:
            if dispersion is None or leakage is None:
                raise CampaignError(
                    f"observation {obs.id}: both objectives required together")
            if obs.label in FAILURE_LABELS:
                raise CampaignError(
                    f"observation {obs.id}: a {obs.label.value} film cannot carry "
                    "device measurements")
            obs.dispersion = dispersion
            obs.leakage = leakage
            obs.unmeasurable = False
        obs.validate()
        self._refresh_round_status()

    def record_results(self, round_index: int, results: dict):
        """Batch entry: results maps observation id to a dict with 'label' and
        optionally 'dispersion'/'leakage' pairs or 'unmeasurable'."""
        rnd = self.round(round_index)
        if round_index != len(self.rounds) - 1:
            raise CampaignError("results can only be recorded for the latest round")
        unknown = set(results) - set(rnd.suggested)
        if unknown:
            raise NotFoundError(f"ids {sorted(unknown)} were not suggested in "
                                f"round {round_index}")
        for obs_id, entry in results.items():
            if "label" in entry:
                self.set_score(obs_id, hitl.ConversionLabel(entry["label"]))
            if entry.get("unmeasurable"):
                self.set_objectives(obs_id, unmeasurable=True)
            elif "dispersion" in entry:
                self.set_objectives(
                    obs_id,
                    dispersion=Measurement(**entry["dispersion"]),
                    leakage=Measurement(**entry["leakage"]))
        self._refresh_round_status()

    def _refresh_round_status(self):
        for rnd in self.rounds:
            obs = [self.observation(i) for i in rnd.suggested]
            if any(not o.scored for o in obs):
                rnd.status = RoundStatus.PENDING_SCORES
            elif any(not o.resolved for o in obs):
                rnd.status = RoundStatus.PENDING_OBJECTIVES
            else:
                rnd.status = RoundStatus.COMPLETE

    # ------------------------------------------------------------------ rounds

    def round(self, index: int) -> RoundRecord:
        if not (0 <= index < len(self.rounds)):
            raise NotFoundError(f"no round {index}")
        return self.rounds[index]

    def start(self, n_init: int):
        """Round 0: space-filling initial batch."""
        if self.rounds:
            raise CampaignError("campaign already started")
        if n_init < 2:
            raise CampaignError("n_init must be >= 2")
        conditions = ds.lhs_sample(self.space, n_init,
                                   self._derived_seed(0, tag=0))
        rnd = RoundRecord(index=0, strategy=Strategy.LHS,
                          hitl_enabled=self.config.hitl_enabled)
        for cond in conditions:
            obs = Observation(id=str(self._next_id()), condition=cond,
                              round_index=0)
            self.add_observation(obs)
            rnd.suggested.append(obs.id)
        self.rounds.append(rnd)
        return rnd

    def _fit_objective_models(self, round_index: int) -> tuple[gpr.SurrogateModel, gpr.SurrogateModel, list[str]]:
        functional = self.functional_observations()
        if len(functional) < 2:
            raise CampaignError(
                f"only {len(functional)} measured observations; need at least 2 "
                "to fit objective models. Record more results or enlarge the "
                "initial batch.")
        x = ds.normalize(self.space, np.array([o.condition for o in functional]))
        ids = [o.id for o in functional]
        cfg1 = gpr.FitConfig(restarts=self.config.fit_restarts,
                             seed=self._derived_seed(round_index, tag=1),
                             pin_noise=self.config.pin_noise)
        cfg2 = gpr.FitConfig(restarts=self.config.fit_restarts,
                             seed=self._derived_seed(round_index, tag=2),
                             pin_noise=self.config.pin_noise)
        m_disp = gpr.fit(x, [o.dispersion.mean for o in functional], cfg1)
        m_leak = gpr.fit(x, [o.leakage.mean for o in functional], cfg2)
        return m_disp, m_leak, ids

    def _fit_conversion_model(self, round_index: int) -> tuple[gpr.SurrogateModel, list[str]]:
        scored = self.scored_observations()
        if len(scored) < 2:
            raise CampaignError("need at least 2 scored observations for the "
                                "conversion model")
        x = ds.normalize(self.space, np.array([o.condition for o in scored]))
        scores = [hitl.score_to_value(o.label) for o in scored]
        cfg = gpr.FitConfig(restarts=self.config.fit_restarts,
                            seed=self._derived_seed(round_index, tag=3),
                            standardize=False, pin_noise=self.config.pin_noise)
        return hitl.fit_conversion_model(x, scores, cfg), [o.id for o in scored]

    def candidate_pool(self, round_index: int) -> np.ndarray:
        """Deterministic acquisition pool on the refined grid, excluding every
        tested condition. Small grids are enumerated exhaustively; large ones
        are subsampled with a round-derived seed."""
        exclude = [o.condition for o in self.observations]
        total = ds.grid_size(self.space, self.config.refinement)
        if total <= max(4 * self.config.pool_size, 20_000):
            chunks = list(ds.enumerate_candidates(
                self.space, self.config.refinement, exclude=exclude))
            if not chunks:
                raise PoolExhausted("every grid point has been tested")
            return np.vstack(chunks)
        return ds.sample_candidates(self.space, self.config.pool_size,
                                    self._derived_seed(round_index, tag=4),
                                    self.config.refinement, exclude=exclude)

    def suggest_round(self, strategy: Strategy | None = None,
                      hitl_override: bool | None = None) -> RoundRecord:
        """Fit models on current data, pick the next batch, open a new round.

        strategy and the HITL toggle default to the campaign config but may be
        overridden per round (schedules alternate both in practice)."""
        if not self.rounds:
            raise CampaignError("campaign not started; create round 0 first")
        if self.rounds[-1].status != RoundStatus.COMPLETE:
            raise CampaignError(
                f"round {self.rounds[-1].index} is {self.rounds[-1].status.value}; "
                "finish scoring and measurements before suggesting")
        strategy = strategy or self.config.acquisition.strategy
        use_hitl = self.config.hitl_enabled if hitl_override is None else hitl_override
        if strategy == Strategy.LHS:
            raise CampaignError("LHS is only valid for round 0")
        round_index = len(self.rounds)

        m_disp, m_leak, obj_ids = self._fit_objective_models(round_index)
        snapshots = {
            "dispersion": dict(m_disp.snapshot(), training_ids=obj_ids),
            "leakage": dict(m_leak.snapshot(), training_ids=obj_ids),
        }
        pool = self.candidate_pool(round_index)
        pool_unit = ds.normalize(self.space, pool)

        p_map = None
        if use_hitl:
            m_conv, conv_ids = self._fit_conversion_model(round_index)
            snapshots["conversion"] = dict(m_conv.snapshot(), training_ids=conv_ids)
            p_map = hitl.constraint_map(m_conv, pool_unit, self.config.tau)

        acq_cfg = self.config.acquisition
        if strategy == Strategy.EHVI_GREEDY:
            front_pts = np.array([[o.dispersion.mean, o.leakage.mean]
                                  for o in self.functional_observations()])
            picked = ehvi_greedy_batch(m_disp, m_leak, pool_unit, front_pts,
                                       acq_cfg, p_map)
        else:
            picked = pareto_ucb_batch(m_disp, m_leak, pool_unit, acq_cfg, p_map)
        if not picked:
            raise PoolExhausted("no candidates could be selected")

        rnd = RoundRecord(index=round_index, strategy=strategy,
                          hitl_enabled=use_hitl)
        for i in picked:
            obs = Observation(id=str(self._next_id()), condition=pool[i],
                              round_index=round_index)
            self.add_observation(obs)
            rnd.suggested.append(obs.id)
        self.rounds.append(rnd)
        self.model_snapshots[str(round_index)] = snapshots
        return rnd

    # ------------------------------------------------------------ diagnostics

    def snapshot_model(self, round_index: int, target: str) -> gpr.SurrogateModel:
        snaps = self.model_snapshots.get(str(round_index))
        if not snaps or target not in snaps:
            raise CampaignError(f"no {target} model snapshot for round {round_index}")
        snap = snaps[target]
        obs = [self.observation(i) for i in snap["training_ids"]]
        x = ds.normalize(self.space, np.array([o.condition for o in obs]))
        if target == "dispersion":
            y = [o.dispersion.mean for o in obs]
        elif target == "leakage":
            y = [o.leakage.mean for o in obs]
        else:
            y = [hitl.score_to_value(o.label) for o in obs]
        return gpr.rebuild(x, y, gpr.KernelHyperparams.from_dict(snap["hyperparams"]),
                           snap["target_mean"], snap["target_std"])

    def check_convergence(self, round_index: int) -> dict:
        """Compare the round's measurements against the model that suggested it:
        each functional point must land within one predicted standard deviation
        on both objectives."""
        rnd = self.round(round_index)
        if rnd.status != RoundStatus.COMPLETE:
            raise CampaignError(f"round {round_index} is not complete")
        if str(round_index) not in self.model_snapshots:
            raise CampaignError(f"round {round_index} has no model snapshots "
                                "(was it suggested by this campaign?)")
        measured = [self.observation(i) for i in rnd.suggested
                    if self.observation(i).functional]
        if not measured:
            raise CampaignError(f"round {round_index} produced no measurements")
        m_disp = self.snapshot_model(round_index, "dispersion")
        m_leak = self.snapshot_model(round_index, "leakage")
        x = ds.normalize(self.space, np.array([o.condition for o in measured]))
        flags = []
        for model, attr in ((m_disp, "dispersion"), (m_leak, "leakage")):
            mu, sd = model.posterior(x)
            for k, o in enumerate(measured):
                meas = getattr(o, attr)
                flags.append({
                    "id": o.id, "objective": attr,
                    "measured": meas.mean, "predicted": float(mu[k]),
                    "predicted_std": float(sd[k]),
                    "within": bool(abs(meas.mean - mu[k]) <= sd[k]),
                })
        return {"flags": flags, "converged": all(f["within"] for f in flags)}

    def measured_points(self, up_to_round: int | None = None) -> np.ndarray:
        pts = [(o.dispersion.mean, o.leakage.mean)
               for o in self.functional_observations()
               if up_to_round is None or o.round_index <= up_to_round]
        return np.array(pts) if pts else np.empty((0, 2))

    def hypervolume_history(self) -> list[float]:
        ref = self.config.acquisition.ref
        return [pareto.hypervolume_2d(self.measured_points(k), ref)
                for k in range(len(self.rounds))]

    # -------------------------------------------------------------- ingestion

    def ingest_dataset(self, fileobj: IO[str], default_round: int = 0) -> int:
        """Load observations from a CSV (see CSV_COLUMNS; '-' marks missing;
        an optional 'round' column overrides default_round). Returns the
        number of observations added; on any error nothing is added."""
        reader = csv.DictReader(fileobj)
        if reader.fieldnames is None:
            return 0
        missing_cols = [c for c in CSV_COLUMNS if c not in reader.fieldnames]
        if missing_cols:
            raise CampaignError(f"dataset missing columns: {missing_cols}")
        staged: list[Observation] = []
        for line_no, row in enumerate(reader, start=2):
            staged.append(self._parse_row(row, line_no, default_round))
        # all-or-nothing: validate uniqueness against state, then commit
        seen_ids = {o.id for o in self.observations}
        keys = self.tested_keys()
        for obs in staged:
            if obs.id in seen_ids:
                raise CampaignError(f"duplicate condition_id {obs.id!r}")
            seen_ids.add(obs.id)
            k = ds.condition_key(obs.condition)
            if k in keys:
                raise CampaignError(
                    f"condition_id {obs.id!r}: condition already present")
            keys.add(k)
        self.observations.extend(staged)
        return len(staged)

    def _parse_row(self, row: dict, line_no: int, default_round: int) -> Observation:
        def cell(col: str) -> str | None:
            raw = (row.get(col) or "").strip()
            return None if raw in ("", MISSING) else raw

        def number(col: str, required: bool = False) -> float | None:
            raw = cell(col)
            if raw is None:
                if required:
                    raise CampaignError(f"row {line_no}, column {col}: value required")
                return None
            try:
                return float(raw)
            except ValueError:
                raise CampaignError(
                    f"row {line_no}, column {col}: cannot parse {raw!r}") from None

        cond_id = cell("condition_id")
        if cond_id is None:
            raise CampaignError(f"row {line_no}, column condition_id: value required")
        values = [number(c, required=True) for c in CSV_COLUMNS[1:6]]
        try:
            ds.validate_condition(self.space, values)
        except ds.SpaceError as e:
            raise CampaignError(f"row {line_no}: {e}") from None

        score = number("conversion_score")
        label = hitl.value_to_nearest_label(score) if score is not None else None

        def measurement(prefix: str) -> Measurement | None:
            mean = number(f"{prefix}_mean")
            std = number(f"{prefix}_std")
            if (mean is None) != (std is None):
                raise CampaignError(
                    f"row {line_no}: {prefix} mean and std must appear together")
            return Measurement(mean, std) if mean is not None else None

        round_raw = (row.get("round") or "").strip()
        round_index = int(round_raw) if round_raw else default_round
        obs = Observation(
            id=cond_id,
            condition=np.array(values, dtype=float),
            round_index=round_index,
            pulse_voltage=number("pulse_voltage_V"),
            label=label,
            dispersion=measurement("dispersion"),
            leakage=measurement("leakage"),
        )
        try:
            obs.validate()
        except CampaignError as e:
            raise CampaignError(f"row {line_no}: {e}") from None
        return obs

    # ------------------------------------------------------------ persistence

    def to_dict(self) -> dict:
        return {
            "version": SCHEMA_VERSION,
            "space": self.space.to_list(),
            "config": self.config.to_dict(),
            "observations": [o.to_dict() for o in self.observations],
            "rounds": [r.to_dict() for r in self.rounds],
            "model_snapshots": self.model_snapshots,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Campaign":
        version = d.get("version")
        if not isinstance(version, str):
            raise CampaignError("campaign file missing schema version")
        major = version.split(".")[0]
        if major != SCHEMA_VERSION.split(".")[0]:
            raise CampaignError(
                f"campaign schema {version} is incompatible with this build "
                f"(supported major: {SCHEMA_VERSION.split('.')[0]})")
        c = cls(space=ds.ParameterSpace.from_list(d["space"]),
                config=CampaignConfig.from_dict(d["config"]))
        for od in d["observations"]:
            c.observations.append(Observation.from_dict(od))
        c.rounds = [RoundRecord.from_dict(rd) for rd in d["rounds"]]
        c.model_snapshots = dict(d.get("model_snapshots", {}))
        return c


def save(campaign: Campaign, path: str):
    """Atomic write: the existing file survives any failure midway."""
    payload = json.dumps(campaign.to_dict(), sort_keys=True, indent=2)
    tmp = f"{path}.tmp"
    with open(tmp, "w") as f:
        f.write(payload)
        f.write("\n")
    os.replace(tmp, path)


def load(path: str) -> Campaign:
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise CampaignError(f"campaign file {path} is not valid JSON: {e}") from None
    return Campaign.from_dict(data)

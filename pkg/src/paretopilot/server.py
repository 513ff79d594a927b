"""HTTP interface over a campaign file.

A single writer lock serializes every mutation; reads snapshot the in-memory
state, which is reloaded from disk only at startup and written back after each
successful mutation, so the file stays the single source of truth. Mutations
accept an optional client token and replay the original response when a token
repeats, making retries harmless.
"""
from __future__ import annotations

import os
import threading
from typing import Literal

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import RedirectResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import campaign as camp
from . import design_space as ds
from . import explain, hitl, pareto, service
from .acquisition import PoolExhausted, Strategy


class MeasurementBody(BaseModel):
    mean: float
    std: float = Field(ge=0)


class ScoreBody(BaseModel):
    id: str
    label: Literal["unconverted", "partially_converted", "converted",
                   "partially_burned", "burned"]
    client_token: str | None = None


class ObservationBody(BaseModel):
    id: str
    dispersion: MeasurementBody | None = None
    leakage: MeasurementBody | None = None
    unmeasurable: bool = False
    client_token: str | None = None


class NextRoundBody(BaseModel):
    strategy: Literal["ehvi_greedy", "pareto_ucb"] | None = None
    hitl: bool | None = None
    client_token: str | None = None


class WhatIfBody(BaseModel):
    condition: list[float]


def _http_error(e: Exception) -> HTTPException:
    if isinstance(e, camp.NotFoundError):
        return HTTPException(status_code=404, detail=str(e))
    if isinstance(e, (camp.CampaignError, ds.SpaceError, PoolExhausted, ValueError)):
        return HTTPException(status_code=422, detail=str(e))
    raise e


def create_app(campaign_path: str, ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="paretopilot", openapi_url="/spec")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])

    state = {"campaign": camp.load(campaign_path)}
    writer_lock = threading.Lock()
    token_replies: dict[str, dict] = {}

    def current() -> camp.Campaign:
        return state["campaign"]

    def mutate(token: str | None, fn):
        """Apply fn under the writer lock and persist; replay known tokens."""
        with writer_lock:
            if token and token in token_replies:
                return token_replies[token]
            try:
                result = fn(current())
            except Exception as e:  # surface as API error, state untouched on failure
                raise _http_error(e)
            camp.save(current(), campaign_path)
            if token:
                token_replies[token] = result
            return result

    def read(fn):
        try:
            return fn(current())
        except Exception as e:
            raise _http_error(e)

    # ------------------------------------------------------------------ reads

    @app.get("/campaign")
    def get_campaign():
        def body(c: camp.Campaign):
            return {
                "space": c.space.to_list(),
                "config": c.config.to_dict(),
                "observations": [o.to_dict() for o in c.observations],
                "rounds": [r.to_dict() for r in c.rounds],
                "functional_count": len(c.functional_observations()),
                "scored_count": len(c.scored_observations()),
            }
        return read(body)

    @app.get("/rounds")
    def get_rounds():
        return read(lambda c: [r.to_dict() for r in c.rounds])

    @app.get("/rounds/{index}")
    def get_round(index: int):
        def body(c: camp.Campaign):
            rnd = c.round(index)
            return dict(rnd.to_dict(), observations=[
                c.observation(i).to_dict() for i in rnd.suggested])
        return read(body)

    @app.get("/pareto")
    def get_pareto():
        def body(c: camp.Campaign):
            pts = c.measured_points()
            ref = c.config.acquisition.ref
            functional = c.functional_observations()
            front_rows = []
            if len(pts):
                front, idx = pareto.pareto_front(pts, ref)
                front_rows = [dict(functional[i].to_dict()) for i in idx]
            payload = {
                "measured": [o.to_dict() for o in functional],
                "front": front_rows,
                "hypervolume": pareto.hypervolume_2d(pts, ref),
                "ref": list(ref),
                "model_front": None,
            }
            if len(functional) >= 2:
                payload["model_front"] = service.model_front(c)["points"]
            return payload
        return read(body)

    @app.get("/hypervolume")
    def get_hypervolume():
        return read(lambda c: {"ref": list(c.config.acquisition.ref),
                               "hypervolume": c.hypervolume_history()})

    @app.get("/convergence")
    def get_convergence(round_index: int | None = Query(default=None, alias="round")):
        def body(c: camp.Campaign):
            idx = round_index
            if idx is None:
                snaps = [int(k) for k in c.model_snapshots]
                if not snaps:
                    raise camp.CampaignError("no suggested rounds to check")
                idx = max(snaps)
            return dict(c.check_convergence(idx), round=idx)
        return read(body)

    @app.get("/shap")
    def get_shap(target: Literal["dispersion", "leakage"]):
        def body(c: camp.Campaign):
            import numpy as np
            model, obs = service.fit_objective_model(c, target)
            data_unit = ds.normalize(c.space, np.array([o.condition for o in obs]))
            summary = explain.shap_summary(model, data_unit)
            names = c.space.names()
            return {
                "target": target,
                "ranking": [names[i] for i in summary["ranking"]],
                "mean_abs_phi": {names[i]: float(v) for i, v in
                                 enumerate(summary["mean_abs_phi"])},
                "scatter": [
                    {"id": obs[k].id, "feature": names[j],
                     "feature_value": float(obs[k].condition[j]),
                     "feature_value_normalized": float(data_unit[k, j]),
                     "phi": float(summary["phi"][k, j])}
                    for k in range(len(obs)) for j in range(len(names))
                ],
            }
        return read(body)

    @app.get("/acq-map")
    def get_acq_map(pair: str = "0,1", fixed: str = "",
                    target: Literal["dispersion", "leakage"] = "dispersion"):
        def body(c: camp.Campaign):
            i, j = (int(v) for v in pair.split(","))
            fixes = {}
            for part in filter(None, fixed.split(",")):
                name, _, val = part.partition("=")
                fixes[name.strip()] = float(val)
            return service.acquisition_heatmap(c, target, (i, j), fixes)
        return read(body)

    @app.get("/constraint-map")
    def get_constraint_map(pair: str = "0,1", fixed: str = ""):
        def body(c: camp.Campaign):
            i, j = (int(v) for v in pair.split(","))
            fixes = {}
            for part in filter(None, fixed.split(",")):
                name, _, val = part.partition("=")
                fixes[name.strip()] = float(val)
            return service.constraint_heatmap(c, (i, j), fixes)
        return read(body)

    @app.post("/whatif")
    def post_whatif(body: WhatIfBody):
        return read(lambda c: service.whatif(c, body.condition))

    # -------------------------------------------------------------- mutations

    @app.post("/scores")
    def post_score(body: ScoreBody):
        def fn(c: camp.Campaign):
            c.set_score(body.id, hitl.ConversionLabel(body.label))
            return c.observation(body.id).to_dict()
        return mutate(body.client_token, fn)

    @app.post("/observations")
    def post_observation(body: ObservationBody):
        def fn(c: camp.Campaign):
            if body.unmeasurable:
                c.set_objectives(body.id, unmeasurable=True)
            else:
                if body.dispersion is None or body.leakage is None:
                    raise camp.CampaignError(
                        "both objectives required unless unmeasurable")
                c.set_objectives(
                    body.id,
                    dispersion=camp.Measurement(body.dispersion.mean,
                                                body.dispersion.std),
                    leakage=camp.Measurement(body.leakage.mean, body.leakage.std))
            return c.observation(body.id).to_dict()
        return mutate(body.client_token, fn)

    @app.post("/rounds/next")
    def post_next_round(body: NextRoundBody):
        def fn(c: camp.Campaign):
            if c.rounds and c.rounds[-1].status != camp.RoundStatus.COMPLETE:
                raise HTTPException(
                    status_code=409,
                    detail=f"round {c.rounds[-1].index} is "
                           f"{c.rounds[-1].status.value}")
            rnd = c.suggest_round(Strategy(body.strategy) if body.strategy else None,
                                  body.hitl)
            return dict(rnd.to_dict(), observations=[
                c.observation(i).to_dict() for i in rnd.suggested])
        return mutate(body.client_token, fn)

    # ------------------------------------------------------------------ UI

    ui_root = ui_dir or os.environ.get("PARETOPILOT_UI_DIR")
    if ui_root and os.path.isdir(ui_root):
        app.mount("/ui", StaticFiles(directory=ui_root, html=True), name="ui")

        @app.get("/", include_in_schema=False)
        def index():
            # relative asset paths in index.html must resolve under the mount
            return RedirectResponse(url="/ui/")

    return app

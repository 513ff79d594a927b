import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from paretopilot import campaign as camp
from paretopilot import design_space as ds
from paretopilot.acquisition import AcquisitionConfig, Strategy
from paretopilot.hitl import ConversionLabel
from paretopilot.oracle_sim import SyntheticLab, apply_outcome, simulate_condition
from paretopilot.server import create_app

LAB = SyntheticLab(thresholds=(0.30, 0.35, 0.65, 0.70), seed=2)


def build_campaign(tmp_path, n_init=12, resolve=True, pin_noise=None):
    space = ds.default_space()
    cfg = camp.CampaignConfig(
        acquisition=AcquisitionConfig(strategy=Strategy.PARETO_UCB, q=3),
        hitl_enabled=True, seed=11, pool_size=256, fit_restarts=3,
        pin_noise=pin_noise)
    c = camp.Campaign(space, cfg)
    c.start(n_init)
    if resolve:
        for o in list(c.observations):
            apply_outcome(c, o.id, simulate_condition(LAB, space, o.condition))
    path = tmp_path / "c.json"
    camp.save(c, str(path))
    return str(path)


@pytest.fixture()
def client(tmp_path):
    path = build_campaign(tmp_path)
    return TestClient(create_app(path)), path


class TestReads:
    def test_campaign_summary(self, client):
        api, _ = client
        doc = api.get("/campaign").json()
        assert doc["config"]["strategy"] == "pareto_ucb"
        assert len(doc["observations"]) == 12
        assert doc["scored_count"] == 12

    def test_rounds(self, client):
        api, _ = client
        rounds = api.get("/rounds").json()
        assert len(rounds) == 1
        rnd = api.get("/rounds/0").json()
        assert rnd["status"] == "complete"
        assert len(rnd["observations"]) == 12
        assert api.get("/rounds/5").status_code == 404

    def test_pareto_payload(self, client):
        api, _ = client
        doc = api.get("/pareto").json()
        assert doc["ref"] == [1.0, 0.0]
        assert doc["hypervolume"] >= 0
        assert isinstance(doc["measured"], list)
        if len(doc["measured"]) >= 2:
            assert doc["model_front"] is not None
            # band values are per-point posterior stds
            for p in doc["model_front"]:
                assert p["dispersion_std"] >= 0
                assert p["leakage_std"] >= 0

    def test_hypervolume_endpoint(self, client):
        api, _ = client
        doc = api.get("/hypervolume").json()
        assert len(doc["hypervolume"]) == 1

    def test_openapi_at_spec(self, client):
        api, _ = client
        doc = api.get("/spec").json()
        assert doc["info"]["title"] == "paretopilot"
        assert "/rounds/next" in doc["paths"]

    def test_shap_endpoint(self, client):
        api, _ = client
        doc = api.get("/shap", params={"target": "leakage"}).json()
        assert len(doc["ranking"]) == 5
        assert len(doc["scatter"]) == 5 * len(
            [o for o in api.get("/campaign").json()["observations"]
             if o["dispersion"]])

    def test_acq_and_constraint_maps(self, client):
        api, _ = client
        doc = api.get("/acq-map", params={"pair": "0,1"}).json()
        raw = np.array(doc["raw"])
        con = np.array(doc["constrained"])
        assert raw.shape == con.shape
        assert np.all(con <= raw + 1e-9)  # p <= 1 and raw >= 0 on this data
        cdoc = api.get("/constraint-map", params={"pair": "0,1"}).json()
        p = np.array(cdoc["p_constraint"])
        assert p.shape == raw.shape
        assert np.all((p > 0) & (p <= 1))


class TestMutations:
    def test_score_unknown_id_404(self, client):
        api, _ = client
        r = api.post("/scores", json={"id": "zzz", "label": "burned"})
        assert r.status_code == 404

    def test_objectives_on_burned_422(self, tmp_path):
        path = build_campaign(tmp_path, resolve=False)
        api = TestClient(create_app(path))
        api.post("/scores", json={"id": "1", "label": "burned"})
        r = api.post("/observations", json={
            "id": "1", "dispersion": {"mean": 1.5, "std": 0.1},
            "leakage": {"mean": 4.0, "std": 0.2}})
        assert r.status_code == 422
        assert "cannot carry" in r.json()["detail"]

    def test_score_and_observation_flow(self, tmp_path):
        path = build_campaign(tmp_path, resolve=False)
        api = TestClient(create_app(path))
        assert api.post("/scores",
                        json={"id": "1", "label": "converted"}).status_code == 200
        r = api.post("/observations", json={
            "id": "1", "dispersion": {"mean": 2.0, "std": 0.1},
            "leakage": {"mean": 3.5, "std": 0.3}})
        assert r.status_code == 200
        assert camp.load(path).observation("1").dispersion.mean == 2.0

    def test_next_round_conflict_on_pending(self, tmp_path):
        path = build_campaign(tmp_path, resolve=False)
        api = TestClient(create_app(path))
        r = api.post("/rounds/next", json={})
        assert r.status_code == 409

    def test_next_round_suggests(self, client):
        api, path = client
        r = api.post("/rounds/next", json={})
        assert r.status_code == 200
        doc = r.json()
        assert doc["index"] == 1
        assert len(doc["observations"]) == 3
        assert camp.load(path).rounds[-1].index == 1

    def test_idempotent_client_token(self, client):
        api, path = client
        a = api.post("/rounds/next", json={"client_token": "tok-1"}).json()
        b = api.post("/rounds/next", json={"client_token": "tok-1"}).json()
        assert a == b
        assert len(camp.load(path).rounds) == 2  # second call replayed, not applied

    def test_whatif_at_converted_training_point(self, tmp_path):
        path = build_campaign(tmp_path, pin_noise=1e-10)
        api = TestClient(create_app(path))
        c = camp.load(path)
        converted = next(o for o in c.observations
                         if o.label is ConversionLabel.CONVERTED and o.functional)
        r = api.post("/whatif", json={"condition": list(converted.condition)})
        assert r.status_code == 200
        doc = r.json()
        assert doc["p_constraint"] > 0.999
        assert doc["dispersion"]["std"] < 1e-3
        assert doc["dispersion"]["mean"] == pytest.approx(
            converted.dispersion.mean, abs=1e-3)

    def test_whatif_out_of_bounds_422(self, client):
        api, _ = client
        r = api.post("/whatif", json={"condition": [0.0, 1, 1, 1, 20]})
        assert r.status_code == 422


class TestCliApiEquivalence:
    def test_same_mutations_same_bytes(self, tmp_path):
        from click.testing import CliRunner
        from paretopilot import cli

        (tmp_path / "api").mkdir()
        (tmp_path / "cli").mkdir()
        path_api = build_campaign(tmp_path / "api", resolve=False)
        path_cli = str(tmp_path / "cli" / "c.json")
        import shutil
        shutil.copy(path_api, path_cli)

        api = TestClient(create_app(path_api))
        api.post("/scores", json={"id": "1", "label": "converted"})
        api.post("/observations", json={
            "id": "1", "dispersion": {"mean": 2.0, "std": 0.1},
            "leakage": {"mean": 3.5, "std": 0.3}})

        runner = CliRunner()
        assert runner.invoke(cli.main, ["score", "-c", path_cli, "1",
                                        "converted"]).exit_code == 0
        assert runner.invoke(cli.main, ["record", "-c", path_cli, "1",
                                        "2.0±0.1", "3.5±0.3"]).exit_code == 0

        with open(path_api, "rb") as fa, open(path_cli, "rb") as fb:
            assert fa.read() == fb.read()

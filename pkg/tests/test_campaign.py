import io
import json

import numpy as np
import pytest

import oracles
from paretopilot import campaign as camp
from paretopilot import datasets, design_space as ds, hitl, pareto
from paretopilot.acquisition import AcquisitionConfig, Strategy
from paretopilot.hitl import ConversionLabel


def fresh(space, **cfg_kwargs) -> camp.Campaign:
    defaults = dict(acquisition=AcquisitionConfig(strategy=Strategy.PARETO_UCB, q=5),
                    hitl_enabled=True, seed=7, pool_size=512, fit_restarts=3)
    defaults.update(cfg_kwargs)
    return camp.Campaign(space, camp.CampaignConfig(**defaults))


def ingest_bundled(c: camp.Campaign, name=datasets.LHS_INITIAL, **kw) -> int:
    with datasets.open_dataset(name) as f:
        return c.ingest_dataset(f, **kw)


class TestIngest:
    def test_initial_table_counts(self, space):
        c = fresh(space)
        n = ingest_bundled(c)
        assert n == 30
        assert len(c.observations) == 30
        assert len(c.functional_observations()) == 10

    def test_row_16_values(self, space):
        c = fresh(space)
        ingest_bundled(c)
        o = c.observation("16")
        assert np.allclose(o.condition, [4.8, 16, 7, 26, 65])
        assert o.label is ConversionLabel.PARTIALLY_BURNED
        assert (o.dispersion.mean, o.dispersion.std) == (1.19, 0.08)
        assert (o.leakage.mean, o.leakage.std) == (4.90, 0.27)
        assert o.pulse_voltage == 385

    def test_empty_file(self, space):
        c = fresh(space)
        header = ",".join(camp.CSV_COLUMNS) + "\n"
        assert c.ingest_dataset(io.StringIO(header)) == 0
        assert c.ingest_dataset(io.StringIO("")) == 0

    def test_malformed_cell_names_row_and_column(self, space):
        c = fresh(space)
        rows = (",".join(camp.CSV_COLUMNS) + "\n"
                + "1,4.8,16,7,26,65,385,0.5,oops,0.08,4.9,0.27\n")
        with pytest.raises(camp.CampaignError, match="row 2.*dispersion_mean"):
            c.ingest_dataset(io.StringIO(rows))
        assert len(c.observations) == 0

    def test_burned_row_with_objectives_rejected(self, space):
        c = fresh(space)
        rows = (",".join(camp.CSV_COLUMNS) + "\n"
                + "1,4.8,16,7,26,65,385,1.0,1.19,0.08,4.9,0.27\n")
        with pytest.raises(camp.CampaignError, match="row 2"):
            c.ingest_dataset(io.StringIO(rows))

    def test_duplicate_condition_rejected(self, space):
        c = fresh(space)
        ingest_bundled(c)
        rows = (",".join(camp.CSV_COLUMNS) + "\n"
                + "99,4.8,16,7,26,65,385,0.5,-,-,-,-\n")
        with pytest.raises(camp.CampaignError, match="already present"):
            c.ingest_dataset(io.StringIO(rows))

    def test_all_three_bundles_coexist(self, space):
        c = fresh(space)
        total = sum(ingest_bundled(c, name) for name in datasets.ALL)
        assert total == 30 + 15 + 10
        assert len(c.functional_observations()) == 24

    def test_round_column_respected(self, space):
        c = fresh(space)
        ingest_bundled(c, datasets.ROUNDS_NO_HITL)
        assert c.observation("33").round_index == 1
        assert c.observation("43").round_index == 2


class TestStartCampaign:
    def test_round0_is_lhs_pending(self, space):
        c = fresh(space)
        rnd = c.start(30)
        assert rnd.index == 0
        assert rnd.strategy is Strategy.LHS
        assert rnd.status is camp.RoundStatus.PENDING_SCORES
        assert len(rnd.suggested) == 30

    def test_deterministic_round0(self, space):
        a, b = fresh(space), fresh(space)
        a.start(30)
        b.start(30)
        assert all(np.array_equal(x.condition, y.condition)
                   for x, y in zip(a.observations, b.observations))

    def test_suggestions_on_sampling_grid(self, space):
        c = fresh(space)
        c.start(12)
        for o in c.observations:
            for p, v in zip(space.params, o.condition):
                assert abs(v - p.snap(v)) < 1e-9

    def test_minimum_size(self, space):
        with pytest.raises(camp.CampaignError):
            fresh(space).start(1)


class TestScoreAndRecord:
    def make_started(self, space):
        c = fresh(space)
        c.start(5)
        return c

    def test_full_failure_completes_round(self, space):
        c = self.make_started(space)
        for obs_id in c.rounds[0].suggested:
            c.set_score(obs_id, ConversionLabel.UNCONVERTED)
        assert c.rounds[0].status is camp.RoundStatus.COMPLETE
        assert len(c.functional_observations()) == 0

    def test_partial_entry_leaves_pending_objectives(self, space):
        c = self.make_started(space)
        for obs_id in c.rounds[0].suggested:
            c.set_score(obs_id, ConversionLabel.CONVERTED)
        assert c.rounds[0].status is camp.RoundStatus.PENDING_OBJECTIVES

    def test_burned_cannot_carry_objectives(self, space):
        c = self.make_started(space)
        obs_id = c.rounds[0].suggested[0]
        c.set_score(obs_id, ConversionLabel.BURNED)
        with pytest.raises(camp.CampaignError):
            c.set_objectives(obs_id, dispersion=camp.Measurement(1.5, 0.1),
                             leakage=camp.Measurement(4.0, 0.2))

    def test_unknown_id_raises_not_found(self, space):
        c = self.make_started(space)
        with pytest.raises(camp.NotFoundError):
            c.set_score("nope", ConversionLabel.CONVERTED)

    def test_record_results_batch(self, space):
        c = self.make_started(space)
        ids = c.rounds[0].suggested
        results = {i: {"label": "unconverted"} for i in ids[:3]}
        results[ids[3]] = {"label": "converted",
                           "dispersion": {"mean": 2.0, "std": 0.1},
                           "leakage": {"mean": 3.0, "std": 0.2}}
        results[ids[4]] = {"label": "partially_converted", "unmeasurable": True}
        c.record_results(0, results)
        assert c.rounds[0].status is camp.RoundStatus.COMPLETE
        assert len(c.functional_observations()) == 1

    def test_replay_of_published_functional_rows(self, space):
        c = fresh(space)
        ingest_bundled(c, datasets.ROUNDS_NO_HITL)
        for oid in ("38", "39", "40"):
            o = c.observation(oid)
            assert o.functional
        assert len([o for o in c.functional_observations()
                    if o.round_index == 1]) == 4  # 33, 38, 39, 40


class TestSuggestRound:
    def seeded_campaign(self, space, **kw):
        c = fresh(space, **kw)
        ingest_bundled(c)
        c.rounds.append(camp.RoundRecord(
            index=0, strategy=Strategy.LHS, hitl_enabled=True,
            suggested=[o.id for o in c.observations],
            status=camp.RoundStatus.PENDING_SCORES))
        c._refresh_round_status()
        assert c.rounds[0].status is camp.RoundStatus.COMPLETE
        return c

    def test_contract_of_suggestions(self, space):
        c = self.seeded_campaign(space, hitl_enabled=False)
        rnd = c.suggest_round()
        assert len(rnd.suggested) == 5
        tested_before = {ds.condition_key(o.condition) for o in c.observations
                         if o.round_index == 0}
        for obs_id in rnd.suggested:
            o = c.observation(obs_id)
            ds.validate_condition(space, o.condition)
            assert ds.condition_key(o.condition) not in tested_before

    def test_hitl_batch_has_higher_constraint_probability(self, space):
        c_off = self.seeded_campaign(space, hitl_enabled=False, seed=3)
        c_on = self.seeded_campaign(space, hitl_enabled=True, seed=3)
        rnd_off = c_off.suggest_round()
        rnd_on = c_on.suggest_round()
        model = c_on.snapshot_model(1, "conversion")
        tau = c_on.config.tau

        def mean_p(campaign, rnd):
            conds = np.array([campaign.observation(i).condition
                              for i in rnd.suggested])
            return float(np.mean(hitl.constraint_map(
                model, ds.normalize(space, conds), tau)))

        p_off = mean_p(c_off, rnd_off)
        p_on = mean_p(c_on, rnd_on)
        assert p_off < 0.5  # plain picker wanders into low-feasibility space
        assert p_on > p_off

    def test_requires_complete_previous_round(self, space):
        c = fresh(space)
        c.start(5)
        with pytest.raises(camp.CampaignError, match="pending"):
            c.suggest_round()

    def test_requires_two_functional(self, space):
        c = fresh(space)
        c.start(3)
        for obs_id in c.rounds[0].suggested:
            c.set_score(obs_id, ConversionLabel.UNCONVERTED)
        with pytest.raises(camp.CampaignError, match="at least 2"):
            c.suggest_round()

    def test_zero_q_rejected_at_config(self):
        with pytest.raises(ValueError):
            AcquisitionConfig(q=0)

    def test_snapshots_stored(self, space):
        c = self.seeded_campaign(space)
        c.suggest_round()
        snaps = c.model_snapshots["1"]
        assert set(snaps) == {"dispersion", "leakage", "conversion"}
        assert snaps["conversion"]["training_ids"] == [o.id for o in
                                                       c.scored_observations()
                                                       if o.round_index == 0]


class TestConvergence:
    def run_round(self, space):
        c = fresh(space, pool_size=256)
        ingest_bundled(c)
        c.rounds.append(camp.RoundRecord(
            index=0, strategy=Strategy.LHS, hitl_enabled=True,
            suggested=[o.id for o in c.observations],
            status=camp.RoundStatus.COMPLETE))
        rnd = c.suggest_round()
        return c, rnd

    def test_exact_prediction_is_within(self, space):
        c, rnd = self.run_round(space)
        m_disp = c.snapshot_model(rnd.index, "dispersion")
        m_leak = c.snapshot_model(rnd.index, "leakage")
        for obs_id in rnd.suggested:
            o = c.observation(obs_id)
            unit = ds.normalize(space, o.condition)[None, :]
            mu_d, _ = m_disp.posterior(unit)
            mu_l, _ = m_leak.posterior(unit)
            c.set_score(obs_id, ConversionLabel.CONVERTED)
            c.set_objectives(obs_id,
                             dispersion=camp.Measurement(float(mu_d[0]), 0.1),
                             leakage=camp.Measurement(float(mu_l[0]), 0.1))
        result = c.check_convergence(rnd.index)
        assert result["converged"]
        assert all(f["within"] for f in result["flags"])

    def test_deviation_beyond_one_std_fails(self, space):
        c, rnd = self.run_round(space)
        m_disp = c.snapshot_model(rnd.index, "dispersion")
        m_leak = c.snapshot_model(rnd.index, "leakage")
        first = rnd.suggested[0]
        for obs_id in rnd.suggested:
            o = c.observation(obs_id)
            unit = ds.normalize(space, o.condition)[None, :]
            mu_d, sd_d = m_disp.posterior(unit)
            mu_l, _ = m_leak.posterior(unit)
            bump = 1.5 * float(sd_d[0]) if obs_id == first else 0.0
            c.set_score(obs_id, ConversionLabel.CONVERTED)
            c.set_objectives(obs_id,
                             dispersion=camp.Measurement(float(mu_d[0]) + bump, 0.1),
                             leakage=camp.Measurement(float(mu_l[0]), 0.1))
        result = c.check_convergence(rnd.index)
        assert not result["converged"]
        bad = [f for f in result["flags"] if not f["within"]]
        assert len(bad) == 1 and bad[0]["id"] == first

    def test_missing_snapshot_errors(self, space):
        c = fresh(space)
        ingest_bundled(c)
        c.rounds.append(camp.RoundRecord(
            index=0, strategy=Strategy.LHS, hitl_enabled=True,
            suggested=[o.id for o in c.observations],
            status=camp.RoundStatus.COMPLETE))
        with pytest.raises(camp.CampaignError, match="snapshot"):
            c.check_convergence(0)


class TestHypervolumeHistory:
    def test_round0_value_against_grid_oracle(self, space):
        c = fresh(space)
        ingest_bundled(c)
        c.rounds.append(camp.RoundRecord(
            index=0, strategy=Strategy.LHS, hitl_enabled=True,
            suggested=[o.id for o in c.observations],
            status=camp.RoundStatus.COMPLETE))
        hv = c.hypervolume_history()[0]
        pts = c.measured_points(0)
        grid = oracles.grid_hypervolume(pts, (1.0, 0.0), resolution=4000)
        assert hv == pytest.approx(grid, rel=1e-3)
        exact = oracles.exact_union_area(pts, (1.0, 0.0))
        assert hv == pytest.approx(exact, rel=1e-12)

    def test_non_decreasing_across_rounds(self, space):
        c = fresh(space)
        for name in datasets.ALL:
            ingest_bundled(c, name)
        c.rounds = [camp.RoundRecord(index=k, strategy=Strategy.LHS,
                                     hitl_enabled=True, suggested=[],
                                     status=camp.RoundStatus.COMPLETE)
                    for k in range(3)]
        hist = c.hypervolume_history()
        assert len(hist) == 3
        assert all(b >= a - 1e-12 for a, b in zip(hist, hist[1:]))

    def test_empty_campaign_zero(self, space):
        c = fresh(space)
        c.rounds.append(camp.RoundRecord(index=0, strategy=Strategy.LHS,
                                         hitl_enabled=True, suggested=[],
                                         status=camp.RoundStatus.COMPLETE))
        assert c.hypervolume_history() == [0.0]


class TestPersistence:
    def roundtrip(self, c: camp.Campaign, tmp_path) -> camp.Campaign:
        path = tmp_path / "c.json"
        camp.save(c, str(path))
        return camp.load(str(path))

    def test_lossless_roundtrip(self, space, tmp_path):
        c = fresh(space)
        ingest_bundled(c)
        c.rounds.append(camp.RoundRecord(
            index=0, strategy=Strategy.LHS, hitl_enabled=True,
            suggested=[o.id for o in c.observations],
            status=camp.RoundStatus.COMPLETE))
        c.suggest_round()
        c2 = self.roundtrip(c, tmp_path)
        assert c2.to_dict() == c.to_dict()

    def test_saves_are_byte_identical(self, space, tmp_path):
        c = fresh(space)
        ingest_bundled(c)
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        camp.save(c, str(p1))
        camp.save(c, str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_truncated_file_errors_and_preserves_original(self, space, tmp_path):
        c = fresh(space)
        path = tmp_path / "c.json"
        camp.save(c, str(path))
        original = path.read_bytes()
        path.write_text(original.decode()[:100])
        with pytest.raises(camp.CampaignError, match="not valid JSON"):
            camp.load(str(path))
        # a failed save attempt never clobbers the existing file
        path.write_bytes(original)
        assert camp.load(str(path)).to_dict() == c.to_dict()

    def test_newer_major_version_refused(self, space, tmp_path):
        c = fresh(space)
        path = tmp_path / "c.json"
        camp.save(c, str(path))
        doc = json.loads(path.read_text())
        doc["version"] = "2.0.0"
        path.write_text(json.dumps(doc))
        with pytest.raises(camp.CampaignError, match="schema"):
            camp.load(str(path))

    def test_minor_version_tolerated(self, space, tmp_path):
        c = fresh(space)
        path = tmp_path / "c.json"
        camp.save(c, str(path))
        doc = json.loads(path.read_text())
        doc["version"] = "1.9.0"
        path.write_text(json.dumps(doc))
        camp.load(str(path))


class TestInvariants:
    def test_objective_models_train_only_on_functional(self, space):
        c = fresh(space)
        ingest_bundled(c)
        c.rounds.append(camp.RoundRecord(
            index=0, strategy=Strategy.LHS, hitl_enabled=True,
            suggested=[o.id for o in c.observations],
            status=camp.RoundStatus.COMPLETE))
        c.suggest_round()
        snaps = c.model_snapshots["1"]
        assert len(snaps["dispersion"]["training_ids"]) == 10
        assert len(snaps["conversion"]["training_ids"]) == 30

    def test_suggested_never_duplicates_tested(self, space):
        c = fresh(space, pool_size=256)
        ingest_bundled(c)
        c.rounds.append(camp.RoundRecord(
            index=0, strategy=Strategy.LHS, hitl_enabled=True,
            suggested=[o.id for o in c.observations],
            status=camp.RoundStatus.COMPLETE))
        c.suggest_round()
        keys = [ds.condition_key(o.condition) for o in c.observations]
        assert len(keys) == len(set(keys))

    def test_deterministic_replay(self, space):
        def run():
            c = fresh(space, pool_size=256)
            ingest_bundled(c)
            c.rounds.append(camp.RoundRecord(
                index=0, strategy=Strategy.LHS, hitl_enabled=True,
                suggested=[o.id for o in c.observations],
                status=camp.RoundStatus.COMPLETE))
            c.suggest_round()
            return json.dumps(c.to_dict(), sort_keys=True)
        assert run() == run()

"""Command-line front door. Every verb is a thin adapter over the campaign
module: load file, apply one operation, save, print. Equivalent CLI and HTTP
command sequences produce byte-identical campaign files."""
from __future__ import annotations

import json
import re
import sys

import click
import numpy as np

from . import design_space as ds
from . import campaign as camp
from . import datasets, explain, hitl, oracle_sim, pareto
from .acquisition import AcquisitionConfig, Strategy

CAMPAIGN_ENVVAR = "PARETOPILOT_CAMPAIGN"

pass_path = click.option(
    "--campaign", "-c", "path", envvar=CAMPAIGN_ENVVAR, required=True,
    help=f"Campaign file path (or set {CAMPAIGN_ENVVAR}).")
json_flag = click.option("--json", "as_json", is_flag=True,
                         help="Machine-readable output.")


def _load(path: str) -> camp.Campaign:
    try:
        return camp.load(path)
    except FileNotFoundError:
        raise click.ClickException(f"campaign file not found: {path}")
    except camp.CampaignError as e:
        raise click.ClickException(str(e))


def _run(fn):
    """Translate campaign errors into exit-code-1 messages."""
    try:
        return fn()
    except (camp.CampaignError, ds.SpaceError, ValueError) as e:
        raise click.ClickException(str(e))


def parse_measurement(text: str) -> camp.Measurement:
    """Accept 'mean±std' or 'mean+-std' (locale-independent decimal point)."""
    m = re.fullmatch(r"\s*([-+0-9.eE]+)\s*(?:±|\+-)\s*([-+0-9.eE]+)\s*", text)
    if not m:
        raise click.ClickException(
            f"cannot parse measurement {text!r}; expected mean±std or mean+-std")
    return camp.Measurement(float(m.group(1)), float(m.group(2)))


@click.group()
def main():
    """Steer a multi-objective optimization campaign with an in-loop
    feasibility model."""


@main.command()
@pass_path
@click.option("--space-file", type=click.Path(exists=True),
              help="JSON array of parameter specs; defaults to the stock space.")
@click.option("--strategy", type=click.Choice([s.value for s in Strategy
                                               if s != Strategy.LHS]),
              default=Strategy.EHVI_GREEDY.value, show_default=True)
@click.option("--beta", type=float, default=2.0, show_default=True)
@click.option("--q", type=int, default=5, show_default=True)
@click.option("--ref", default="1.0,0.0", show_default=True,
              help="Hypervolume reference point f1,f2.")
@click.option("--tau", type=float, default=hitl.DEFAULT_TAU, show_default=True)
@click.option("--hitl/--no-hitl", "use_hitl", default=True, show_default=True)
@click.option("--n-init", type=int, default=30, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--pool-size", type=int, default=2048, show_default=True)
def init(path, space_file, strategy, beta, q, ref, tau, use_hitl, n_init, seed,
         pool_size):
    """Create a campaign file with an initial sampling round."""
    def body():
        if space_file:
            with open(space_file) as f:
                space = ds.ParameterSpace.from_list(json.load(f))
        else:
            space = ds.default_space()
        ref_pt = tuple(float(v) for v in ref.split(","))
        cfg = camp.CampaignConfig(
            acquisition=AcquisitionConfig(strategy=Strategy(strategy), beta=beta,
                                          q=q, ref=ref_pt,
                                          constraint_enabled=use_hitl),
            hitl_enabled=use_hitl, tau=tau, seed=seed, pool_size=pool_size)
        c = camp.Campaign(space, cfg)
        c.start(n_init)
        camp.save(c, path)
        click.echo(f"campaign created at {path}: {n_init} initial conditions "
                   f"pending scores")
    _run(body)


@main.command()
@pass_path
@click.argument("csv_path", required=False, type=click.Path(exists=True))
@click.option("--bundled", type=click.Choice(datasets.ALL),
              help="Ingest one of the packaged datasets instead of a file.")
@click.option("--round", "round_index", type=int, default=0, show_default=True,
              help="Round assigned to rows without a round column.")
def ingest(path, csv_path, bundled, round_index):
    """Append observations from a dataset CSV."""
    def body():
        c = _load(path)
        if bundled:
            fileobj = datasets.open_dataset(bundled)
        elif csv_path:
            fileobj = open(csv_path)
        else:
            raise click.ClickException("provide a CSV path or --bundled name")
        with fileobj:
            n = c.ingest_dataset(fileobj, default_round=round_index)
        camp.save(c, path)
        click.echo(f"ingested {n} observations")
    _run(body)


@main.command()
@pass_path
@click.option("--strategy", type=click.Choice([s.value for s in Strategy
                                               if s != Strategy.LHS]),
              default=None, help="Override the configured picker for this round.")
@click.option("--hitl/--no-hitl", "hitl_override", default=None,
              help="Override the feasibility constraint for this round.")
def suggest(path, strategy, hitl_override):
    """Fit models and open the next round of suggested conditions."""
    def body():
        c = _load(path)
        rnd = c.suggest_round(Strategy(strategy) if strategy else None,
                              hitl_override)
        camp.save(c, path)
        click.echo(f"round {rnd.index} ({rnd.strategy.value}"
                   f"{', hitl' if rnd.hitl_enabled else ''}):")
        for obs_id in rnd.suggested:
            obs = c.observation(obs_id)
            click.echo(f"  {obs_id}: " + "  ".join(
                f"{p.name}={v:g}" for p, v in zip(c.space.params, obs.condition)))
    _run(body)


@main.command()
@pass_path
@click.argument("obs_id")
@click.argument("label", type=click.Choice([l.value for l in hitl.ConversionLabel]))
def score(path, obs_id, label):
    """Record the human conversion call for one condition."""
    def body():
        c = _load(path)
        c.set_score(obs_id, hitl.ConversionLabel(label))
        camp.save(c, path)
        click.echo(f"{obs_id}: {label}")
    _run(body)


@main.command()
@pass_path
@click.argument("obs_id")
@click.argument("dispersion", required=False)
@click.argument("leakage", required=False)
@click.option("--unmeasurable", is_flag=True,
              help="Converted film that still yielded no usable devices.")
def record(path, obs_id, dispersion, leakage, unmeasurable):
    """Record measured objectives (mean±std mean±std) for one condition."""
    def body():
        c = _load(path)
        if unmeasurable:
            c.set_objectives(obs_id, unmeasurable=True)
        else:
            if not dispersion or not leakage:
                raise click.ClickException(
                    "provide dispersion and leakage as mean±std, or --unmeasurable")
            c.set_objectives(obs_id, dispersion=parse_measurement(dispersion),
                             leakage=parse_measurement(leakage))
        camp.save(c, path)
        click.echo(f"{obs_id}: recorded")
    _run(body)


@main.command()
@pass_path
@json_flag
def status(path, as_json):
    """Campaign summary: rounds, pending work, data counts."""
    c = _load(path)
    functional = len(c.functional_observations())
    info = {
        "observations": len(c.observations),
        "functional": functional,
        "scored": len(c.scored_observations()),
        "rounds": [r.to_dict() for r in c.rounds],
    }
    if as_json:
        click.echo(json.dumps(info, indent=2, sort_keys=True))
        return
    click.echo(f"{info['observations']} observations "
               f"({functional} measured, {info['scored']} scored)")
    for r in c.rounds:
        pending = [i for i in r.suggested if not c.observation(i).resolved]
        click.echo(f"round {r.index} [{r.strategy.value}] {r.status.value}"
                   + (f" ({len(pending)} pending)" if pending else ""))


@main.command("pareto")
@pass_path
@json_flag
@click.option("--csv", "csv_out", type=click.Path(), help="Write front as CSV.")
def pareto_cmd(path, as_json, csv_out):
    """Measured Pareto front and hypervolume."""
    def body():
        c = _load(path)
        pts = c.measured_points()
        ref = c.config.acquisition.ref
        hv = pareto.hypervolume_2d(pts, ref)
        front, idx = pareto.pareto_front(pts, ref) if len(pts) else (np.empty((0, 2)), [])
        functional = c.functional_observations()
        rows = [{"id": functional[i].id,
                 "dispersion": float(front[k, 0]), "leakage": float(front[k, 1])}
                for k, i in enumerate(idx)]
        if csv_out:
            with open(csv_out, "w") as f:
                f.write("id,dispersion,leakage\n")
                for r in rows:
                    f.write(f"{r['id']},{r['dispersion']},{r['leakage']}\n")
        if as_json:
            click.echo(json.dumps({"front": rows, "hypervolume": hv,
                                   "ref": list(ref)}, indent=2, sort_keys=True))
        else:
            click.echo(f"hypervolume {hv:.6g} (ref {ref[0]}, {ref[1]})")
            for r in rows:
                click.echo(f"  {r['id']}: dispersion={r['dispersion']:g} "
                           f"leakage={r['leakage']:g}")
    _run(body)


@main.command()
@pass_path
@json_flag
def hypervolume(path, as_json):
    """Dominated hypervolume after each round."""
    c = _load(path)
    hist = _run(c.hypervolume_history)
    if as_json:
        click.echo(json.dumps({"hypervolume": hist}))
    else:
        for k, v in enumerate(hist):
            click.echo(f"round {k}: {v:.6g}")


@main.command()
@pass_path
@json_flag
@click.option("--round", "round_index", type=int, default=None,
              help="Round to check (default: latest with snapshots).")
def converged(path, as_json, round_index):
    """Check whether the round's measurements landed within one model std."""
    def body():
        c = _load(path)
        idx = round_index
        if idx is None:
            with_snaps = [int(k) for k in c.model_snapshots]
            if not with_snaps:
                raise camp.CampaignError("no suggested rounds to check")
            idx = max(with_snaps)
        result = c.check_convergence(idx)
        if as_json:
            click.echo(json.dumps(result, indent=2, sort_keys=True))
        else:
            for f in result["flags"]:
                mark = "within" if f["within"] else "OUTSIDE"
                click.echo(f"  {f['id']} {f['objective']}: measured "
                           f"{f['measured']:g} vs {f['predicted']:.3g}"
                           f"±{f['predicted_std']:.3g} -> {mark}")
            click.echo("converged" if result["converged"] else "not converged")
        if not result["converged"]:
            sys.exit(2)
    _run(body)


@main.command()
@pass_path
@click.option("--target", type=click.Choice(["dispersion", "leakage"]),
              required=True)
@click.option("--out", "out_csv", type=click.Path(), required=True,
              help="CSV of per-instance, per-feature attributions.")
@click.option("--summary", "summary_json", type=click.Path(),
              help="Optional JSON ranking summary.")
def shap(path, target, out_csv, summary_json):
    """Feature attributions of a fitted objective model over its training set."""
    def body():
        c = _load(path)
        from . import service  # reuse the service-layer model fitting
        model, obs = service.fit_objective_model(c, target)
        data_unit = ds.normalize(c.space, np.array([o.condition for o in obs]))
        summary = explain.shap_summary(model, data_unit)
        names = c.space.names()
        with open(out_csv, "w") as f:
            f.write("id,feature,feature_value,feature_value_normalized,phi\n")
            for k, o in enumerate(obs):
                for j, name in enumerate(names):
                    f.write(f"{o.id},{name},{o.condition[j]},"
                            f"{data_unit[k, j]},{summary['phi'][k, j]}\n")
        ranking = {
            "target": target,
            "ranking": [names[i] for i in summary["ranking"]],
            "mean_abs_phi": {names[i]: float(summary["mean_abs_phi"][i])
                             for i in range(len(names))},
        }
        if summary_json:
            with open(summary_json, "w") as f:
                json.dump(ranking, f, indent=2, sort_keys=True)
        click.echo(f"wrote {out_csv}; ranking: " + " > ".join(ranking["ranking"]))
    _run(body)


@main.command("acq-map")
@pass_path
@click.option("--pair", default="0,1", show_default=True,
              help="Indices of the two swept parameters.")
@click.option("--fixed", default="", help="name=value fixes for the others "
              "(default: median of last suggested batch).")
@click.option("--target", type=click.Choice(["dispersion", "leakage"]),
              default="dispersion", show_default=True)
@click.option("--out", "out_csv", type=click.Path(), required=True)
def acq_map(path, pair, fixed, target, out_csv):
    """Acquisition heatmap over two parameters, raw and constrained."""
    def body():
        c = _load(path)
        from . import service
        i, j = (int(v) for v in pair.split(","))
        fixes = {}
        for part in filter(None, fixed.split(",")):
            name, _, val = part.partition("=")
            fixes[name.strip()] = float(val)
        grid = service.acquisition_heatmap(c, target, (i, j), fixes)
        names = c.space.names()
        with open(out_csv, "w") as f:
            f.write(f"{names[i]},{names[j]},raw,constrained\n")
            for r, vi in enumerate(grid["axis_i"]):
                for s, vj in enumerate(grid["axis_j"]):
                    con = grid["constrained"][r][s] if grid["constrained"] else ""
                    f.write(f"{vi},{vj},{grid['raw'][r][s]},{con}\n")
        click.echo(f"wrote {out_csv}")
    _run(body)


@main.command()
@pass_path
@click.argument("lab_file", type=click.Path(exists=True))
def simulate(path, lab_file):
    """Resolve pending suggestions using a synthetic lab definition."""
    def body():
        c = _load(path)
        with open(lab_file) as f:
            lab = oracle_sim.SyntheticLab.from_dict(json.load(f))
        resolved = 0
        for obs in c.observations:
            if obs.resolved:
                continue
            outcome = oracle_sim.simulate_condition(lab, c.space, obs.condition)
            oracle_sim.apply_outcome(c, obs.id, outcome)
            resolved += 1
        camp.save(c, path)
        click.echo(f"simulated {resolved} outcomes")
    _run(body)


@main.command()
@click.option("--ab/--single", default=True, show_default=True,
              help="Run both arms or only the feasibility-aware one.")
@click.option("--seeds", type=int, default=5, show_default=True)
@click.option("--rounds", type=int, default=2, show_default=True)
@click.option("--q", type=int, default=5, show_default=True)
@click.option("--n-init", type=int, default=30, show_default=True)
@click.option("--lab-file", type=click.Path(exists=True),
              help="Synthetic lab JSON (default: stock lab).")
@click.option("--out", "out_csv", type=click.Path(), required=True)
def benchmark(ab, seeds, rounds, q, n_init, lab_file, out_csv):
    """A/B yield benchmark on the synthetic lab; writes per-round CSV."""
    def body():
        if lab_file:
            with open(lab_file) as f:
                lab = oracle_sim.SyntheticLab.from_dict(json.load(f))
        else:
            lab = oracle_sim.SyntheticLab()
        results = oracle_sim.run_benchmark(lab, rounds=rounds, q=q,
                                           n_init=n_init,
                                           seeds=tuple(range(seeds)), ab=ab)
        with open(out_csv, "w") as f:
            f.write("arm,seed,round,yield,hypervolume\n")
            for r in results:
                arm = "hitl" if r["with_hitl"] else "plain"
                for k, (y, hv) in enumerate(zip(r["yields"], r["hypervolume"])):
                    f.write(f"{arm},{r['seed']},{k},{y},{hv}\n")
        click.echo(f"wrote {out_csv}")
    _run(body)


@main.command()
@pass_path
@click.option("--port", type=int, default=8787, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui-dir", type=click.Path(exists=True),
              help="Built web console to serve at / (defaults to "
                   "$PARETOPILOT_UI_DIR).")
def serve(path, port, host, ui_dir):
    """Serve the HTTP API (and the web console, if built) for this campaign."""
    import uvicorn
    from .server import create_app
    app = create_app(path, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)


@main.command()
@pass_path
@click.option("--out-dir", type=click.Path(), required=True)
def export(path, out_dir):
    """Write the figure-ready CSVs: observations, front, hypervolume history."""
    def body():
        import os
        c = _load(path)
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "observations.csv"), "w") as f:
            f.write(",".join(camp.CSV_COLUMNS) + ",round\n")
            for o in c.observations:
                cells = [o.id] + [f"{v:g}" for v in o.condition]
                cells.append(f"{o.pulse_voltage:g}" if o.pulse_voltage is not None
                             else camp.MISSING)
                cells.append(f"{hitl.score_to_value(o.label):g}" if o.label
                             else camp.MISSING)
                for m in (o.dispersion, o.leakage):
                    cells += ([f"{m.mean:g}", f"{m.std:g}"] if m
                              else [camp.MISSING, camp.MISSING])
                cells.append(str(o.round_index))
                f.write(",".join(cells) + "\n")
        pts = c.measured_points()
        ref = c.config.acquisition.ref
        with open(os.path.join(out_dir, "pareto_front.csv"), "w") as f:
            f.write("dispersion,leakage\n")
            if len(pts):
                front, _ = pareto.pareto_front(pts, ref)
                for p in front:
                    f.write(f"{p[0]},{p[1]}\n")
        with open(os.path.join(out_dir, "hypervolume.csv"), "w") as f:
            f.write("round,hypervolume\n")
            for k, v in enumerate(c.hypervolume_history()):
                f.write(f"{k},{v}\n")
        click.echo(f"wrote {out_dir}/observations.csv, pareto_front.csv, "
                   "hypervolume.csv")
    _run(body)


if __name__ == "__main__":
    main()

"""Operator entry point.

Subcommands: ``simulate`` (method comparison over realizations), ``tune-tau``
(annotation-free temperature search), ``synthetic`` (exact-MI agreement lab)
and ``serve`` (interactive annotation service). Exit codes: 0 success,
1 runtime failure, 2 usage error. ``--seed`` pins all stochastic behavior;
identical invocations write byte-identical archives.
"""
from __future__ import annotations

import functools
import sys

import click

from . import dataio, harness, synthetic, tuner
from .dataio import BundleLoadError
from .parallel import resolve_threads


def _structured_errors(fn):
    """Convert runtime failures into exit-code-1 errors with clean messages."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except BundleLoadError as exc:
            raise click.ClickException(f"bundle error: {exc}")
        except (ValueError, FileExistsError, OSError) as exc:
            raise click.ClickException(str(exc))

    return wrapper


def _parse_methods(text: str) -> list[str]:
    methods = [m.strip() for m in text.split(",") if m.strip()]
    from .baselines import STRATEGY_KINDS
    for m in methods:
        if m not in STRATEGY_KINDS:
            raise click.UsageError(
                f"unknown method {m!r}; choose from {', '.join(STRATEGY_KINDS)}")
    if not methods:
        raise click.UsageError("no methods given")
    return methods


def _parse_grid(text: str) -> tuner.TauGrid:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
        return tuner.TauGrid(values)
    except ValueError as exc:
        raise click.UsageError(f"bad temperature grid {text!r}: {exc}")


def _curve_files(summary: dict, budget: int, deltas) -> dict[str, str]:
    files = {}
    for method, data in summary["curves"].items():
        points = [
            harness.CurvePoint(
                budget=t + 1,
                identification=data["identification"][t],
                near_best={d: data["near_best"][d][t] for d in deltas},
                gap_p95=data["gap_p95"][t],
            )
            for t in range(budget)
        ]
        columns: dict[str, list] = {
            "budget": [p.budget for p in points],
            "identification": [p.identification for p in points],
        }
        for d in deltas:
            columns[f"near_best_{d:g}"] = [p.near_best[d] for p in points]
        columns["gap_p95"] = [p.gap_p95 for p in points]
        files[f"curves/{method}.csv"] = dataio.curve_csv(columns)
    return files


def _summary_payload(summary: dict, tau, tau_source: str) -> dict:
    eff = summary["efficiency"]
    return {
        "tau": tau,
        "tau_source": tau_source,
        "labels_to_full": summary["labels_to_full"],
        "efficiency": None if eff is None else {
            "budgets": eff.budgets,
            "select_llm_budget": eff.select_llm_budget,
            "strongest_baseline": eff.strongest_baseline,
            "strongest_budget": eff.strongest_budget,
            "reduction": eff.reduction,
        },
        "gap_tables": {
            str(level): table for level, table in summary["gap_tables"].items()
        },
        "gap_excluded": {
            method: data["gap_excluded"] for method, data in summary["curves"].items()
        },
    }


@click.group()
def main():
    """Active model selection under an annotation budget."""


@main.command()
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True))
@click.option("--methods", default="select-llm,random,margin,min-agreement,vma,amc",
              show_default=True)
@click.option("--realizations", default=1000, show_default=True)
@click.option("--size", default=None, type=int, help="Realization size; defaults to the pool size.")
@click.option("--budget", default=None, type=int, help="Annotation budget; defaults to the size.")
@click.option("--tau", default="auto", show_default=True,
              help="Temperature for select-llm, or 'auto' for the proxy tuner.")
@click.option("--grid", default=None, help="Comma-separated tuner grid (with --tau auto).")
@click.option("--deltas", default="0.001,0.005,0.01", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--preset", type=click.Choice(["desk"]), default=None,
              help="desk: 100 realizations for quick runs.")
@click.option("--threads", default=None, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--force", is_flag=True, help="Overwrite an existing archive.")
@_structured_errors
def simulate(bundle_path, methods, realizations, size, budget, tau, grid, deltas,
             seed, preset, threads, out_dir, force):
    """Compare selection methods on a bundle over seeded realizations."""
    methods = _parse_methods(methods)
    try:
        delta_values = tuple(float(d) for d in deltas.split(",") if d.strip())
    except ValueError:
        raise click.UsageError(f"bad deltas {deltas!r}")
    for d in delta_values:
        if not 0 <= d < 1:
            raise click.UsageError(f"delta {d} outside [0, 1)")
    if preset == "desk":
        realizations = min(realizations, 100)
    threads = resolve_threads(threads)

    bundle = dataio.load_bundle(bundle_path)
    plan = harness.RealizationPlan(
        pool_size=bundle.n,
        size=size if size is not None else bundle.n,
        realizations=realizations,
        budget=budget,
        seed=seed,
    )

    tau_value, tau_source = None, "none"
    if "select-llm" in methods:
        if tau == "auto":
            grid_obj = _parse_grid(grid) if grid else tuner.TauGrid()
            tuned = tuner.tune_tau(bundle.tensor, grid_obj,
                                   realization_size=plan.size, seed=seed,
                                   threads=threads)
            tau_value, tau_source = tuned.tau, "auto"
            if tuned.degenerate:
                tau_source = "auto-degenerate"
            click.echo(f"tuned tau = {tau_value:g} ({tau_source})", err=True)
        else:
            try:
                tau_value = float(tau)
            except ValueError:
                raise click.UsageError(f"--tau must be a decimal or 'auto', got {tau!r}")
            if tau_value <= 0:
                raise click.UsageError("--tau must be positive")
            tau_source = "flag"

    result = harness.run_trials(bundle, methods, plan, tau=tau_value, threads=threads)
    summary = harness.summarize(result, bundle.oracle, deltas=delta_values)

    config = {
        "subcommand": "simulate",
        "bundle": bundle.name,
        "methods": methods,
        "realizations": plan.realizations,
        "size": plan.size,
        "budget": plan.effective_budget,
        "deltas": list(delta_values),
        "seed": seed,
        "tau": tau_value,
        "tau_source": tau_source,
    }
    files = {
        "config.json": dataio.summary_json(config),
        "summary.json": dataio.summary_json(_summary_payload(summary, tau_value, tau_source)),
    }
    files.update(_curve_files(summary, plan.effective_budget, delta_values))
    out = dataio.write_archive(files, out_dir, force=force)
    click.echo(f"wrote {len(files)} files to {out}", err=True)


@main.command("tune-tau")
@click.option("--bundle", "bundle_path", required=True, type=click.Path(exists=True))
@click.option("--grid", default=None, help="Comma-separated temperatures; defaults to the full grid.")
@click.option("--realizations", default=tuner.DEFAULT_REALIZATIONS, show_default=True)
@click.option("--size", default=None, type=int)
@click.option("--seed", default=0, show_default=True)
@click.option("--threads", default=None, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--force", is_flag=True)
@_structured_errors
def tune_tau_cmd(bundle_path, grid, realizations, size, seed, threads, out_dir, force):
    """Pick a temperature from response similarities alone."""
    grid_obj = _parse_grid(grid) if grid else tuner.TauGrid()
    threads = resolve_threads(threads)
    bundle = dataio.load_bundle(bundle_path)
    result = tuner.tune_tau(bundle.tensor, grid_obj, realizations=realizations,
                            realization_size=size, seed=seed, threads=threads)

    rows = {"tau": [], "budget": [], "identification": []}
    for tau_value in sorted(result.curves):
        curve = result.curves[tau_value]
        for t, value in enumerate(curve, start=1):
            rows["tau"].append(tau_value)
            rows["budget"].append(t)
            rows["identification"].append(value)
    config = {
        "subcommand": "tune-tau",
        "bundle": bundle.name,
        "grid": list(grid_obj.values),
        "realizations": realizations,
        "size": size if size is not None else bundle.n,
        "seed": seed,
    }
    files = {
        "config.json": dataio.summary_json(config),
        "summary.json": dataio.summary_json(
            {"tau": result.tau, "degenerate": result.degenerate}),
    }
    if rows["tau"]:
        columns = {
            "tau": [f"{v:.6f}" for v in rows["tau"]],
            "budget": rows["budget"],
            "identification": rows["identification"],
        }
        files["tau_curves.csv"] = dataio.curve_csv(columns)
    out = dataio.write_archive(files, out_dir, force=force)
    click.echo(f"selected tau = {result.tau:g}; wrote {out}", err=True)


@main.command("synthetic")
@click.option("--d", "dimension", default=8, show_default=True)
@click.option("--m", "model_counts", default="2,5,10,20", show_default=True)
@click.option("--maxp", default=None,
              help="Comma-separated posterior peaks applied to every model count.")
@click.option("--n-syn", default=100, show_default=True)
@click.option("--tau", default=1.0, show_default=True)
@click.option("--seeds", default=2000, show_default=True)
@click.option("--seed", "master_seed", default=0, show_default=True)
@click.option("--threads", default=None, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--force", is_flag=True)
@_structured_errors
def synthetic_cmd(dimension, model_counts, maxp, n_syn, tau, seeds, master_seed,
                  threads, out_dir, force):
    """Rank agreement between the selection rule and exact information gain."""
    try:
        counts = tuple(int(v) for v in model_counts.split(",") if v.strip())
    except ValueError:
        raise click.UsageError(f"bad --m list {model_counts!r}")
    max_p = None
    if maxp is not None:
        try:
            values = tuple(float(v) for v in maxp.split(",") if v.strip())
        except ValueError:
            raise click.UsageError(f"bad --maxp list {maxp!r}")
        max_p = {m: values for m in counts}
    else:
        for m in counts:
            if m not in synthetic.DEFAULT_MAX_P:
                raise click.UsageError(
                    f"no default posterior rows for m={m}; pass --maxp explicitly")
    config = synthetic.ValidationConfig(
        d=dimension, model_counts=counts, max_p=max_p, n_syn=n_syn,
        tau=tau, seeds=seeds, master_seed=master_seed)
    result = synthetic.run_validation(config, threads=resolve_threads(threads))

    agreement = {
        "m": [r.m for r in result.reports],
        "maxP": [f"{r.max_p:.6f}" for r in result.reports],
        "top1": [r.top1_recall for r in result.reports],
        "top5pct": [r.top5pct_recall for r in result.reports],
        "spearman": [r.spearman for r in result.reports],
        "pairwise": [r.pairwise_accuracy for r in result.reports],
        "seeds": [r.seeds for r in result.reports],
    }
    scatter = {"m": [], "maxP": [], "rule_rank": [], "mi_rank": []}
    for (m, mp), (rule_ranks, mi_ranks) in sorted(result.scatter.items()):
        for rr, mr in zip(rule_ranks, mi_ranks):
            scatter["m"].append(m)
            scatter["maxP"].append(f"{mp:.6f}")
            scatter["rule_rank"].append(rr)
            scatter["mi_rank"].append(mr)
    files = {
        "config.json": dataio.summary_json({
            "subcommand": "synthetic", "d": dimension, "m": list(counts),
            "maxp": maxp, "n_syn": n_syn, "tau": tau, "seeds": seeds,
            "seed": master_seed,
        }),
        "agreement.csv": dataio.curve_csv(agreement),
        "rank_scatter.csv": dataio.curve_csv(scatter),
    }
    out = dataio.write_archive(files, out_dir, force=force)
    click.echo(f"wrote {len(result.reports)} agreement rows to {out}", err=True)


@main.command()
@click.option("--bundle", "bundle_paths", required=True, multiple=True,
              type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--session-log", default=None, type=click.Path(),
              help="Directory for per-session write-ahead logs.")
@click.option("--static", "static_dir", default=None, type=click.Path(exists=True),
              help="Directory of built console files to serve at /ui.")
@_structured_errors
def serve(bundle_paths, host, port, session_log, static_dir):
    """Host the interactive annotation service."""
    from .service import create_app

    bundles = {}
    for path in bundle_paths:
        bundle = dataio.load_bundle(path)
        bundles[bundle.name] = bundle
        click.echo(f"loaded bundle {bundle.name!r} (n={bundle.n}, m={bundle.m})", err=True)
    app = create_app(bundles, session_log_dir=session_log)
    if static_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=static_dir, html=True), name="console")

    import uvicorn
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    sys.exit(main())

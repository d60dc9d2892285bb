"""Command-line client for the simulation service layer.

Verbs mirror the service endpoints and stay thin: parse arguments, call the
library, format the result.  `serve` hosts the FastAPI app with the live
teleoperation websocket.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .errors import CbfInfeasibleError, ContractError, ScenarioError
from .harness import compare as compare_traces
from .harness import run as run_scenario
from .harness import scenario_sidecar, sweep as sweep_scenario, trace_from_csv, trace_summary, trace_to_csv
from .oracle import run_jcf_oracle_suite
from .scenario import Scenario, builtin_scenario, load_scenario


def _load(spec: str) -> Scenario:
    path = Path(spec)
    if path.exists():
        return load_scenario(path)
    return builtin_scenario(spec)


def _print_summary(name: str, rows) -> None:
    s = trace_summary(rows)
    click.echo(
        f"{name}: steps={s.steps} min_h={s.min_h:.4g} max|F|={s.max_force:.4g} "
        f"mean|u-u_ref|={s.mean_u_dev:.4g} min_ledger_margin={s.min_ledger_margin:.3g} "
        f"beta_extra={s.beta_extra:.4g} fallbacks={s.fallback_steps}"
    )


@click.group()
def main() -> None:
    """Safe and stable haptic shared-autonomy teleoperation tools."""


@main.command()
@click.argument("scenario")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Trace CSV path.")
def run(scenario: str, out: str | None) -> None:
    """Run SCENARIO (a TOML path or a built-in name) and write its trace."""
    try:
        sc = _load(scenario)
        rows = run_scenario(sc)
    except (ScenarioError, ContractError, CbfInfeasibleError) as exc:
        raise click.ClickException(str(exc)) from exc
    if out is not None:
        out_path = Path(out)
        out_path.write_text(trace_to_csv(rows))
        out_path.with_suffix(out_path.suffix + ".meta.json").write_text(scenario_sidecar(sc))
        click.echo(f"wrote {out_path}")
    _print_summary(sc.name, rows)


@main.command()
@click.argument("trace_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("trace_b", type=click.Path(exists=True, dir_okay=False))
@click.option("--window", type=float, default=5.0, help="Envelope window in seconds.")
def compare(trace_a: str, trace_b: str, window: float) -> None:
    """Compare two trace CSV files."""
    try:
        rows_a = trace_from_csv(Path(trace_a).read_text())
        rows_b = trace_from_csv(Path(trace_b).read_text())
        report = compare_traces(rows_a, rows_b, window_s=window)
    except ContractError as exc:
        raise click.ClickException(str(exc)) from exc
    for label, s in (("A", report.a), ("B", report.b)):
        click.echo(
            f"{label}: max|F|={s.max_force:.4g} mean|F|={s.mean_force:.4g} "
            f"int|F|dt={s.integral_abs_force:.4g} mean|u-u_ref|={s.mean_u_dev:.4g} "
            f"F.v<0 frac={s.frac_force_opposing_vel:.3f}"
        )
    click.echo(
        f"trajectory deviation: max={report.trajectory_dev_max:.4g} "
        f"mean={report.trajectory_dev_mean:.4g}"
    )
    click.echo(f"envelope A ({report.window_s}s windows): " + ", ".join(f"{e:.4g}" for e in report.envelope_a))
    click.echo(f"envelope B ({report.window_s}s windows): " + ", ".join(f"{e:.4g}" for e in report.envelope_b))


@main.command()
@click.argument("scenario")
@click.option("--param", required=True, help="Sweep spec, e.g. k_v=1,5")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Trace CSV path stem.")
def sweep(scenario: str, param: str, out: str | None) -> None:
    """Run SCENARIO once per value of a swept parameter."""
    if "=" not in param:
        raise click.ClickException("expected --param name=v1,v2,...")
    name, _, raw_values = param.partition("=")
    try:
        values = [float(v) for v in raw_values.split(",") if v]
        sc = _load(scenario)
        traces = sweep_scenario(sc, name.strip(), values)
    except (ScenarioError, ContractError, ValueError, CbfInfeasibleError) as exc:
        raise click.ClickException(str(exc)) from exc
    for value, rows in traces.items():
        _print_summary(f"{sc.name} {name}={value:g}", rows)
        if out is not None:
            stem = Path(out)
            path = stem.with_name(f"{stem.stem}_{name}_{value:g}{stem.suffix or '.csv'}")
            path.write_text(trace_to_csv(rows))
            click.echo(f"wrote {path}")


@main.command()
@click.option("--scenario", "scenario_spec", default="teleop-2d", help="Scenario for the live loop.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(scenario_spec: str, host: str, port: int) -> None:
    """Host the teleoperation service (REST + websocket)."""
    import uvicorn

    from .service import create_app

    try:
        sc = _load(scenario_spec)
    except (ScenarioError, ContractError) as exc:
        raise click.ClickException(str(exc)) from exc
    uvicorn.run(create_app(sc), host=host, port=port)


@main.command("oracle-check")
@click.option("--n", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
def oracle_check(n: int, seed: int) -> None:
    """Certify the joint-synthesis enumeration against the numeric oracle."""
    report = run_jcf_oracle_suite(n=n, seed=seed)
    click.echo(
        f"instances={report.instances} max_cost_gap={report.max_cost_gap:.3e} "
        f"max_point_dist={report.max_point_dist:.3e} max_kkt_residual={report.max_kkt_residual:.3e}"
    )
    if not report.ok:
        click.echo("FAIL: enumeration disagrees with the numeric oracle", err=True)
        sys.exit(1)
    click.echo("ok")


if __name__ == "__main__":
    main()

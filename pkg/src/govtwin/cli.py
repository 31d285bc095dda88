"""Scenario runner CLI: execute scripted governance/simulation timelines,
check determinism, and optionally serve the HTTP API afterwards."""

from __future__ import annotations

import json
import sys

import click

from . import __version__
from .scenario import ScenarioError, bundled_scenario_names, replay_check, run_scenario


@click.group()
def main() -> None:
    """Governed building twin: scenario runner and service."""


@main.command()
@click.argument("scenario")
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Directory for logs and report.json.")
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--serve", is_flag=True, help="Serve the HTTP API after the timeline runs.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8321, show_default=True)
@click.option("--live/--stepped", "live", default=False, show_default=True,
              help="Advance simulated time on the wall clock while serving.")
def run(scenario: str, out_dir, seed, serve, host, port, live) -> None:
    """Run SCENARIO (a JSON file path or a bundled name) headlessly."""
    try:
        if serve:
            from .service import ApiConfig, serve_scenario

            serve_scenario(scenario, ApiConfig(host=host, port=port, live=live),
                           out_dir=out_dir, seed_override=seed)
            return
        report = run_scenario(scenario, out_dir=out_dir, seed_override=seed)
    except ScenarioError as exc:
        raise click.ClickException(str(exc)) from None
    click.echo(json.dumps(
        {k: report[k] for k in
         ("scenario", "seed", "ok", "determinism_digest", "runtime_s")},
        indent=2))
    for check in report["checks"]:
        status = "ok" if check["ok"] else "FAIL"
        click.echo(f"  [{status}] {check['check']}: {check['detail']}"
                   if "detail" in check else f"  [{status}] {check['check']}")
    if not report["ok"]:
        sys.exit(1)


@main.command()
@click.argument("scenario")
@click.option("--runs", type=int, default=2, show_default=True)
@click.option("--seed", type=int, default=None)
def check(scenario: str, runs: int, seed) -> None:
    """Replay SCENARIO several times and compare determinism digests."""
    try:
        passed, digests = replay_check(scenario, runs=runs, seed_override=seed)
    except ScenarioError as exc:
        raise click.ClickException(str(exc)) from None
    for i, digest in enumerate(digests):
        click.echo(f"run {i}: {digest}")
    click.echo("PASS" if passed else "FAIL")
    if not passed:
        sys.exit(1)


@main.command()
def scenarios() -> None:
    """List bundled scenario names."""
    for name in bundled_scenario_names():
        click.echo(name)


@main.command()
def version() -> None:
    click.echo(__version__)


if __name__ == "__main__":
    main()

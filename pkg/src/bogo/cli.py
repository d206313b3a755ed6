"""Command-line interface for running campaigns.

Exit codes: 0 on success, 2 for validation problems (bad config, point
outside the domain, malformed arguments), 3 for numerical failures or
corrupt state files.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import campaign as camp
from .errors import NumericalError, ValidationError, CorruptStateFile
from .store import CampaignStore

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _run(fn):
    try:
        return fn()
    except KeyError as exc:
        _fail(EXIT_VALIDATION, f"unknown campaign {exc.args[0]!r}")
    except ValidationError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except (NumericalError, CorruptStateFile) as exc:
        _fail(EXIT_NUMERICAL, str(exc))


def _parse_point(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError:
        _fail(EXIT_VALIDATION, f"could not parse point {text!r}; expected comma-separated numbers")


dir_option = click.option(
    "--dir",
    "state_dir",
    default="./campaigns",
    envvar="BOGO_DIR",
    show_default=True,
    help="Directory holding campaign state.",
)


@click.group()
def main():
    """Sequential experiment-design campaigns over Gaussian-process surrogates."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
@dir_option
def create(config_path: str, state_dir: str):
    """Create a campaign from a JSON config file and print its id."""

    def go():
        try:
            raw = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            _fail(EXIT_VALIDATION, f"config is not valid JSON: {exc}")
        config = camp.CampaignConfig.from_dict(raw)
        state = CampaignStore(state_dir).create(config)
        click.echo(json.dumps({"campaign_id": state.campaign_id, "revision": state.revision}))

    _run(go)


@main.command()
@click.argument("campaign_id")
@click.option("--x", "x_text", required=True, help='Design point, e.g. "0.2,0.7".')
@click.option("--y", required=True, type=float, help="Observed response.")
@click.option("--tag", default="", help="Free-form label stored with the observation.")
@dir_option
def tell(campaign_id: str, x_text: str, y: float, tag: str, state_dir: str):
    """Record an observed (x, y) pair."""

    def go():
        point = _parse_point(x_text)
        state = CampaignStore(state_dir).tell(campaign_id, point, y, tag=tag)
        click.echo(json.dumps({"revision": state.revision, "n": state.n}))

    _run(go)


@main.command()
@click.argument("campaign_id")
@dir_option
def ask(campaign_id: str, state_dir: str):
    """Print the next suggested design point as JSON."""

    def go():
        state, suggestion = CampaignStore(state_dir).ask(campaign_id)
        out = {"revision": state.revision, **suggestion.to_dict()}
        click.echo(json.dumps(out))

    _run(go)


@main.command()
@click.argument("campaign_id")
@click.option("--refit-per-fold", is_flag=True, default=False)
@dir_option
def diagnose(campaign_id: str, refit_per_fold: bool, state_dir: str):
    """Print the leave-one-out calibration table as CSV."""

    def go():
        from .diagnostics import report_to_csv

        state = CampaignStore(state_dir).load(campaign_id)
        report = camp.diagnose(state, refit_per_fold=refit_per_fold or None)
        click.echo(report_to_csv(report), nl=False)

    _run(go)


@main.command()
@click.argument("campaign_id")
@click.option("--axis", default=0, show_default=True, type=int)
@click.option("--resolution", default=200, show_default=True, type=int)
@click.option("--slice", "slice_text", default=None, help='Fixed coordinates, e.g. "0.1,0.2".')
@dir_option
def curve(campaign_id: str, axis: int, resolution: int, slice_text: str | None, state_dir: str):
    """Print the posterior slice along one axis as CSV."""

    def go():
        state = CampaignStore(state_dir).load(campaign_id)
        slice_values = _parse_point(slice_text) if slice_text else None
        rows = camp.posterior_curve(state, axis=axis, slice_values=slice_values, resolution=resolution)
        click.echo("x,mean,lower,upper,acquisition")
        for row in rows:
            click.echo(f"{row.x!r},{row.mean!r},{row.lower!r},{row.upper!r},{row.acquisition!r}")

    _run(go)


@main.command()
@click.option("--dir", "state_dir", required=True, help="Directory holding campaign state.")
@click.option("--port", required=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui", "ui_dir", default=None, type=click.Path(file_okay=False), help="Static dashboard directory to serve at /ui.")
def serve(state_dir: str, port: int, host: str, ui_dir: str | None):
    """Run the HTTP campaign service."""

    def go():
        from .service import serve as run_service

        try:
            run_service(state_dir, port=port, host=host, ui_dir=ui_dir)
        except OSError as exc:
            _fail(EXIT_VALIDATION, f"cannot bind port {port}: {exc}")

    _run(go)


if __name__ == "__main__":
    main()

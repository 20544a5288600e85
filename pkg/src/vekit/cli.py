"""Batch command-line interface.

Reads scenario documents (the same JSON schema the HTTP service accepts),
evaluates VE points, curves, limits, TND counts, minimum detectable VE, or
simulated precision, and writes plain values, CSV, or the service-shaped
JSON body. Exit codes: 0 success, 2 invalid input, 3 domain error.
"""
from __future__ import annotations

import csv
import io
import sys
from pathlib import Path
from typing import Callable, Optional

import click
from pydantic import ValidationError as PydanticValidationError

from . import api
from .errors import DomainError, ValidationError
from .scenario import ComparisonDoc, ScenarioDocument, canonical_json, format_float

EXIT_VALIDATION = 2
EXIT_DOMAIN = 3


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_scenario(path: str) -> ScenarioDocument:
    try:
        text = Path(path).read_text()
    except OSError as err:
        _fail(f"cannot read scenario file: {err}", EXIT_VALIDATION)
    try:
        return ScenarioDocument.model_validate_json(text)
    except PydanticValidationError as err:
        _fail(f"invalid scenario document: {err}", EXIT_VALIDATION)


def _comparison(
    variant: int,
    vaccine: str,
    variant_other: Optional[int],
    vaccine_ref: Optional[str],
) -> ComparisonDoc:
    if variant_other is not None and vaccine_ref is not None:
        _fail("use either --variant-other or --vaccine-ref, not both", EXIT_VALIDATION)
    if vaccine_ref is not None:
        kind = "relative_vaccines"
    elif variant_other is not None:
        kind = "relative_variants"
    else:
        kind = "variant_specific"
    try:
        return ComparisonDoc(
            type=kind,
            variant=variant,
            vaccine=vaccine,
            variant_other=variant_other,
            vaccine_ref=vaccine_ref,
        )
    except PydanticValidationError as err:
        _fail(f"invalid comparison: {err}", EXIT_VALIDATION)


def _comparison_label(comp: ComparisonDoc) -> str:
    if comp.type == "relative_variants":
        return f"relative_variants:{comp.variant}:{comp.variant_other}:{comp.vaccine}"
    if comp.type == "relative_vaccines":
        return f"relative_vaccines:{comp.variant}:{comp.vaccine}:{comp.vaccine_ref}"
    return f"variant_specific:{comp.variant}:{comp.vaccine}"


def _run(builder: Callable[[], dict]) -> dict:
    try:
        return builder()
    except ValidationError as err:
        _fail(str(err), EXIT_VALIDATION)
    except DomainError as err:
        _fail(str(err), EXIT_DOMAIN)


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            [format_float(v) if isinstance(v, float) else v for v in row]
        )
    return buf.getvalue()


def _ve_cell(value) -> object:
    return "-inf" if isinstance(value, dict) else value


scenario_option = click.option(
    "--scenario", "scenario_path", required=True, type=click.Path(), help="Scenario JSON file."
)
format_option = click.option(
    "--format", "fmt", type=click.Choice(["plain", "csv", "json"]), default=None
)
out_option = click.option("--out", default=None, type=click.Path(), help="Write to file.")
comparison_options = [
    click.option("--variant", required=True, type=int),
    click.option("--vaccine", required=True),
    click.option("--variant-other", type=int, default=None),
    click.option("--vaccine-ref", default=None),
]


def with_comparison(fn):
    for opt in reversed(comparison_options):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Vaccine-effectiveness calculations on scenario files."""


@main.command()
@scenario_option
@click.option("--measure", required=True, type=click.Choice(["irr", "crr", "or"]))
@with_comparison
@click.option("--t", type=float, default=None, help="Horizon override.")
@format_option
@out_option
def ve(scenario_path, measure, variant, vaccine, variant_other, vaccine_ref, t, fmt, out):
    """One VE value for a comparison."""
    doc = _load_scenario(scenario_path)
    comp = _comparison(variant, vaccine, variant_other, vaccine_ref)
    body = _run(lambda: api.point_result(doc, measure, comp, t))
    fmt = fmt or "plain"
    if fmt == "plain":
        value = body["ve"]
        _emit("divergent (-inf)\n" if isinstance(value, dict) else f"{value:.6f}\n", out)
    elif fmt == "csv":
        row = [body["t"], _ve_cell(body["ve"]), measure, _comparison_label(comp)]
        _emit(_csv_text(["t", "ve", "kind", "comparison"], [row]), out)
    else:
        _emit(canonical_json(body) + "\n", out)


@main.command()
@scenario_option
@click.option("--measure", required=True, type=click.Choice(["irr", "crr", "or"]))
@with_comparison
@click.option("--t-start", type=float, required=True)
@click.option("--t-stop", type=float, required=True)
@click.option("--points", type=int, default=50, show_default=True)
@click.option(
    "--spacing", type=click.Choice(["linear", "log"]), default="linear", show_default=True
)
@format_option
@out_option
def curve(
    scenario_path,
    measure,
    variant,
    vaccine,
    variant_other,
    vaccine_ref,
    t_start,
    t_stop,
    points,
    spacing,
    fmt,
    out,
):
    """VE over a time grid, with a time-invariance flag."""
    doc = _load_scenario(scenario_path)
    comp = _comparison(variant, vaccine, variant_other, vaccine_ref)

    def build():
        grid = api.make_grid(t_start, t_stop, points, spacing)
        return api.curve_result(doc, measure, comp, grid)

    body = _run(build)
    if (fmt or "csv") == "json":
        _emit(canonical_json(body) + "\n", out)
    else:
        label = _comparison_label(comp)
        rows = [[t, v, measure, label] for t, v in zip(body["times"], body["values"])]
        _emit(_csv_text(["t", "ve", "kind", "comparison"], rows), out)


@main.command()
@scenario_option
@with_comparison
@format_option
@out_option
def limits(scenario_path, variant, vaccine, variant_other, vaccine_ref, fmt, out):
    """Small- and large-product asymptotic VE values."""
    doc = _load_scenario(scenario_path)
    comp = _comparison(variant, vaccine, variant_other, vaccine_ref)
    body = _run(lambda: api.limits_result(doc, comp))
    if (fmt or "csv") == "json":
        _emit(canonical_json(body) + "\n", out)
    else:
        label = _comparison_label(comp)
        rows = []
        for which in ("small", "large"):
            for kind in ("irr", "crr", "or"):
                value = body["limits"][which][kind]
                cell = "" if value is None else _ve_cell(value)
                rows.append([which, kind, cell, label])
        _emit(_csv_text(["limit", "kind", "ve", "comparison"], rows), out)


@main.command()
@scenario_option
@click.option("--t", type=float, default=None, help="Horizon override.")
@format_option
@out_option
def tnd(scenario_path, t, fmt, out):
    """Expected test-negative-design counts and the VE they estimate."""
    doc = _load_scenario(scenario_path)
    body = _run(lambda: api.tnd_result(doc, t))
    if (fmt or "csv") == "json":
        _emit(canonical_json(body) + "\n", out)
    else:
        rows = []
        for arm in sorted(body["expected_cases"]):
            for k, value in enumerate(body["expected_cases"][arm]):
                rows.append(["expected_cases", arm, k + 1, value])
        for arm in sorted(body["expected_controls"]):
            rows.append(["expected_controls", arm, "", body["expected_controls"][arm]])
        for arm in sorted(body["tnd_ve"]):
            for variant in sorted(body["tnd_ve"][arm], key=int):
                rows.append(["tnd_ve", arm, int(variant), body["tnd_ve"][arm][variant]])
        _emit(_csv_text(["record", "arm", "variant", "value"], rows), out)


@main.command()
@scenario_option
@with_comparison
@format_option
@out_option
def mdve(scenario_path, variant, vaccine, variant_other, vaccine_ref, fmt, out):
    """Minimum detectable VE for the scenario's design block."""
    doc = _load_scenario(scenario_path)
    comp = _comparison(variant, vaccine, variant_other, vaccine_ref)
    body = _run(lambda: api.mdve_result(doc, comp))
    fmt = fmt or "plain"
    if fmt == "plain":
        _emit(f"{body['mdve']:.6f}\n", out)
    elif fmt == "csv":
        row = [
            body["design"],
            _comparison_label(comp),
            body["alpha"],
            body["target_power"],
            body["mdve"],
            body["achieved_power"],
        ]
        _emit(
            _csv_text(
                ["design", "comparison", "alpha", "target_power", "mdve", "achieved_power"],
                [row],
            ),
            out,
        )
    else:
        _emit(canonical_json(body) + "\n", out)


@main.command()
@scenario_option
@with_comparison
@click.option("--n-sim", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@format_option
@out_option
def precision(
    scenario_path, variant, vaccine, variant_other, vaccine_ref, n_sim, seed, workers, fmt, out
):
    """Expected VE confidence limits by Monte-Carlo simulation."""
    doc = _load_scenario(scenario_path)
    comp = _comparison(variant, vaccine, variant_other, vaccine_ref)
    body = _run(
        lambda: api.precision_result(doc, comp, n_sim=n_sim, seed=seed, workers=workers)
    )
    if (fmt or "csv") == "json":
        _emit(canonical_json(body) + "\n", out)
    else:
        row = [
            body["estimate_mean"],
            body["expected_ci"][0],
            body["expected_ci"][1],
            body["sd_of_estimates"],
            body["n_sim"],
            body["n_degenerate"],
            body["seed"],
        ]
        _emit(
            _csv_text(
                [
                    "estimate_mean",
                    "ci_lower",
                    "ci_upper",
                    "sd_of_estimates",
                    "n_sim",
                    "n_degenerate",
                    "seed",
                ],
                [row],
            ),
            out,
        )


if __name__ == "__main__":
    main()

"""Transport-agnostic request handlers shared by the CLI and the service.

Every handler takes a validated ``ScenarioDocument`` plus request
parameters and returns a JSON-able dict that embeds the schema version and
the canonical scenario hash, so both transports produce byte-identical
bodies for the same request.
"""
from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

from .errors import BudgetExceededError, InvalidInputError, NotAvailableError
from .measures import (
    Comparison,
    ComparisonScope,
    LimitKind,
    VeMeasureKind,
    VeValue,
    ve_curve,
    ve_limit,
    ve_point,
)
from .model import ArmAction, StudyHorizon
from .samplesize import (
    StudyDesign,
    min_detectable_ve,
    power_at,
    simulate_precision,
)
from .scenario import (
    SCHEMA_VERSION,
    ComparisonDoc,
    Scenario,
    ScenarioDocument,
    scenario_hash,
    to_scenario,
)
from .tnd import expected_counts, tnd_ve

#: Maximum of n_sim x per-replicate draws a precision request may cost.
DEFAULT_SIM_BUDGET = 10**8

POWER_CURVE_POINTS = 33


def envelope(doc: ScenarioDocument) -> dict:
    return {"schema_version": SCHEMA_VERSION, "scenario_hash": scenario_hash(doc)}


def ve_value_json(value: VeValue):
    if value.divergent:
        return {"divergent": "-inf"}
    return value.value


def _comparison_arms_actions(
    scenario: Scenario, comparison: Comparison
) -> tuple[ArmAction, ArmAction]:
    known = set(scenario.profiles)
    if comparison.vaccine not in known:
        raise InvalidInputError(f"unknown vaccine {comparison.vaccine!r} in comparison")
    action_m = scenario.profiles[comparison.vaccine]
    action_ref: ArmAction = None
    if comparison.scope is ComparisonScope.RELATIVE_VACCINES:
        if comparison.vaccine_ref not in known:
            raise InvalidInputError(
                f"unknown reference vaccine {comparison.vaccine_ref!r} in comparison"
            )
        action_ref = scenario.profiles[comparison.vaccine_ref]
    for variant in (comparison.variant, comparison.variant_other):
        if variant is not None and not 1 <= variant <= scenario.rates.n_variants:
            raise InvalidInputError(f"variant {variant} outside 1..{scenario.rates.n_variants}")
    return action_m, action_ref


def _validated_grid(grid: Sequence[float]) -> tuple[float, ...]:
    values = tuple(float(t) for t in grid)
    if len(values) < 2:
        raise InvalidInputError("time grid needs at least two points")
    if any(not math.isfinite(t) or t <= 0.0 for t in values):
        raise InvalidInputError("time grid values must be finite and > 0")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise InvalidInputError("time grid must be strictly increasing")
    return values


def make_grid(start: float, stop: float, points: int, spacing: str = "linear") -> list[float]:
    """Build a curve grid from endpoint parameters."""
    if points < 2:
        raise InvalidInputError("a curve grid needs at least two points")
    if not 0.0 < start < stop:
        raise InvalidInputError("grid needs 0 < start < stop")
    if spacing == "linear":
        return [float(t) for t in np.linspace(start, stop, points)]
    if spacing == "log":
        return [float(t) for t in np.geomspace(start, stop, points)]
    raise InvalidInputError(f"unknown grid spacing {spacing!r}")


def point_result(
    doc: ScenarioDocument,
    measure: str,
    comparison_doc: ComparisonDoc,
    t: Optional[float] = None,
) -> dict:
    scenario = to_scenario(doc)
    comparison = comparison_doc.to_comparison()
    action_m, action_ref = _comparison_arms_actions(scenario, comparison)
    horizon = scenario.horizon.t if t is None else float(t)
    value = ve_point(
        VeMeasureKind(measure), comparison, scenario.rates, action_m, action_ref, horizon
    )
    return {
        **envelope(doc),
        "measure": measure,
        "comparison": comparison_doc.model_dump(exclude_none=True),
        "t": horizon,
        "ve": ve_value_json(value),
    }


def curve_result(
    doc: ScenarioDocument,
    measure: str,
    comparison_doc: ComparisonDoc,
    grid: Sequence[float],
) -> dict:
    scenario = to_scenario(doc)
    comparison = comparison_doc.to_comparison()
    action_m, action_ref = _comparison_arms_actions(scenario, comparison)
    curve = ve_curve(
        VeMeasureKind(measure),
        comparison,
        scenario.rates,
        action_m,
        action_ref,
        _validated_grid(grid),
    )
    return {
        **envelope(doc),
        "measure": measure,
        "comparison": comparison_doc.model_dump(exclude_none=True),
        "times": list(curve.times),
        "values": list(curve.values),
        "time_invariant": curve.time_invariant,
        "spread": curve.spread,
    }


def limits_result(doc: ScenarioDocument, comparison_doc: ComparisonDoc) -> dict:
    scenario = to_scenario(doc)
    comparison = comparison_doc.to_comparison()
    action_m, action_ref = _comparison_arms_actions(scenario, comparison)
    limits: dict[str, dict] = {}
    for which, key in ((LimitKind.SMALL_LAMBDA_T, "small"), (LimitKind.LARGE_LAMBDA_T, "large")):
        row = {}
        for kind in VeMeasureKind:
            try:
                row[kind.value] = ve_value_json(
                    ve_limit(kind, comparison, scenario.rates, action_m, action_ref, which)
                )
            except NotAvailableError:
                row[kind.value] = None
        limits[key] = row
    return {
        **envelope(doc),
        "comparison": comparison_doc.model_dump(exclude_none=True),
        "limits": limits,
    }


def tnd_result(doc: ScenarioDocument, t: Optional[float] = None) -> dict:
    scenario = to_scenario(doc)
    if scenario.tnd is None:
        raise InvalidInputError("scenario has no tnd block")
    horizon = scenario.horizon if t is None else StudyHorizon(float(t))
    components = scenario.all_components(horizon)
    counts = expected_counts(scenario.tnd, components, horizon)
    ve_by_arm = {
        vaccine: {
            str(variant): tnd_ve(counts, variant, vaccine).value
            for variant in range(1, scenario.rates.n_variants + 1)
        }
        for vaccine in scenario.profiles
    }
    return {
        **envelope(doc),
        "t": horizon.t,
        "sampling": counts.sampling.value,
        "expected_cases": {arm: list(row) for arm, row in counts.cases.items()},
        "expected_controls": dict(counts.controls),
        "tnd_ve": ve_by_arm,
    }


def _require_design(scenario: Scenario):
    if scenario.design is None:
        raise InvalidInputError("scenario has no design block")
    return scenario.design


def mdve_result(doc: ScenarioDocument, comparison_doc: ComparisonDoc) -> dict:
    scenario = to_scenario(doc)
    spec = _require_design(scenario)
    comparison = comparison_doc.to_comparison()
    _comparison_arms_actions(scenario, comparison)
    joint = scenario.joint()
    result = min_detectable_ve(spec, joint, comparison)
    curve = []
    for ve in np.linspace(0.02, 0.98, POWER_CURVE_POINTS):
        curve.append({"ve": float(ve), "power": power_at(spec, joint, comparison, float(ve))})
    return {
        **envelope(doc),
        "comparison": comparison_doc.model_dump(exclude_none=True),
        "design": spec.design.value,
        "alpha": spec.alpha,
        "target_power": result.target_power,
        "mdve": result.ve.value,
        "kind": result.ve.kind.value,
        "achieved_power": result.achieved_power,
        "power_curve": curve,
    }


def _precision_draws(spec, n_sim: int) -> float:
    if spec.design in (StudyDesign.COHORT_CRR, StudyDesign.COHORT_IRR):
        per_replicate = spec.n
    else:
        per_replicate = spec.x * (1.0 + spec.r)
    return float(n_sim) * float(per_replicate)


def precision_result(
    doc: ScenarioDocument,
    comparison_doc: ComparisonDoc,
    n_sim: int,
    seed: int,
    workers: int = 1,
    include_replicates: bool = False,
    budget: float = DEFAULT_SIM_BUDGET,
) -> dict:
    scenario = to_scenario(doc)
    spec = _require_design(scenario)
    comparison = comparison_doc.to_comparison()
    _comparison_arms_actions(scenario, comparison)
    if _precision_draws(spec, n_sim) > budget:
        raise BudgetExceededError(
            f"simulation of {n_sim} replicates exceeds the draw budget of {budget:g}"
        )
    result = simulate_precision(
        spec,
        scenario.joint(),
        comparison,
        n_sim=n_sim,
        seed=seed,
        rates=scenario.rates,
        actions=scenario.actions(),
        workers=workers,
    )
    body = {
        **envelope(doc),
        "comparison": comparison_doc.model_dump(exclude_none=True),
        "design": spec.design.value,
        "n_sim": result.n_sim,
        "seed": result.seed,
        "estimate_mean": result.estimate_mean,
        "expected_ci": list(result.expected_ci),
        "sd_of_estimates": result.sd_of_estimates,
        "n_degenerate": result.n_degenerate,
    }
    if include_replicates:
        body["replicates"] = {
            "estimates": list(result.replicate_estimates),
            "lower": list(result.replicate_lower),
            "upper": list(result.replicate_upper),
        }
    return body

"""Scenario documents: one schema for CLI files and HTTP request bodies.

A document carries variants with their rates, vaccines with their action
parameters, the follow-up horizon, arm coverage, and optional TND and
design blocks. Validation mirrors the domain-type invariants; unknown
fields are rejected. Canonical JSON (sorted keys, 17-significant-digit
floats) gives every document a stable hash used for response echoing and
client-side caching.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Literal, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import InvalidInputError
from .measures import Comparison, ComparisonScope
from .model import (
    PLACEBO_ARM,
    AllOrNoneProfile,
    ArmAction,
    CohortComponents,
    EpidemicRates,
    LeakyProfile,
    StudyHorizon,
    components_for,
    subset_mask,
)
from .samplesize import DesignSpec, ScenarioJoint, StudyDesign
from .tnd import ControlSampling, TndParams

SCHEMA_VERSION = 1


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class VariantDoc(_StrictModel):
    id: int = Field(ge=1)
    rate: float = Field(gt=0)

    @field_validator("rate")
    @classmethod
    def _finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("rate must be finite")
        return v


class StratumDoc(_StrictModel):
    variants: list[int]      # empty list = the unprotected share
    proportion: float = Field(ge=0)


class VaccineDoc(_StrictModel):
    id: str = Field(min_length=1)
    mode: Literal["leaky", "all_or_none"]
    thetas: Optional[dict[int, float]] = None
    strata: Optional[list[StratumDoc]] = None
    fill_remainder: bool = False

    @model_validator(mode="after")
    def _check_mode_fields(self) -> "VaccineDoc":
        if self.id == PLACEBO_ARM:
            raise ValueError(f"vaccine id {PLACEBO_ARM!r} is reserved for the placebo arm")
        if self.mode == "leaky":
            if self.thetas is None or self.strata is not None:
                raise ValueError("leaky vaccines take 'thetas' and no 'strata'")
            if any(not 0.0 <= v <= 1.0 for v in self.thetas.values()):
                raise ValueError("leaky thetas must lie in [0, 1]")
        else:
            if self.strata is None or self.thetas is not None:
                raise ValueError("all-or-none vaccines take 'strata' and no 'thetas'")
        return self


class TndDoc(_StrictModel):
    population: float = Field(gt=0)
    rate_offtarget: float = Field(gt=0)
    p_symptom_case: dict[int, float]
    p_symptom_offtarget: float = Field(gt=0, le=1)
    p_seek_care: dict[str, float]
    sampling: Literal["inclusive", "density"] = "inclusive"


class DesignDoc(_StrictModel):
    design: Literal["cohort_crr", "cohort_irr", "case_control_or", "tnd_inclusive_or"]
    n: Optional[int] = None
    x: Optional[int] = None
    r: Optional[float] = None
    alpha: float = 0.05
    power: float = 0.8
    confounder_rho: float = 0.0


class ScenarioDocument(_StrictModel):
    schema_version: Literal[1] = SCHEMA_VERSION
    variants: list[VariantDoc] = Field(min_length=1)
    vaccines: list[VaccineDoc] = Field(min_length=1)
    horizon: float = Field(gt=0)
    coverage: dict[str, float]
    tnd: Optional[TndDoc] = None
    design: Optional[DesignDoc] = None

    @model_validator(mode="after")
    def _cross_validate(self) -> "ScenarioDocument":
        ids = sorted(v.id for v in self.variants)
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError("variant ids must be exactly 1..I")
        variant_set = set(ids)
        vaccine_ids = [v.id for v in self.vaccines]
        if len(set(vaccine_ids)) != len(vaccine_ids):
            raise ValueError("vaccine ids must be unique")
        for vac in self.vaccines:
            if vac.mode == "leaky":
                if set(vac.thetas) != variant_set:
                    raise ValueError(f"vaccine {vac.id}: thetas must cover variants 1..I")
            else:
                total = 0.0
                for stratum in vac.strata:
                    if not set(stratum.variants) <= variant_set:
                        raise ValueError(
                            f"vaccine {vac.id}: stratum outside the variant universe"
                        )
                    total += stratum.proportion
                if vac.fill_remainder:
                    if total > 1.0 + 1e-12:
                        raise ValueError(f"vaccine {vac.id}: strata sum to {total} > 1")
                elif abs(total - 1.0) > 1e-12:
                    raise ValueError(
                        f"vaccine {vac.id}: strata must sum to 1 (or set fill_remainder)"
                    )
        expected_arms = {PLACEBO_ARM, *vaccine_ids}
        if set(self.coverage) != expected_arms:
            raise ValueError(f"coverage must cover exactly the arms {sorted(expected_arms)}")
        if any(v < 0.0 for v in self.coverage.values()):
            raise ValueError("coverage shares must be >= 0")
        total_cov = math.fsum(self.coverage.values())
        if abs(total_cov - 1.0) > 1e-12:
            raise ValueError(f"coverage must sum to 1 within 1e-12, got {total_cov!r}")
        if self.tnd is not None:
            if set(self.tnd.p_symptom_case) != variant_set:
                raise ValueError("tnd.p_symptom_case must cover variants 1..I")
            if any(not 0.0 <= v <= 1.0 for v in self.tnd.p_symptom_case.values()):
                raise ValueError("tnd.p_symptom_case values must lie in [0, 1]")
            if set(self.tnd.p_seek_care) != expected_arms:
                raise ValueError("tnd.p_seek_care must cover every arm")
            if any(not 0.0 < v <= 1.0 for v in self.tnd.p_seek_care.values()):
                raise ValueError("tnd.p_seek_care values must lie in (0, 1]")
        return self


class ComparisonDoc(_StrictModel):
    """Wire form of a comparison."""

    type: Literal["variant_specific", "relative_variants", "relative_vaccines"]
    variant: int = Field(ge=1)
    vaccine: str
    variant_other: Optional[int] = None
    vaccine_ref: Optional[str] = None

    @model_validator(mode="after")
    def _check_fields(self) -> "ComparisonDoc":
        if self.type == "relative_variants" and self.variant_other is None:
            raise ValueError("relative_variants needs 'variant_other'")
        if self.type == "relative_vaccines" and self.vaccine_ref is None:
            raise ValueError("relative_vaccines needs 'vaccine_ref'")
        return self

    def to_comparison(self) -> Comparison:
        return Comparison(
            scope=ComparisonScope(self.type),
            variant=self.variant,
            vaccine=self.vaccine,
            variant_other=self.variant_other,
            vaccine_ref=self.vaccine_ref,
        )


@dataclass(frozen=True)
class Scenario:
    """Domain view of a validated document."""

    rates: EpidemicRates
    horizon: StudyHorizon
    profiles: Mapping[str, ArmAction]
    coverage: Mapping[str, float]
    tnd: Optional[TndParams]
    design: Optional[DesignSpec]

    @property
    def arms(self) -> tuple[str, ...]:
        return (PLACEBO_ARM, *self.profiles)

    def action(self, arm: str) -> ArmAction:
        if arm == PLACEBO_ARM:
            return None
        if arm not in self.profiles:
            raise InvalidInputError(f"unknown arm {arm!r}")
        return self.profiles[arm]

    def actions(self) -> dict[str, ArmAction]:
        return {arm: self.action(arm) for arm in self.arms}

    def components(self, arm: str, horizon: StudyHorizon | None = None) -> CohortComponents:
        return components_for(self.rates, self.action(arm), horizon or self.horizon)

    def all_components(self, horizon: StudyHorizon | None = None) -> dict[str, CohortComponents]:
        return {arm: self.components(arm, horizon) for arm in self.arms}

    def joint(self) -> ScenarioJoint:
        return ScenarioJoint.from_components(
            dict(self.coverage), self.all_components(), self.horizon
        )


def _build_profile(doc: VaccineDoc, n_variants: int) -> ArmAction:
    if doc.mode == "leaky":
        return LeakyProfile([doc.thetas[i] for i in range(1, n_variants + 1)])
    protected: dict[int, float] = {}
    for stratum in doc.strata:
        mask = subset_mask(stratum.variants)
        protected[mask] = protected.get(mask, 0.0) + stratum.proportion
    if doc.fill_remainder:
        return AllOrNoneProfile.with_remainder(n_variants, protected)
    return AllOrNoneProfile(n_variants, protected)


def to_scenario(doc: ScenarioDocument) -> Scenario:
    """Convert a validated document into domain objects."""
    ordered = sorted(doc.variants, key=lambda v: v.id)
    rates = EpidemicRates([v.rate for v in ordered])
    horizon = StudyHorizon(doc.horizon)
    profiles = {v.id: _build_profile(v, rates.n_variants) for v in doc.vaccines}
    tnd_params = None
    if doc.tnd is not None:
        tnd_params = TndParams(
            population=doc.tnd.population,
            rate_offtarget=doc.tnd.rate_offtarget,
            p_symptom_case=tuple(
                doc.tnd.p_symptom_case[i] for i in range(1, rates.n_variants + 1)
            ),
            p_symptom_offtarget=doc.tnd.p_symptom_offtarget,
            p_seek_care=dict(doc.tnd.p_seek_care),
            p_vaccinated=dict(doc.coverage),
            sampling=ControlSampling(doc.tnd.sampling),
        )
    design = None
    if doc.design is not None:
        design = DesignSpec(
            design=StudyDesign(doc.design.design),
            n=doc.design.n,
            x=doc.design.x,
            r=doc.design.r,
            alpha=doc.design.alpha,
            power=doc.design.power,
            confounder_rho=doc.design.confounder_rho,
        )
    return Scenario(rates, horizon, profiles, dict(doc.coverage), tnd_params, design)


# ---------------------------------------------------------------------------
# canonical JSON and hashing
# ---------------------------------------------------------------------------

def format_float(value: float) -> str:
    """17-significant-digit decimal form; round-trips any finite double."""
    if not math.isfinite(value):
        raise InvalidInputError(f"cannot serialize non-finite number {value!r}")
    if value == int(value) and abs(value) < 1e16:
        return f"{value:.1f}"
    return format(value, ".17g")


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted object keys, no whitespace, 17g floats."""
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(canonical_json(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        return (
            "{"
            + ",".join(
                json.dumps(str(k), ensure_ascii=False) + ":" + canonical_json(v)
                for k, v in items
            )
            + "}"
        )
    raise InvalidInputError(f"cannot serialize {type(obj).__name__} canonically")


def scenario_hash(doc: ScenarioDocument) -> str:
    """Stable content hash of a document (key order and null fields ignored)."""
    payload = doc.model_dump(mode="json", exclude_none=True)
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def load_document(text: str) -> ScenarioDocument:
    """Parse and validate a scenario document from JSON text."""
    return ScenarioDocument.model_validate_json(text)

"""Stateless HTTP JSON facade over the toolkit.

Every endpoint takes a scenario document plus request parameters and
returns the shared result body with the schema version and canonical
scenario hash echoed. Malformed requests get 400 with the offending path,
well-formed requests whose result does not exist get 422, and oversized
simulation requests get 413. Responses serialize floats with 17
significant digits so clients can round-trip doubles.

Environment:
    VEKIT_HOST / VEKIT_PORT   bind address for ``python -m vekit.service``
    VEKIT_SIM_BUDGET          max n_sim x per-replicate draws (default 1e8)
    VEKIT_ALLOWED_ORIGINS     comma-separated CORS origins (default "*")
    VEKIT_WORKERS             threads per precision request (default 1)
"""
from __future__ import annotations

import os
from typing import Literal, Optional

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, ConfigDict, Field

from . import api
from .errors import (
    BudgetExceededError,
    DomainError,
    UnattainablePowerError,
    ValidationError,
)
from .scenario import ComparisonDoc, ScenarioDocument, canonical_json


class CanonicalJSONResponse(Response):
    media_type = "application/json"

    def render(self, content) -> bytes:
        return canonical_json(content).encode("utf-8")


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PointRequest(_StrictModel):
    scenario: ScenarioDocument
    measure: Literal["irr", "crr", "or"]
    comparison: ComparisonDoc
    t: Optional[float] = Field(default=None, gt=0)


class CurveRequest(_StrictModel):
    scenario: ScenarioDocument
    measure: Literal["irr", "crr", "or"]
    comparison: ComparisonDoc
    grid: list[float] = Field(min_length=2)


class LimitsRequest(_StrictModel):
    scenario: ScenarioDocument
    comparison: ComparisonDoc


class TndRequest(_StrictModel):
    scenario: ScenarioDocument
    t: Optional[float] = Field(default=None, gt=0)


class MdveRequest(_StrictModel):
    scenario: ScenarioDocument
    comparison: ComparisonDoc


class PrecisionRequest(_StrictModel):
    scenario: ScenarioDocument
    comparison: ComparisonDoc
    n_sim: int = Field(ge=1)
    seed: int = Field(ge=0)
    include_replicates: bool = False


def _error_slug(exc: DomainError) -> str:
    name = type(exc).__name__.removesuffix("Error")
    return "".join("_" + ch.lower() if ch.isupper() else ch for ch in name).lstrip("_")


def _sim_budget() -> float:
    return float(os.environ.get("VEKIT_SIM_BUDGET", api.DEFAULT_SIM_BUDGET))


def _workers() -> int:
    return max(1, int(os.environ.get("VEKIT_WORKERS", "1")))


def create_app() -> FastAPI:
    app = FastAPI(
        title="vekit",
        description="Vaccine-effectiveness calculator for multi-variant, multi-vaccine cohorts",
        default_response_class=CanonicalJSONResponse,
    )
    origins = os.environ.get("VEKIT_ALLOWED_ORIGINS", "*")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[o.strip() for o in origins.split(",") if o.strip()],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(RequestValidationError)
    async def handle_request_validation(request: Request, exc: RequestValidationError):
        detail = [
            {"path": [str(p) for p in err["loc"]], "message": err["msg"]}
            for err in exc.errors()
        ]
        return CanonicalJSONResponse(
            {"error": "validation", "detail": detail}, status_code=400
        )

    @app.exception_handler(ValidationError)
    async def handle_domain_validation(request: Request, exc: ValidationError):
        return CanonicalJSONResponse(
            {"error": "validation", "message": str(exc)}, status_code=400
        )

    @app.exception_handler(BudgetExceededError)
    async def handle_budget(request: Request, exc: BudgetExceededError):
        return CanonicalJSONResponse(
            {"error": "budget_exceeded", "message": str(exc)}, status_code=413
        )

    @app.exception_handler(DomainError)
    async def handle_domain(request: Request, exc: DomainError):
        body = {"error": _error_slug(exc), "message": str(exc)}
        if isinstance(exc, UnattainablePowerError):
            body["max_power"] = exc.max_power
        return CanonicalJSONResponse(body, status_code=422)

    @app.get("/api/v1/health")
    async def health():
        return {"status": "ok", "schema_version": 1}

    @app.post("/api/v1/ve/point")
    async def ve_point(req: PointRequest):
        return api.point_result(req.scenario, req.measure, req.comparison, req.t)

    @app.post("/api/v1/ve/curve")
    async def ve_curve(req: CurveRequest):
        return api.curve_result(req.scenario, req.measure, req.comparison, req.grid)

    @app.post("/api/v1/ve/limits")
    async def ve_limits(req: LimitsRequest):
        return api.limits_result(req.scenario, req.comparison)

    @app.post("/api/v1/tnd/expected-counts")
    async def tnd_counts(req: TndRequest):
        return api.tnd_result(req.scenario, req.t)

    @app.post("/api/v1/samplesize/mdve")
    async def samplesize_mdve(req: MdveRequest):
        return api.mdve_result(req.scenario, req.comparison)

    @app.post("/api/v1/samplesize/precision")
    async def samplesize_precision(req: PrecisionRequest):
        return api.precision_result(
            req.scenario,
            req.comparison,
            n_sim=req.n_sim,
            seed=req.seed,
            workers=_workers(),
            include_replicates=req.include_replicates,
            budget=_sim_budget(),
        )

    return app


def main() -> None:
    import uvicorn

    host = os.environ.get("VEKIT_HOST", "127.0.0.1")
    port = int(os.environ.get("VEKIT_PORT", "8000"))
    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()

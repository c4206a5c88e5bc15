"""HTTP facade over a trained model, its cohort, and the counterfactual engine.

All endpoints are read-only over the loaded model/dataset; every response
is JSON and errors use {code, message}. Counterfactual searches run
synchronously in a worker thread under a configurable timeout.
"""

from __future__ import annotations

import asyncio
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .cf_core import CfQuery
from .cf_moc import MocConfig
from .evaluation import EvalReport, evaluate_scores
from .gbm import GbmModel
from .hybrid import generate
from .schema import Dataset

KEY_FIELDS = ("age", "sex", "eci")


@dataclass
class ServiceBundle:
    model: GbmModel
    dataset: Dataset
    eval_report: EvalReport | None = None
    default_seed: int = 0
    timeout_s: float = 30.0


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        self.status = status
        self.message = message


class PredictRequest(BaseModel):
    instance: dict


class CounterfactualRequest(BaseModel):
    row_id: int | None = None
    instance: dict | None = None
    target_class: int = 1
    p_min: float = 0.0
    p_max: float | None = None
    fixed: list[str] = []
    k: int = 3
    alpha: float = 1.0
    beta: float = 1.0
    m_max: int = 16
    seed: int | None = None
    moc_population: int = 40
    moc_generations: int = 60


def _instance_from_names(values: dict, schema):
    row = []
    for spec in schema:
        if spec.name not in values:
            raise ApiError(400, f"instance is missing feature {spec.name!r}")
        row.append(values[spec.name])
    extra = set(values) - set(schema.names)
    if extra:
        raise ApiError(400, f"unknown features: {sorted(extra)}")
    try:
        return schema.validate_instance(tuple(row))
    except Exception as e:
        raise ApiError(400, str(e)) from None


def create_app(bundle: ServiceBundle, cors_origins=("*",), static_dir=None) -> FastAPI:
    app = FastAPI(title="whatif", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    schema = bundle.dataset.schema
    risks = bundle.model.predict_proba(bundle.dataset.rows)[:, 1]

    @app.exception_handler(ApiError)
    async def _api_error(_: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"code": exc.status, "message": exc.message})

    @app.exception_handler(RequestValidationError)
    async def _bad_body(_: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"code": 400, "message": str(exc.errors()[:3])})

    @app.exception_handler(Exception)
    async def _internal(_: Request, exc: Exception):
        return JSONResponse(status_code=500, content={"code": 500, "message": str(exc)})

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.get("/schema")
    async def get_schema():
        obj = schema.to_json()
        obj["fingerprint"] = schema.fingerprint()
        return obj

    def _patient_entry(i: int) -> dict:
        fields = {}
        for name in KEY_FIELDS:
            if name in schema.names:
                fields[name] = bundle.dataset.rows[i][schema.index_of(name)]
        if not fields:
            for spec in list(schema)[:4]:
                fields[spec.name] = bundle.dataset.rows[i][schema.index_of(spec.name)]
        entry = {"id": i, "fields": fields, "risk": float(risks[i])}
        if bundle.dataset.labels is not None:
            entry["label"] = bundle.dataset.labels[i]
        return entry

    @app.get("/patients")
    async def patients(limit: int = 50, offset: int = 0):
        if limit < 0 or offset < 0:
            raise ApiError(400, "limit and offset must be non-negative")
        ids = range(offset, min(offset + limit, bundle.dataset.n_rows))
        return {"total": bundle.dataset.n_rows, "patients": [_patient_entry(i) for i in ids]}

    def _row(row_id: int):
        if row_id < 0 or row_id >= bundle.dataset.n_rows:
            raise ApiError(404, f"unknown patient id {row_id}")
        return bundle.dataset.rows[row_id]

    @app.get("/patients/{row_id}")
    async def patient(row_id: int):
        row = _row(row_id)
        proba = bundle.model.predict_proba([row])[0]
        out = {
            "id": row_id,
            "values": {spec.name: row[j] for j, spec in enumerate(schema)},
            "proba": [float(v) for v in proba],
        }
        if bundle.dataset.labels is not None:
            out["label"] = bundle.dataset.labels[row_id]
        return out

    @app.post("/predict")
    async def predict(req: PredictRequest):
        row = _instance_from_names(req.instance, schema)
        proba = bundle.model.predict_proba([row])[0]
        return {"proba": [float(v) for v in proba]}

    @app.post("/counterfactuals")
    async def counterfactuals(req: CounterfactualRequest):
        if (req.row_id is None) == (req.instance is None):
            raise ApiError(400, "provide exactly one of row_id or instance")
        x0 = _row(req.row_id) if req.row_id is not None else _instance_from_names(req.instance, schema)
        p_max = req.p_max
        if p_max is None:
            if bundle.eval_report is None:
                raise ApiError(422, "p_max required (no stored operating threshold)")
            p_max = bundle.eval_report.threshold
        try:
            fixed = frozenset(schema.index_of(name) for name in req.fixed)
        except Exception:
            raise ApiError(400, f"unknown feature in fixed set: {req.fixed}") from None
        try:
            query = CfQuery(
                x0=x0,
                target_class=req.target_class,
                p_min=req.p_min,
                p_max=p_max,
                fixed=fixed,
                k=req.k,
                alpha=req.alpha,
                beta=req.beta,
                m_max=req.m_max,
                seed=bundle.default_seed if req.seed is None else req.seed,
            )
            moc = MocConfig(population=req.moc_population, generations=req.moc_generations)
        except ValueError as e:
            raise ApiError(422, str(e)) from None
        try:
            report = await asyncio.wait_for(
                asyncio.to_thread(generate, query, bundle.model, bundle.dataset, moc),
                timeout=bundle.timeout_s,
            )
        except asyncio.TimeoutError:
            raise ApiError(504, "counterfactual search timed out") from None
        out = report.to_json(schema)
        out["seed"] = query.seed
        return out

    @app.get("/model/metrics")
    async def metrics():
        if bundle.eval_report is None:
            if bundle.dataset.labels is None:
                raise ApiError(404, "no evaluation report available and dataset has no labels")
            bundle.eval_report = evaluate_scores(risks, np.asarray(bundle.dataset.labels))
        return bundle.eval_report.to_json()

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app

"""
HTTP scoring service.
POST /v1/score, /v1/score_batch, /v1/compare_snippet, /v1/rank; GET /healthz
"""

from __future__ import absolute_import

import time
from typing import Any
from typing import Dict
from typing import List
from typing import Optional

import uvicorn
from fastapi import FastAPI
from fastapi import Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from ._version import QD_RELEVANCE_VERSION
from .core import QueryDocPair
from .backend import BackendError
from .call_relevance import batch_result_to_dict
from .call_relevance import batch_score
from .call_relevance import compare_snippet
from .call_relevance import rank_documents
from .call_relevance import ranking_to_dict
from .config import build_scoring_config
from .config import service_config_to_dict
from .scoring import score_pair
from .utils.json_formater import scored_pair_to_dict

LATENCY_HEADER = "X-Latency-Ms"


class ScoreRequest(BaseModel):
    query: str
    document: str
    title: Optional[str] = None
    pair_id: Optional[str] = None
    source: str = "web"


class BatchRequest(BaseModel):
    # items stay loose so that a bad item fails in its own slot
    pairs: List[Dict[str, Any]]
    parallelism: int = 1


class SnippetRequest(BaseModel):
    query: str
    document: str
    snippet: str
    title: Optional[str] = None


class RankRequest(BaseModel):
    query: str
    documents: List[str]
    gains: Optional[List[float]] = None


def _error_body(kind, message, retryable=None):
    error = {"kind": kind, "message": message}
    if retryable is not None:
        error["retryable"] = retryable
    return {"error": error}


def create_app(config, scoring=None):
    """
    :param config: ServiceConfig, read-only for the lifetime of the app
    :param scoring: prebuilt ScoringConfig, built from config when None
    :return: FastAPI app
    """
    scoring = build_scoring_config(config) if scoring is None else scoring
    app = FastAPI(title="qd-relevance", version=QD_RELEVANCE_VERSION)

    @app.middleware("http")
    async def add_latency(request: Request, call_next):
        t0 = time.perf_counter()
        response = await call_next(request)
        response.headers[LATENCY_HEADER] = "{:.3f}".format((time.perf_counter() - t0) * 1000.0)
        return response

    @app.exception_handler(ValueError)
    async def invalid_input(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content=_error_body("invalid_input", str(exc)))

    @app.exception_handler(RequestValidationError)
    async def invalid_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content=_error_body("invalid_input", str(exc)))

    @app.exception_handler(BackendError)
    async def backend_failure(request: Request, exc: BackendError):
        return JSONResponse(status_code=502, content=_error_body(exc.kind, str(exc), exc.retryable))

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "version": QD_RELEVANCE_VERSION,
                "backend": config.backend.endpoint, "mode": scoring.mode}

    @app.post("/v1/score")
    def score(req: ScoreRequest):
        pair = QueryDocPair(req.query, req.document, req.title, req.pair_id, req.source)
        out = scored_pair_to_dict(score_pair(pair, scoring))
        out["weights"] = {"w_gen": scoring.weights.w_gen, "w_emb": scoring.weights.w_emb}
        return out

    @app.post("/v1/score_batch")
    def score_batch(req: BatchRequest):
        results = batch_score(req.pairs, scoring, req.parallelism)
        return {"results": [batch_result_to_dict(r) for r in results]}

    @app.post("/v1/compare_snippet")
    def snippet(req: SnippetRequest):
        verdict = compare_snippet(req.query, req.document, req.snippet, scoring, config.snippet_thresholds,
                                  req.title)
        return {"qd_score": float(verdict.qd_score), "qs_score": float(verdict.qs_score),
                "flagged": verdict.flagged,
                "thresholds": config.snippet_thresholds._asdict()}

    @app.post("/v1/rank")
    def rank(req: RankRequest):
        ranked, metrics = rank_documents(req.query, req.documents, scoring, req.gains)
        return ranking_to_dict(ranked, metrics)

    return app


def serve(config):
    print("[main] serve starts on {} with {}".format(config.listen, service_config_to_dict(config)))
    uvicorn.run(create_app(config), host=config.host, port=config.port)

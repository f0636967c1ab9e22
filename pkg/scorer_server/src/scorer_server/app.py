"""FastAPI application implementing the /score wire protocol.

Conforms to the shared JSON schema shipped at
``scorer_server/schemas/score_protocol.schema.json``: request bodies carry
a batch of pairs (window text plus trigger character span), responses
return one score per pair id, in request order, clamped to [0, 1].
Malformed requests get HTTP 400 with an error body; batches above the
configured cap get 413.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .config import ServerConfig
from .model import PairScorer, load_model


class Window(BaseModel):
    text: str = Field(min_length=1)
    span: list[int] = Field(min_length=2, max_length=2)


class PairIn(BaseModel):
    pair_id: str = Field(min_length=1)
    first: Window
    second: Window


class ScoreRequestBody(BaseModel):
    pairs: list[PairIn] = Field(min_length=1)


class ScoreOut(BaseModel):
    pair_id: str
    score: float


class ScoreResponseBody(BaseModel):
    scores: list[ScoreOut]


def _span_error(window: Window) -> str | None:
    start, end = window.span
    if start < 0 or not start < end or end > len(window.text):
        return f"span {window.span} invalid for text of length {len(window.text)}"
    return None


def create_app(config: ServerConfig, model: PairScorer | None = None) -> FastAPI:
    app = FastAPI(title="pairwise coreference scorer", docs_url=None, redoc_url=None)
    scorer = model if model is not None else load_model(
        config.model, config.checkpoint, config.device)
    inference_lock = threading.Lock()  # inference serialized per worker

    @app.exception_handler(RequestValidationError)
    async def bad_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400,
                            content={"error": "malformed request",
                                     "detail": exc.errors()[:5]})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "model": config.model}

    @app.post("/score")
    def score(body: ScoreRequestBody):
        if len(body.pairs) > config.batch_cap:
            return JSONResponse(
                status_code=413,
                content={"error": f"batch of {len(body.pairs)} exceeds "
                                  f"cap {config.batch_cap}"})
        for pair in body.pairs:
            for window in (pair.first, pair.second):
                problem = _span_error(window)
                if problem:
                    return JSONResponse(
                        status_code=400,
                        content={"error": f"pair {pair.pair_id}: {problem}"})
        wire = [p.model_dump() for p in body.pairs]
        with inference_lock:
            raw_scores = scorer.score_batch(wire)
        clamped = [min(1.0, max(0.0, float(s))) for s in raw_scores]
        return ScoreResponseBody(scores=[
            ScoreOut(pair_id=p.pair_id, score=s)
            for p, s in zip(body.pairs, clamped)
        ])

    return app

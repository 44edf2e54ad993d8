"""REST service over a triage workspace.

JSON in, JSON out; errors come back as ``{"code": ..., "message": ...}``
with 400 for bad input, 404 for unknown ids, and 409 when training is in
progress or no model is active yet.  Responses are the same payload dicts
the CLI prints with ``--json``.
"""

from __future__ import annotations

import os
from typing import Sequence

from fastapi import Depends, FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .errors import (
    AmbiguousIocError,
    NotFoundError,
    TrainingInProgressError,
    TriageError,
    ValidationError,
)
from .hac import METHOD_HEAT_MODEL
from .model import HEAT_LEVELS, Hyperparams, LabeledPair
from .workspace import WORKSPACE_ENV, NoActiveModelError, Workspace


def _error_response(status: int, code: str, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message, **extra})


def _status_for(exc: TriageError) -> tuple[int, str]:
    if isinstance(exc, (TrainingInProgressError, NoActiveModelError)):
        return 409, "conflict"
    if isinstance(exc, NotFoundError):
        return 404, "not_found"
    if isinstance(exc, AmbiguousIocError):
        return 400, "ambiguous"
    if isinstance(exc, ValidationError):
        return 400, "validation"
    return 400, "error"


def parse_label_records(records, path: str = "labels") -> list[LabeledPair]:
    """Validate a batch of label dicts with field-level error messages."""
    if not isinstance(records, list):
        raise ValidationError(f"{path}: expected a list")
    labels = []
    for i, rec in enumerate(records):
        where = f"{path}[{i}]"
        if not isinstance(rec, dict):
            raise ValidationError(f"{where}: expected an object")
        for field in ("critical_episode_id", "prior_episode_id", "heat"):
            if field not in rec:
                raise ValidationError(f"{where}.{field}: required")
        heat = rec["heat"]
        if not isinstance(heat, int) or isinstance(heat, bool) or heat not in HEAT_LEVELS:
            raise ValidationError(f"{where}.heat: must be an integer in {list(HEAT_LEVELS)}")
        try:
            labels.append(LabeledPair.from_dict(rec))
        except (TypeError, ValueError, ValidationError) as exc:
            raise ValidationError(f"{where}: {exc}") from exc
    return labels


def create_app(workspace: Workspace | None = None) -> FastAPI:
    ws = workspace or Workspace(os.environ.get(WORKSPACE_ENV, "workspace"))
    app = FastAPI(title="heattriage", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    async def require_token(request: Request):
        token = ws.config.api_token
        if token and request.headers.get("authorization") != f"Bearer {token}":
            raise PermissionError("missing or invalid bearer token")

    auth = [Depends(require_token)]

    @app.exception_handler(TriageError)
    async def triage_error_handler(request: Request, exc: TriageError):
        status, code = _status_for(exc)
        extra = {"candidates": exc.candidates} if isinstance(exc, AmbiguousIocError) else {}
        return _error_response(status, code, str(exc), **extra)

    @app.exception_handler(PermissionError)
    async def auth_error_handler(request: Request, exc: PermissionError):
        return _error_response(401, "unauthorized", str(exc))

    @app.get("/status", dependencies=auth)
    def status():
        return ws.status_payload()

    @app.post("/corpus", dependencies=auth)
    async def upload_corpus(request: Request, mode: str | None = Query(default=None)):
        data = await request.body()
        if not data:
            raise ValidationError("empty corpus upload")
        return ws.ingest_bytes(data, mode)

    @app.get("/episodes/{episode_id}", dependencies=auth)
    def episode(episode_id: str):
        return ws.episode_payload(episode_id)

    @app.get("/episodes", dependencies=auth)
    def episodes(
        key: str | None = None,
        stage: str | None = None,
        t_from: float | None = Query(default=None, alias="from"),
        t_to: float | None = Query(default=None, alias="to"),
        page: int = 1,
        page_size: int = 100,
    ):
        return ws.episodes_payload(key, stage, t_from, t_to, page, page_size)

    @app.get("/iocs", dependencies=auth)
    def iocs(signature: str | None = None, severity: int | None = None, limit: int = 50):
        return ws.iocs_payload(signature, severity, limit)

    @app.get("/hac/{ioc}", dependencies=auth)
    def hac(
        ioc: str,
        model: str | None = None,
        threshold: float | None = None,
        lookback: float | None = None,
        method: str = METHOD_HEAT_MODEL,
    ):
        return ws.hac_payload_for(ioc, method, model, threshold, lookback)

    @app.get("/gain/{ioc}", dependencies=auth)
    def gain(
        ioc: str,
        model: str | None = None,
        threshold: float | None = None,
        lookback: float | None = None,
        method: str = METHOD_HEAT_MODEL,
    ):
        return ws.gain_payload_for(ioc, method, model, threshold, lookback)

    @app.get("/labels", dependencies=auth)
    def get_labels():
        labels = ws.effective_labels()
        return {"total": len(labels), "labels": [lp.to_dict() for lp in labels]}

    @app.post("/labels", dependencies=auth)
    async def post_labels(request: Request):
        body = await request.json()
        records = body.get("labels") if isinstance(body, dict) else body
        labels = parse_label_records(records)
        if not labels:
            raise ValidationError("labels: empty batch")
        count = ws.append_labels(labels)
        return {"added": count, "total": len(ws.effective_labels())}

    @app.post("/train", dependencies=auth)
    async def post_train(request: Request):
        body = await request.json() if await request.body() else {}
        hp = Hyperparams.from_dict(body["hyperparams"]) if body.get("hyperparams") else None
        version, model = ws.train_model(hyperparams=hp)
        return {"version": version, "cv_mse": model.cv_mse, "labels": len(model.labels)}

    @app.post("/finetune", dependencies=auth)
    async def post_finetune(request: Request):
        body = await request.json()
        labels = parse_label_records(body.get("labels") if isinstance(body, dict) else body)
        base = body.get("base") if isinstance(body, dict) else None
        version, model = ws.finetune_model(labels, base)
        return {"version": version, "cv_mse": model.cv_mse, "labels": len(model.labels)}

    @app.get("/rank", dependencies=auth)
    def rank(
        model: str | None = None,
        acg_min: float | None = None,
        signature: str | None = None,
        severity: int | None = None,
        threshold: float | None = None,
        lookback: float | None = None,
        limit: int = 100,
    ):
        return ws.rank_payload(model, acg_min, signature, severity, None, threshold, lookback, limit)

    app.state.workspace = ws
    return app


def main(argv: Sequence[str] | None = None) -> None:
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(prog="heattriage-service")
    parser.add_argument("--workspace", default=os.environ.get(WORKSPACE_ENV, "workspace"))
    parser.add_argument("--host", default=None)
    parser.add_argument("--port", type=int, default=None)
    args = parser.parse_args(argv)
    ws = Workspace(args.workspace)
    host = args.host if args.host is not None else ws.config.host
    port = args.port if args.port is not None else ws.config.port
    uvicorn.run(create_app(ws), host=host, port=port)


if __name__ == "__main__":
    main()

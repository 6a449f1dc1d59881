"""HTTP API hosting the interactive annotate-one-query-at-a-time loop.

Endpoints (JSON bodies, UTF-8):

* ``POST   /sessions``                — create a session on a loaded bundle
* ``GET    /sessions/{id}/next``      — pending query (idempotent until annotated)
* ``POST   /sessions/{id}/annotate``  — submit a reference (live) or accept replay
* ``GET    /sessions/{id}/report``    — trajectory and posterior snapshot
* ``DELETE /sessions/{id}``           — drop the session

Live sessions score the human's reference text against the bundle's stored
model outputs with the bundle metric; replay sessions answer from the oracle
matrix, which makes a driven session reproduce the offline selector exactly.
Per-session mutations are serialized by a lock: of two concurrent annotate
calls for the same pending query, exactly one advances the state and the
other gets 409. Error bodies are {"error": message, "code": short-code}.
"""
from __future__ import annotations

import json
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .core import SessionState, posterior_update
from .dataio import DatasetBundle
from .metrics import MetricKind, score_pair
from .selector import select_next


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


@dataclass
class Session:
    id: str
    bundle: DatasetBundle
    mode: str                      # "live" or "replay"
    state: SessionState
    pending: int | None = None
    reveal_outputs: bool = False
    records: list[dict] = field(default_factory=list)
    created: float = field(default_factory=time.time)
    updated: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def step(self) -> int:
        return self.state.step

    @property
    def budget(self) -> int:
        return self.state.budget

    def empirical_best(self) -> int | None:
        if not len(self.state.annotated):
            return None
        return int(np.argmax(self.state.annotated.mean_scores()))


def _session_token() -> str:
    return secrets.token_urlsafe(24)  # 192 bits


def create_app(bundles: dict[str, DatasetBundle],
               session_log_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="selectllm annotation service")
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()
    log_dir = Path(session_log_dir) if session_log_dir else None
    if log_dir:
        log_dir.mkdir(parents=True, exist_ok=True)

    def get_session(session_id: str) -> Session:
        with registry_lock:
            session = sessions.get(session_id)
        if session is None:
            raise ApiError(404, "unknown_session", f"no session {session_id!r}")
        return session

    def log_event(session: Session, event: dict) -> None:
        if log_dir is None:
            return
        with (log_dir / f"{session.id}.jsonl").open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    @app.exception_handler(ApiError)
    async def handle_api_error(_: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"error": exc.message, "code": exc.code})

    @app.post("/sessions", status_code=201)
    async def create_session(body: dict):
        name = body.get("bundle")
        if name not in bundles:
            raise ApiError(404, "unknown_bundle",
                           f"bundle {name!r} is not loaded; have {sorted(bundles)}")
        bundle = bundles[name]
        mode = body.get("mode", "replay")
        if mode not in ("live", "replay"):
            raise ApiError(400, "bad_mode", f"mode must be live or replay, got {mode!r}")
        if mode == "live":
            if bundle.responses is None:
                raise ApiError(400, "live_needs_responses",
                               "live mode needs a bundle with raw responses")
            try:
                kind = MetricKind(bundle.metric)
            except ValueError:
                kind = MetricKind.PRECOMPUTED
            if kind is MetricKind.PRECOMPUTED:
                raise ApiError(400, "live_needs_metric",
                               "live mode needs a computable bundle metric")
        try:
            tau = float(body.get("tau", 1.0))
            budget = int(body.get("budget", bundle.n))
        except (TypeError, ValueError):
            raise ApiError(400, "bad_params", "tau and budget must be numbers")
        if tau <= 0:
            raise ApiError(400, "bad_tau", "tau must be positive")
        if not 0 <= budget <= bundle.n:
            raise ApiError(400, "bad_budget",
                           f"budget must lie in [0, {bundle.n}], got {budget}")

        session = Session(
            id=_session_token(),
            bundle=bundle,
            mode=mode,
            state=SessionState.fresh(n=bundle.n, m=bundle.m, tau=tau, budget=budget),
            reveal_outputs=bool(body.get("reveal_outputs", False)),
        )
        with registry_lock:
            sessions[session.id] = session
        log_event(session, {"event": "created", "bundle": name, "mode": mode,
                            "tau": tau, "budget": budget})
        return {
            "session_id": session.id,
            "n": bundle.n,
            "m": bundle.m,
            "model_names": list(bundle.models),
            "mode": mode,
            "budget": budget,
        }

    @app.get("/sessions/{session_id}/next")
    async def next_query(session_id: str):
        session = get_session(session_id)
        with session.lock:
            if session.step >= session.budget or not session.state.pool:
                raise ApiError(409, "budget_exhausted",
                               f"budget of {session.budget} annotations reached")
            if session.pending is None:
                session.pending = select_next(session.state.pool,
                                              session.state.posterior,
                                              session.bundle.tensor)
            payload = {
                "query_id": session.pending,
                "step": session.step,
                "budget": session.budget,
            }
            if session.bundle.responses is not None:
                record = session.bundle.responses[session.pending]
                if "text" in record:
                    payload["query_text"] = record["text"]
                if session.reveal_outputs:
                    payload["outputs"] = list(record["outputs"])
            return payload

    @app.post("/sessions/{session_id}/annotate")
    async def annotate(session_id: str, body: dict):
        session = get_session(session_id)
        with session.lock:
            query_id = body.get("query_id")
            if session.pending is None or query_id != session.pending:
                raise ApiError(409, "stale_query",
                               f"query {query_id!r} is not the pending query")
            if session.mode == "live":
                reference = body.get("reference_text")
                if not isinstance(reference, str) or not reference.strip():
                    raise ApiError(400, "missing_reference",
                                   "live mode needs reference_text")
                kind = MetricKind(session.bundle.metric)
                outputs = session.bundle.responses[query_id]["outputs"]
                row = np.array([score_pair(kind, out, reference) for out in outputs])
            else:
                if not body.get("accept_replay"):
                    raise ApiError(400, "missing_accept",
                                   "replay mode needs accept_replay: true")
                row = session.bundle.oracle.row(query_id)

            state = session.state
            session.state = SessionState(
                pool=state.pool - {query_id},
                annotated=state.annotated.add(query_id, row),
                posterior=posterior_update(state.posterior, row, state.tau),
                tau=state.tau,
                budget=state.budget,
            )
            session.pending = None
            session.updated = time.time()
            record = {
                "step": session.step - 1,
                "query": query_id,
                "oracle_row": [float(v) for v in row],
                "posterior": [float(v) for v in session.state.posterior.probs],
                "map_best": session.state.posterior.map_model(),
                "empirical_best": session.empirical_best(),
            }
            session.records.append(record)
            log_event(session, {"event": "annotate", **record})
            return {
                "posterior": record["posterior"],
                "map_best": record["map_best"],
                "empirical_best": record["empirical_best"],
                "step": session.step,
                "budget": session.budget,
            }

    @app.get("/sessions/{session_id}/report")
    async def report(session_id: str):
        session = get_session(session_id)
        with session.lock:
            return {
                "trajectory": list(session.records),
                "posterior": [float(v) for v in session.state.posterior.probs],
                "map_best": session.state.posterior.map_model(),
                "empirical_best": session.empirical_best(),
                "step": session.step,
                "budget": session.budget,
                "mode": session.mode,
                "model_names": list(session.bundle.models),
            }

    @app.delete("/sessions/{session_id}")
    async def delete_session(session_id: str):
        with registry_lock:
            if session_id not in sessions:
                raise ApiError(404, "unknown_session", f"no session {session_id!r}")
            del sessions[session_id]
        return {"deleted": session_id}

    return app

"""HTTP service: serves rounds to raters, ingests ballots durably, and
exposes live tallies and ensembled outputs.

Candidate and LR images are served under content-hash URLs with immutable
cache headers; HR images are never hashed into the index, so no rater-facing
route can reach them. Ballot POSTs acknowledge only after the record is
fsync'd to the append-only log.
"""

from __future__ import annotations

import hashlib
import threading
import uuid
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse, Response, StreamingResponse
from fastapi.staticfiles import StaticFiles

from .ensemble import Ballot, ensemble_pipeline, tally
from .errors import BallotRejected, StoreError, StudyError, VotesrError
from .io import png_bytes
from .store import Store
from .study import StudyConfig, Session, next_round, record_round_ballot

_IMMUTABLE = "public, max-age=31536000, immutable"


class ApiError(VotesrError):
    """Maps to an HTTP status with a machine-readable {code, message} body."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _check_store_against_config(store: Store, config: StudyConfig) -> None:
    """Startup validation: every study set is present, consistent, decodable."""
    store.validate()
    available = set(store.list_sets())
    for set_id in config.sets:
        if set_id not in available:
            raise StoreError(f"study references set {set_id!r} not in the store")
        sset = store.get_set(set_id)
        if sset.n_candidates != config.candidates_per_round:
            raise StoreError(
                f"set {set_id!r} has {sset.n_candidates} candidates, "
                f"study expects {config.candidates_per_round}"
            )
        if config.task_kind == "label-and-select" and sset.label_question is None:
            raise StoreError(f"set {set_id!r} lacks label_question required by the study")


def create_app(store: Store, config: StudyConfig, ui_dir: str | Path | None = None) -> FastAPI:
    _check_store_against_config(store, config)

    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        store.close()  # graceful shutdown flushes the ballot log

    app = FastAPI(title="votesr", docs_url=None, redoc_url=None, lifespan=lifespan)

    sets = {set_id: store.get_set(set_id) for set_id in config.sets}

    # content-hash index over rater-visible images only (hr.png excluded
    # by construction: rater_image_paths never yields it)
    image_index: dict[str, Path] = {}
    image_urls: dict[tuple[str, str], str] = {}
    for set_id in config.sets:
        for name, path in store.rater_image_paths(set_id).items():
            digest = hashlib.sha256(path.read_bytes()).hexdigest()
            image_index[digest] = path
            image_urls[(set_id, name)] = f"/api/v1/images/{digest}.png"

    session_locks: dict[str, threading.Lock] = {}
    locks_guard = threading.Lock()

    def session_lock(session_id: str) -> threading.Lock:
        with locks_guard:
            return session_locks.setdefault(session_id, threading.Lock())

    def load_session_or_404(session_id: str) -> Session:
        if not store.has_session(session_id):
            raise ApiError(404, "unknown-session", f"no session {session_id!r}")
        return store.load_session(session_id)

    @app.exception_handler(ApiError)
    async def handle_api_error(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    @app.exception_handler(BallotRejected)
    async def handle_ballot_rejected(_req: Request, exc: BallotRejected):
        return JSONResponse(status_code=422, content={"code": exc.code, "message": exc.message})

    @app.exception_handler(StudyError)
    async def handle_study_error(_req: Request, exc: StudyError):
        return JSONResponse(status_code=409, content={"code": "study-error", "message": str(exc)})

    @app.get("/api/v1/study")
    def get_study():
        return config.to_json_dict(include_seed=False)

    @app.post("/api/v1/sessions")
    def create_session(body: dict):
        voter_id = body.get("voter_id")
        if not isinstance(voter_id, str) or not voter_id.strip():
            raise ApiError(422, "bad-voter-id", "voter_id must be a non-empty string")
        session = Session(
            session_id=uuid.uuid4().hex, voter_id=voter_id.strip(), study_id=config.study_id
        )
        store.save_session(session)
        return {"session_id": session.session_id}

    @app.get("/api/v1/sessions/{session_id}/round")
    def get_round(session_id: str):
        session = load_session_or_404(session_id)
        if session.completed:
            raise ApiError(409, "session-completed", "all rounds are done")
        view = next_round(session, config, sets)
        payload = view.to_json_dict()
        payload["candidates"] = [
            image_urls[(view.set_id, f"cand_{canonical:04d}.png")]
            for canonical in view.display_order
        ]
        payload["lr_image"] = image_urls[(view.set_id, "lr.png")]
        payload["round_index"] = session.round_cursor
        payload["rounds"] = config.rounds
        payload["allowed_labels"] = (
            sorted(config.allowed_labels) if config.allowed_labels else None
        )
        return payload

    @app.post("/api/v1/sessions/{session_id}/ballot")
    def post_ballot(session_id: str, body: dict):
        lock = session_lock(session_id)
        if not lock.acquire(blocking=False):
            # concurrent submission for one session is a contract violation:
            # reject, never serialize
            raise ApiError(409, "concurrent-submission", "another submission is in flight")
        try:
            session = load_session_or_404(session_id)
            selections = body.get("selections")
            if not isinstance(selections, list) or not all(
                isinstance(i, int) and not isinstance(i, bool) for i in selections
            ):
                raise BallotRejected("bad-record", "selections must be a list of integers")
            label = body.get("label")
            if label is not None and not isinstance(label, str):
                raise BallotRejected("bad-record", "label must be a string or null")
            if session.completed:
                raise BallotRejected("wrong-round", "session already completed")
            current_set_id = config.sets[session.round_cursor]
            claimed_set = body.get("set_id")
            if claimed_set is not None and claimed_set != current_set_id:
                raise BallotRejected(
                    "wrong-round",
                    f"ballot targets {claimed_set!r}, current round is {current_set_id!r}",
                )
            if store.has_ballot(session.voter_id, current_set_id):
                raise BallotRejected(
                    "duplicate-voter",
                    f"voter {session.voter_id!r} already voted on {current_set_id!r}",
                )
            display_ballot = Ballot(
                voter_id=session.voter_id,
                set_id=current_set_id,
                selections=tuple(selections),
                label=label,
            )
            canonical = record_round_ballot(session, config, display_ballot, sets)
            # durability order: log append (fsync) -> session state -> ack
            store.append_ballot(canonical)
            store.save_session(session)
            return {
                "status": "accepted",
                "completed": session.completed,
                "round_cursor": session.round_cursor,
            }
        finally:
            lock.release()

    @app.get("/api/v1/sets/{set_id}/tally")
    def get_tally(set_id: str, label: str | None = None):
        if set_id not in sets:
            raise ApiError(404, "unknown-set", f"no set {set_id!r}")
        result = tally(
            store.ballots_for_set(set_id), sets[set_id], config.max_select,
            label_filter=label,
        )
        return result.to_json_dict()

    @app.get("/api/v1/sets/{set_id}/ensemble")
    def get_ensemble(set_id: str, k: int | None = None, label: str | None = None):
        if set_id not in sets:
            raise ApiError(404, "unknown-set", f"no set {set_id!r}")
        sset = sets[set_id]
        kk = config.ensemble_k if k is None else k
        if not 1 <= kk <= sset.n_candidates:
            raise ApiError(422, "bad-k", f"k={kk} outside [1, {sset.n_candidates}]")
        result = ensemble_pipeline(
            sset, store.ballots_for_set(set_id), k=kk,
            max_select=config.max_select, label_filter=label,
        )
        return Response(
            content=png_bytes(result.image),
            media_type="image/png",
            headers={"X-Selected-Indices": ",".join(map(str, result.selected_indices))},
        )

    @app.get("/api/v1/export/ballots")
    def export_ballots():
        import json as _json

        records = store.all_ballot_records()

        def lines():
            for r in records:
                yield _json.dumps(r, separators=(",", ":"), sort_keys=True) + "\n"

        return StreamingResponse(lines(), media_type="application/x-ndjson")

    @app.get("/api/v1/images/{name}")
    def get_image(name: str):
        digest = name.removesuffix(".png")
        path = image_index.get(digest)
        if path is None:
            raise ApiError(404, "unknown-image", "no such image")
        return FileResponse(path, media_type="image/png", headers={"Cache-Control": _IMMUTABLE})

    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def serve(
    config: StudyConfig,
    store: Store,
    bind: str = "127.0.0.1:8765",
    ui_dir: str | Path | None = None,
) -> None:
    """Validate the store, then run the service until interrupted."""
    import uvicorn

    host, _, port_text = bind.rpartition(":")
    if not host or not port_text.isdigit():
        raise StoreError(f"bind address {bind!r} must look like host:port")
    app = create_app(store, config, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=int(port_text), log_level="warning")

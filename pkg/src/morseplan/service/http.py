"""HTTP service for the planner UI.

Endpoints (all JSON, canonical serialization shared with the CLI):

    POST /plans                      register a plan config -> {"plan_id"}
    POST /plans/{id}/surface         start an async surface build -> job info
    GET  /plans/{id}/surface         grid + matrix (409 while building)
    GET  /plans/{id}/frontiers       ?levels=0.03,0.05 polylines (409 until built)
    GET  /plans/{id}/probability     ?u0=..&xi=..  synchronous point query
    GET  /plans/{id}/solve           ?xi=..&alpha=..  (409 until built)
    GET  /healthz

Surface snapshots are immutable; a finished build swaps the snapshot in
atomically while readers keep whatever they already grabbed.
"""

from __future__ import annotations

import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from fastapi import FastAPI, Request, Response

from ..serialize import canonical_json
from ..surface import ENGINE_VERSION
from .archive import SurfaceArchive
from .config import ConfigError, PlanConfig, load_config, parse_config
from .queries import (
    build_archive,
    frontiers_payload,
    probability_payload,
    solve_payload,
    surface_payload,
)

__all__ = ["create_app"]


@dataclass
class _PlanEntry:
    config: PlanConfig
    archive: SurfaceArchive | None = None  # swapped atomically when a build lands
    job_id: str | None = None
    job_state: str = "idle"  # idle | building | done | failed
    job_error: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


class _Store:
    def __init__(self, build_threads: int):
        self._plans: dict[str, _PlanEntry] = {}
        self._lock = threading.Lock()
        self._pool = ThreadPoolExecutor(max_workers=max(1, build_threads))

    def register(self, config: PlanConfig) -> str:
        plan_id = config.plan_id
        with self._lock:
            if plan_id not in self._plans:
                self._plans[plan_id] = _PlanEntry(config=config)
        return plan_id

    def attach_archive(self, archive: SurfaceArchive) -> str:
        plan_id = self.register(archive.config)
        entry = self._plans[plan_id]
        with entry.lock:
            entry.archive = archive
            entry.job_state = "done"
        return plan_id

    def get(self, plan_id: str) -> _PlanEntry | None:
        with self._lock:
            return self._plans.get(plan_id)

    def start_build(self, entry: _PlanEntry) -> str:
        with entry.lock:
            if entry.job_state == "building":
                return entry.job_id
            entry.job_id = uuid.uuid4().hex
            entry.job_state = "building"
            entry.job_error = None
            job_id = entry.job_id

        def run():
            try:
                archive = build_archive(entry.config, with_frontiers=True)
            except Exception as exc:
                with entry.lock:
                    entry.job_state = "failed"
                    entry.job_error = f"{type(exc).__name__}: {exc}"
                return
            with entry.lock:
                entry.archive = archive
                entry.job_state = "done"

        self._pool.submit(run)
        return job_id


def _json(payload: dict, status: int = 200) -> Response:
    return Response(content=canonical_json(payload), status_code=status,
                    media_type="application/json")


def _error(status: int, message: str) -> Response:
    body = {"error": message}
    if status == 500:
        body["correlation_id"] = uuid.uuid4().hex
    return _json(body, status)


def create_app(config_path: str | None = None, archive_path: str | None = None,
               build_threads: int = 2) -> FastAPI:
    app = FastAPI(title="morseplan", version=ENGINE_VERSION)
    store = _Store(build_threads)
    if archive_path:
        store.attach_archive(SurfaceArchive.load(archive_path))
    if config_path:
        store.register(load_config(config_path))

    @app.exception_handler(Exception)
    async def on_unhandled(request: Request, exc: Exception):  # pragma: no cover
        return _error(500, f"{type(exc).__name__}: {exc}")

    @app.get("/healthz")
    def healthz():
        return _json({"status": "ok", "engine_version": ENGINE_VERSION})

    @app.post("/plans")
    async def register_plan(request: Request):
        try:
            doc = await request.json()
        except Exception:
            return _error(400, "request body is not valid JSON")
        try:
            config = parse_config(doc)
        except ConfigError as exc:
            return _error(400, str(exc))
        plan_id = store.register(config)
        return _json({"plan_id": plan_id, "engine_version": ENGINE_VERSION})

    @app.post("/plans/{plan_id}/surface")
    def start_surface(plan_id: str):
        entry = store.get(plan_id)
        if entry is None:
            return _error(404, f"unknown plan {plan_id}")
        job_id = store.start_build(entry)
        return _json({"plan_id": plan_id, "job_id": job_id, "state": entry.job_state})

    @app.get("/plans/{plan_id}/surface")
    def get_surface(plan_id: str):
        entry = store.get(plan_id)
        if entry is None:
            return _error(404, f"unknown plan {plan_id}")
        with entry.lock:
            archive, state, err = entry.archive, entry.job_state, entry.job_error
        if archive is None:
            if state == "failed":
                return _error(500, f"surface build failed: {err}")
            return _error(409, "surface not yet built; POST /plans/{id}/surface first")
        return _json(surface_payload(archive))

    @app.get("/plans/{plan_id}/frontiers")
    def get_frontiers(plan_id: str, levels: str | None = None):
        entry = store.get(plan_id)
        if entry is None:
            return _error(404, f"unknown plan {plan_id}")
        with entry.lock:
            archive = entry.archive
        if archive is None:
            return _error(409, "surface not yet built")
        try:
            level_list = ([float(tok) for tok in levels.split(",") if tok]
                          if levels else None)
        except ValueError:
            return _error(400, f"bad levels parameter: {levels!r}")
        return _json(frontiers_payload(archive, level_list))

    @app.get("/plans/{plan_id}/probability")
    def get_probability(plan_id: str, u0: float, xi: float):
        entry = store.get(plan_id)
        if entry is None:
            return _error(404, f"unknown plan {plan_id}")
        try:
            return _json(probability_payload(entry.config, u0, xi))
        except ValueError as exc:
            return _error(400, str(exc))

    @app.get("/plans/{plan_id}/solve")
    def get_solve(plan_id: str, xi: float, alpha: float):
        entry = store.get(plan_id)
        if entry is None:
            return _error(404, f"unknown plan {plan_id}")
        with entry.lock:
            archive = entry.archive
        if archive is None:
            return _error(409, "surface not yet built")
        try:
            return _json(solve_payload(archive, xi, alpha))
        except ValueError as exc:
            return _error(400, str(exc))

    app.state.store = store
    return app

"""HTTP service exposing the co-creative loop as persistent sessions.

One JSON document per session under <data_dir>/sessions, written atomically.
Mutating requests on one session are mutually exclusive (rejected with 409,
not queued); sessions are independent and reads always see the last
committed state.
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import tempfile
import threading
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, Request
from fastapi.responses import HTMLResponse, JSONResponse

from .codegen import AnimationBundle, emit_bundle, emit_preview_html, write_bundle
from .grouping import GroupingSpec, apply_grouping
from .llm import (
    RepairExhausted,
    RepairPolicy,
    TransportConfig,
    TransportError,
    build_decomposition_request,
    build_motion_request,
    parse_decomposition_response,
    parse_motion_response,
    run_with_repair,
)
from .motion import (
    DslParseError,
    MotionSpec,
    MotionValidationError,
    parse_motion_dsl,
)
from .svgdoc import SvgParseError, flatten_and_assign_ids, parse_svg, serialize_svg

__all__ = [
    "ApiError",
    "STATE_ANIMATED",
    "STATE_DECOMPOSED",
    "STATE_NEW",
    "ServiceConfig",
    "Session",
    "SessionStore",
    "create_app",
    "main",
]

STATE_NEW = "NEW"
STATE_DECOMPOSED = "DECOMPOSED"
STATE_ANIMATED = "ANIMATED"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _new_session_id() -> str:
    # 16 URL-safe chars.
    return secrets.token_urlsafe(12)


@dataclass
class Session:
    id: str
    created_at: str
    updated_at: str
    object_name: str
    original_svg: str
    flattened_svg: str
    state: str = STATE_NEW
    grouping_history: list[GroupingSpec] = field(default_factory=list)
    motion_history: list[MotionSpec] = field(default_factory=list)
    transcript: list[dict] = field(default_factory=list)
    bundle: AnimationBundle | None = None

    @property
    def grouping(self) -> GroupingSpec | None:
        return self.grouping_history[-1] if self.grouping_history else None

    @property
    def motion(self) -> MotionSpec | None:
        return self.motion_history[-1] if self.motion_history else None

    def log(self, role: str, text: str):
        self.transcript.append({"role": role, "text": text, "timestamp": _now()})

    def to_wire(self) -> dict:
        return {
            "id": self.id,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "object_name": self.object_name,
            "original_svg": self.original_svg,
            "flattened_svg": self.flattened_svg,
            "state": self.state,
            "grouping_history": [g.to_wire() for g in self.grouping_history],
            "motion_history": [m.to_wire() for m in self.motion_history],
            "transcript": list(self.transcript),
            "bundle": None
            if self.bundle is None
            else {
                "html": self.bundle.html,
                "css": self.bundle.css,
                "js": self.bundle.js,
                "manifest": self.bundle.manifest,
            },
        }

    @classmethod
    def from_wire(cls, data: dict) -> "Session":
        bundle = data.get("bundle")
        return cls(
            id=data["id"],
            created_at=data["created_at"],
            updated_at=data["updated_at"],
            object_name=data["object_name"],
            original_svg=data["original_svg"],
            flattened_svg=data["flattened_svg"],
            state=data["state"],
            grouping_history=[GroupingSpec.from_wire(g) for g in data.get("grouping_history", [])],
            motion_history=[MotionSpec.from_wire(m) for m in data.get("motion_history", [])],
            transcript=list(data.get("transcript", [])),
            bundle=None
            if bundle is None
            else AnimationBundle(
                html=bundle["html"],
                css=bundle["css"],
                js=bundle["js"],
                manifest=bundle["manifest"],
            ),
        )


class SessionStore:
    """Disk is the source of truth; saves are atomic temp-file renames."""

    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir)
        self.sessions_dir = self.root / "sessions"
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _path(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}.json"

    def get(self, session_id: str) -> Session | None:
        path = self._path(session_id)
        if not path.is_file():
            return None
        return Session.from_wire(json.loads(path.read_text(encoding="utf-8")))

    def save(self, session: Session):
        session.updated_at = _now()
        payload = json.dumps(session.to_wire(), indent=2)
        fd, tmp = tempfile.mkstemp(dir=self.sessions_dir, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(payload)
            os.replace(tmp, self._path(session.id))
        finally:
            if os.path.exists(tmp):
                os.unlink(tmp)

    def list_ids(self) -> list[str]:
        return sorted(p.stem for p in self.sessions_dir.glob("*.json"))

    def mutation_lock(self, session_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(session_id, threading.Lock())


@dataclass
class ServiceConfig:
    data_dir: str | Path
    transport: TransportConfig
    repair: RepairPolicy = RepairPolicy()
    # Pluggable rasterization port for multimodal prompts; the default stub
    # sends text-only requests.
    rasterizer: Callable[[str], bytes | None] | None = None


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.details = details

    def to_wire(self) -> dict:
        return {
            "status": self.status,
            "code": self.code,
            "message": self.message,
            "details": self.details,
        }


def create_app(config: ServiceConfig) -> FastAPI:
    store = SessionStore(config.data_dir)
    app = FastAPI(title="decomate", docs_url=None, redoc_url=None)
    app.state.store = store
    app.state.config = config

    @app.exception_handler(ApiError)
    async def handle_api_error(_: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content=exc.to_wire())

    def load_session(session_id: str) -> Session:
        session = store.get(session_id)
        if session is None:
            raise ApiError(404, "UNKNOWN_SESSION", f"no session {session_id!r}")
        return session

    def mutation(session_id: str):
        lock = store.mutation_lock(session_id)
        if not lock.acquire(blocking=False):
            raise ApiError(
                409, "IN_FLIGHT", "another mutation is in progress for this session"
            )
        return lock

    def session_doc(session: Session):
        return parse_svg(session.flattened_svg)

    def grouped_svg(session: Session, grouping: GroupingSpec) -> str:
        return serialize_svg(apply_grouping(session_doc(session), grouping))

    def pick_grouping(session: Session, history_index) -> GroupingSpec:
        if not session.grouping_history:
            raise ApiError(409, "NOT_DECOMPOSED", "session has no grouping yet")
        if history_index is None:
            return session.grouping_history[-1]
        if not isinstance(history_index, int) or not (
            0 <= history_index < len(session.grouping_history)
        ):
            raise ApiError(400, "BAD_HISTORY_INDEX", f"no grouping at index {history_index!r}")
        return session.grouping_history[history_index]

    def run_llm(build, parse):
        try:
            return run_with_repair(config.transport, config.repair, build, parse)
        except RepairExhausted as exc:
            raise ApiError(
                502,
                "LLM_FAILURE",
                f"model produced no valid response in {exc.attempts} attempts",
                details={"attempts": exc.attempts, "errors": [e.to_wire() for e in exc.errors]},
            ) from exc
        except TransportError as exc:
            raise ApiError(502, "LLM_FAILURE", str(exc)) from exc

    def session_view(session: Session) -> dict:
        grouping = session.grouping
        if grouping is not None:
            svg = grouped_svg(session, grouping)
        else:
            svg = session.flattened_svg
        return {
            "id": session.id,
            "created_at": session.created_at,
            "updated_at": session.updated_at,
            "object_name": session.object_name,
            "state": session.state,
            "svg": svg,
            "grouping": grouping.to_wire() if grouping else None,
            "motion": session.motion.to_wire() if session.motion else None,
            "grouping_history": [g.to_wire() for g in session.grouping_history],
            "motion_history": [m.to_wire() for m in session.motion_history],
            "transcript": session.transcript,
        }

    def decompose_payload(session: Session, grouping: GroupingSpec) -> dict:
        return {
            "grouping": grouping.to_wire(),
            "grouped_svg": grouped_svg(session, grouping),
            "suggestions": {g.name: list(g.suggestions) for g in grouping.groups},
        }

    def attach_image(session: Session):
        if config.rasterizer is None:
            return None
        return config.rasterizer(session.flattened_svg)

    @app.post("/sessions", status_code=201)
    async def create_session(body: dict):
        svg_text = body.get("svg", "")
        object_name = str(body.get("object_name", "")).strip()
        if not object_name:
            raise ApiError(400, "MISSING_OBJECT_NAME", "object_name is required")
        try:
            doc = flatten_and_assign_ids(parse_svg(svg_text))
        except SvgParseError as exc:
            raise ApiError(
                400,
                "SVG_PARSE_ERROR",
                str(exc),
                details={"position": getattr(exc, "position", None)},
            ) from exc
        now = _now()
        session = Session(
            id=_new_session_id(),
            created_at=now,
            updated_at=now,
            object_name=object_name,
            original_svg=svg_text,
            flattened_svg=serialize_svg(doc),
        )
        session.log("user", f"created session for object {object_name!r}")
        store.save(session)
        return session_view(session)

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str):
        return session_view(load_session(session_id))

    @app.post("/sessions/{session_id}/decompose")
    async def decompose(session_id: str):
        lock = mutation(session_id)
        try:
            session = load_session(session_id)
            doc = session_doc(session)
            image = attach_image(session)
            outcome = run_llm(
                lambda: build_decomposition_request(doc, session.object_name, image=image),
                lambda text: parse_decomposition_response(text, doc),
            )
            grouping = replace(outcome.value, object_name=session.object_name)
            session.grouping_history.append(grouping)
            session.state = STATE_DECOMPOSED if session.state == STATE_NEW else session.state
            session.log(
                "assistant",
                f"decomposed into {len(grouping.groups)} groups: "
                + ", ".join(grouping.names()),
            )
            store.save(session)
            return decompose_payload(session, grouping)
        finally:
            lock.release()

    @app.post("/sessions/{session_id}/refine")
    async def refine(session_id: str, body: dict):
        feedback = str(body.get("feedback", "")).strip()
        lock = mutation(session_id)
        try:
            session = load_session(session_id)
            if session.state == STATE_NEW:
                raise ApiError(409, "NOT_DECOMPOSED", "decompose before refining")
            if not feedback:
                raise ApiError(400, "EMPTY_FEEDBACK", "feedback text is required")
            base = pick_grouping(session, body.get("history_index"))
            doc = session_doc(session)
            image = attach_image(session)
            outcome = run_llm(
                lambda: build_decomposition_request(
                    doc, session.object_name, image=image, current=base, feedback=feedback
                ),
                lambda text: parse_decomposition_response(text, doc),
            )
            grouping = replace(outcome.value, object_name=session.object_name)
            session.grouping_history.append(grouping)
            session.log("user", feedback)
            session.log(
                "assistant",
                f"revised grouping to {len(grouping.groups)} groups: "
                + ", ".join(grouping.names()),
            )
            store.save(session)
            return decompose_payload(session, grouping)
        finally:
            lock.release()

    @app.post("/sessions/{session_id}/animate")
    async def animate(session_id: str, body: dict):
        lock = mutation(session_id)
        try:
            session = load_session(session_id)
            if session.state == STATE_NEW:
                raise ApiError(409, "NOT_DECOMPOSED", "decompose before animating")
            grouping = pick_grouping(session, body.get("history_index"))
            dsl_text = body.get("dsl")
            prompts = body.get("prompts") or {}
            global_prompt = body.get("global_prompt")
            if dsl_text:
                try:
                    motion = parse_motion_dsl(str(dsl_text), grouping)
                except DslParseError as exc:
                    raise ApiError(
                        400,
                        "DSL_PARSE_ERROR",
                        str(exc),
                        details={
                            "line": exc.line,
                            "column": exc.column,
                            "expected": exc.expected,
                        },
                    ) from exc
                except MotionValidationError as exc:
                    raise ApiError(
                        400,
                        "VALIDATION_FAILED",
                        str(exc),
                        details=exc.report.to_wire(),
                    ) from exc
                session.log("user", f"motion dsl:\n{dsl_text}")
            elif prompts or global_prompt:
                outcome = run_llm(
                    lambda: build_motion_request(
                        grouping,
                        {str(k): str(v) for k, v in prompts.items()},
                        global_prompt=global_prompt,
                        prior=session.motion,
                    ),
                    lambda text: parse_motion_response(text, grouping),
                )
                motion = outcome.value
                described = "; ".join(f"{k}: {v}" for k, v in sorted(prompts.items()))
                if global_prompt:
                    described = f"{described}; {global_prompt}" if described else str(global_prompt)
                session.log("user", described)
            else:
                raise ApiError(400, "EMPTY_PROMPTS", "provide dsl text or prompts")

            grouped = apply_grouping(session_doc(session), grouping)
            bundle = emit_bundle(grouped, motion, grouping)
            session.motion_history.append(motion)
            session.bundle = bundle
            session.state = STATE_ANIMATED
            session.log(
                "assistant",
                f"animated {len(bundle.manifest['groups'])} groups "
                f"({len(motion.tracks)} tracks)",
            )
            store.save(session)
            return {
                "motion": motion.to_wire(),
                "bundle": {
                    "html": bundle.html,
                    "css": bundle.css,
                    "js": bundle.js,
                    "manifest": bundle.manifest,
                },
            }
        finally:
            lock.release()

    @app.get("/sessions/{session_id}/preview")
    async def preview(session_id: str):
        session = load_session(session_id)
        if session.state == STATE_ANIMATED and session.bundle is not None:
            bundle = session.bundle
        elif session.state == STATE_DECOMPOSED:
            grouping = session.grouping
            assert grouping is not None
            grouped = apply_grouping(session_doc(session), grouping)
            bundle = emit_bundle(grouped, MotionSpec(), grouping)
        else:
            raise ApiError(409, "NOT_DECOMPOSED", "nothing to preview yet")
        return HTMLResponse(emit_preview_html(bundle))

    @app.get("/sessions/{session_id}/bundle")
    async def export_bundle(session_id: str):
        session = load_session(session_id)
        if session.state != STATE_ANIMATED or session.bundle is None:
            raise ApiError(409, "NOT_ANIMATED", "animate before exporting")
        outdir = store.root / "exports" / session.id
        write_bundle(session.bundle, outdir)
        return {
            "dir": str(outdir),
            "files": {
                "index.html": session.bundle.html,
                "style.css": session.bundle.css,
                "anim.js": session.bundle.js,
                "manifest.json": json.dumps(session.bundle.manifest, indent=2, sort_keys=True)
                + "\n",
            },
        }

    return app


def build_transport(args) -> TransportConfig:
    if args.transport == "replay":
        return TransportConfig(mode="replay", fixture_dir=args.fixtures)
    if args.transport == "live":
        return TransportConfig(
            mode="live",
            endpoint_url=args.endpoint,
            api_key_env_name=args.api_key_env,
            model=args.model,
        )
    return TransportConfig(mode="scripted")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="decomate-service")
    parser.add_argument(
        "--data-dir", default=os.environ.get("DECOMATE_DATA_DIR", "./decomate-data")
    )
    parser.add_argument("--bind", default="127.0.0.1:8787")
    parser.add_argument("--transport", choices=["replay", "live", "scripted"], default="replay")
    parser.add_argument("--fixtures", default="./fixtures")
    parser.add_argument("--endpoint", default="")
    parser.add_argument("--api-key-env", default="DECOMATE_API_KEY")
    parser.add_argument("--model", default="")
    args = parser.parse_args(argv)

    import uvicorn

    host, _, port = args.bind.partition(":")
    config = ServiceConfig(data_dir=args.data_dir, transport=build_transport(args))
    uvicorn.run(create_app(config), host=host or "127.0.0.1", port=int(port or 8787), log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""HTTP elicitation service backing the pairwise-comparison questionnaire.

Sessions collect one expert's judgments group by group, recomputing the
group's weights and consistency ratio after every answer; submission is
rejected until every group is consistent (CR < 0.1).  Submitted sessions
aggregate into a weight model plus Kendall's W.  All numeric results are
thin delegates to the library functions, so offline and online computations
agree bit for bit.

Session state persists as an append-only JSON-lines event log per session,
replayed on load; a crashed or disconnected client resumes where it left
off.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from .ahp import (
    CR_THRESHOLD,
    LIKERT_SCALE,
    ExpertResponse,
    Hierarchy,
    PairwiseMatrix,
    aggregate_experts,
    consistency_ratio,
    derive_weights,
    load_default_hierarchy,
)

SCHEMA_VERSION = 1

__all__ = ["SessionStore", "Session", "create_app", "SCHEMA_VERSION"]


def _on_scale(ratio: float) -> bool:
    return any(abs(ratio - v) < 1e-9 for v in LIKERT_SCALE)


@dataclass
class Session:
    session_id: str
    expert_id: str
    submitted: bool = False
    judgments: dict[str, dict[tuple[str, str], float]] = field(default_factory=dict)

    def record(self, group: str, item_a: str, item_b: str, ratio: float) -> None:
        self.judgments.setdefault(group, {})[(item_a, item_b)] = ratio

    def matrix(self, hierarchy: Hierarchy, group: str) -> PairwiseMatrix | None:
        """The group's matrix, or None while answers are still missing."""
        node = hierarchy.node_at(group)
        items = [c.name for c in node.children]
        pairs = self.judgments.get(group, {})
        needed = {(a, b) for i, a in enumerate(items) for b in items[i + 1:]}
        normalized: dict[tuple[str, str], float] = {}
        for (a, b), ratio in pairs.items():
            key = (a, b) if (a, b) in needed else (b, a)
            normalized[key] = ratio if key == (a, b) else 1.0 / ratio
        if set(normalized) != needed:
            return None
        return PairwiseMatrix.from_judgments(items, normalized)

    def consistency_map(self, hierarchy: Hierarchy) -> dict[str, float | None]:
        out: dict[str, float | None] = {}
        for path, _ in hierarchy.sibling_groups():
            matrix = self.matrix(hierarchy, path)
            out[path] = None if matrix is None else consistency_ratio(matrix)
        return out

    def status(self, hierarchy: Hierarchy) -> str:
        if self.submitted:
            return "submitted"
        crs = self.consistency_map(hierarchy)
        if all(cr is not None and cr < CR_THRESHOLD for cr in crs.values()):
            return "consistent"
        return "open"

    def inconsistent_groups(self, hierarchy: Hierarchy) -> list[dict]:
        out = []
        for path, cr in self.consistency_map(hierarchy).items():
            if cr is None or cr >= CR_THRESHOLD:
                out.append({"group": path, "cr": cr})
        return out

    def to_response(self, hierarchy: Hierarchy) -> ExpertResponse:
        matrices = {}
        for path, _ in hierarchy.sibling_groups():
            matrix = self.matrix(hierarchy, path)
            if matrix is None:
                raise ValueError(f"group {path} is incomplete")
            matrices[path] = matrix
        return ExpertResponse(expert_id=self.expert_id, matrices=matrices)


class SessionStore:
    """Append-only JSONL persistence, one file per session."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._guard = threading.Lock()

    def lock(self, session_id: str) -> threading.Lock:
        with self._guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def _path(self, session_id: str) -> Path:
        return self.directory / f"{session_id}.jsonl"

    def _append(self, session_id: str, event: dict) -> None:
        event = {"schema_version": SCHEMA_VERSION, "ts": time.time(), **event}
        with self._path(session_id).open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event) + "\n")

    def create(self, expert_id: str) -> Session:
        session_id = uuid.uuid4().hex[:12]
        self._append(session_id, {"type": "created", "expert_id": expert_id})
        return Session(session_id=session_id, expert_id=expert_id)

    def exists(self, session_id: str) -> bool:
        return self._path(session_id).exists()

    def load(self, session_id: str) -> Session:
        path = self._path(session_id)
        if not path.exists():
            raise KeyError(session_id)
        session = Session(session_id=session_id, expert_id="")
        for line in path.read_text("utf-8").splitlines():
            if not line.strip():
                continue
            event = json.loads(line)
            if event["type"] == "created":
                session.expert_id = event["expert_id"]
            elif event["type"] == "judgment":
                session.record(event["group"], event["item_a"], event["item_b"], event["ratio"])
            elif event["type"] == "submitted":
                session.submitted = True
        return session

    def record_judgment(self, session_id: str, group: str, item_a: str, item_b: str, ratio: float) -> None:
        self._append(
            session_id,
            {"type": "judgment", "group": group, "item_a": item_a, "item_b": item_b, "ratio": ratio},
        )

    def record_submit(self, session_id: str) -> None:
        self._append(session_id, {"type": "submitted"})

    def list_sessions(self) -> list[str]:
        return sorted(p.stem for p in self.directory.glob("*.jsonl"))


class SessionCreate(BaseModel):
    schema_version: int = SCHEMA_VERSION
    expert_id: str


class Judgment(BaseModel):
    schema_version: int = SCHEMA_VERSION
    group: str
    item_a: str
    item_b: str
    ratio: float


class AggregateRequest(BaseModel):
    schema_version: int = SCHEMA_VERSION
    session_ids: list[str]


def _group_payloads(hierarchy: Hierarchy) -> list[dict]:
    payloads = []
    for path, node in hierarchy.sibling_groups():
        payloads.append(
            {
                "path": path,
                "label": node.label,
                "question": node.question or "",
                "items": [{"name": c.name, "label": c.label} for c in node.children],
                "pairs": len(node.children) * (len(node.children) - 1) // 2,
            }
        )
    return payloads


def create_app(hierarchy: Hierarchy | None = None, store_dir: str | Path = "./elicitation-sessions") -> FastAPI:
    hierarchy = hierarchy or load_default_hierarchy()
    store = SessionStore(store_dir)
    app = FastAPI(title="mlrisk elicitation service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def get_session(session_id: str) -> Session:
        try:
            return store.load(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id}") from None

    @app.get("/hierarchy")
    def get_hierarchy() -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "hierarchy": hierarchy.to_json_dict()["root"],
            "groups": _group_payloads(hierarchy),
            "scale": list(LIKERT_SCALE),
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: SessionCreate) -> dict:
        session = store.create(body.expert_id)
        return {
            "schema_version": SCHEMA_VERSION,
            "session_id": session.session_id,
            "expert_id": session.expert_id,
            "status": "open",
        }

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str) -> dict:
        session = get_session(session_id)
        groups = {}
        for path, _ in hierarchy.sibling_groups():
            matrix = session.matrix(hierarchy, path)
            groups[path] = {
                "judgments": [
                    {"item_a": a, "item_b": b, "ratio": r}
                    for (a, b), r in sorted(session.judgments.get(path, {}).items())
                ],
                "complete": matrix is not None,
                "cr": None if matrix is None else consistency_ratio(matrix),
                "weights": None
                if matrix is None
                else {i: float(w) for i, w in zip(matrix.items, derive_weights(matrix))},
            }
        return {
            "schema_version": SCHEMA_VERSION,
            "session_id": session.session_id,
            "expert_id": session.expert_id,
            "status": session.status(hierarchy),
            "groups": groups,
        }

    @app.put("/sessions/{session_id}/judgments")
    def put_judgment(session_id: str, body: Judgment) -> dict:
        with store.lock(session_id):
            session = get_session(session_id)
            if session.submitted:
                raise HTTPException(status_code=409, detail="session already submitted")
            try:
                node = hierarchy.node_at(body.group)
            except KeyError:
                raise HTTPException(status_code=422, detail=f"unknown group {body.group}") from None
            items = {c.name for c in node.children}
            if body.item_a not in items or body.item_b not in items or body.item_a == body.item_b:
                raise HTTPException(
                    status_code=422,
                    detail=f"items {body.item_a!r}, {body.item_b!r} are not a valid pair of {sorted(items)}",
                )
            if not _on_scale(body.ratio):
                raise HTTPException(
                    status_code=422,
                    detail="ratio must sit on the nine-level scale (1/9 .. 9)",
                )
            store.record_judgment(session_id, body.group, body.item_a, body.item_b, body.ratio)
            session.record(body.group, body.item_a, body.item_b, body.ratio)
            matrix = session.matrix(hierarchy, body.group)
        return {
            "schema_version": SCHEMA_VERSION,
            "group": body.group,
            "complete": matrix is not None,
            "cr": None if matrix is None else consistency_ratio(matrix),
            "weights": None
            if matrix is None
            else {i: float(w) for i, w in zip(matrix.items, derive_weights(matrix))},
            "status": session.status(hierarchy),
        }

    @app.get("/sessions/{session_id}/consistency")
    def get_consistency(session_id: str) -> dict:
        session = get_session(session_id)
        crs = session.consistency_map(hierarchy)
        return {
            "schema_version": SCHEMA_VERSION,
            "groups": crs,
            "status": session.status(hierarchy),
            "consistent": all(cr is not None and cr < CR_THRESHOLD for cr in crs.values()),
        }

    @app.post("/sessions/{session_id}/submit")
    def submit(session_id: str) -> dict:
        with store.lock(session_id):
            session = get_session(session_id)
            if session.submitted:
                return {"schema_version": SCHEMA_VERSION, "status": "submitted"}
            offending = session.inconsistent_groups(hierarchy)
            if offending:
                raise HTTPException(
                    status_code=409,
                    detail={
                        "error": "inconsistent or incomplete groups block submission",
                        "groups": offending,
                    },
                )
            store.record_submit(session_id)
        return {"schema_version": SCHEMA_VERSION, "status": "submitted"}

    @app.post("/aggregate")
    def aggregate(body: AggregateRequest) -> dict:
        responses = []
        for sid in body.session_ids:
            session = get_session(sid)
            if not session.submitted:
                raise HTTPException(status_code=409, detail=f"session {sid} is not submitted")
            responses.append(session.to_response(hierarchy))
        model = aggregate_experts(responses, hierarchy)
        return {
            "schema_version": SCHEMA_VERSION,
            "weight_model": model.to_json_dict(),
            "kendalls_w": model.kendall,
            "strong_agreement": model.kendall is None or model.kendall > 0.6,
        }

    app.state.store = store
    app.state.hierarchy = hierarchy
    return app

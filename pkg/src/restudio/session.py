"""In-memory session store with per-session write serialization.

Sessions live in memory; when a persist directory is configured every
mutation writes the project through to disk. Each session has its own
lock so concurrent mutations serialize without blocking other sessions.
"""

from __future__ import annotations

import secrets
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .compose import ObjectLayer
from .imagecore import ImageBuffer
from .jpegcodec import QuantTables
from .project import ProjectMeta, load_project, save_project_dir


@dataclass
class Session:
    id: str
    source: ImageBuffer
    layers: list[ObjectLayer] = field(default_factory=list)
    created: str = ""
    modified: str = ""
    source_quant_tables: QuantTables | None = None
    dirty: bool = False
    lock: threading.RLock = field(default_factory=threading.RLock, repr=False)
    preview_serial: dict[str, int] = field(default_factory=dict, repr=False)

    def layer(self, layer_id: str) -> ObjectLayer:
        for layer in self.layers:
            if layer.id == layer_id:
                return layer
        raise KeyError(layer_id)

    def meta(self) -> ProjectMeta:
        return ProjectMeta(
            created=self.created,
            modified=self.modified,
            source_quant_tables=self.source_quant_tables,
        )

    def touch(self):
        self.modified = ProjectMeta.now()
        self.dirty = True


class SessionStore:
    def __init__(self, persist_dir: str = ""):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self.persist_dir = Path(persist_dir) if persist_dir else None

    def create(self, source: ImageBuffer,
               quant_tables: QuantTables | None = None) -> Session:
        session = Session(
            id=secrets.token_hex(8),
            source=source,
            created=ProjectMeta.now(),
            modified=ProjectMeta.now(),
            source_quant_tables=quant_tables,
        )
        with self._lock:
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            if session_id not in self._sessions:
                raise KeyError(session_id)
            return self._sessions[session_id]

    def ids(self) -> list[str]:
        with self._lock:
            return list(self._sessions)

    def persist(self, session: Session):
        """Write-through project persistence; call with the session lock held."""
        if self.persist_dir is None:
            return
        root = self.persist_dir / session.id
        save_project_dir(root, session.source, session.layers, session.meta())
        session.dirty = False

    def replace_state(self, session: Session, project_bytes: bytes):
        """Swap a session's content for an uploaded project (PUT /project)."""
        source, layers, meta = load_project(project_bytes)
        session.source = source
        session.layers = layers
        session.created = meta.created or session.created
        session.source_quant_tables = meta.source_quant_tables
        session.touch()

    def next_layer_id(self, session: Session) -> str:
        existing = {layer.id for layer in session.layers}
        while True:
            candidate = f"layer-{secrets.token_hex(4)}"
            if candidate not in existing:
                return candidate

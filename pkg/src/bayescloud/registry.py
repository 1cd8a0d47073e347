"""Model registry: register, search, retrieve, update, and delete shared
model records.

Each record is one JSON document in the data directory; the keyword index is
rebuilt in memory on startup.  Reads work on immutable snapshots; mutations
are serialized by a single writer lock and written atomically (temp file,
fsync, rename), so a failed update leaves the prior record intact and a
restart reproduces every record bit-exactly.
"""

from __future__ import annotations

import json
import os
import re
import threading
import uuid
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone
from pathlib import Path

from . import bnscript, core
from .errors import BayesCloudError, InvalidScript, MissingTitle, NotFound

_TOKEN_RE = re.compile(r"[a-z0-9_]+")


@dataclass(frozen=True)
class ModelRecord:
    id: str
    title: str
    description: str
    author: str
    keywords: tuple[str, ...]
    script: str
    created_at: str  # UTC ISO-8601
    updated_at: str

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "description": self.description,
            "author": self.author,
            "keywords": list(self.keywords),
            "script": self.script,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }

    def summary(self) -> dict:
        data = self.to_json()
        del data["script"]
        return data

    @classmethod
    def from_json(cls, data: dict) -> "ModelRecord":
        return cls(
            id=data["id"],
            title=data["title"],
            description=data.get("description", ""),
            author=data.get("author", ""),
            keywords=tuple(data.get("keywords", ())),
            script=data["script"],
            created_at=data["created_at"],
            updated_at=data["updated_at"],
        )


def _now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="microseconds")


def _tokens(*texts) -> set[str]:
    found: set[str] = set()
    for text in texts:
        found.update(_TOKEN_RE.findall(str(text).lower()))
    return found


def validate_script(script: str) -> core.BayesianNetwork:
    """Compile and validate; raises InvalidScript with the diagnostics,
    keeping the source position when the underlying error has one."""
    try:
        net = core.compile_script(script)
    except BayesCloudError as exc:
        raise InvalidScript(
            str(exc), getattr(exc, "line", None), getattr(exc, "column", None)
        ) from exc
    report = core.validate(net)
    if not report.ok:
        raise InvalidScript(str(report))
    return net


class Registry:
    """File-backed record store with token search."""

    def __init__(self, data_dir):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()
        records: dict[str, ModelRecord] = {}
        for path in sorted(self.data_dir.glob("*.json")):
            with open(path, "r", encoding="utf-8") as handle:
                records[path.stem] = ModelRecord.from_json(json.load(handle))
        self._records = records  # replaced wholesale on mutation, never edited

    # -- reads

    def get(self, record_id: str) -> ModelRecord:
        record = self._records.get(record_id)
        if record is None:
            raise NotFound(record_id)
        return record

    def ids(self) -> list[str]:
        return list(self._records)

    def search(self, query: str = "") -> list[ModelRecord]:
        """Case-insensitive token match over title, description, and
        keywords, ranked by match count then recency; an empty query lists
        everything, newest first."""
        records = self._records
        query_tokens = _tokens(query)
        scored = []
        for record in records.values():
            if query_tokens:
                haystack = _tokens(record.title, record.description, *record.keywords)
                matches = len(query_tokens & haystack)
                if matches == 0:
                    continue
            else:
                matches = 0
            scored.append((matches, record))
        # stable three-pass sort: id asc, then created_at desc, then matches desc
        scored.sort(key=lambda item: item[1].id)
        scored.sort(key=lambda item: item[1].created_at, reverse=True)
        scored.sort(key=lambda item: item[0], reverse=True)
        return [record for _matches, record in scored]

    # -- mutations

    def register(
        self,
        title: str,
        script: str,
        description: str = "",
        author: str = "",
        keywords=(),
    ) -> str:
        if not str(title).strip():
            raise MissingTitle()
        validate_script(script)
        with self._write_lock:
            record_id = uuid.uuid4().hex
            now = _now_iso()
            record = ModelRecord(
                id=record_id,
                title=str(title),
                description=str(description),
                author=str(author),
                keywords=tuple(str(k) for k in keywords),
                script=script,
                created_at=now,
                updated_at=now,
            )
            self._persist(record)
            self._records = {**self._records, record_id: record}
        return record_id

    def update(self, record_id: str, **fields) -> ModelRecord:
        allowed = {"title", "description", "author", "keywords", "script"}
        unknown = set(fields) - allowed
        if unknown:
            raise BayesCloudError(f"unknown fields: {', '.join(sorted(unknown))}")
        with self._write_lock:
            record = self.get(record_id)
            if "title" in fields and not str(fields["title"]).strip():
                raise MissingTitle()
            if "script" in fields:
                validate_script(fields["script"])
            if "keywords" in fields:
                fields["keywords"] = tuple(str(k) for k in fields["keywords"])
            now = datetime.now(timezone.utc)
            prev = datetime.fromisoformat(record.updated_at)
            if now <= prev:  # clock ties: keep updated_at strictly advancing
                now = prev + timedelta(microseconds=1)
            updated = replace(record, updated_at=now.isoformat(timespec="microseconds"), **fields)
            self._persist(updated)
            self._records = {**self._records, record_id: updated}
            return updated

    def delete(self, record_id: str) -> None:
        with self._write_lock:
            self.get(record_id)
            os.remove(self._path(record_id))
            records = dict(self._records)
            del records[record_id]
            self._records = records

    # -- plumbing

    def _path(self, record_id: str) -> Path:
        return self.data_dir / f"{record_id}.json"

    def _persist(self, record: ModelRecord) -> None:
        path = self._path(record.id)
        tmp = path.with_suffix(".json.tmp")
        payload = json.dumps(record.to_json(), indent=2, sort_keys=True) + "\n"
        with open(tmp, "w", encoding="utf-8") as handle:
            handle.write(payload)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)

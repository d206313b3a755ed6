"""Crash-safe campaign persistence.

Each campaign owns an append-only event log (one self-describing JSON
record per line) plus a snapshot file caching the latest state.  The log is
the source of truth: replaying it deterministically reconstructs the state,
including refits, because every seeded computation derives its seed from
the configuration and the history length.  Mutations per campaign are
serialized behind one lock.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import replace
from pathlib import Path

from . import campaign as camp
from .errors import BogoError, CorruptStateFile, InvalidConfig

_EVENT_SUFFIX = ".events.jsonl"
_SNAPSHOT_SUFFIX = ".snapshot.json"


class RevisionMismatch(BogoError):
    """Optimistic-concurrency check failed: the campaign moved on."""

    def __init__(self, expected: int, actual: int):
        super().__init__(f"expected revision {expected}, campaign is at {actual}")
        self.expected = expected
        self.actual = actual


def _canonical(data: dict) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


class CampaignStore:
    """Directory-backed registry of campaigns with single-writer mutations."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def _lock(self, campaign_id: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(campaign_id, threading.Lock())

    def _event_path(self, campaign_id: str) -> Path:
        return self.root / f"{campaign_id}{_EVENT_SUFFIX}"

    def _snapshot_path(self, campaign_id: str) -> Path:
        return self.root / f"{campaign_id}{_SNAPSHOT_SUFFIX}"

    def list_ids(self) -> list[str]:
        return sorted(p.name[: -len(_EVENT_SUFFIX)] for p in self.root.glob(f"*{_EVENT_SUFFIX}"))

    def exists(self, campaign_id: str) -> bool:
        return self._event_path(campaign_id).is_file()

    def _append_event(self, campaign_id: str, kind: str, revision: int, payload: dict) -> None:
        record = _canonical({"kind": kind, "revision": revision, "payload": payload})
        with self._event_path(campaign_id).open("a", encoding="utf-8") as fh:
            fh.write(record + "\n")

    def _write_snapshot(self, state: camp.CampaignState) -> None:
        path = self._snapshot_path(state.campaign_id)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(_canonical(state.to_dict()) + "\n", encoding="utf-8")
        tmp.replace(path)

    def create(self, config: camp.CampaignConfig, campaign_id: str | None = None) -> camp.CampaignState:
        campaign_id = campaign_id or uuid.uuid4().hex[:12]
        if self.exists(campaign_id):
            raise InvalidConfig(f"campaign {campaign_id!r} already exists")
        state = camp.create(config, campaign_id=campaign_id)
        with self._lock(campaign_id):
            self._append_event(
                campaign_id, "create", 0, {"campaign_id": campaign_id, "config": config.to_dict()}
            )
            self._write_snapshot(state)
        return state

    def _read_events(self, campaign_id: str) -> list[dict]:
        path = self._event_path(campaign_id)
        if not path.is_file():
            raise KeyError(campaign_id)
        events = []
        for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorruptStateFile(
                    f"{path.name}:{line_no}: unparsable event record ({exc})"
                ) from None
            if not {"kind", "revision", "payload"} <= set(record):
                raise CorruptStateFile(f"{path.name}:{line_no}: event record missing fields")
            events.append(record)
        if not events or events[0]["kind"] != "create":
            raise CorruptStateFile(f"{path.name}: log must start with a create event")
        return events

    def replay(self, campaign_id: str) -> camp.CampaignState:
        """Rebuild the state purely from the event log."""
        events = self._read_events(campaign_id)
        config = camp.CampaignConfig.from_dict(events[0]["payload"]["config"])
        state = camp.create(config, campaign_id=campaign_id)
        for record in events[1:]:
            payload = record["payload"]
            if record["kind"] == "tell":
                state = camp.tell(
                    state,
                    payload["x"],
                    payload["y"],
                    tag=payload.get("tag", ""),
                    timestamp=payload["timestamp"],
                )
            elif record["kind"] == "suggest":
                state = replace(
                    state,
                    pending=camp.Suggestion.from_dict(payload),
                    revision=state.revision + 1,
                )
            else:
                raise CorruptStateFile(f"unknown event kind {record['kind']!r}")
            if state.revision != record["revision"]:
                raise CorruptStateFile(
                    f"revision drift during replay: state {state.revision}, "
                    f"event {record['revision']}"
                )
        return state

    def load(self, campaign_id: str) -> camp.CampaignState:
        """Snapshot when fresh, full replay otherwise."""
        if not self.exists(campaign_id):
            raise KeyError(campaign_id)
        path = self._snapshot_path(campaign_id)
        if path.is_file():
            try:
                state = camp.CampaignState.from_dict(json.loads(path.read_text(encoding="utf-8")))
                last = self._read_events(campaign_id)[-1]
                if state.revision == last["revision"]:
                    return state
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                pass  # fall through to replay; snapshot is refreshed below
        state = self.replay(campaign_id)
        self._write_snapshot(state)
        return state

    def tell(
        self,
        campaign_id: str,
        x,
        y: float,
        tag: str = "",
        expected_revision: int | None = None,
    ) -> camp.CampaignState:
        """Serialized observation append with optional optimistic check."""
        with self._lock(campaign_id):
            state = self.load(campaign_id)
            if expected_revision is not None and expected_revision != state.revision:
                raise RevisionMismatch(expected=expected_revision, actual=state.revision)
            new_state = camp.tell(state, x, y, tag=tag)
            obs = new_state.history[-1]
            self._append_event(campaign_id, "tell", new_state.revision, obs.to_dict())
            self._write_snapshot(new_state)
            return new_state

    def ask(self, campaign_id: str) -> tuple[camp.CampaignState, camp.Suggestion]:
        """Compute the suggestion, persisting it as pending when it changed."""
        with self._lock(campaign_id):
            state = self.load(campaign_id)
            suggestion = camp.ask(state)
            if state.pending != suggestion:
                state = replace(state, pending=suggestion, revision=state.revision + 1)
                self._append_event(campaign_id, "suggest", state.revision, suggestion.to_dict())
                self._write_snapshot(state)
            return state, suggestion

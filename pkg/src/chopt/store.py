"""Event-sourced persistence.

Each session owns an append-only JSON-lines log.  Events carry a gapless
sequence number and the sim tick; serialization is canonical (sorted keys,
no whitespace) so identical runs produce byte-identical files.  A log is
sealed by its terminated event; appending past it is an error.

replay_session folds a log back into session state and doubles as the
invariant checker: it validates sequence continuity, the pool partition
after every event, and that dead trials never reappear.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from chopt.space import parse_config


class StoreError(Exception):
    pass


class NotFoundError(StoreError):
    pass


def encode_event(event: dict[str, Any]) -> str:
    return json.dumps(event, sort_keys=True, separators=(",", ":"))


class EventLog:
    """Append-only log, optionally backed by a file."""

    def __init__(self, path: Path | None = None):
        self.path = path
        self.events: list[dict[str, Any]] = []
        self._next_seq = 1
        self._sealed = False
        self._fh = None
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = open(path, "w", encoding="utf-8")

    def append(self, kind: str, t: int, **payload: Any) -> dict[str, Any]:
        if self._sealed:
            raise StoreError(f"log sealed by terminated event, rejecting {kind!r}")
        event = {"seq": self._next_seq, "t": t, "kind": kind, **payload}
        self._next_seq += 1
        self.events.append(event)
        if self._fh is not None:
            self._fh.write(encode_event(event) + "\n")
        if kind == "terminated":
            self._sealed = True
            self.flush()
        return event

    @property
    def last_seq(self) -> int:
        return self._next_seq - 1

    def flush(self) -> None:
        if self._fh is not None:
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def read_events(path: Path) -> list[dict[str, Any]]:
    events = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                events.append(json.loads(line))
    return events


@dataclass
class ReplayTrial:
    assignment: dict[str, Any]
    state: str = "running"
    epochs: int = 0
    metric: float | None = None
    lineage: int | None = None
    history: list[tuple[int, float]] = field(default_factory=list)


@dataclass
class ReplayState:
    trials: dict[int, ReplayTrial] = field(default_factory=dict)
    live: set[int] = field(default_factory=set)
    stop: set[int] = field(default_factory=set)
    dead: set[int] = field(default_factory=set)
    grant: int = 0
    status: str = "created"
    reason: str | None = None
    created: int = 0


def replay_session(events: Iterable[dict[str, Any]]) -> ReplayState:
    """Rebuild session state from its event log, checking invariants."""
    state = ReplayState()
    expected_seq = 1
    last_t = -1
    for event in events:
        if state.status == "terminated":
            raise StoreError(f"event after terminated: {event}")
        if event["seq"] != expected_seq:
            raise StoreError(f"sequence gap: expected {expected_seq}, got {event['seq']}")
        expected_seq += 1
        if event["t"] < last_t:
            raise StoreError(f"time went backwards at seq {event['seq']}")
        last_t = event["t"]

        kind = event["kind"]
        if kind == "created":
            pass
        elif kind == "started":
            state.status = "running"
            state.grant = event["grant"]
        elif kind == "grant":
            state.grant = event["grant"]
        elif kind == "trial_created":
            tid = event["trial"]
            if tid in state.trials:
                raise StoreError(f"trial {tid} created twice")
            state.trials[tid] = ReplayTrial(assignment=event["assignment"])
            state.live.add(tid)
            state.created += 1
        elif kind == "epoch":
            tr = _live_trial(state, event)
            if event["epoch"] != tr.epochs + 1:
                raise StoreError(f"epoch gap for trial {event['trial']}")
            tr.epochs = event["epoch"]
            tr.metric = event["metric"]
            tr.history.append((event["epoch"], event["metric"]))
        elif kind == "checkpoint":
            tr = _live_trial(state, event)
            if event["decision"] == "exploit_explore":
                tr.assignment = event["assignment"]
                tr.lineage = event["source"]
        elif kind == "trial_stopped":
            tr = _live_trial(state, event)
            tr.state = "stopped"
            state.live.remove(event["trial"])
            state.stop.add(event["trial"])
        elif kind == "trial_revived":
            tid = event["trial"]
            if tid not in state.stop:
                raise StoreError(f"revival of non-stopped trial {tid}")
            state.stop.remove(tid)
            state.live.add(tid)
            state.trials[tid].state = "running"
        elif kind == "trial_dead":
            tr = _live_trial(state, event)
            tr.state = "dead"
            tr.history = []  # tombstone keeps no resumable history
            state.live.remove(event["trial"])
            state.dead.add(event["trial"])
        elif kind == "trial_finished":
            tr = _live_trial(state, event)
            tr.state = "finished"
            state.live.remove(event["trial"])
            state.dead.add(event["trial"])
        elif kind == "terminated":
            state.status = "terminated"
            state.reason = event["reason"]
        else:
            raise StoreError(f"unknown event kind {kind!r}")

        pools = (state.live, state.stop, state.dead)
        total = sum(len(p) for p in pools)
        if total != len(state.live | state.stop | state.dead) or total != len(state.trials):
            raise StoreError(f"pool partition violated after seq {event['seq']}")
    return state


def _live_trial(state: ReplayState, event: dict[str, Any]) -> ReplayTrial:
    tid = event["trial"]
    if tid in state.dead:
        raise StoreError(f"dead trial {tid} referenced at seq {event['seq']}")
    if tid not in state.live:
        raise StoreError(f"trial {tid} not live at seq {event['seq']}")
    return state.trials[tid]


class SessionStore:
    """Directory layout: sessions/<id>/{config.json,events.jsonl,summary.json}
    plus cluster/{events.jsonl,master.json}."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        (self.root / "sessions").mkdir(parents=True, exist_ok=True)

    def session_dir(self, session_id: str) -> Path:
        return self.root / "sessions" / session_id

    def create_session(self, session_id: str, config_text: str) -> Path:
        d = self.session_dir(session_id)
        if d.exists():
            raise StoreError(f"session {session_id} already exists")
        d.mkdir(parents=True)
        (d / "config.json").write_text(config_text, encoding="utf-8")
        return d

    def event_log(self, session_id: str) -> EventLog:
        return EventLog(self.session_dir(session_id) / "events.jsonl")

    def cluster_log(self) -> EventLog:
        return EventLog(self.root / "cluster" / "events.jsonl")

    def read_session_events(self, session_id: str) -> list[dict[str, Any]]:
        path = self.session_dir(session_id) / "events.jsonl"
        if not path.exists():
            raise NotFoundError(f"no such session: {session_id}")
        return read_events(path)

    def write_summary(self, session_id: str, summary: dict[str, Any]) -> None:
        path = self.session_dir(session_id) / "summary.json"
        path.write_text(json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8")

    def read_summary(self, session_id: str) -> dict[str, Any]:
        path = self.session_dir(session_id) / "summary.json"
        if not path.exists():
            raise NotFoundError(f"no such session: {session_id}")
        return json.loads(path.read_text(encoding="utf-8"))

    def read_config_text(self, session_id: str) -> str:
        path = self.session_dir(session_id) / "config.json"
        if not path.exists():
            raise NotFoundError(f"no such session: {session_id}")
        return path.read_text(encoding="utf-8")

    def list_sessions(self) -> list[str]:
        base = self.root / "sessions"
        return sorted(p.name for p in base.iterdir() if p.is_dir())

    def save_master_state(self, state: dict[str, Any]) -> None:
        path = self.root / "cluster" / "master.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(state, indent=2, sort_keys=True), encoding="utf-8")

    def load_master_state(self) -> dict[str, Any] | None:
        path = self.root / "cluster" / "master.json"
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    # ------------------------------------------------------------------
    # exports

    def export_trials(self, session_ids: list[str], fmt: str) -> str:
        """Flat trial table for one or more sessions.

        Columns are the union of hyperparameters across the sessions in
        first-appearance order; a session's constants fill parameters it did
        not tune.  Values absent everywhere stay empty.  fmt is csv or jsonl
        and both carry identical values.
        """
        if fmt not in ("csv", "jsonl"):
            raise ValueError(f"unknown export format {fmt!r}")
        param_order: list[str] = []
        rows: list[dict[str, Any]] = []
        for sid in session_ids:
            summary = self.read_summary(sid)
            config = parse_config(self.read_config_text(sid))
            for name in config.space.names():
                if name not in param_order:
                    param_order.append(name)
            for name in config.constants:
                if name not in param_order:
                    param_order.append(name)
            for trial in summary["trials"]:
                row: dict[str, Any] = {"session": sid, "trial": trial["id"]}
                for name in param_order:
                    if name in trial["assignment"]:
                        row[name] = trial["assignment"][name]
                    elif name in config.constants:
                        row[name] = config.constants[name]
                    else:
                        row[name] = None
                row["metric"] = trial["metric"]
                row["epochs"] = trial["epochs"]
                row["state"] = trial["state"]
                rows.append(row)

        columns = ["session", "trial", *param_order, "metric", "epochs", "state"]
        if fmt == "jsonl":
            lines = []
            for row in rows:
                ordered = {c: row.get(c) for c in columns}
                lines.append(json.dumps(ordered))
            return "\n".join(lines) + ("\n" if lines else "")

        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow(
                ["" if row.get(c) is None else row.get(c) for c in columns]
            )
        return out.getvalue()

"""Cluster runtime: one clock, one master, many sessions.

Each step advances the clock, heartbeats live agents, runs the master's
control-plane logic (election, dispatch, rebalance, demand admission) and
then ticks every running session in id order.  All of it is deterministic:
given the same cluster config, demand trace, and submitted configs with
their seeds, two runs produce byte-identical event logs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from typing import Any, Mapping

from chopt.master import AgentRegistry, ClusterState, Master, utilization
from chopt.orchestrator import Session
from chopt.simcluster import DemandTrace, SimClock, Workload
from chopt.space import (
    ChoptConfig,
    Condition,
    ConditionGroup,
    ParamSpec,
    ValidationError,
    append_param,
    narrow,
    parse_config,
    serialize_config,
)
from chopt.store import NotFoundError, SessionStore, replay_session


@dataclass(frozen=True)
class ClusterSetup:
    capacity: int
    headroom: float = 0.05  # fraction of capacity kept free of CHOPT
    chopt_cap: int | None = None
    seed: int = 0
    agents: int = 3
    heartbeat_timeout: int = 3

    @staticmethod
    def from_dict(raw: Mapping[str, Any]) -> "ClusterSetup":
        known = {"capacity", "headroom", "chopt_cap", "seed", "agents", "heartbeat_timeout"}
        for key in raw:
            if key not in known:
                raise ValidationError(f"cluster.{key}", "unknown key")
        capacity = raw.get("capacity")
        if not isinstance(capacity, int) or capacity < 1:
            raise ValidationError("cluster.capacity", "must be a positive integer")
        headroom = raw.get("headroom", 0.05)
        if not isinstance(headroom, (int, float)) or not 0 <= headroom < 1:
            raise ValidationError("cluster.headroom", "must be a fraction in [0, 1)")
        return ClusterSetup(
            capacity=capacity,
            headroom=float(headroom),
            chopt_cap=raw.get("chopt_cap"),
            seed=raw.get("seed", 0),
            agents=raw.get("agents", 3),
            heartbeat_timeout=raw.get("heartbeat_timeout", 3),
        )


def _headroom_gpus(setup: ClusterSetup) -> int:
    # ceil(capacity * fraction) without float edge surprises
    num = setup.capacity * round(setup.headroom * 10**6)
    return -(-num // 10**6)


class Runtime:
    def __init__(
        self,
        setup: ClusterSetup,
        store: SessionStore,
        trace: DemandTrace | None = None,
    ):
        self.setup = setup
        self.store = store
        self.trace = trace if trace is not None else DemandTrace()
        self.clock = SimClock()
        self.registry = AgentRegistry(
            [f"a{i + 1}" for i in range(setup.agents)],
            heartbeat_timeout=setup.heartbeat_timeout,
        )
        self.cluster = ClusterState(
            capacity=setup.capacity,
            headroom=_headroom_gpus(setup),
            chopt_cap=setup.chopt_cap,
        )
        self.master = Master(self.cluster, self.registry, store=store)
        self.cluster_log = store.cluster_log()
        self.sessions: dict[str, Session] = {}
        self._session_count = 0

    # ------------------------------------------------------------------
    # session intake

    def _next_session_id(self) -> str:
        self._session_count += 1
        return f"s{self._session_count:04d}"

    def _session_seed(self, config: ChoptConfig, session_id: str) -> int:
        if config.seed is not None:
            return config.seed
        digest = hashlib.blake2b(
            f"{self.setup.seed}:{session_id}".encode(), digest_size=8
        ).digest()
        return int.from_bytes(digest, "big")

    def submit(self, config: ChoptConfig | str | bytes | Mapping[str, Any]) -> str:
        """Validate, persist, and enqueue a session.  Returns its id."""
        if not isinstance(config, ChoptConfig):
            config = parse_config(config)
        if config.workload is None:
            raise ValidationError("workload", "required key missing")
        workload = Workload.from_dict(config.workload)  # reject bad workloads before enqueue
        needed = (
            {workload.depth_param}
            if workload.kind == "deep_bias"
            else {name for name, _ in workload.center}
        )
        missing = needed - set(config.space.names()) - set(config.constants)
        if missing:
            raise ValidationError(
                "workload",
                f"workload parameter not tuned or pinned: {', '.join(sorted(missing))}",
            )
        session_id = self._next_session_id()
        text = serialize_config(config)
        self.store.create_session(session_id, text)
        session = Session(
            session_id,
            config,
            seed=self._session_seed(config, session_id),
            clock=self.clock,
            log=self.store.event_log(session_id),
        )
        self.sessions[session_id] = session
        self.master.enqueue(session_id)
        self.cluster_log.append("enqueued", self.clock.tick, session=session_id)
        self._write_summary(session_id)
        return session_id

    def rerun(self, base_id: str, request: Mapping[str, Any]) -> str:
        """Derive a follow-up session from a finished (or running) one.

        request supports:
          ranges:    {param: [low, high] | [categories...]} narrowing
          append:    [{name, parameters, distribution, type, p_range?,
                       conditions?: [{parent, values} | {all: [...]}]}]
          overrides: step, population, tune, termination, stop_ratio, seed,
                     constants
        """
        if base_id not in self.sessions:
            raise NotFoundError(f"no such session: {base_id}")
        base = self.sessions[base_id].config
        known = {"ranges", "append", "overrides"}
        for key in request:
            if key not in known:
                raise ValidationError(f"rerun.{key}", "unknown key")

        space = base.space
        ranges = request.get("ranges") or {}
        if not isinstance(ranges, Mapping):
            raise ValidationError("rerun.ranges", "must be an object")
        if ranges:
            space = narrow(space, ranges)

        constants = dict(base.constants)
        appends = request.get("append") or []
        if not isinstance(appends, list):
            raise ValidationError("rerun.append", "must be a list")
        for i, entry in enumerate(appends):
            path = f"rerun.append[{i}]"
            if not isinstance(entry, Mapping) or "name" not in entry:
                raise ValidationError(path, "must be an object with a name")
            spec, conditions = _parse_append(entry, path)
            space = append_param(space, spec, conditions)
            constants.pop(spec.name, None)  # now tuned, no longer pinned

        overrides = request.get("overrides") or {}
        if not isinstance(overrides, Mapping):
            raise ValidationError("rerun.overrides", "must be an object")
        allowed = {"step", "population", "tune", "termination", "stop_ratio", "seed", "constants"}
        for key in overrides:
            if key not in allowed:
                raise ValidationError(f"rerun.overrides.{key}", "unknown key")
        if "constants" in overrides:
            if not isinstance(overrides["constants"], Mapping):
                raise ValidationError("rerun.overrides.constants", "must be an object")
            constants = dict(overrides["constants"])

        # serialize the adjusted base, overlay raw overrides, and revalidate
        adjusted = replace(base, space=space, constants=constants)
        payload = json.loads(serialize_config(adjusted))
        for key, value in overrides.items():
            if key != "constants":
                payload[key] = value
        config = parse_config(payload)
        new_id = self.submit(config)
        self.sessions[new_id].base_session = base_id
        self._write_summary(new_id)
        return new_id

    def stop(self, session_id: str) -> str:
        """User-initiated stop.  Returns resulting status."""
        session = self._get(session_id)
        if session.status == "terminated":
            return session.status
        if session.status == "queued":
            self.master.drop_from_queue(session_id)
        session.terminate("user_stop")
        self.cluster_log.append("stopped", self.clock.tick, session=session_id)
        self._write_summary(session_id)
        return session.status

    def kill_agent(self, agent_id: str) -> None:
        self.registry.kill(agent_id)
        self.cluster_log.append("agent_killed", self.clock.tick, agent=agent_id)

    # ------------------------------------------------------------------
    # time

    def step(self) -> int:
        """Advance sim time by one tick and run everything due."""
        t = self.clock.advance()
        for aid, agent in self.registry.agents.items():
            if agent.alive:
                self.registry.heartbeat(aid, t)
        self.master.tick(t, self.trace.at(t), self.sessions, self.cluster_log)
        for sid in sorted(self.sessions):
            session = self.sessions[sid]
            if session.status == "running":
                session.tick()
                self._write_summary(sid)
        self.cluster_log.flush()
        for session in self.sessions.values():
            session.log.flush()
        return t

    def run(self, ticks: int) -> None:
        for _ in range(ticks):
            self.step()

    def run_until_idle(self, max_ticks: int = 100000) -> None:
        for _ in range(max_ticks):
            self.step()
            if all(s.status == "terminated" for s in self.sessions.values()):
                return

    # ------------------------------------------------------------------
    # views

    def _get(self, session_id: str) -> Session:
        if session_id not in self.sessions:
            raise NotFoundError(f"no such session: {session_id}")
        return self.sessions[session_id]

    def _write_summary(self, session_id: str) -> None:
        session = self.sessions[session_id]
        summary = session.summary()
        summary["base_session"] = session.base_session
        self.store.write_summary(session_id, summary)

    def session_record(self, session_id: str) -> dict[str, Any]:
        session = self._get(session_id)
        record = session.summary()
        record["base_session"] = session.base_session
        record["config"] = json.loads(serialize_config(session.config))
        return record

    def list_records(self, status: str | None = None) -> list[dict[str, Any]]:
        out = []
        for sid in sorted(self.sessions):
            session = self.sessions[sid]
            if status is not None and session.status != status:
                continue
            best_trial, best_metric = session.best()
            out.append(
                {
                    "id": sid,
                    "status": session.status,
                    "reason": session.reason,
                    "agent": session.agent,
                    "grant": session.grant,
                    "trials_created": session.trials_created,
                    "measure": session.config.measure,
                    "order": session.config.order,
                    "best": None
                    if best_trial is None
                    else {"trial": best_trial, "metric": best_metric},
                }
            )
        return out

    def trial_records(self, session_id: str) -> dict[str, Any]:
        session = self._get(session_id)
        trials = []
        for tid in sorted(session.trials):
            trial = session.trials[tid]
            trials.append(
                {
                    "id": tid,
                    "assignment": trial.assignment,
                    "state": trial.state,
                    "epochs": trial.epochs_done,
                    "metric": trial.last_metric,
                    "lineage": trial.lineage,
                    "history": [[e, m] for e, m in trial.history],
                }
            )
        lineage = [
            {"child": t["id"], "parent": t["lineage"]}
            for t in trials
            if t["lineage"] is not None
        ]
        return {
            "session": session_id,
            "measure": session.config.measure,
            "order": session.config.order,
            "trials": trials,
            "lineage": lineage,
        }

    def top_trials(self, session_id: str, k: int) -> list[dict[str, Any]]:
        session = self._get(session_id)
        scored = [
            t for t in session.trials.values() if t.last_metric is not None
        ]
        reverse = session.config.order == "descending"
        scored.sort(
            key=lambda t: ((-t.last_metric) if reverse else t.last_metric, t.id)
        )
        return [
            {
                "id": t.id,
                "assignment": t.assignment,
                "state": t.state,
                "epochs": t.epochs_done,
                "metric": t.last_metric,
                "lineage": t.lineage,
            }
            for t in scored[:k]
        ]

    def cluster_view(self) -> dict[str, Any]:
        return {
            "tick": self.clock.tick,
            "capacity": self.cluster.capacity,
            "headroom": self.cluster.headroom,
            "chopt_cap": self.cluster.chopt_cap,
            "non_chopt_used": self.cluster.non_chopt_used,
            "grants": dict(sorted(self.cluster.grants.items())),
            "utilization": utilization(self.cluster),
            "master": self.registry.master_id,
            "queue": list(self.master.queue),
            "agents": [
                {
                    "id": aid,
                    "alive": agent.alive,
                    "last_heartbeat": agent.last_heartbeat,
                    "sessions": list(agent.sessions),
                }
                for aid, agent in sorted(self.registry.agents.items())
            ],
        }

    def replay(self, session_id: str):
        return replay_session(self.store.read_session_events(session_id))


def _parse_append(entry: Mapping[str, Any], path: str) -> tuple[ParamSpec, list]:
    known = {"name", "parameters", "distribution", "type", "p_range", "conditions"}
    for key in entry:
        if key not in known:
            raise ValidationError(f"{path}.{key}", "unknown key")
    name = entry["name"]
    if not isinstance(name, str) or not name:
        raise ValidationError(f"{path}.name", "must be a non-empty string")
    for key in ("parameters", "distribution", "type"):
        if key not in entry:
            raise ValidationError(f"{path}.{key}", "required key missing")
    distribution = entry["distribution"]
    vtype = entry["type"]
    parameters = entry["parameters"]
    if not isinstance(parameters, list):
        raise ValidationError(f"{path}.parameters", "must be a list")
    if distribution == "categorical":
        kind = "categorical"
    elif vtype in ("float", "int"):
        kind = vtype
    else:
        raise ValidationError(f"{path}.type", "must be float, int, or str")
    spec = ParamSpec(
        name=name,
        kind=kind,
        distribution=distribution,
        parameters=tuple(parameters),
        p_range=tuple(entry.get("p_range", [])),
    )
    conditions: list = []
    raw_conditions = entry.get("conditions", [])
    if not isinstance(raw_conditions, list):
        raise ValidationError(f"{path}.conditions", "must be a list")
    for j, raw in enumerate(raw_conditions):
        cpath = f"{path}.conditions[{j}]"
        if not isinstance(raw, Mapping):
            raise ValidationError(cpath, "must be an object")
        if "all" in raw:
            members = raw["all"]
            if not isinstance(members, list) or not members:
                raise ValidationError(f"{cpath}.all", "must be a non-empty list")
            conds = []
            for k, m in enumerate(members):
                if not isinstance(m, Mapping) or "parent" not in m or "values" not in m:
                    raise ValidationError(f"{cpath}.all[{k}]", "needs parent and values")
                conds.append(
                    Condition(child=name, parent=m["parent"], parent_values=tuple(m["values"]))
                )
            conditions.append(ConditionGroup(child=name, conditions=tuple(conds)))
        else:
            if "parent" not in raw or "values" not in raw:
                raise ValidationError(cpath, "needs parent and values")
            conditions.append(
                Condition(child=name, parent=raw["parent"], parent_values=tuple(raw["values"]))
            )
    return spec, conditions

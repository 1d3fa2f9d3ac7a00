"""Master agent: session queue, election, Stop-and-Go rebalancing.

One agent at a time acts as master, chosen as the lowest-id agent with a
fresh heartbeat (the election-service stand-in).  The master dispatches
queued sessions, watches external demand, and sizes the total CHOPT share to

    T = min(chopt_cap, capacity - non_chopt_demand - headroom)

floored at one GPU per running session.  When the current total exceeds T it
issues shrinks, when below it issues grows; one tick never moves more than
|current - T| GPUs and never mixes directions.  Distribution is proportional
to current grants by largest remainder, capped by what each session can
absorb, with ties broken by session id.  A session shrunk at tick t is
exempt from grows at t+1 unless that would leave target capacity idle.

Master state (queue, hysteresis marks) is persisted to the store every tick
and reloaded on election, so a new master resumes where the dead one left
off.  Agent death never touches session event logs; trials keep running on
the cluster while the control plane fails over.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable

from chopt.orchestrator import SessionSnapshot


@dataclass
class ClusterState:
    capacity: int
    headroom: int  # GPUs held back from CHOPT
    chopt_cap: int | None = None
    non_chopt_demand: int = 0
    non_chopt_used: int = 0
    grants: dict[str, int] = field(default_factory=dict)

    def chopt_total(self) -> int:
        return sum(self.grants.values())


def utilization(cluster: ClusterState) -> float:
    return (cluster.non_chopt_used + cluster.chopt_total()) / cluster.capacity


def chopt_target(cluster: ClusterState, running: int) -> int:
    """Total GPUs CHOPT should hold given current demand."""
    t = cluster.capacity - cluster.non_chopt_demand - cluster.headroom
    if cluster.chopt_cap is not None:
        t = min(t, cluster.chopt_cap)
    return max(t, running)  # never below one GPU per running session


@dataclass
class AgentInfo:
    id: str
    alive: bool = True
    last_heartbeat: int = 0
    sessions: list[str] = field(default_factory=list)


class AgentRegistry:
    def __init__(self, agent_ids: Iterable[str], heartbeat_timeout: int = 3):
        self.agents = {aid: AgentInfo(id=aid) for aid in sorted(agent_ids)}
        self.heartbeat_timeout = heartbeat_timeout
        self.master_id: str | None = None

    def heartbeat(self, agent_id: str, t: int) -> None:
        agent = self.agents[agent_id]
        if agent.alive:
            agent.last_heartbeat = t

    def kill(self, agent_id: str) -> None:
        self.agents[agent_id].alive = False

    def fresh(self, agent_id: str, t: int) -> bool:
        agent = self.agents[agent_id]
        return agent.alive and t - agent.last_heartbeat < self.heartbeat_timeout

    def fresh_agents(self, t: int) -> list[AgentInfo]:
        return [a for aid, a in sorted(self.agents.items()) if self.fresh(aid, t)]

    def least_loaded(self, t: int) -> AgentInfo | None:
        fresh = self.fresh_agents(t)
        if not fresh:
            return None
        return min(fresh, key=lambda a: (len(a.sessions), a.id))


def elect(registry: AgentRegistry, t: int) -> str | None:
    """Choose the lowest-id fresh agent as master."""
    fresh = registry.fresh_agents(t)
    registry.master_id = fresh[0].id if fresh else None
    return registry.master_id


def _apportion(total: int, weights: list[int], caps: list[int]) -> list[int]:
    """Split `total` units proportionally to weights under per-entry caps.

    Integer largest-remainder, ties broken by entry index, iterated until the
    total is placed or every entry is capped.  Deterministic.
    """
    n = len(weights)
    out = [0] * n
    remaining = total
    while remaining > 0:
        active = [i for i in range(n) if out[i] < caps[i]]
        if not active:
            break
        w = [max(weights[i], 0) for i in active]
        wsum = sum(w)
        if wsum == 0:
            w = [1] * len(active)
            wsum = len(active)
        shares = []
        floor_sum = 0
        for j, i in enumerate(active):
            num = remaining * w[j]
            shares.append((num // wsum, num % wsum, i))
            floor_sum += num // wsum
        leftover = remaining - floor_sum
        by_remainder = sorted(range(len(active)), key=lambda j: (-shares[j][1], shares[j][2]))
        adds = [shares[j][0] for j in range(len(active))]
        for j in by_remainder:
            if leftover <= 0:
                break
            adds[j] += 1
            leftover -= 1
        placed = 0
        for j, i in enumerate(active):
            give = min(adds[j], caps[i] - out[i])
            out[i] += give
            placed += give
        remaining -= placed  # placed >= 1: every active entry has cap room
    return out


def rebalance(
    cluster: ClusterState,
    snapshots: list[SessionSnapshot],
    shrunk_last_tick: set[str] = frozenset(),
) -> list[tuple[str, str, int]]:
    """Commands [(session, 'grow'|'shrink', n)] moving grants toward target.

    Only one direction per call, total moved never exceeds |current - T|.
    """
    running = [s for s in snapshots if s.status == "running"]
    if not running:
        return []
    running = sorted(running, key=lambda s: s.id)
    floors = [1 if s.absorbable > 0 else 0 for s in running]
    target_total = chopt_target(cluster, sum(floors))
    current = [cluster.grants.get(s.id, 0) for s in running]
    total = sum(current)

    if total > target_total:
        deficit = total - target_total
        caps = [max(current[i] - floors[i], 0) for i in range(len(running))]
        cuts = _apportion(deficit, current, caps)
        return [
            (running[i].id, "shrink", cuts[i]) for i in range(len(running)) if cuts[i] > 0
        ]

    if total < target_total:
        surplus = target_total - total
        caps = []
        for i, s in enumerate(running):
            room = max(s.absorbable - current[i], 0)
            if s.id in shrunk_last_tick:
                room = 0  # hysteresis: no bounce-back one tick after a shrink
            caps.append(room)
        if sum(caps) == 0 and shrunk_last_tick:
            # waive hysteresis rather than leave target capacity idle
            caps = [max(s.absorbable - current[i], 0) for i, s in enumerate(running)]
        weights = [max(c, 1) for c in current]
        adds = _apportion(surplus, weights, caps)
        return [
            (running[i].id, "grow", adds[i]) for i in range(len(running)) if adds[i] > 0
        ]

    return []


class Master:
    """Control-plane logic run by whichever agent currently holds mastership."""

    def __init__(self, cluster: ClusterState, registry: AgentRegistry, store=None):
        self.cluster = cluster
        self.registry = registry
        self.store = store
        self.queue: list[str] = []
        self.shrunk_at: dict[str, int] = {}

    def enqueue(self, session_id: str) -> None:
        self.queue.append(session_id)

    def drop_from_queue(self, session_id: str) -> bool:
        if session_id in self.queue:
            self.queue.remove(session_id)
            return True
        return False

    # ------------------------------------------------------------------

    def tick(self, t: int, demand: int, sessions: dict[str, Any], cluster_log) -> None:
        """One control-plane step: election, reassignment, dispatch, rebalance."""
        self.cluster.non_chopt_demand = demand

        previous = self.registry.master_id
        if previous is None or not self.registry.fresh(previous, t):
            new_master = elect(self.registry, t)
            if new_master != previous:
                cluster_log.append(
                    "election", t, master=new_master, previous=previous
                )
                if new_master is not None:
                    self._recover()
        master = self.registry.master_id
        if master is None or not self.registry.fresh(master, t):
            # control plane down: sessions keep running, nothing is arbitrated
            self._admit_demand(t, demand, sessions, cluster_log)
            return

        self._reassign_orphans(t, cluster_log)
        self._dispatch(t, demand, sessions, cluster_log)
        self._rebalance(t, sessions, cluster_log)
        self._admit_demand(t, demand, sessions, cluster_log)
        self._persist(t)

    def _recover(self) -> None:
        if self.store is None:
            return
        state = self.store.load_master_state()
        if state is not None:
            self.queue = list(state["queue"])
            self.shrunk_at = {k: int(v) for k, v in state["shrunk_at"].items()}

    def _persist(self, t: int) -> None:
        if self.store is None:
            return
        self.store.save_master_state(
            {
                "t": t,
                "master": self.registry.master_id,
                "queue": list(self.queue),
                "shrunk_at": dict(self.shrunk_at),
            }
        )

    def _reassign_orphans(self, t: int, cluster_log) -> None:
        for aid, agent in sorted(self.registry.agents.items()):
            if self.registry.fresh(aid, t) or not agent.sessions:
                continue
            orphans = list(agent.sessions)
            agent.sessions.clear()
            for sid in orphans:
                target = self.registry.least_loaded(t)
                if target is None:
                    agent.sessions = orphans  # nobody to take them
                    return
                target.sessions.append(sid)
                cluster_log.append("reassigned", t, session=sid, source=aid, target=target.id)

    def _dispatch(self, t: int, demand: int, sessions: dict[str, Any], cluster_log) -> None:
        while self.queue:
            active = sum(1 for s in sessions.values() if s.status == "running")
            budget = self.cluster.capacity - demand - self.cluster.headroom
            if self.cluster.chopt_cap is not None:
                budget = min(budget, self.cluster.chopt_cap)
            if active + 1 > max(budget, 0):
                break
            sid = self.queue[0]
            session = sessions[sid]
            if session.status != "queued":
                self.queue.pop(0)
                continue
            agent = self.registry.least_loaded(t)
            if agent is None:
                break
            self.queue.pop(0)
            agent.sessions.append(sid)
            session.start(0, agent.id)
            cluster_log.append("dispatched", t, session=sid, agent=agent.id)

    def _rebalance(self, t: int, sessions: dict[str, Any], cluster_log) -> None:
        self.cluster.grants = {
            sid: s.grant for sid, s in sessions.items() if s.status == "running"
        }
        snapshots = [s.snapshot() for s in sessions.values() if s.status == "running"]
        shrunk = {sid for sid, at in self.shrunk_at.items() if at >= t - 1}
        commands = rebalance(self.cluster, snapshots, shrunk)
        for sid, op, n in commands:
            session = sessions[sid]
            if op == "shrink":
                session.shrink(n)
                self.shrunk_at[sid] = t
            else:
                session.grow(n)
            cluster_log.append("rebalance", t, session=sid, command=op, gpus=n)
        self.cluster.grants = {
            sid: s.grant for sid, s in sessions.items() if s.status == "running"
        }

    def _admit_demand(self, t: int, demand: int, sessions: dict[str, Any], cluster_log) -> None:
        self.cluster.grants = {
            sid: s.grant for sid, s in sessions.items() if s.status == "running"
        }
        spare = self.cluster.capacity - self.cluster.chopt_total()
        self.cluster.non_chopt_used = min(demand, max(spare, 0))
        cluster_log.append(
            "demand",
            t,
            requested=demand,
            admitted=self.cluster.non_chopt_used,
            chopt=self.cluster.chopt_total(),
            utilization=round(utilization(self.cluster), 6),
        )

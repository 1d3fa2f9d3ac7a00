"""Session orchestration: trial pools, ticks, Stop-and-Go.

A session owns its trials and a single seeded rng; every random draw
(sampling, perturbation, stop-ratio rolls, shrink victims, revival picks)
comes from that one stream in a fixed call order, which together with the
deterministic workload makes whole runs replayable byte for byte.

Pools: live trials hold a GPU and advance one epoch per tick.  A trial that
exits early (tuner stop or shrink victim) lands in the stop pool with
probability stop_ratio, keeping its history for revival, and otherwise in
the dead pool as a tombstone with no resumable state.  Finished trials also
leave the live pool for good.  Free slots are always refilled by reviving
stopped trials before creating new ones.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable

from chopt import tuners
from chopt.simcluster import SimClock, Workload, curve_for
from chopt.space import Assignment, ChoptConfig, ValidationError
from chopt.store import EventLog
from chopt.tuners import Decision, CheckpointView, check_termination, is_worse, make_tuner

_UNBOUNDED = 10**9


@dataclass
class Trial:
    id: int
    assignment: Assignment
    curve: Callable[[int], float]
    state: str = "running"  # running | stopped | dead | finished
    epochs_done: int = 0
    history: list[tuple[int, float]] = field(default_factory=list)
    last_metric: float | None = None
    lineage: int | None = None
    gpu: bool = False


@dataclass(frozen=True)
class SessionSnapshot:
    id: str
    status: str
    reason: str | None
    grant: int
    trials_created: int
    live: tuple[int, ...]
    stop: tuple[int, ...]
    dead: tuple[int, ...]
    best_trial: int | None
    best_metric: float | None
    absorbable: int


class Session:
    """One CHOPT optimization run."""

    def __init__(
        self,
        session_id: str,
        config: ChoptConfig,
        *,
        seed: int,
        clock: SimClock,
        log: EventLog | None = None,
    ):
        if config.workload is None:
            raise ValidationError("workload", "session cannot run without a workload")
        self.id = session_id
        self.config = config
        self.workload = Workload.from_dict(config.workload)
        self.seed = seed
        self.clock = clock
        self.log = log if log is not None else EventLog()
        self.rng = random.Random(seed)
        self.tuner = make_tuner(config)

        self.trials: dict[int, Trial] = {}
        self.live: set[int] = set()
        self.stop_pool: set[int] = set()
        self.dead_pool: set[int] = set()  # dead and finished trials
        self.pending: deque[Assignment] = deque()
        self.trials_created = 0
        self.grant = 0
        self.status = "queued"
        self.reason: str | None = None
        self.started_at: int | None = None
        self.agent: str | None = None
        self.base_session: str | None = None  # rerun provenance

        self.step_reports: dict[int, list[tuple[int, float]]] = {}
        self._reported: set[tuple[int, int]] = set()
        self._best_trial: int | None = None
        self._best_metric: float | None = None

        self.log.append("created", self.clock.tick, session=self.id, seed=seed)

    # ------------------------------------------------------------------
    # lifecycle

    def start(self, grant: int, agent: str | None = None) -> None:
        if self.status != "queued":
            raise RuntimeError(f"cannot start session in state {self.status}")
        self.status = "running"
        self.started_at = self.clock.tick
        self.agent = agent
        self.grant = grant
        self.log.append("started", self.clock.tick, grant=grant, agent=agent)
        self.pending = deque(self.tuner.init_population(self.rng))
        self.fill_to_grant()

    def tick(self) -> list[dict[str, Any]]:
        """One unit of sim time: advance, checkpoint, refill, maybe stop."""
        if self.status != "running":
            return []
        mark = len(self.log.events)
        self._advance_trials()
        if self.config.step != -1:
            self._run_checkpoints()
        self.fill_to_grant()
        self._check_termination()
        return self.log.events[mark:]

    # ------------------------------------------------------------------
    # tick phases

    def _effective_target(self, trial: Trial) -> int:
        target = self.tuner.target_epochs(trial.id)
        if target is None:
            return self.workload.max_epochs
        return min(target, self.workload.max_epochs)

    def _advance_trials(self) -> None:
        t = self.clock.tick
        for tid in sorted(self.live):
            trial = self.trials[tid]
            target = self._effective_target(trial)
            if trial.epochs_done >= target:
                continue  # held at a round boundary
            epoch = trial.epochs_done + 1
            metric = trial.curve(epoch)
            trial.epochs_done = epoch
            trial.last_metric = metric
            trial.history.append((epoch, metric))
            self.log.append("epoch", t, trial=tid, epoch=epoch, metric=metric)
            if self._best_metric is None or is_worse(self._best_metric, metric, self.config.order):
                self._best_metric = metric
                self._best_trial = tid
            if epoch >= self.workload.max_epochs or (
                epoch >= target and self.tuner.at_final_target(tid)
            ):
                self._finish(trial)

    def _finish(self, trial: Trial) -> None:
        trial.state = "finished"
        trial.gpu = False
        self.live.remove(trial.id)
        self.dead_pool.add(trial.id)
        self.log.append(
            "trial_finished",
            self.clock.tick,
            trial=trial.id,
            epochs=trial.epochs_done,
            metric=trial.last_metric,
        )
        self.tuner.on_trial_exited(trial.id)

    def _checkpoint_eligible(self) -> list[int]:
        step = self.config.step
        return [
            tid
            for tid in sorted(self.live)
            if self.trials[tid].epochs_done > 0
            and self.trials[tid].epochs_done % step == 0
        ]

    def _run_checkpoints(self) -> None:
        eligible = self._checkpoint_eligible()
        # reports first so every same-tick decision sees the full cohort
        for tid in eligible:
            trial = self.trials[tid]
            key = (tid, trial.epochs_done)
            if key in self._reported:
                continue
            self._reported.add(key)
            self.step_reports.setdefault(trial.epochs_done, []).append(
                (tid, trial.last_metric)
            )
            self.tuner.record_report(tid, trial.epochs_done, trial.last_metric)

        t = self.clock.tick
        for tid in eligible:
            if tid not in self.live:
                continue  # stopped earlier in this pass
            trial = self.trials[tid]
            step_index = trial.epochs_done
            view = CheckpointView(
                trial_id=tid,
                step_index=step_index,
                metric=trial.last_metric,
                population_metrics=tuple(self.step_reports[step_index]),
                order=self.config.order,
            )
            decision = self.tuner.on_checkpoint(view, self.rng)
            payload: dict[str, Any] = {
                "trial": tid,
                "step": step_index,
                "decision": decision.kind,
            }
            if decision.kind == tuners.EXPLOIT_EXPLORE:
                payload["source"] = decision.source
                payload["assignment"] = decision.assignment
            self.log.append("checkpoint", t, **payload)
            if decision.kind == tuners.STOP:
                self.place_exited(tid, cause="tuner")
            elif decision.kind == tuners.EXPLOIT_EXPLORE:
                self._apply_exploit(trial, decision)

    def _apply_exploit(self, trial: Trial, decision: Decision) -> None:
        trial.assignment = dict(decision.assignment or {})
        trial.lineage = decision.source
        trial.curve = self._curve(trial.assignment)
        self.tuner.on_assignment_changed(trial.id, trial.assignment)

    # ------------------------------------------------------------------
    # pool transitions

    def place_exited(self, trial_id: int, cause: str) -> None:
        """Route an early-exiting live trial to the stop or dead pool."""
        trial = self.trials[trial_id]
        self.live.remove(trial_id)
        trial.gpu = False
        if self.rng.random() < self.config.stop_ratio:
            trial.state = "stopped"
            self.stop_pool.add(trial_id)
            self.log.append("trial_stopped", self.clock.tick, trial=trial_id, cause=cause)
        else:
            trial.state = "dead"
            self.dead_pool.add(trial_id)
            trial.history = []  # tombstone: no resumable state
            self.log.append(
                "trial_dead",
                self.clock.tick,
                trial=trial_id,
                cause=cause,
                epochs=trial.epochs_done,
                metric=trial.last_metric,
            )
        self.tuner.on_trial_exited(trial_id)

    def _revive(self, trial_id: int) -> None:
        trial = self.trials[trial_id]
        self.stop_pool.remove(trial_id)
        trial.state = "running"
        trial.gpu = True
        self.live.add(trial_id)
        self.log.append("trial_revived", self.clock.tick, trial=trial_id, epoch=trial.epochs_done)
        self.tuner.on_trial_revived(trial_id)

    def _curve(self, assignment: Assignment) -> Callable[[int], float]:
        """Workloads see config constants; trial assignments stay tuned-only."""
        if self.config.constants:
            assignment = {**self.config.constants, **assignment}
        return curve_for(self.workload, assignment)

    def _create_trial(self, assignment: Assignment) -> None:
        tid = self.trials_created + 1
        self.trials_created = tid
        trial = Trial(
            id=tid,
            assignment=assignment,
            curve=self._curve(assignment),
            gpu=True,
        )
        self.trials[tid] = trial
        self.live.add(tid)
        self.log.append("trial_created", self.clock.tick, trial=tid, assignment=assignment)
        self.tuner.on_trial_created(tid, assignment)

    def _can_create(self) -> bool:
        cap = self.config.termination.max_session_number
        return cap is None or self.trials_created < cap

    def fill_to_grant(self) -> None:
        """Fill free slots: revive stopped trials first, then create."""
        cap = self.grant
        par = self.tuner.desired_parallelism()
        if par is not None:
            cap = min(cap, max(par, 0) + len(self.stop_pool))
        while len(self.live) < cap:
            if self.stop_pool:
                choice = self.rng.choice(sorted(self.stop_pool))
                self._revive(choice)
                continue
            if not self._can_create():
                break
            if self.pending:
                self._create_trial(self.pending.popleft())
                continue
            assignment = self.tuner.next_assignment(self.rng)
            if assignment is None:
                break
            self._create_trial(assignment)

    # ------------------------------------------------------------------
    # resource commands (issued by the master between ticks)

    def shrink(self, n: int) -> None:
        """Give back n GPUs; victims are drawn uniformly from live trials."""
        if n <= 0:
            return
        self.grant = max(0, self.grant - n)
        self.log.append("grant", self.clock.tick, grant=self.grant, delta=-n, cause="shrink")
        candidates = sorted(self.live)
        victims = self.rng.sample(candidates, min(n, len(candidates)))
        for tid in sorted(victims):
            self.place_exited(tid, cause="shrink")

    def grow(self, n: int) -> None:
        """Accept n more GPUs and put them to work immediately."""
        if n <= 0:
            return
        self.grant += n
        self.log.append("grant", self.clock.tick, grant=self.grant, delta=n, cause="grow")
        self.fill_to_grant()

    # ------------------------------------------------------------------
    # termination

    def _check_termination(self) -> None:
        elapsed = self.clock.tick - (self.started_at or 0)
        reason = check_termination(
            self.config,
            elapsed=elapsed,
            trials_created=self.trials_created,
            live=len(self.live),
            stopped=len(self.stop_pool),
            best_metric=self._best_metric,
        )
        if reason is None and not self.live and not self.stop_pool:
            if self.tuner.exhausted():
                reason = "tuner_exhausted"
        if reason is not None:
            self.terminate(reason)

    def terminate(self, reason: str) -> None:
        """Hard-stop the session; running trials park in the stop pool."""
        if self.status == "terminated":
            return
        for tid in sorted(self.live):
            trial = self.trials[tid]
            trial.state = "stopped"
            trial.gpu = False
            self.stop_pool.add(tid)
            self.log.append("trial_stopped", self.clock.tick, trial=tid, cause="termination")
            self.tuner.on_trial_exited(tid)
        self.live.clear()
        self.status = "terminated"
        self.reason = reason
        self.grant = 0
        self.log.append("terminated", self.clock.tick, reason=reason)
        self.log.flush()

    # ------------------------------------------------------------------
    # views

    def best(self) -> tuple[int | None, float | None]:
        return self._best_trial, self._best_metric

    def absorbable(self) -> int:
        """How many GPUs this session could put to work."""
        if self.status != "running":
            return 0
        room = _UNBOUNDED
        cap = self.config.termination.max_session_number
        if cap is not None:
            room = cap - self.trials_created
        potential = len(self.live) + len(self.stop_pool) + max(room, 0)
        par = self.tuner.desired_parallelism()
        if par is not None:
            potential = min(potential, max(par, len(self.live)) + len(self.stop_pool))
        return min(potential, _UNBOUNDED)

    def snapshot(self) -> SessionSnapshot:
        return SessionSnapshot(
            id=self.id,
            status=self.status,
            reason=self.reason,
            grant=self.grant,
            trials_created=self.trials_created,
            live=tuple(sorted(self.live)),
            stop=tuple(sorted(self.stop_pool)),
            dead=tuple(sorted(self.dead_pool)),
            best_trial=self._best_trial,
            best_metric=self._best_metric,
            absorbable=self.absorbable(),
        )

    def trial_summaries(self) -> list[dict[str, Any]]:
        out = []
        for tid in sorted(self.trials):
            trial = self.trials[tid]
            out.append(
                {
                    "id": tid,
                    "assignment": trial.assignment,
                    "state": trial.state,
                    "epochs": trial.epochs_done,
                    "metric": trial.last_metric,
                    "lineage": trial.lineage,
                }
            )
        return out

    def summary(self) -> dict[str, Any]:
        best_trial, best_metric = self.best()
        return {
            "id": self.id,
            "status": self.status,
            "reason": self.reason,
            "agent": self.agent,
            "started_at": self.started_at,
            "grant": self.grant,
            "trials_created": self.trials_created,
            "measure": self.config.measure,
            "order": self.config.order,
            "best": None
            if best_trial is None
            else {"trial": best_trial, "metric": best_metric},
            "events": {"first_seq": 1, "last_seq": self.log.last_seq},
            "trials": self.trial_summaries(),
        }


def run_session(
    config: ChoptConfig,
    *,
    grant: int,
    seed: int,
    log: EventLog | None = None,
    max_ticks: int = 1_000_000,
) -> Session:
    """Drive one session on a private clock until it terminates.

    Convenience for single-session experiments and tests; cluster runs go
    through the runtime, which multiplexes many sessions over shared agents.
    """
    clock = SimClock()
    session = Session("s0001", config, seed=seed, clock=clock, log=log)
    session.start(grant)
    while session.status == "running" and clock.tick < max_ticks:
        clock.advance()
        session.tick()
    return session

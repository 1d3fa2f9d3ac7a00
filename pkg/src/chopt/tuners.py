"""Tuning strategies: random search with median stopping, PBT, Hyperband.

A tuner sees the session through a narrow protocol.  The orchestrator asks it
for assignments when slots open (next_assignment), feeds it every checkpoint
metric (record_report, then on_checkpoint per trial in id order) and notifies
it of lifecycle changes.  on_checkpoint returns one of three decisions:
continue, stop, or exploit_explore with a source trial and a perturbed copy
of its assignment.

Ranking is always stable: metrics sort by the session's order with ties
broken by trial id ascending.

Hyperband runs its brackets sequentially.  Within a bracket, a trial that
reaches its round boundary holds its slot without advancing until every
expected cohort member has reported; the rung then resolves, promoting the
top slice into the next round and stopping the rest.  Under a grant at least
as wide as the cohort this is exactly synchronous successive halving.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from typing import Iterable

from chopt.space import Assignment, ChoptConfig, HyperparamSpace, perturb, sample

CONTINUE = "continue"
STOP = "stop"
EXPLOIT_EXPLORE = "exploit_explore"


@dataclass(frozen=True)
class Decision:
    kind: str
    source: int | None = None
    assignment: Assignment | None = None


DECISION_CONTINUE = Decision(CONTINUE)
DECISION_STOP = Decision(STOP)


@dataclass(frozen=True)
class CheckpointView:
    """What a tuner may see when one trial hits a checkpoint."""

    trial_id: int
    step_index: int
    metric: float
    population_metrics: tuple[tuple[int, float], ...]
    order: str


def is_worse(a: float, b: float, order: str) -> bool:
    """True when metric a is strictly worse than b under the session order."""
    if order == "descending":
        return a < b
    return a > b


def rank_ids(metrics: Iterable[tuple[int, float]], order: str) -> list[int]:
    """Trial ids sorted best to worst, ties broken by id ascending."""
    items = list(metrics)
    if order == "descending":
        return [tid for tid, _ in sorted(items, key=lambda p: (-p[1], p[0]))]
    return [tid for tid, _ in sorted(items, key=lambda p: (p[1], p[0]))]


class Tuner:
    """Base protocol; methods default to inert behavior."""

    def init_population(self, rng) -> list[Assignment]:
        raise NotImplementedError

    def next_assignment(self, rng) -> Assignment | None:
        raise NotImplementedError

    def record_report(self, trial_id: int, step_index: int, metric: float) -> None:
        pass

    def on_checkpoint(self, view: CheckpointView, rng) -> Decision:
        raise NotImplementedError

    def on_trial_created(self, trial_id: int, assignment: Assignment) -> None:
        pass

    def on_assignment_changed(self, trial_id: int, assignment: Assignment) -> None:
        pass

    def on_trial_exited(self, trial_id: int) -> None:
        pass

    def on_trial_revived(self, trial_id: int) -> None:
        pass

    def target_epochs(self, trial_id: int) -> int | None:
        """Epoch bound the trial may not advance past, or None."""
        return None

    def at_final_target(self, trial_id: int) -> bool:
        """True when reaching target_epochs completes the trial's work."""
        return False

    def desired_parallelism(self) -> int | None:
        """Cap on useful concurrent trials, or None for unbounded."""
        return None

    def exhausted(self) -> bool:
        """True when the strategy will never produce another assignment."""
        return False


class RandomSearchTuner(Tuner):
    """Independent random sampling with median early stopping.

    A trial stops iff its metric is strictly worse than the median over all
    trials that have reported at the same step index, itself included.  The
    current best at a step can never stop.  With step -1 the orchestrator
    never invokes checkpoints and trials run to completion.
    """

    def __init__(self, config: ChoptConfig):
        self._space = config.space
        self._population = config.population

    def init_population(self, rng) -> list[Assignment]:
        return [sample(self._space, rng) for _ in range(self._population)]

    def next_assignment(self, rng) -> Assignment | None:
        return sample(self._space, rng)

    def on_checkpoint(self, view: CheckpointView, rng) -> Decision:
        med = statistics.median(m for _, m in view.population_metrics)
        if is_worse(view.metric, med, view.order):
            return DECISION_STOP
        return DECISION_CONTINUE


class PbtTuner(Tuner):
    """Population Based Training, truncation exploit + perturb explore.

    At each checkpoint a trial ranking in the bottom quantile of reporters
    clones a uniformly drawn top-quantile source and perturbs it.  The trial
    keeps its id; the event log records the lineage edge.  Quantile size is
    floor(quantile * reporters), so small populations degrade to plain
    continuation.  PBT itself never stops a trial.
    """

    def __init__(self, config: ChoptConfig):
        self._space = config.space
        self._population = config.population
        params = config.tune.params
        self._factors = tuple(params["perturb_factors"])
        self._resample_prob = params["resample_prob"]
        self._quantile = params["quantile"]
        self._assignments: dict[int, Assignment] = {}

    def init_population(self, rng) -> list[Assignment]:
        return [sample(self._space, rng) for _ in range(self._population)]

    def next_assignment(self, rng) -> Assignment | None:
        return sample(self._space, rng)

    def on_trial_created(self, trial_id: int, assignment: Assignment) -> None:
        self._assignments[trial_id] = assignment

    def on_assignment_changed(self, trial_id: int, assignment: Assignment) -> None:
        self._assignments[trial_id] = assignment

    def desired_parallelism(self) -> int | None:
        return self._population

    def on_checkpoint(self, view: CheckpointView, rng) -> Decision:
        n = len(view.population_metrics)
        k = int(self._quantile * n)
        if k == 0:
            return DECISION_CONTINUE
        ranked = rank_ids(view.population_metrics, view.order)
        if view.trial_id not in ranked[-k:]:
            return DECISION_CONTINUE
        source = ranked[:k][rng.randrange(k)]
        clone = perturb(
            self._space,
            self._assignments[source],
            rng,
            factors=self._factors,
            resample_prob=self._resample_prob,
        )
        return Decision(EXPLOIT_EXPLORE, source=source, assignment=clone)


@dataclass(frozen=True)
class HyperbandBracket:
    """One bracket: rounds of (trial count, cumulative per-trial resource)."""

    s: int
    rounds: tuple[tuple[int, int], ...]


def hyperband_schedule(R: int, eta: int) -> list[HyperbandBracket]:
    """Bracket table for max resource R and reduction factor eta.

    s_max is the largest s with eta**s <= R.  Bracket s starts
    floor((s_max + 1) / (s + 1)) * eta**s trials at resource R // eta**s and
    runs s + 1 rounds; each round keeps the top 1/eta of the previous count
    and multiplies the per-trial resource toward R.
    """
    if R < 1 or eta < 2:
        raise ValueError("hyperband needs R >= 1 and eta >= 2")
    s_max = 0
    while eta ** (s_max + 1) <= R:
        s_max += 1
    brackets = []
    for s in range(s_max, -1, -1):
        m = (s_max + 1) // (s + 1)
        rounds = tuple(
            (m * eta ** (s - i), R // eta ** (s - i)) for i in range(s + 1)
        )
        brackets.append(HyperbandBracket(s=s, rounds=rounds))
    return brackets


@dataclass
class _Rung:
    expected: int = 0
    reports: list[tuple[int, float]] = field(default_factory=list)
    reported: set[int] = field(default_factory=set)
    resolved: bool = False
    promoted: frozenset[int] = frozenset()


class HyperbandTuner(Tuner):
    """Successive halving over brackets, run one bracket at a time.

    Resources are counted in checkpoints: a trial in a round with resource r
    may advance to epoch r * step and no further.  The boundary metric feeds
    the rung; once all expected members report, the top slice moves into the
    next round and the rest stop.  A trial revived after its rung resolved
    lost its slot and is stopped again on its next checkpoint.
    """

    def __init__(self, config: ChoptConfig):
        self._space = config.space
        self._step = config.step
        self._brackets = hyperband_schedule(
            config.tune.params["R"], config.tune.params["eta"]
        )
        self._bracket_idx = 0
        self._created_in_round0 = 0
        self._alive: dict[int, int] = {}  # bracket index -> non-exited trials
        self._round_of: dict[int, tuple[int, int]] = {}  # trial -> (bracket, round)
        self._rungs: dict[tuple[int, int], _Rung] = {}

    @property
    def brackets(self) -> list[HyperbandBracket]:
        return self._brackets

    def _rung(self, key: tuple[int, int]) -> _Rung:
        if key not in self._rungs:
            self._rungs[key] = _Rung()
        return self._rungs[key]

    def init_population(self, rng) -> list[Assignment]:
        n0 = self._brackets[0].rounds[0][0]
        return [sample(self._space, rng) for _ in range(n0)]

    def next_assignment(self, rng) -> Assignment | None:
        while self._bracket_idx < len(self._brackets):
            b = self._bracket_idx
            n0 = self._brackets[b].rounds[0][0]
            if self._created_in_round0 < n0:
                return sample(self._space, rng)
            if self._alive.get(b, 0) == 0:
                # bracket complete, open the next one
                self._bracket_idx += 1
                self._created_in_round0 = 0
                continue
            return None  # bracket still in flight
        return None

    def exhausted(self) -> bool:
        while (
            self._bracket_idx < len(self._brackets)
            and self._created_in_round0 >= self._brackets[self._bracket_idx].rounds[0][0]
            and self._alive.get(self._bracket_idx, 0) == 0
        ):
            self._bracket_idx += 1
            self._created_in_round0 = 0
        return self._bracket_idx >= len(self._brackets)

    def on_trial_created(self, trial_id: int, assignment: Assignment) -> None:
        b = self._bracket_idx
        self._created_in_round0 += 1
        self._alive[b] = self._alive.get(b, 0) + 1
        self._round_of[trial_id] = (b, 0)
        self._rung((b, 0)).expected += 1

    def on_trial_exited(self, trial_id: int) -> None:
        b, i = self._round_of[trial_id]
        self._alive[b] -= 1
        rung = self._rung((b, i))
        if not rung.resolved and trial_id not in rung.reported:
            rung.expected -= 1

    def on_trial_revived(self, trial_id: int) -> None:
        b, i = self._round_of[trial_id]
        self._alive[b] = self._alive.get(b, 0) + 1
        rung = self._rung((b, i))
        if not rung.resolved and trial_id not in rung.reported:
            rung.expected += 1

    def target_epochs(self, trial_id: int) -> int | None:
        b, i = self._round_of[trial_id]
        return self._brackets[b].rounds[i][1] * self._step

    def at_final_target(self, trial_id: int) -> bool:
        b, i = self._round_of[trial_id]
        return i == len(self._brackets[b].rounds) - 1

    def desired_parallelism(self) -> int | None:
        if self._bracket_idx >= len(self._brackets):
            return 0
        b = self._bracket_idx
        n0 = self._brackets[b].rounds[0][0]
        if self._created_in_round0 < n0:
            return n0
        return max(self._alive.get(b, 0), 0)

    def record_report(self, trial_id: int, step_index: int, metric: float) -> None:
        b, i = self._round_of[trial_id]
        if step_index != self._brackets[b].rounds[i][1] * self._step:
            return
        rung = self._rung((b, i))
        if rung.resolved or trial_id in rung.reported:
            return
        rung.reported.add(trial_id)
        rung.reports.append((trial_id, metric))

    def on_checkpoint(self, view: CheckpointView, rng) -> Decision:
        b, i = self._round_of[view.trial_id]
        rounds = self._brackets[b].rounds
        if view.step_index < rounds[i][1] * self._step:
            return DECISION_CONTINUE
        self.record_report(view.trial_id, view.step_index, view.metric)
        rung = self._rung((b, i))
        if not rung.resolved and len(rung.reports) >= rung.expected:
            self._resolve(b, i, view.order)
        if not rung.resolved:
            return DECISION_CONTINUE  # held at the boundary
        if self._round_of[view.trial_id] == (b, i):
            # still parked in a resolved rung: not promoted
            return DECISION_STOP
        return DECISION_CONTINUE

    def _resolve(self, b: int, i: int, order: str) -> None:
        rounds = self._brackets[b].rounds
        rung = self._rung((b, i))
        keep = min(rounds[i + 1][0], len(rung.reports))
        ranked = rank_ids(rung.reports, order)
        promoted = ranked[:keep]
        rung.resolved = True
        rung.promoted = frozenset(promoted)
        nxt = self._rung((b, i + 1))
        for tid in promoted:
            self._round_of[tid] = (b, i + 1)
            nxt.expected += 1


def make_tuner(config: ChoptConfig) -> Tuner:
    if config.tune.method == "random_search":
        return RandomSearchTuner(config)
    if config.tune.method == "pbt":
        return PbtTuner(config)
    return HyperbandTuner(config)


def init_population(config: ChoptConfig, rng) -> list[Assignment]:
    """Initial batch of assignments for a fresh session."""
    return make_tuner(config).init_population(rng)


TERMINATION_ORDER = ("time_budget", "max_session_number", "performance_threshold")


def check_termination(
    config: ChoptConfig,
    *,
    elapsed: int,
    trials_created: int,
    live: int,
    stopped: int,
    best_metric: float | None,
) -> str | None:
    """First satisfied termination condition, in fixed order, or None.

    time_budget compares against session-relative sim time.
    max_session_number caps trial creation; it reports only once the session
    has drained (no live or resumable trials left).  performance_threshold
    fires as soon as any trial's metric reaches the threshold.
    """
    term = config.termination
    if term.time_budget is not None and elapsed >= term.time_budget:
        return "time_budget"
    if (
        term.max_session_number is not None
        and trials_created >= term.max_session_number
        and live == 0
        and stopped == 0
    ):
        return "max_session_number"
    if term.performance_threshold is not None and best_metric is not None:
        if not is_worse(best_metric, term.performance_threshold, config.order):
            return "performance_threshold"
    return None

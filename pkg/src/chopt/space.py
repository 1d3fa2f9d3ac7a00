"""Hierarchical hyperparameter space: config parsing, sampling, perturbation.

A space is an ordered set of parameter specs plus activation rules.  A plain
condition activates a child when its parent holds one of the listed values;
a conjunction group requires all of its conditions at once.  Multiple clauses
for the same child are ORed.  Parameters without clauses are roots and are
always active.

Assignments are plain dicts mapping parameter name to value.  A parameter
appears in an assignment iff its activation clauses are satisfied by the
other entries, which sampling and perturbation both guarantee.

Config files are strict JSON.  Parse failures raise ParseError with line and
column; semantic failures raise ValidationError naming the offending field.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Sequence

Assignment = dict[str, Any]

DISTRIBUTIONS = ("uniform", "log_uniform", "gaussian", "categorical")
VALUE_TYPES = ("float", "int", "str")
TUNE_METHODS = ("random_search", "pbt", "hyperband")
TERMINATION_KEYS = ("time_budget", "max_session_number", "performance_threshold")

CONFIG_KEYS = (
    "h_params",
    "h_params_conditions",
    "h_params_conjunctions",
    "measure",
    "order",
    "step",
    "population",
    "tune",
    "termination",
    "stop_ratio",
    "workload",
    "constants",
    "seed",
)


class ConfigError(Exception):
    """Base class for config rejection."""


class ParseError(ConfigError):
    """Config text is not valid JSON."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"parse error at line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ValidationError(ConfigError):
    """Config is well-formed JSON but semantically invalid."""

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field = field_path
        self.reason = message


@dataclass(frozen=True)
class ParamSpec:
    """One hyperparameter.

    For uniform and log_uniform, parameters is (low, high).  For gaussian it
    is (mean, stddev).  For categorical it is the category tuple and p_range
    must be empty.  p_range, when present, bounds every value the parameter
    can ever take (sampled or perturbed).
    """

    name: str
    kind: str  # float | int | categorical
    distribution: str
    parameters: tuple
    p_range: tuple = ()

    @property
    def is_numeric(self) -> bool:
        return self.kind in ("float", "int")


@dataclass(frozen=True)
class Condition:
    """child is active when parent's value is one of parent_values."""

    child: str
    parent: str
    parent_values: tuple


@dataclass(frozen=True)
class ConditionGroup:
    """child is active when every member condition holds at once."""

    child: str
    conditions: tuple[Condition, ...]


@dataclass(frozen=True)
class HyperparamSpace:
    params: tuple[ParamSpec, ...]
    conditions: tuple[Condition, ...] = ()
    conjunctions: tuple[ConditionGroup, ...] = ()

    def get(self, name: str) -> ParamSpec:
        for spec in self.params:
            if spec.name == name:
                return spec
        raise KeyError(name)

    def names(self) -> tuple[str, ...]:
        return tuple(spec.name for spec in self.params)

    def clauses_for(self, name: str) -> tuple[tuple[Condition, ...], ...]:
        """All activation clauses for a child, singletons plus groups."""
        clauses = [(c,) for c in self.conditions if c.child == name]
        clauses += [g.conditions for g in self.conjunctions if g.child == name]
        return tuple(clauses)

    def is_active(self, name: str, assignment: Mapping[str, Any]) -> bool:
        clauses = self.clauses_for(name)
        if not clauses:
            return True
        for clause in clauses:
            if all(
                cond.parent in assignment
                and assignment[cond.parent] in cond.parent_values
                for cond in clause
            ):
                return True
        return False

    def topo_order(self) -> tuple[str, ...]:
        """Parameter names with parents before children, declaration order
        preserved among unordered pairs."""
        parents: dict[str, set[str]] = {s.name: set() for s in self.params}
        for name in parents:
            for clause in self.clauses_for(name):
                for cond in clause:
                    parents[name].add(cond.parent)
        order: list[str] = []
        placed: set[str] = set()
        pending = list(self.names())
        while pending:
            progressed = False
            remaining = []
            for name in pending:
                if parents[name] <= placed:
                    order.append(name)
                    placed.add(name)
                    progressed = True
                else:
                    remaining.append(name)
            if not progressed:
                raise ValidationError("h_params_conditions", "cyclic conditions")
            pending = remaining
        return tuple(order)

    def validate(self) -> None:
        if not self.params:
            raise ValidationError("h_params", "must define at least one parameter")
        seen: set[str] = set()
        for spec in self.params:
            if spec.name in seen:
                raise ValidationError(f"h_params.{spec.name}", "duplicate parameter")
            seen.add(spec.name)
            _validate_param(spec, f"h_params.{spec.name}")
        for i, cond in enumerate(self.conditions):
            _validate_condition(cond, seen, f"h_params_conditions[{i}]")
        for i, group in enumerate(self.conjunctions):
            path = f"h_params_conjunctions[{i}]"
            if not group.conditions:
                raise ValidationError(path, "conjunction needs at least one condition")
            for j, cond in enumerate(group.conditions):
                if cond.child != group.child:
                    raise ValidationError(f"{path}.all[{j}]", "child mismatch inside group")
                _validate_condition(cond, seen, f"{path}.all[{j}]")
        self.topo_order()  # raises on cycles


@dataclass(frozen=True)
class TuneSpec:
    method: str
    params: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Termination:
    time_budget: int | None = None
    max_session_number: int | None = None
    performance_threshold: float | None = None

    def any_set(self) -> bool:
        return (
            self.time_budget is not None
            or self.max_session_number is not None
            or self.performance_threshold is not None
        )


@dataclass(frozen=True)
class ChoptConfig:
    space: HyperparamSpace
    measure: str
    order: str  # ascending | descending
    step: int
    population: int
    tune: TuneSpec
    termination: Termination
    stop_ratio: float = 0.5
    workload: dict[str, Any] | None = None
    constants: dict[str, Any] = field(default_factory=dict)
    seed: int | None = None


# ---------------------------------------------------------------------------
# validation helpers


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _check_value_type(v: Any, kind: str) -> bool:
    if kind == "float":
        return _is_number(v)
    if kind == "int":
        return _is_int(v)
    return isinstance(v, str)


def _validate_param(spec: ParamSpec, path: str) -> None:
    if spec.distribution not in DISTRIBUTIONS:
        raise ValidationError(
            f"{path}.distribution",
            f"unknown distribution {spec.distribution!r}, expected one of {list(DISTRIBUTIONS)}",
        )
    if spec.kind not in ("float", "int", "categorical"):
        raise ValidationError(f"{path}.type", f"unknown type {spec.kind!r}")

    if spec.distribution == "categorical":
        if not spec.parameters:
            raise ValidationError(f"{path}.parameters", "categories must be non-empty")
        if len(set(spec.parameters)) != len(spec.parameters):
            raise ValidationError(f"{path}.parameters", "categories must be distinct")
        if spec.p_range:
            raise ValidationError(f"{path}.p_range", "categorical parameters take no p_range")
        return

    if spec.kind == "categorical":
        raise ValidationError(f"{path}.distribution", "non-categorical distribution needs a numeric type")

    if spec.p_range:
        if len(spec.p_range) != 2 or not all(_is_number(v) for v in spec.p_range):
            raise ValidationError(f"{path}.p_range", "expected [low, high]")
        if not spec.p_range[0] < spec.p_range[1]:
            raise ValidationError(f"{path}.p_range", "low must be less than high")

    if spec.distribution in ("uniform", "log_uniform"):
        if len(spec.parameters) != 2 or not all(_is_number(v) for v in spec.parameters):
            raise ValidationError(f"{path}.parameters", "expected [low, high]")
        lo, hi = spec.parameters
        if spec.kind == "int" and not (_is_int(lo) and _is_int(hi)):
            raise ValidationError(f"{path}.parameters", "int parameter needs integer bounds")
        if not lo < hi:
            raise ValidationError(f"{path}.parameters", "low must be less than high")
        if spec.distribution == "log_uniform" and lo <= 0:
            raise ValidationError(f"{path}.parameters", "log_uniform needs a positive range")
        if spec.p_range:
            if lo < spec.p_range[0] or hi > spec.p_range[1]:
                raise ValidationError(
                    f"{path}.parameters", "sampling range must lie inside p_range"
                )
            if spec.distribution == "log_uniform" and spec.p_range[0] <= 0:
                raise ValidationError(f"{path}.p_range", "log_uniform needs a positive p_range")
    elif spec.distribution == "gaussian":
        if len(spec.parameters) != 2 or not all(_is_number(v) for v in spec.parameters):
            raise ValidationError(f"{path}.parameters", "expected [mean, stddev]")
        mean, stddev = spec.parameters
        if stddev <= 0:
            raise ValidationError(f"{path}.parameters", "stddev must be positive")
        if spec.p_range and not spec.p_range[0] <= mean <= spec.p_range[1]:
            raise ValidationError(f"{path}.parameters", "mean must lie inside p_range")


def _validate_condition(cond: Condition, names: set[str], path: str) -> None:
    if cond.child not in names:
        raise ValidationError(f"{path}.child", f"unknown parameter {cond.child!r}")
    if cond.parent not in names:
        raise ValidationError(f"{path}.parent", f"unknown parameter {cond.parent!r}")
    if cond.child == cond.parent:
        raise ValidationError(f"{path}.parent", "parameter cannot condition on itself")
    if not cond.parent_values:
        raise ValidationError(f"{path}.values", "must list at least one activating value")


# ---------------------------------------------------------------------------
# parsing


def parse_config(text: str | bytes | Mapping[str, Any]) -> ChoptConfig:
    """Parse and validate a session config.

    Accepts raw JSON text or an already-decoded mapping.  Returns a fully
    validated ChoptConfig; any problem raises ParseError or ValidationError.
    The embedded workload spec, if any, is carried through untouched and is
    validated by the cluster backend at submit time.
    """
    if isinstance(text, (str, bytes)):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(e.msg, e.lineno, e.colno) from None
    else:
        raw = dict(text)
    if not isinstance(raw, dict):
        raise ValidationError("", "config must be a JSON object")

    for key in raw:
        if key not in CONFIG_KEYS:
            raise ValidationError(key, "unknown key")
    for key in ("h_params", "measure", "order", "tune", "termination"):
        if key not in raw:
            raise ValidationError(key, "required key missing")

    space = _parse_space(raw)
    space.validate()

    measure = raw["measure"]
    if not isinstance(measure, str) or not measure:
        raise ValidationError("measure", "must be a non-empty string")

    order = raw["order"]
    if order not in ("ascending", "descending"):
        raise ValidationError("order", "must be 'ascending' or 'descending'")

    step = raw.get("step", -1)
    if not _is_int(step) or (step != -1 and step < 1):
        raise ValidationError("step", "must be -1 (no early stopping) or a positive integer")

    population = raw.get("population", 1)
    if not _is_int(population) or population < 1:
        raise ValidationError("population", "must be a positive integer")

    tune = _parse_tune(raw["tune"], step)
    termination = _parse_termination(raw["termination"])

    stop_ratio = raw.get("stop_ratio", 0.5)
    if not _is_number(stop_ratio) or not 0.0 <= stop_ratio <= 1.0:
        raise ValidationError("stop_ratio", "must lie in [0, 1]")

    workload = raw.get("workload")
    if workload is not None and not isinstance(workload, dict):
        raise ValidationError("workload", "must be an object")

    constants = raw.get("constants", {})
    if not isinstance(constants, dict):
        raise ValidationError("constants", "must be an object")
    for name in constants:
        if name in space.names():
            raise ValidationError(f"constants.{name}", "shadows a tuned parameter")

    seed = raw.get("seed")
    if seed is not None and not _is_int(seed):
        raise ValidationError("seed", "must be an integer")

    return ChoptConfig(
        space=space,
        measure=measure,
        order=order,
        step=step,
        population=population,
        tune=tune,
        termination=termination,
        stop_ratio=float(stop_ratio),
        workload=workload,
        constants=dict(constants),
        seed=seed,
    )


def _parse_space(raw: Mapping[str, Any]) -> HyperparamSpace:
    h_params = raw["h_params"]
    if not isinstance(h_params, dict) or not h_params:
        raise ValidationError("h_params", "must be a non-empty object")

    specs: list[ParamSpec] = []
    for name, entry in h_params.items():
        path = f"h_params.{name}"
        if not isinstance(entry, dict):
            raise ValidationError(path, "must be an object")
        for key in entry:
            if key not in ("parameters", "distribution", "type", "p_range"):
                raise ValidationError(f"{path}.{key}", "unknown key")
        for key in ("parameters", "distribution", "type"):
            if key not in entry:
                raise ValidationError(f"{path}.{key}", "required key missing")
        distribution = entry["distribution"]
        if not isinstance(distribution, str):
            raise ValidationError(f"{path}.distribution", "must be a string")
        vtype = entry["type"]
        if vtype not in VALUE_TYPES:
            raise ValidationError(f"{path}.type", f"must be one of {list(VALUE_TYPES)}")
        parameters = entry["parameters"]
        if not isinstance(parameters, list):
            raise ValidationError(f"{path}.parameters", "must be a list")
        p_range = entry.get("p_range", [])
        if not isinstance(p_range, list):
            raise ValidationError(f"{path}.p_range", "must be a list")

        if distribution == "categorical":
            kind = "categorical"
            for v in parameters:
                if not _check_value_type(v, vtype):
                    raise ValidationError(
                        f"{path}.parameters", f"category {v!r} does not match type {vtype!r}"
                    )
        else:
            if vtype == "str":
                raise ValidationError(f"{path}.type", "str parameters must be categorical")
            kind = vtype
        specs.append(
            ParamSpec(
                name=name,
                kind=kind,
                distribution=distribution,
                parameters=tuple(parameters),
                p_range=tuple(p_range),
            )
        )

    conditions = _parse_conditions(raw.get("h_params_conditions", []))
    conjunctions = _parse_conjunctions(raw.get("h_params_conjunctions", []))
    return HyperparamSpace(tuple(specs), conditions, conjunctions)


def _parse_one_condition(entry: Any, child: str | None, path: str) -> Condition:
    if not isinstance(entry, dict):
        raise ValidationError(path, "must be an object")
    allowed = {"parent", "values"} if child is not None else {"child", "parent", "values"}
    for key in entry:
        if key not in allowed:
            raise ValidationError(f"{path}.{key}", "unknown key")
    if child is None:
        child = entry.get("child")
        if not isinstance(child, str):
            raise ValidationError(f"{path}.child", "must name a parameter")
    parent = entry.get("parent")
    if not isinstance(parent, str):
        raise ValidationError(f"{path}.parent", "must name a parameter")
    values = entry.get("values")
    if not isinstance(values, list) or not values:
        raise ValidationError(f"{path}.values", "must be a non-empty list")
    return Condition(child=child, parent=parent, parent_values=tuple(values))


def _parse_conditions(raw: Any) -> tuple[Condition, ...]:
    if not isinstance(raw, list):
        raise ValidationError("h_params_conditions", "must be a list")
    return tuple(
        _parse_one_condition(entry, None, f"h_params_conditions[{i}]")
        for i, entry in enumerate(raw)
    )


def _parse_conjunctions(raw: Any) -> tuple[ConditionGroup, ...]:
    if not isinstance(raw, list):
        raise ValidationError("h_params_conjunctions", "must be a list")
    groups: list[ConditionGroup] = []
    for i, entry in enumerate(raw):
        path = f"h_params_conjunctions[{i}]"
        if not isinstance(entry, dict):
            raise ValidationError(path, "must be an object")
        for key in entry:
            if key not in ("child", "all"):
                raise ValidationError(f"{path}.{key}", "unknown key")
        child = entry.get("child")
        if not isinstance(child, str):
            raise ValidationError(f"{path}.child", "must name a parameter")
        conds = entry.get("all")
        if not isinstance(conds, list) or not conds:
            raise ValidationError(f"{path}.all", "must be a non-empty list")
        members = tuple(
            _parse_one_condition(c, child, f"{path}.all[{j}]") for j, c in enumerate(conds)
        )
        groups.append(ConditionGroup(child=child, conditions=members))
    return tuple(groups)


PBT_DEFAULTS = {
    "exploit": "truncation",
    "explore": "perturb",
    "perturb_factors": (0.8, 1.2),
    "resample_prob": 0.1,
    "quantile": 0.2,
}


def _parse_tune(raw: Any, step: int) -> TuneSpec:
    if not isinstance(raw, dict) or len(raw) != 1:
        raise ValidationError("tune", "must be an object with exactly one method key")
    method = next(iter(raw))
    if method not in TUNE_METHODS:
        raise ValidationError(f"tune.{method}", f"unknown method, expected one of {list(TUNE_METHODS)}")
    body = raw[method]
    if not isinstance(body, dict):
        raise ValidationError(f"tune.{method}", "must be an object")
    path = f"tune.{method}"

    if method == "random_search":
        if body:
            raise ValidationError(f"{path}.{next(iter(body))}", "unknown key")
        return TuneSpec(method, {})

    if method == "pbt":
        params = dict(PBT_DEFAULTS)
        for key, value in body.items():
            if key not in PBT_DEFAULTS:
                raise ValidationError(f"{path}.{key}", "unknown key")
            params[key] = value
        if params["exploit"] != "truncation":
            raise ValidationError(f"{path}.exploit", "only 'truncation' is supported")
        if params["explore"] != "perturb":
            raise ValidationError(f"{path}.explore", "only 'perturb' is supported")
        factors = params["perturb_factors"]
        if (
            not isinstance(factors, (list, tuple))
            or not factors
            or not all(_is_number(f) and f > 0 for f in factors)
        ):
            raise ValidationError(f"{path}.perturb_factors", "must be a list of positive numbers")
        params["perturb_factors"] = tuple(factors)
        if not _is_number(params["resample_prob"]) or not 0 <= params["resample_prob"] <= 1:
            raise ValidationError(f"{path}.resample_prob", "must lie in [0, 1]")
        if not _is_number(params["quantile"]) or not 0 < params["quantile"] <= 0.5:
            raise ValidationError(f"{path}.quantile", "must lie in (0, 0.5]")
        return TuneSpec(method, params)

    # hyperband
    params = {"eta": 3}
    for key, value in body.items():
        if key not in ("R", "eta"):
            raise ValidationError(f"{path}.{key}", "unknown key")
        params[key] = value
    if "R" not in params:
        raise ValidationError(f"{path}.R", "required key missing")
    if not _is_int(params["R"]) or params["R"] < 1:
        raise ValidationError(f"{path}.R", "must be a positive integer")
    if not _is_int(params["eta"]) or params["eta"] < 2:
        raise ValidationError(f"{path}.eta", "must be an integer >= 2")
    if step == -1:
        raise ValidationError("step", "hyperband needs checkpoints, set step >= 1")
    return TuneSpec("hyperband", params)


def _parse_termination(raw: Any) -> Termination:
    if not isinstance(raw, dict):
        raise ValidationError("termination", "must be an object")
    for key in raw:
        if key not in TERMINATION_KEYS:
            raise ValidationError(f"termination.{key}", "unknown key")
    if not raw:
        raise ValidationError("termination", "must set at least one condition")
    time_budget = raw.get("time_budget")
    if time_budget is not None and (not _is_int(time_budget) or time_budget < 1):
        raise ValidationError("termination.time_budget", "must be a positive integer")
    max_sessions = raw.get("max_session_number")
    if max_sessions is not None and (not _is_int(max_sessions) or max_sessions < 1):
        raise ValidationError("termination.max_session_number", "must be a positive integer")
    threshold = raw.get("performance_threshold")
    if threshold is not None and not _is_number(threshold):
        raise ValidationError("termination.performance_threshold", "must be a number")
    return Termination(
        time_budget=time_budget,
        max_session_number=max_sessions,
        performance_threshold=threshold,
    )


def serialize_config(config: ChoptConfig) -> str:
    """Canonical JSON for a config; parse_config round-trips it exactly."""
    h_params: dict[str, Any] = {}
    for spec in config.space.params:
        entry: dict[str, Any] = {
            "parameters": list(spec.parameters),
            "distribution": spec.distribution,
            "type": _value_type_of(spec),
        }
        if spec.p_range:
            entry["p_range"] = list(spec.p_range)
        h_params[spec.name] = entry

    payload: dict[str, Any] = {"h_params": h_params}
    if config.space.conditions:
        payload["h_params_conditions"] = [
            {"child": c.child, "parent": c.parent, "values": list(c.parent_values)}
            for c in config.space.conditions
        ]
    if config.space.conjunctions:
        payload["h_params_conjunctions"] = [
            {
                "child": g.child,
                "all": [
                    {"parent": c.parent, "values": list(c.parent_values)}
                    for c in g.conditions
                ],
            }
            for g in config.space.conjunctions
        ]
    payload["measure"] = config.measure
    payload["order"] = config.order
    payload["step"] = config.step
    payload["population"] = config.population
    tune_body = dict(config.tune.params)
    if "perturb_factors" in tune_body:
        tune_body["perturb_factors"] = list(tune_body["perturb_factors"])
    payload["tune"] = {config.tune.method: tune_body}
    term: dict[str, Any] = {}
    if config.termination.time_budget is not None:
        term["time_budget"] = config.termination.time_budget
    if config.termination.max_session_number is not None:
        term["max_session_number"] = config.termination.max_session_number
    if config.termination.performance_threshold is not None:
        term["performance_threshold"] = config.termination.performance_threshold
    payload["termination"] = term
    payload["stop_ratio"] = config.stop_ratio
    if config.workload is not None:
        payload["workload"] = config.workload
    if config.constants:
        payload["constants"] = config.constants
    if config.seed is not None:
        payload["seed"] = config.seed
    return json.dumps(payload, indent=2)


def _value_type_of(spec: ParamSpec) -> str:
    if spec.kind != "categorical":
        return spec.kind
    first = spec.parameters[0]
    if isinstance(first, str):
        return "str"
    if _is_int(first):
        return "int"
    return "float"


# ---------------------------------------------------------------------------
# operations


def _round_half_away(x: float) -> int:
    if x >= 0:
        return math.floor(x + 0.5)
    return math.ceil(x - 0.5)


def _clamp(v: float, bounds: tuple) -> float:
    if not bounds:
        return v
    return min(max(v, bounds[0]), bounds[1])


def _draw(spec: ParamSpec, rng) -> Any:
    if spec.distribution == "categorical":
        return spec.parameters[rng.randrange(len(spec.parameters))]
    if spec.distribution == "gaussian":
        mean, stddev = spec.parameters
        v = rng.gauss(mean, stddev)
        v = _clamp(v, spec.p_range)
        if spec.kind == "int":
            return int(_clamp(_round_half_away(v), spec.p_range))
        return v
    lo, hi = spec.parameters
    if spec.kind == "int" and spec.distribution == "uniform":
        # discrete uniform, bounds inclusive
        return rng.randint(lo, hi)
    u = rng.random()
    if spec.distribution == "uniform":
        v = lo + u * (hi - lo)
    else:  # log_uniform
        v = math.exp(math.log(lo) + u * (math.log(hi) - math.log(lo)))
    if spec.kind == "int":
        return min(max(_round_half_away(v), lo), hi)
    return v


def sample(space: HyperparamSpace, rng) -> Assignment:
    """Draw a full assignment, activating conditionals top-down."""
    out: Assignment = {}
    for name in space.topo_order():
        if space.is_active(name, out):
            out[name] = _draw(space.get(name), rng)
    return out


def perturb(
    space: HyperparamSpace,
    assignment: Mapping[str, Any],
    rng,
    factors: Sequence[float] = (0.8, 1.2),
    resample_prob: float = 0.1,
) -> Assignment:
    """PBT explore step.

    Numeric values are multiplied by a factor drawn from factors and clamped
    to p_range; ints are rounded half away from zero.  Categoricals resample
    with probability resample_prob.  If a resampled parent changes the active
    set, newly active children are sampled fresh and inactive ones dropped.
    """
    moved: Assignment = {}
    for spec in space.params:
        if spec.name not in assignment:
            continue
        value = assignment[spec.name]
        if spec.distribution == "categorical":
            if rng.random() < resample_prob:
                moved[spec.name] = spec.parameters[rng.randrange(len(spec.parameters))]
            else:
                moved[spec.name] = value
        else:
            factor = factors[rng.randrange(len(factors))]
            v = _clamp(value * factor, spec.p_range)
            if spec.kind == "int":
                v = int(_clamp(_round_half_away(v), spec.p_range))
            moved[spec.name] = v

    out: Assignment = {}
    for name in space.topo_order():
        if not space.is_active(name, out):
            continue
        out[name] = moved[name] if name in moved else _draw(space.get(name), rng)
    return out


def narrow(space: HyperparamSpace, overrides: Mapping[str, Sequence]) -> HyperparamSpace:
    """Shrink parameter ranges (or category sets) for a follow-up session.

    Numeric overrides are [low, high] inside the parameter's p_range (or the
    current range when no p_range is set).  Categorical overrides are a
    non-empty subset of the current categories.
    """
    new_specs = list(space.params)
    names = space.names()
    for name, override in overrides.items():
        path = f"narrow.{name}"
        if name not in names:
            raise ValidationError(path, "unknown parameter")
        idx = names.index(name)
        spec = space.params[idx]
        if not isinstance(override, (list, tuple)) or not override:
            raise ValidationError(path, "must be a non-empty list")
        if spec.distribution == "categorical":
            if len(set(override)) != len(override):
                raise ValidationError(path, "categories must be distinct")
            for v in override:
                if v not in spec.parameters:
                    raise ValidationError(path, f"{v!r} is not an existing category")
            new_specs[idx] = replace(spec, parameters=tuple(override))
            continue
        if len(override) != 2 or not all(_is_number(v) for v in override):
            raise ValidationError(path, "expected [low, high]")
        lo, hi = override
        outer = spec.p_range if spec.p_range else spec.parameters
        if spec.distribution != "gaussian" and (lo < outer[0] or hi > outer[1]):
            raise ValidationError(path, "override must lie inside p_range")
        new_specs[idx] = replace(spec, parameters=(lo, hi))

    narrowed = HyperparamSpace(tuple(new_specs), space.conditions, space.conjunctions)
    narrowed.validate()
    return narrowed


def append_param(
    space: HyperparamSpace,
    param: ParamSpec,
    conditions: Iterable[Condition | ConditionGroup] = (),
) -> HyperparamSpace:
    """Add a parameter (optionally conditional) for a follow-up session."""
    if param.name in space.names():
        raise ValidationError(f"append.{param.name}", "parameter already exists")
    plain = list(space.conditions)
    groups = list(space.conjunctions)
    for cond in conditions:
        if cond.child != param.name:
            raise ValidationError(
                f"append.{param.name}", "appended conditions must target the new parameter"
            )
        if isinstance(cond, ConditionGroup):
            groups.append(cond)
        else:
            plain.append(cond)
    grown = HyperparamSpace(
        space.params + (param,), tuple(plain), tuple(groups)
    )
    grown.validate()
    return grown

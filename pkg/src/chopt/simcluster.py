"""Deterministic simulated training backend.

Trials do not run real jobs; each epoch of work evaluates a closed-form
learning curve plus zero-mean noise.  The noise stream is keyed by (workload
seed, assignment hash, epoch), so a metric depends only on those three values
and never on scheduling order, revival, or wall-clock time.  That property is
what makes whole-cluster runs replayable byte for byte.

Two workload families:

* deep_bias: curves with depth-dependent warmup.  Deeper variants reach a
  higher asymptote but rise more slowly, so greedy early stopping at a low
  epoch systematically favors shallow configurations.
* bowl: a quadratic basin over the numeric parameters; the closer an
  assignment sits to the center, the higher the final metric.

Sim time is a bare tick counter.  One tick grants every running trial one
epoch of progress.
"""

from __future__ import annotations

import bisect
import hashlib
import io
import json
import math
from dataclasses import dataclass
from typing import Any, Callable, Mapping

from chopt import _kernels
from chopt.space import ValidationError

WORKLOAD_KINDS = ("deep_bias", "bowl")


def assignment_hash(assignment: Mapping[str, Any]) -> int:
    """Stable 64-bit hash of an assignment, independent of dict order."""
    canonical = json.dumps(assignment, sort_keys=True, separators=(",", ":"))
    digest = hashlib.blake2b(canonical.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


@dataclass(frozen=True)
class Workload:
    kind: str
    max_epochs: int
    noise_sigma: float
    seed: int
    # deep_bias
    depth_param: str = "depth"
    depth_max: float = 1.0
    amp_base: float = 0.5
    amp_span: float = 0.3
    # bowl
    center: tuple[tuple[str, float], ...] = ()
    radius: float = 1.0

    @staticmethod
    def from_dict(raw: Mapping[str, Any]) -> "Workload":
        def fail(key: str, message: str) -> ValidationError:
            return ValidationError(f"workload.{key}", message)

        if not isinstance(raw, Mapping):
            raise ValidationError("workload", "must be an object")
        kind = raw.get("kind")
        if kind not in WORKLOAD_KINDS:
            raise fail("kind", f"must be one of {list(WORKLOAD_KINDS)}")
        max_epochs = raw.get("max_epochs")
        if not isinstance(max_epochs, int) or isinstance(max_epochs, bool) or max_epochs < 1:
            raise fail("max_epochs", "must be a positive integer")
        sigma = raw.get("noise_sigma", 0.0)
        if not isinstance(sigma, (int, float)) or isinstance(sigma, bool) or sigma < 0:
            raise fail("noise_sigma", "must be a non-negative number")
        seed = raw.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise fail("seed", "must be an integer")

        if kind == "deep_bias":
            allowed = {"kind", "max_epochs", "noise_sigma", "seed",
                       "depth_param", "depth_max", "amp_base", "amp_span"}
            for key in raw:
                if key not in allowed:
                    raise fail(key, "unknown key")
            depth_param = raw.get("depth_param", "depth")
            if not isinstance(depth_param, str) or not depth_param:
                raise fail("depth_param", "must name a parameter")
            depth_max = raw.get("depth_max")
            if not isinstance(depth_max, (int, float)) or isinstance(depth_max, bool) or depth_max <= 0:
                raise fail("depth_max", "must be a positive number")
            return Workload(
                kind="deep_bias",
                max_epochs=max_epochs,
                noise_sigma=float(sigma),
                seed=seed,
                depth_param=depth_param,
                depth_max=float(depth_max),
                amp_base=float(raw.get("amp_base", 0.5)),
                amp_span=float(raw.get("amp_span", 0.3)),
            )

        allowed = {"kind", "max_epochs", "noise_sigma", "seed", "center", "radius"}
        for key in raw:
            if key not in allowed:
                raise fail(key, "unknown key")
        center = raw.get("center")
        if not isinstance(center, Mapping) or not center:
            raise fail("center", "must map parameter names to coordinates")
        for name, coord in center.items():
            if not isinstance(coord, (int, float)) or isinstance(coord, bool):
                raise fail(f"center.{name}", "must be a number")
        radius = raw.get("radius")
        if not isinstance(radius, (int, float)) or isinstance(radius, bool) or radius <= 0:
            raise fail("radius", "must be a positive number")
        return Workload(
            kind="bowl",
            max_epochs=max_epochs,
            noise_sigma=float(sigma),
            seed=seed,
            center=tuple(sorted((k, float(v)) for k, v in center.items())),
            radius=float(radius),
        )


def curve_for(workload: Workload, assignment: Mapping[str, Any]) -> Callable[[int], float]:
    """Bind a workload and assignment into an epoch -> metric callable.

    The per-assignment constants (amplitude, warmup, distance to center and
    the noise stream id) are computed once here; the per-epoch remainder runs
    in the compiled kernel.
    """
    base = _kernels.noise_base(workload.seed, assignment_hash(assignment))
    sigma = workload.noise_sigma
    max_epochs = workload.max_epochs

    if workload.kind == "deep_bias":
        depth = assignment.get(workload.depth_param)
        if not isinstance(depth, (int, float)) or isinstance(depth, bool) or depth <= 0:
            raise ValueError(
                f"deep_bias workload needs positive numeric {workload.depth_param!r}"
            )
        ratio = depth / workload.depth_max
        amp = workload.amp_base + workload.amp_span * ratio
        tau = (max_epochs / 4.0) * ratio

        def deep_bias_curve(epoch: int) -> float:
            if not 1 <= epoch <= max_epochs:
                raise ValueError(f"epoch {epoch} outside [1, {max_epochs}]")
            return _kernels.deep_bias_metric(amp, tau, epoch, sigma, base)

        return deep_bias_curve

    sq = 0.0
    for name, coord in workload.center:
        value = assignment.get(name)
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ValueError(f"bowl workload needs numeric {name!r}")
        sq += (value - coord) ** 2
    sq /= workload.radius * workload.radius

    def bowl_curve(epoch: int) -> float:
        if not 1 <= epoch <= max_epochs:
            raise ValueError(f"epoch {epoch} outside [1, {max_epochs}]")
        return _kernels.bowl_metric(sq, max_epochs, epoch, sigma, base)

    return bowl_curve


def evaluate(workload: Workload, assignment: Mapping[str, Any], epoch: int) -> float:
    """Metric of one assignment after `epoch` epochs.  Pure."""
    return curve_for(workload, assignment)(epoch)


@dataclass
class SimClock:
    tick: int = 0

    def advance(self) -> int:
        self.tick += 1
        return self.tick


@dataclass(frozen=True)
class DemandTrace:
    """Step function of external (non-CHOPT) GPU demand over sim time."""

    points: tuple[tuple[int, int], ...] = ()

    def at(self, tick: int) -> int:
        ticks = [p[0] for p in self.points]
        idx = bisect.bisect_right(ticks, tick) - 1
        if idx < 0:
            return 0
        return self.points[idx][1]


def non_chopt_trace(text: str) -> DemandTrace:
    """Parse a demand trace CSV with header tick,non_chopt_gpus."""
    reader = io.StringIO(text)
    header = reader.readline().strip()
    if header != "tick,non_chopt_gpus":
        raise ValueError("trace header must be exactly 'tick,non_chopt_gpus'")
    points: list[tuple[int, int]] = []
    for lineno, line in enumerate(reader, start=2):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValueError(f"trace line {lineno}: expected two columns")
        try:
            tick, gpus = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(f"trace line {lineno}: values must be integers") from None
        if gpus < 0:
            raise ValueError(f"trace line {lineno}: demand must be non-negative")
        if points and tick <= points[-1][0]:
            raise ValueError(f"trace line {lineno}: ticks must be strictly increasing")
        points.append((tick, gpus))
    return DemandTrace(tuple(points))


def closed_form(workload: Workload, assignment: Mapping[str, Any], epoch: int) -> float:
    """Noise-free metric value, for tolerance checks against observed runs."""
    if workload.kind == "deep_bias":
        depth = float(assignment[workload.depth_param])
        ratio = depth / workload.depth_max
        amp = workload.amp_base + workload.amp_span * ratio
        tau = (workload.max_epochs / 4.0) * ratio
        return amp * (1.0 - math.exp(-epoch / tau))
    sq = sum((float(assignment[name]) - coord) ** 2 for name, coord in workload.center)
    sq /= workload.radius**2
    value = (1.0 - sq) * (1.0 - math.exp(-4.0 * epoch / workload.max_epochs))
    return min(max(value, 0.0), 1.0)

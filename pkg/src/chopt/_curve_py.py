"""Pure-Python curve kernel, the fallback twin of the compiled chopt._curve.

The two implementations must stay arithmetically in lockstep: same operation
order, same libm calls, same integer mixing.  Tests assert bit-identical
output across backends, and the event-log determinism guarantee depends on
it.  Integer work is unsigned 64-bit, emulated here by masking.
"""

from __future__ import annotations

import math

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_INV53 = 1.0 / 9007199254740992.0  # 2**-53
_TWO_PI = 6.283185307179586


def _mix(z: int) -> int:
    # splitmix64 finalizer
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK
    return z ^ (z >> 31)


def noise_base(seed: int, ahash: int) -> int:
    """Collapse workload seed and assignment hash into one noise stream id."""
    return _mix(_mix(seed & _MASK) ^ (ahash & _MASK))


def _std_normal(base: int, epoch: int) -> float:
    s = (base + epoch * _GOLDEN) & _MASK
    v1 = _mix((s + _GOLDEN) & _MASK)
    v2 = _mix((s + _GOLDEN + _GOLDEN) & _MASK)
    u1 = ((v1 >> 11) + 1) * _INV53  # in (0, 1], log stays finite
    u2 = (v2 >> 11) * _INV53
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)


def std_normal(base: int, epoch: int) -> float:
    return _std_normal(base, epoch)


def deep_bias_metric(amp: float, tau: float, epoch: int, sigma: float, base: int) -> float:
    m = amp * (1.0 - math.exp(-(epoch / tau)))
    if sigma != 0.0:
        m += sigma * _std_normal(base, epoch)
    return m


def bowl_metric(sq: float, max_epochs: int, epoch: int, sigma: float, base: int) -> float:
    m = (1.0 - sq) * (1.0 - math.exp(-(4.0 * epoch / max_epochs)))
    if sigma != 0.0:
        m += sigma * _std_normal(base, epoch)
    if m < 0.0:
        m = 0.0
    elif m > 1.0:
        m = 1.0
    return m

# cython: language_level=3
"""Compiled curve kernel, the hot twin of chopt._curve_py.

Keep every expression in lockstep with the pure-Python module: same operation
order, same libm functions.  Cross-backend tests assert bit equality.
"""

from libc.math cimport exp, log, sqrt, cos, M_PI

cdef unsigned long long _GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double _INV53 = 1.0 / 9007199254740992.0


cdef inline unsigned long long _mix(unsigned long long z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


def noise_base(seed, ahash):
    """Collapse workload seed and assignment hash into one noise stream id."""
    cdef unsigned long long s = <unsigned long long> (seed & 0xFFFFFFFFFFFFFFFF)
    cdef unsigned long long a = <unsigned long long> (ahash & 0xFFFFFFFFFFFFFFFF)
    return _mix(_mix(s) ^ a)


cdef inline double _std_normal(unsigned long long base, unsigned long long epoch) nogil:
    cdef unsigned long long s = base + epoch * _GOLDEN
    cdef unsigned long long v1 = _mix(s + _GOLDEN)
    cdef unsigned long long v2 = _mix(s + _GOLDEN + _GOLDEN)
    cdef double u1 = <double> ((v1 >> 11) + 1) * _INV53
    cdef double u2 = <double> (v2 >> 11) * _INV53
    return sqrt(-2.0 * log(u1)) * cos(2.0 * M_PI * u2)


def std_normal(unsigned long long base, unsigned long long epoch):
    return _std_normal(base, epoch)


def deep_bias_metric(double amp, double tau, unsigned long long epoch,
                     double sigma, unsigned long long base):
    cdef double m = amp * (1.0 - exp(-(<double> epoch / tau)))
    if sigma != 0.0:
        m += sigma * _std_normal(base, epoch)
    return m


def bowl_metric(double sq, unsigned long long max_epochs, unsigned long long epoch,
                double sigma, unsigned long long base):
    cdef double m = (1.0 - sq) * (1.0 - exp(-(4.0 * <double> epoch / <double> max_epochs)))
    if sigma != 0.0:
        m += sigma * _std_normal(base, epoch)
    if m < 0.0:
        m = 0.0
    elif m > 1.0:
        m = 1.0
    return m

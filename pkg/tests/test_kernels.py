import importlib
import math
import statistics
import subprocess
import sys

import pytest

from chopt import _curve_py, _kernels


def _compiled():
    try:
        from chopt import _curve
    except ImportError:
        pytest.skip("compiled kernel not built")
    return _curve


def test_backend_selected():
    assert _kernels.BACKEND in ("compiled", "python")


def test_env_var_forces_pure_python():
    code = (
        "from chopt import _kernels; print(_kernels.BACKEND)"
    )
    out = subprocess.run(
        [sys.executable, "-c", code],
        env={"PATH": "/usr/bin:/bin", "CHOPT_PURE_PYTHON": "1"},
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "python"


def test_noise_base_is_pure():
    a = _curve_py.noise_base(42, 0xDEADBEEF)
    b = _curve_py.noise_base(42, 0xDEADBEEF)
    assert a == b
    assert _curve_py.noise_base(43, 0xDEADBEEF) != a
    assert _curve_py.noise_base(42, 0xDEADBEF0) != a


def test_noise_base_masks_to_64_bits():
    assert 0 <= _curve_py.noise_base(-1, 2**70 + 5) < 2**64


def test_std_normal_moments():
    base = _curve_py.noise_base(7, 1234)
    draws = [_curve_py.std_normal(base + i, epoch) for i in range(200) for epoch in range(1, 51)]
    assert abs(statistics.fmean(draws)) < 0.02
    assert abs(statistics.pstdev(draws) - 1.0) < 0.02


def test_deep_bias_kernel_matches_closed_form():
    # noise off: plain amp * (1 - exp(-epoch / tau))
    amp, tau = 0.8, 75.0
    for epoch in (1, 7, 75, 300):
        expected = amp * (1.0 - math.exp(-epoch / tau))
        assert _curve_py.deep_bias_metric(amp, tau, epoch, 0.0, 0) == pytest.approx(
            expected, abs=1e-12
        )


def test_bowl_kernel_clamps():
    # far from center the quadratic term goes negative; metric floors at 0
    assert _curve_py.bowl_metric(5.0, 100, 100, 0.0, 0) == 0.0
    assert _curve_py.bowl_metric(0.0, 100, 100, 0.0, 0) == pytest.approx(
        1.0 - math.exp(-4.0), abs=1e-12
    )


def test_backends_bit_identical():
    compiled = _compiled()
    base = _curve_py.noise_base(2026, 0x1234ABCD5678EF00)
    assert compiled.noise_base(2026, 0x1234ABCD5678EF00) == base
    for epoch in range(1, 400, 7):
        assert compiled.std_normal(base, epoch) == _curve_py.std_normal(base, epoch)
    for sigma in (0.0, 0.01, 0.3):
        for epoch in range(1, 300, 11):
            a = compiled.deep_bias_metric(0.65, 42.857, epoch, sigma, base)
            b = _curve_py.deep_bias_metric(0.65, 42.857, epoch, sigma, base)
            assert a == b  # exact float equality, not approx
            a = compiled.bowl_metric(0.37, 300, epoch, sigma, base)
            b = _curve_py.bowl_metric(0.37, 300, epoch, sigma, base)
            assert a == b


def test_backends_bit_identical_across_seeds():
    compiled = _compiled()
    for seed in (0, 1, 2**63 - 1, 2**64 - 1):
        for ahash in (0, 987654321, 2**64 - 1):
            base_py = _curve_py.noise_base(seed, ahash)
            assert compiled.noise_base(seed, ahash) == base_py
            assert compiled.std_normal(base_py, 1) == _curve_py.std_normal(base_py, 1)


def test_kernels_reexports_active_backend():
    importlib.reload(_kernels)
    for name in ("noise_base", "std_normal", "deep_bias_metric", "bowl_metric"):
        assert callable(getattr(_kernels, name))

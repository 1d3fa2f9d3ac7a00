import json
import re

import pytest

from chopt.space import parse_config


BASE_CONFIG = {
    "h_params": {
        "lr": {
            "parameters": [0.01, 0.09],
            "distribution": "log_uniform",
            "type": "float",
            "p_range": [0.001, 0.1],
        },
        "depth": {"parameters": [5, 10], "distribution": "uniform", "type": "int"},
        "activation": {
            "parameters": ["relu", "sigmoid"],
            "distribution": "categorical",
            "type": "str",
        },
    },
    "h_params_conditions": [],
    "h_params_conjunctions": [],
    "measure": "test/accuracy",
    "order": "descending",
    "step": 5,
    "population": 5,
    "tune": {"pbt": {"exploit": "truncation", "explore": "perturb"}},
    "termination": {"max_session_number": 50},
}


def make_config(**overrides):
    """Parsed config; overrides replace top-level keys of the base document."""
    raw = json.loads(json.dumps(BASE_CONFIG))
    raw.update(overrides)
    return parse_config(json.dumps(raw))


class FixedRng:
    """Stub driving one specific branch of a sampling routine.

    random() always returns u, randrange(n) always returns min(index, n-1),
    so a test can pin the uniform draw or the factor choice.
    """

    def __init__(self, u=0.0, index=0):
        self.u = u
        self.index = index

    def random(self):
        return self.u

    def randrange(self, n):
        return min(self.index, n - 1)

    def randint(self, lo, hi):
        return lo

    def gauss(self, mean, stddev):
        return mean


@pytest.fixture
def base_config():
    return make_config()


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion at the end of a run."""
    outcomes = {}
    for status in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(status, []):
            if getattr(report, "when", "call") != "call" and status != "error":
                continue
            match = re.search(r"test_ac(\d+)_", getattr(report, "nodeid", ""))
            if match:
                outcomes[int(match.group(1))] = report.outcome.upper()
    if outcomes:
        terminalreporter.write_sep("-", "acceptance criteria")
        for number in sorted(outcomes):
            terminalreporter.write_line(f"AC-{number}: {outcomes[number]}")

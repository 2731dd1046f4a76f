from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from censored_hill.models import TailModel


def km_oracle(delta_sorted, m):
    """Product-limit survival in exact rational arithmetic, term by term."""
    n = len(delta_sorted)
    out = Fraction(1)
    for i in range(1, m + 1):
        out *= 1 - Fraction(int(delta_sorted[i - 1]), n - i + 1)
    return out


def hill_oracle(z_sorted, k):
    n = len(z_sorted)
    return math.fsum(math.log(z_sorted[n - i]) for i in range(1, k + 1)) / k - math.log(z_sorted[n - k - 1])


def scipy_dist(model: TailModel):
    """Independent scipy.stats parameterization of each family."""
    g, s = model.gamma, model.scale
    if model.family.value == "frechet":
        return stats.invweibull(c=1.0 / g, scale=s)
    if model.family.value == "pareto":
        return stats.pareto(b=1.0 / g, scale=s)
    rho = model.burr_rho
    return stats.burr12(c=-rho / g, d=-1.0 / rho, scale=s)


MODELS = [
    TailModel("frechet", 0.6),
    TailModel("frechet", 1.3, scale=2.5),
    TailModel("pareto", 0.5),
    TailModel("pareto", 0.25, scale=3.0),
    TailModel("burr", 0.5, burr_rho=-1.0),
    TailModel("burr", 0.8, scale=0.5, burr_rho=-0.3),
]


@pytest.fixture(params=MODELS, ids=lambda m: f"{m.family.value}-{m.gamma}-{m.scale}")
def model(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary ------------------------------------------------------------

_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

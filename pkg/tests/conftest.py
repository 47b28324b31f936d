from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from qfmgeom.pauli import SkewHermitianOp

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

LABELS = {n: ["".join(t) for t in itertools.product("IXYZ", repeat=n)][1:] for n in (1, 2, 3)}

coeff = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False).filter(lambda c: abs(c) > 1e-6)


@st.composite
def skew_ops(draw, n=None, max_terms=5):
    n = draw(st.integers(1, 3)) if n is None else n
    labels = draw(st.lists(st.sampled_from(LABELS[n]), min_size=1, max_size=max_terms, unique=True))
    return SkewHermitianOp(n, {p: draw(coeff) for p in labels})


@st.composite
def op_pairs(draw, count=2):
    n = draw(st.integers(1, 3))
    return tuple(draw(skew_ops(n=n)) for _ in range(count))


def random_op(rng: np.random.Generator, n: int, scale: float = 1.0, terms: int | None = None):
    labels = LABELS[n]
    k = len(labels) if terms is None else min(terms, len(labels))
    chosen = rng.choice(len(labels), size=k, replace=False)
    return SkewHermitianOp(n, {labels[i]: scale * rng.normal() for i in chosen})


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# -- acceptance verdict lines -------------------------------------------------------------

ACCEPTANCE: list[str] = []


@pytest.fixture
def verdict(capsys):
    """Record and print one ``PASS``/``FAIL`` line for an acceptance criterion, then assert."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE.append(line)
        with capsys.disabled():
            print(f"\n{line}")
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)

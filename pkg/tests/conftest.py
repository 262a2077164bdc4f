import math
from collections import Counter
from fractions import Fraction

import pytest

# Rational parameter grid used by the exact checks.
GRID = [
    (Fraction(1, 2), Fraction(1, 4)),
    (Fraction(2, 3), Fraction(1, 3)),
    (Fraction(3, 5), Fraction(2, 5)),
    (Fraction(3, 4), Fraction(3, 4)),
]

def within_4_sigma(counts: Counter, probs: dict, runs: int) -> list:
    """Cells whose empirical count is more than 4 binomial SDs off."""
    bad = []
    for key, p in probs.items():
        p = float(p)
        sd = math.sqrt(runs * p * (1 - p))
        if abs(counts.get(key, 0) - runs * p) > 4 * sd + 1e-9:
            bad.append((key, counts.get(key, 0), runs * p))
    bad += [(k, c, 0.0) for k, c in counts.items() if k not in probs]
    return bad


_criteria: dict = {}


@pytest.fixture
def record():
    """Record a one-line PASS/FAIL verdict for an acceptance criterion."""

    def _record(number: int, ok: bool, detail: str = "") -> bool:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        _criteria[number] = line
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        terminalreporter.write_line(_criteria[number])

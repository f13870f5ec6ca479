"""Shared fixtures: a session-scoped profile cache and the acceptance report.

The tests in test_acceptance.py cover the headline numerical claims; each one
records a verdict here, and the terminal-summary hook prints one line per
criterion at the end of the run so the result is readable without scrolling.
"""
from __future__ import annotations

import numpy as np
import pytest

from hophase import ProfileProblem, quartic_well, solve_clamped

# ---------------------------------------------------------------------------
# acceptance report
# ---------------------------------------------------------------------------

CRITERIA = {
    "C01": "m_1 table (k=1, T=10, n=4001) within 1e-3 of 8/3, under 30 s",
    "C02": "m_k > 0.1 and half-problem barrier m*_k(0.1, 10, 20) > 0 for k=1,2,3",
    "C03": "m_k(T) nonincreasing on T=2,4,8,16; relaxed-family orderings hold",
    "C04": "recovery energy ratios in [0.98, 1.02] for 1-3 jumps, k=1,2,3",
    "C05": "2-D line within 2% and circle within 5% of m_k * length, k=1,2",
    "C06": "energy gradient matches finite differences (rel < 1e-6); solver gradient",
    "C07": "interpolation fixture sin(pi t) gives pi/(pi+1) within 1e-6; scale-free",
    "C08": "transition count equals jump count at eps <= 1e-3, located within 2*eps*T",
    "C09": "bridge energies: theta(0)=0, ramp theta=1, k=2 theta=12, quadratic scaling",
    "C10": "repeated CLI runs produce byte-identical JSON",
}

_RESULTS: dict[str, tuple[bool, str]] = {}


class _Recorder:
    """Record per-criterion verdicts; `check` also raises on failure so the
    criterion shows up both in the summary block and as a pytest failure."""

    def record(self, cid: str, passed: bool, detail: str = "") -> None:
        if cid not in CRITERIA:
            raise KeyError(f"unknown acceptance criterion {cid!r}")
        _RESULTS[cid] = (bool(passed), detail)

    def check(self, cid: str, passed: bool, detail: str = "") -> None:
        self.record(cid, passed, detail)
        assert passed, f"{cid} failed: {CRITERIA[cid]} [{detail}]"


@pytest.fixture(scope="session")
def acceptance() -> _Recorder:
    return _Recorder()


def pytest_terminal_summary(terminalreporter, exitstatus, config) -> None:
    terminalreporter.section("acceptance criteria")
    for cid, label in CRITERIA.items():
        if cid in _RESULTS:
            passed, detail = _RESULTS[cid]
            status = "PASS" if passed else "FAIL"
            suffix = f"  ({detail})" if detail else ""
        else:
            status, suffix = "NOT RUN", ""
        terminalreporter.write_line(f"[{status:>7}] {cid} {label}{suffix}")


# ---------------------------------------------------------------------------
# profile cache
# ---------------------------------------------------------------------------


class ProfileCache:
    """Memoize clamped solves for the quartic well; several test modules share
    the same (k, T, n) minimizers, and the k >= 2 solves dominate runtime."""

    def __init__(self) -> None:
        self.well = quartic_well()
        self._store: dict[tuple, object] = {}

    def clamped(self, k: int, T: float, n: int):
        key = (k, float(T), int(n))
        if key not in self._store:
            self._store[key] = solve_clamped(
                ProfileProblem(k=k, T=float(T), n=int(n), well=self.well)
            )
        return self._store[key]


@pytest.fixture(scope="session")
def profiles() -> ProfileCache:
    return ProfileCache()


@pytest.fixture(scope="session")
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)

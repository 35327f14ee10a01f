"""Shared fixtures: random instance factories and cached benchmark runs.

The acceptance tests register one line per criterion through
``record_criterion``; the terminal summary hook prints the collected lines
after the test run so the pass/fail status of every criterion is visible in
plain pytest output. Benchmark solves are expensive, so the runs shared by
several criteria are computed once per session.
"""

import numpy as np
import pytest

import persched as ps

_CRITERION_LINES = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    status = "PASS" if passed else "FAIL"
    _CRITERION_LINES[number] = f"criterion {number:2d}: {status}  {detail}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERION_LINES):
        terminalreporter.write_line(_CRITERION_LINES[number])


def random_stable_system(rng, n, m, radius=0.85):
    """Random plant with a Schur-stable A and well-conditioned noise.

    A is rescaled to the requested spectral radius, B is the identity so
    the process noise excites every state, and Q and R are random SPD
    matrices bounded away from singular.
    """
    a = rng.normal(size=(n, n))
    a *= radius / max(ps.spectral_radius(a), 1e-12)
    c = rng.normal(size=(m, n))
    q_half = rng.normal(size=(n, n))
    q = q_half @ q_half.T / n + 0.1 * np.eye(n)
    r_half = rng.normal(size=(m, m))
    r = r_half @ r_half.T / m + 0.1 * np.eye(m)
    return ps.SystemModel(A=a, B=np.eye(n), C=c, Q=q, R=r)


def random_schedule(rng, K, m, min_total=1):
    """Uniform random 0/1 mask with at least ``min_total`` activations."""
    while True:
        mask = (rng.random((K, m)) < 0.5).astype(int)
        if mask.sum() >= min_total:
            return ps.Schedule(mask)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def benchmark_sys():
    return ps.benchmark_system()


@pytest.fixture(scope="session")
def benchmark_penalized(benchmark_sys):
    """Solver reports for the two penalized benchmark cells, keyed by gamma."""
    out = {}
    for gamma in (0.1, 0.15):
        cfg = ps.AdmmConfig(period=10, gamma=gamma, eta=5)
        out[gamma] = ps.run(benchmark_sys, cfg)
    return out


@pytest.fixture(scope="session")
def benchmark_gamma0_sweep(benchmark_sys):
    """Unpenalized benchmark solves over eta = 1..10, keyed by eta."""
    out = {}
    for eta in range(1, 11):
        cfg = ps.AdmmConfig(period=10, gamma=0.0, eta=eta)
        out[eta] = ps.run(benchmark_sys, cfg)
    return out

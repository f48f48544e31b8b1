import itertools

import pytest

from stable_streams.linkstream import LinkStream

# filled by test_acceptance; printed at the end of the session
ACCEPTANCE_RESULTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        status, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{status}] criterion {key}: {detail}")


def clique_rows(nodes, t):
    return [(t, a, b) for a, b in itertools.combinations(nodes, 2)]


def clique_stream(active_windows, gamma=10, n_windows=7, clique=("a", "b", "c", "d"), background=("x", "y")):
    """A clique interacting once per step inside ``active_windows``, and a background pair active everywhere.

    The background keeps the rest of each snapshot non-empty, so an isolated
    clique has conductance 0 rather than the degenerate 1.
    """
    rows = []
    for w in range(n_windows):
        for step in range(gamma):
            t = w * gamma + step
            rows.append((t, *background))
            if w in active_windows:
                rows.extend(clique_rows(clique, t))
    return LinkStream.from_interactions(rows)


@pytest.fixture
def path_stream():
    return LinkStream.from_interactions([(0, "a", "b"), (0, "b", "c"), (0, "c", "d")])

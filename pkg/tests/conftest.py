import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_assignment(rng, shape, p_node=0.8):
    """Random AssignmentMap with roughly ``p_node`` of pixels at the node."""
    at = rng.random(shape) < p_node
    side = np.where(rng.random(shape) < 0.5, 1, 2)
    a = np.where(at, side, 0).astype(np.int8)
    if not np.any(a):
        a.flat[0] = 1
    return a


def bisection_tree(width, max_depth, seed=0):
    """Hand-built tree on a (1, width, 1) ramp image whose value is the column index.

    Every split node halves its column interval with a VALUE test, so the
    leaves are contiguous runs of ``width / 2**max_depth`` columns.
    """
    from collections import deque

    from scrf.forest import _pack_tree
    from scrf.splits import SplitFunction, SplitKind

    nodes = [{"depth": 0}]
    queue = deque([(0, 0, width)])
    while queue:
        i, lo, hi = queue.popleft()
        rec = nodes[i]
        rec["n"] = hi - lo
        rec["mean"] = np.array([(lo + hi - 1) / 2.0])
        rec["var"] = np.array([np.var(np.arange(lo, hi))])
        if rec["depth"] == max_depth or hi - lo < 2:
            continue
        mid = (lo + hi) // 2
        l, r = len(nodes), len(nodes) + 1
        nodes += [{"depth": rec["depth"] + 1}, {"depth": rec["depth"] + 1}]
        rec.update(split=SplitFunction(SplitKind.VALUE, 0, (0, 0), threshold=mid - 0.5),
                   children=(l, r), lam=0.0, gain=1.0, coherency=0.0)
        queue.append((l, lo, mid))
        queue.append((r, mid, hi))
    return _pack_tree(nodes, (1, width, 1), max_depth, seed, None)


def ramp_stack(width):
    return np.arange(width, dtype=np.float64).reshape(1, width, 1)


ACCEPTANCE_LINES = []


def acceptance_line(number, ok, detail):
    """Record one acceptance verdict; all verdicts are echoed in the terminal summary."""
    status = {True: "PASS", False: "FAIL", None: "NOT RUN"}[ok]
    line = f"criterion {number}: {status}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

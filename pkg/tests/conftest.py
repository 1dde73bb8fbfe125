import numpy as np
import pytest

from aagcn.graph import from_edge_list


def random_graph(rng, n, density=0.2, weighted=False, loops=False):
    """Erdos-Renyi style symmetric graph built with an independent RNG."""
    iu, ju = np.triu_indices(n, 0 if loops else 1)
    keep = rng.random(iu.size) < density
    w = rng.uniform(0.5, 2.0, keep.sum()) if weighted else np.ones(keep.sum())
    edges = np.column_stack([iu[keep], ju[keep], w])
    return from_edge_list(edges, n, symmetrize=True)


def dense_filter(a, h, x):
    """sum_r h_r A^r X with explicit matrix powers."""
    out = np.zeros_like(x, dtype=np.float64)
    power = np.eye(a.shape[0])
    for coef in h:
        out += coef * (power @ x)
        power = power @ a
    return out


def check_graph_invariants(g):
    g.validate()
    a = g.to_dense()
    assert np.array_equal(a, a.T)
    assert np.all(np.isfinite(g.values))
    assert np.all(g.values != 0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_CRITERIA] = []


@pytest.fixture
def criterion(request):
    """``criterion(label, ok, detail)`` records one acceptance line; the lines
    are echoed immediately and repeated in the terminal summary."""
    lines = request.config.stash[_CRITERIA]

    def record(label, ok, detail):
        status = "SKIP" if ok is None else ("PASS" if bool(ok) else "FAIL")
        line = f"{status}  {label}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

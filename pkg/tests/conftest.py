import numpy as np
import pytest

from jetgeom.expr import VarRef
from jetgeom.space import load_space


def env_at(space, **coords):
    """A single-point binding: named coordinates as given, the rest at the box midpoint."""
    env = {v: 0.5 * (lo + hi) for v, (lo, hi) in space.domain.items()}
    by_name = {v.name: v for v in space.variables}
    for key, val in coords.items():
        env[by_name[key]] = float(val)
    return env


def value(t, env):
    """Numeric components; a trailing sample axis whenever ``env`` is batched,
    even for constant tensors."""
    arr = np.asarray(t.evaluate(env), dtype=float)
    sizes = {np.size(v) for v in env.values() if np.ndim(v)}
    if sizes and arr.ndim == t.rank:
        arr = np.broadcast_to(arr[..., None], arr.shape + (sizes.pop(),))
    return arr


def sample_env(space, count=50, seed=11):
    return space.sample_envs(count, seed)


def momenta(space, env):
    """p[i, a] as numbers."""
    m, n = space.dims
    return np.array([[env[VarRef.p(i + 1, a + 1)] for a in range(m)] for i in range(n)])


@pytest.fixture(scope="session")
def spaces():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = load_space(name)
        return cache[name]

    return get


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(VERDICTS, key=lambda k: int(k[2:])):
            terminalreporter.write_line(VERDICTS[key])

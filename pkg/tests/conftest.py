import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fsvar.gibbs import DrawStore  # noqa: E402
from fsvar.model import ChainState, ModelSpec, loading_pattern  # noqa: E402
from fsvar.simulate import make_truth  # noqa: E402


def random_state(rng, m=3, q=1, P=2, n=10, n_exog=0, intercept=False, coef_scale=0.1):
    K = m * P + n_exog + int(intercept)
    free, fixed = loading_pattern(m, q)
    X = np.where(free, rng.normal(size=(m, q)), fixed)
    sv = lambda k: np.column_stack([rng.normal(size=k), rng.uniform(0.5, 0.95, k), rng.uniform(0.05, 0.2, k)])
    return ChainState(coef=coef_scale * rng.normal(size=(K, m)), loadings=X,
                      factors=rng.normal(size=(n, q)), factor_logvol=rng.normal(size=(n, q)),
                      factor_sv=sv(q), idio_logvol=rng.normal(size=(n, m)), idio_sv=sv(m),
                      tau=rng.gamma(1.0, 1.0, size=(K, m)), delta=rng.gamma(3.0, 1.0, size=P),
                      lags=P, n_exog=n_exog, intercept=intercept)


def store_from(Bs, Xs, n=5, factor_logvol=None, idio_logvol=None):
    """Draw store with one state per ``(B, X)`` pair; volatilities default to one."""
    states = []
    for B, X in zip(Bs, Xs):
        B = np.asarray(B, float)
        m = B.shape[1]
        X = np.asarray(X, float).reshape(m, -1)
        q = X.shape[1]
        spec = ModelSpec(lags=B.shape[0], factors=q)
        states.append(make_truth(spec, B, X, [[0.0, 0.5, 0.1]] * q, [[0.0, 0.5, 0.1]] * m, n,
                                 factor_logvol=factor_logvol, idio_logvol=idio_logvol))
    return DrawStore.from_states(states)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_lines(request):
    """Collector for the one-line verdicts printed by the acceptance suite."""
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

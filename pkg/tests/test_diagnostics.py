import numpy as np
import pytest
from scipy.signal import lfilter
from scipy.stats import wasserstein_distance

from stratabc.exceptions import DegeneracyError, ParameterError
from stratabc.inference.diagnostics import (
    diagnose_chain,
    efficiency_ratio,
    ess_from_iat,
    iat,
    posterior_summary,
    wasserstein_1d,
    weighted_posterior_summary,
)
from stratabc.inference.models import Chain
from stratabc.schemas.artifacts import ChainDiagnostics
from stratabc.streams import make_stream


def ar1(rho: float, n: int, seed: int = 0) -> np.ndarray:
    e = make_stream(seed).standard_normal(n)
    return lfilter([1.0], [1.0, -rho], e)


def _chain(draws: np.ndarray, burn_in: int = 0, wall_time: float = 60.0) -> Chain:
    draws = np.asarray(draws, dtype=float).reshape(len(draws), -1)
    n = draws.shape[0]
    return Chain(
        phi=draws, theta=draws, log_likelihood=np.zeros(n), accepted=np.ones(n, dtype=bool),
        delta=np.full(n, 0.1), parameter_names=tuple(f"x{j}" for j in range(draws.shape[1])),
        burn_in=burn_in, wall_time=wall_time,
    )


def test_iat_of_iid_draws_is_one():
    assert iat(make_stream(1).standard_normal(100_000)) == pytest.approx(1.0, abs=0.1)


def test_iat_of_ar1():
    assert iat(ar1(0.5, 200_000, seed=2)) == pytest.approx(3.0, rel=0.1)


def test_iat_of_alternating_series_is_clipped():
    assert iat(np.tile([1.0, -1.0], 50)) == 1.0


def test_iat_errors():
    with pytest.raises(DegeneracyError):
        iat(np.full(100, 2.0))
    with pytest.raises(ParameterError):
        iat(np.arange(5.0))


def test_iat_shrinks_with_thinning():
    x = ar1(0.9, 200_000, seed=3)
    values = [iat(x[::k]) for k in (1, 4, 16, 64)]
    assert values == sorted(values, reverse=True)
    assert values[-1] < 1.5


def test_ess_from_iat():
    assert ess_from_iat(10_000, 1.0) == 10_000
    assert ess_from_iat(10_000, 244.1) == pytest.approx(40.97, abs=0.01)
    assert ess_from_iat(500, 500.0) == 1.0
    with pytest.raises(ParameterError):
        ess_from_iat(100, 0.5)


def test_wasserstein_examples():
    a = make_stream(4).standard_normal(50)
    assert wasserstein_1d(a, a) == 0.0
    assert wasserstein_1d(a, a + 0.7) == pytest.approx(0.7)
    assert wasserstein_1d(np.array([0.0, 1.0]), np.array([1.0, 2.0])) == pytest.approx(1.0)


def test_wasserstein_is_a_metric_on_equal_sizes():
    g = make_stream(5)
    for _ in range(20):
        a, b, c = (g.standard_normal(30) * g.uniform(0.5, 2) for _ in range(3))
        assert wasserstein_1d(a, b) == pytest.approx(wasserstein_1d(b, a))
        assert wasserstein_1d(a, c) <= wasserstein_1d(a, b) + wasserstein_1d(b, c) + 1e-12


def test_wasserstein_unequal_sizes():
    g = make_stream(6)
    a, b = g.standard_normal(40), g.standard_normal(70) + 1
    assert wasserstein_1d(a, b) == pytest.approx(wasserstein_distance(a, b))


def test_wasserstein_of_empty_sample():
    with pytest.raises(ParameterError):
        wasserstein_1d(np.array([]), np.array([1.0]))


def test_posterior_summary_examples():
    assert posterior_summary(np.full(100, 2.5)) == (2.5, 2.5, 2.5)
    assert posterior_summary(np.arange(1.0, 1001.0)) == (500.5, 25.0, 976.0)


def test_posterior_summary_ignores_order():
    x = make_stream(7).standard_normal(400)
    permuted = make_stream(8).permutation(x)
    np.testing.assert_allclose(posterior_summary(x), posterior_summary(permuted))
    mean, lo, hi = posterior_summary(x)
    assert lo < mean < hi


def test_posterior_summary_needs_enough_draws():
    with pytest.raises(ParameterError):
        posterior_summary(np.arange(10.0))


def test_weighted_summary_with_equal_weights():
    x = np.arange(1.0, 1001.0)
    mean, lo, hi = weighted_posterior_summary(x, np.ones_like(x))
    assert mean == pytest.approx(500.5)
    assert lo == pytest.approx(25.0, abs=1)
    assert hi == pytest.approx(975.0, abs=1)


def test_weighted_summary_follows_the_weights():
    mean, lo, hi = weighted_posterior_summary(np.array([0.0, 10.0]), np.array([0.0, 1.0]))
    assert (mean, lo, hi) == (10.0, 10.0, 10.0)


def test_diagnose_chain_fields():
    g = make_stream(9)
    draws = np.column_stack([ar1(0.8, 5000, seed=10), g.standard_normal(5000)])
    diag = diagnose_chain(_chain(draws, burn_in=1000, wall_time=30.0))
    assert diag.n_retained == 4000
    np.testing.assert_allclose(diag.ess, [4000 / v for v in diag.iat])
    assert diag.worst_iat == max(diag.iat) == diag.iat[0]
    assert diag.worst_ess == min(diag.ess)
    assert diag.ess_per_minute == pytest.approx(diag.worst_ess * 2)
    assert [p.name for p in diag.posterior] == ["x0", "x1"]
    assert diag.final_delta == 0.1


def test_diagnose_chain_with_a_stuck_coordinate():
    draws = np.column_stack([np.full(100, 1.0), np.arange(100.0)])
    diag = diagnose_chain(_chain(draws))
    assert diag.iat[0] == 100.0
    assert diag.ess[0] == 1.0


def test_efficiency_ratio():
    fast = ChainDiagnostics(ess_per_minute=30.0)
    slow = ChainDiagnostics(ess_per_minute=10.0)
    assert efficiency_ratio(fast, slow) == 3.0
    with pytest.raises(ParameterError):
        efficiency_ratio(fast, ChainDiagnostics())

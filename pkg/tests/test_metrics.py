import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from artl.datasets.synthetic import SYNTHETIC_DOMAIN, make_test_set
from artl.errors import InvalidInputError, UndefinedCorrelationError
from artl.evaluation.metrics import correlations, pmse, robust_validation_score
from data_models.architecture import MlpArchitecture
from support import linear_theta, make_dataset

LINEAR = MlpArchitecture(input_dim=2, hidden_widths=[])


def test_perfect_model_scores_zero():
    test = make_test_set("plane", 200, seed=0)
    theta = linear_theta([1.0, -1.0])
    assert pmse(theta, LINEAR, test) == pytest.approx(0.0, abs=1e-24)
    assert robust_validation_score(theta, LINEAR, test, 0.9) == pytest.approx(0.0, abs=1e-24)


def test_constant_offset_costs_its_square():
    test = make_test_set("plane", 200, seed=1)
    assert pmse(linear_theta([1.0, -1.0], 0.5), LINEAR, test) == pytest.approx(0.25)


def test_zero_model_on_plane_matches_second_moment():
    test = make_test_set("plane", 100_000, seed=2)
    assert pmse(linear_theta([0.0, 0.0]), LINEAR, test) == pytest.approx((2 * np.pi) ** 2 / 6, rel=0.02)


def test_robust_score_examples():
    X = np.zeros((3, 2))
    val = make_dataset(X, np.array([0.0, 0.0, 100.0]), SYNTHETIC_DOMAIN)
    zero = linear_theta([0.0, 0.0])
    assert robust_validation_score(zero, LINEAR, val, 2 / 3) == 0.0
    assert robust_validation_score(zero, LINEAR, val, 1.0) == pytest.approx(pmse(zero, LINEAR, val))
    with pytest.raises(InvalidInputError):
        robust_validation_score(zero, LINEAR, val, 0.0)


def test_robust_score_never_exceeds_mse(rng):
    X = rng.uniform(0, 2 * np.pi, size=(40, 2))
    val = make_dataset(X, rng.standard_cauchy(40), SYNTHETIC_DOMAIN)
    theta = linear_theta([0.1, 0.2])
    assert robust_validation_score(theta, LINEAR, val, 0.9) <= pmse(theta, LINEAR, val)


def test_pmse_ignores_row_order(rng):
    test = make_test_set("checkered", 50, seed=3)
    perm = rng.permutation(test.n)
    theta = linear_theta([0.3, -0.1], 0.2)
    assert pmse(theta, LINEAR, test.subset(perm)) == pytest.approx(pmse(theta, LINEAR, test), rel=1e-14)


def test_correlation_examples():
    a = np.array([1.0, 2.0, 3.0])
    assert correlations(a, a) == pytest.approx((1.0, 1.0))
    assert correlations(a, -a) == pytest.approx((-1.0, -1.0))
    corr = correlations(a, np.array([1.0, 4.0, 9.0]))
    assert corr.pearson == pytest.approx(0.9897, abs=1e-4)
    assert corr.spearman == 1.0


def test_correlation_errors():
    with pytest.raises(UndefinedCorrelationError):
        correlations(np.ones(4), np.arange(4.0))
    with pytest.raises(InvalidInputError):
        correlations(np.arange(2.0), np.arange(2.0))
    with pytest.raises(InvalidInputError):
        correlations(np.arange(3.0), np.arange(4.0))


@given(
    pair=st.integers(3, 20).flatmap(
        lambda n: st.tuples(
            arrays(np.float64, n, elements=st.integers(-100, 100).map(float)),
            arrays(np.float64, n, elements=st.integers(-100, 100).map(float)),
        )
    )
)
def test_correlations_lie_in_unit_interval(pair):
    a, b = pair
    assume(np.ptp(a) > 0 and np.ptp(b) > 0)
    corr = correlations(a, b)
    assert -1.0 <= corr.pearson <= 1.0
    assert -1.0 <= corr.spearman <= 1.0

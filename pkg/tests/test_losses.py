import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from artl.errors import InputShapeError, InvalidInputError
from artl.losses import (
    TUKEY_C,
    AugmentedState,
    TrimSpec,
    artl_value,
    artl_value_from_residuals,
    huber_loss,
    huber_psi,
    inner_min_xi,
    kept_mask,
    trimmed_loss,
    tukey_loss,
    tukey_psi,
    v_h_subgradient,
    v_h_value,
)
from support import linear_theta

R = np.array([1.0, -2.0, 3.0])

residual_vectors = arrays(
    np.float64,
    st.integers(1, 12),
    elements=st.floats(-5.0, 5.0, allow_nan=False, allow_infinity=False),
)


def test_trimmed_loss_example():
    assert trimmed_loss(R, 2) == pytest.approx(5.0 / 3.0)


def test_full_trim_is_mse():
    assert trimmed_loss(R, 3) == pytest.approx(np.mean(R**2))
    assert trimmed_loss(np.zeros(4), 2) == 0.0


@pytest.mark.parametrize("h", [0, 4])
def test_h_out_of_range(h):
    with pytest.raises(InvalidInputError):
        trimmed_loss(R, h)


def test_non_vector_residuals_are_rejected():
    with pytest.raises(InputShapeError):
        trimmed_loss(np.zeros((2, 2)), 1)


def test_trim_from_fraction_rounds_half_up():
    assert TrimSpec.from_fraction(0.9, 15).h == 14  # 13.5 -> 14
    assert TrimSpec.from_fraction(0.5, 3).h == 2
    assert TrimSpec.from_fraction(0.01, 10).h == 1


def test_ties_resolve_by_index():
    assert kept_mask(np.array([2.0, -2.0, 1.0]), 2).tolist() == [True, False, True]


def test_inner_min_example():
    res = inner_min_xi(R, 2)
    np.testing.assert_allclose(res.xi_star, [0.5, -1.0, 3.0])
    assert res.value == pytest.approx(5.0 / 6.0)


def test_inner_min_full_and_zero():
    res = inner_min_xi(R, 3)
    np.testing.assert_allclose(res.xi_star, R / 2)
    assert res.value == pytest.approx(np.mean(R**2) / 2)
    zero = inner_min_xi(np.zeros(3), 1)
    assert not zero.xi_star.any() and zero.value == 0.0


def test_inner_min_beats_a_lattice():
    res = inner_min_xi(R, 2)
    grid = np.arange(-4.0, 4.0001, 0.25)
    best = min(
        float(np.sum((R - xi) ** 2) / 3 + trimmed_loss(np.array(xi), 2))
        for xi in itertools.product(grid, repeat=3)
    )
    assert res.value <= best + 1e-12
    assert best == pytest.approx(res.value)


def test_subgradient_examples():
    np.testing.assert_allclose(v_h_subgradient(np.array([3.0, 1.0, -2.0]), 2), [2.0, 0.0, 0.0])
    assert not v_h_subgradient(R, 3).any()
    assert not v_h_subgradient(np.zeros(3), 1).any()


def test_artl_value_examples():
    assert artl_value_from_residuals(R, np.zeros(3), 2) == pytest.approx(np.mean(R**2))
    assert artl_value_from_residuals(np.zeros(3), np.zeros(3), 1, hovr_value=0.7, lam=1.0) == pytest.approx(0.7)
    with pytest.raises(InputShapeError):
        artl_value_from_residuals(R, np.zeros(2), 2)


def test_artl_value_on_a_model(linear_arch):
    theta = linear_theta([1.0, 0.0])
    X = np.array([[1.0, 0.0], [0.0, 1.0]])
    y = np.array([2.0, 0.0])
    state = AugmentedState.initial(theta, 2)
    # residuals (1, 0)
    assert artl_value(state, linear_arch, X, y, 1, hovr_value=2.0, lam=0.5) == pytest.approx(0.5 + 1.0)
    assert np.array_equal(state.with_flat(state.flat).flat, state.flat)


@given(r=residual_vectors, data=st.data())
def test_inner_min_identity(r, data):
    n = r.shape[0]
    h = data.draw(st.sampled_from(sorted({1, -(-n // 2), int(np.ceil(0.9 * n)), n})))
    res = inner_min_xi(r, h)
    assert abs(artl_value_from_residuals(r, res.xi_star, h) - trimmed_loss(r, h) / 2) <= 1e-12 * n


@given(
    pair=st.integers(1, 10).flatmap(
        lambda n: st.tuples(
            arrays(np.float64, n, elements=st.floats(-5, 5)),
            arrays(np.float64, n, elements=st.floats(-5, 5)),
            st.integers(1, n),
        )
    )
)
def test_subgradient_inequality(pair):
    xi, other, h = pair
    lhs = v_h_value(other, h)
    rhs = v_h_value(xi, h) + float(v_h_subgradient(xi, h) @ (other - xi))
    assert lhs >= rhs - 1e-12


@given(r=residual_vectors)
def test_monotone_in_h(r):
    values = [trimmed_loss(r, h) for h in range(1, r.shape[0] + 1)]
    assert all(a <= b for a, b in zip(values, values[1:]))


@given(r=residual_vectors, data=st.data())
def test_permutation_invariance(r, data):
    h = data.draw(st.integers(1, r.shape[0]))
    perm = data.draw(st.permutations(range(r.shape[0])))
    assert trimmed_loss(r[list(perm)], h) == pytest.approx(trimmed_loss(r, h), rel=1e-12, abs=1e-300)


@given(r=arrays(np.float64, st.integers(1, 8), elements=st.floats(-5, 5)), data=st.data())
def test_exhaustive_subset_minimum(r, data):
    n = r.shape[0]
    h = data.draw(st.integers(1, n))
    best = min(float(np.sum(r[list(idx)] ** 2) / n) for idx in itertools.combinations(range(n), h))
    assert trimmed_loss(r, h) == pytest.approx(best, rel=1e-12, abs=1e-15)


def test_huber_examples():
    assert huber_loss(0.5, 1.0) == pytest.approx(0.125)
    assert huber_loss(2.0, 1.0) == pytest.approx(1.5)
    assert huber_psi(np.array([-3.0, 0.2])).tolist() == [-1.0, 0.2]
    with pytest.raises(InvalidInputError):
        huber_loss(1.0, 0.0)


def test_tukey_saturates():
    c = TUKEY_C
    assert tukey_loss(c, c) == pytest.approx(c * c / 6)
    assert tukey_loss(10 * c, c) == pytest.approx(c * c / 6)
    assert tukey_loss(0.0) == 0.0
    assert tukey_psi(np.array([10 * c]))[0] == 0.0
    with pytest.raises(InvalidInputError):
        tukey_loss(1.0, -1.0)

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from herzschur.definiteness import (
    DefinitenessError,
    cnd_embed,
    cnd_eta_vectors,
    distances_of,
    gram_factorize,
    gram_of,
    is_cond_negative_definite,
    is_positive_definite,
    schoenberg_check,
)
from herzschur.kernel_core import Kernel, RadialProfile, lift_radial

seeds = st.integers(0, 2**32 - 1)


@given(seeds, st.integers(1, 12), st.integers(1, 6))
def test_gram_matrices_are_pd_and_factor_back(seed, n, dim):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n, dim))
    g = v @ v.T
    assert is_positive_definite(g).verdict
    rows = gram_factorize(g)
    assert np.allclose(gram_of(rows), g, atol=1e-8 * max(1, np.abs(g).max()))


def test_negative_eigenvalue_gives_witness_and_failing_size():
    a = np.diag([1.0, 1.0, -1.0, 1.0])
    rep = is_positive_definite(a)
    assert not rep.verdict
    assert rep.extremal_eigenvalue == pytest.approx(-1.0)
    assert rep.witness_value < -rep.tolerance_used
    assert rep.failing_size == 3


def test_non_hermitian_rejected():
    with pytest.raises(DefinitenessError):
        is_positive_definite(np.array([[1.0, 2.0], [0.0, 1.0]]))


@given(seeds, st.integers(2, 12), st.integers(1, 5))
def test_squared_distances_are_cnd_and_embed(seed, n, dim):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, dim))
    d = np.sum((x[:, None] - x[None]) ** 2, axis=-1)
    assert is_cond_negative_definite(d).verdict
    rows = cnd_embed(d)
    assert np.allclose(rows[0], 0)
    assert np.allclose(distances_of(rows), d, atol=1e-7 * max(1, d.max()))


def test_cnd_failure_has_mean_zero_witness():
    d = -np.abs(np.subtract.outer(np.arange(4.0), np.arange(4.0)))
    rep = is_cond_negative_definite(d)
    assert not rep.verdict
    assert abs(rep.witness_vector.sum()) < 1e-12
    assert rep.witness_value > rep.tolerance_used
    assert rep.failing_size == 2


def test_word_length_on_integers_is_cnd():
    k = np.abs(np.subtract.outer(np.arange(10.0), np.arange(10.0)))
    assert is_cond_negative_definite(k).verdict


def test_schoenberg_agreement():
    k = np.abs(np.subtract.outer(np.arange(8.0), np.arange(8.0)))
    rep = schoenberg_check(k, [0.01, 0.1, 1, 10])
    assert rep.all_pd and rep.cnd.verdict and rep.consistent
    bad = schoenberg_check(-k, [0.5, 1.0])
    assert not bad.cnd.verdict and not bad.all_pd and bad.consistent


def test_eta_vectors_for_linear_growth():
    # psi(m, n) = m + n has diagonal increment 2, a PD kernel
    psi = lift_radial(RadialProfile.polynomial(0, 1))
    rep = cnd_eta_vectors(psi, 10)
    assert rep.reconstruction_error < 1e-12
    assert np.all(np.diff(rep.partial_sums) >= -1e-15)


def test_eta_vectors_reject_non_pd_increment():
    psi = Kernel(-np.add.outer(np.arange(5.0), np.arange(5.0)))
    with pytest.raises(DefinitenessError):
        cnd_eta_vectors(psi)

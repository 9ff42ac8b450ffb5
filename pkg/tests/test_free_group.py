import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from herzschur.definiteness import is_positive_definite
from herzschur.free_group import (
    BallTooLarge,
    TreeError,
    TreePortion,
    TreeVertex,
    Word,
    additivity_check,
    ball_size,
    c_constants,
    enumerate_ball,
    group_matrix,
    mn_pair,
    radial_b2_norm,
    symmetry_violations,
    tree_lift_phi,
    word_distances,
    word_vertex_map,
)
from herzschur.kernel_core import Constants, Geometric, RadialProfile
from herzschur.schur_norm import schur_norm
from herzschur.toeplitz import NotBoundedError

letters = st.lists(st.sampled_from([1, -1, 2, -2, 3, -3]), max_size=10)


@given(letters, letters)
def test_word_group_laws(a, b):
    x, y = Word.reduce(a), Word.reduce(b)
    assert len(x * x.inv()) == 0
    assert (x * y).inv() == y.inv() * x.inv()
    assert x * y == Word.reduce(a + b)


def test_word_validation():
    with pytest.raises(ValueError):
        Word((1, -1))
    with pytest.raises(ValueError):
        Word((0,))
    assert str(Word((1, -2))) == "a1a2^-1"
    assert str(Word()) == "e"


@pytest.mark.parametrize("radius,count", [(0, 1), (1, 5), (2, 17), (3, 53)])
def test_ball_sizes(radius, count):
    ball = enumerate_ball(2, radius)
    assert len(ball) == count == ball_size(2, radius)
    assert len(set(ball)) == count


def test_ball_cap_and_bad_arguments():
    with pytest.raises(BallTooLarge):
        enumerate_ball(3, 8, cap=1000)
    with pytest.raises(ValueError):
        enumerate_ball(1, 2)
    with pytest.raises(ValueError):
        enumerate_ball(2, -1)


def test_word_distances_match_reduction():
    ball = enumerate_ball(2, 3)
    d = word_distances(ball)
    for i, j in itertools.product(range(0, 53, 4), range(0, 53, 3)):
        assert d[i, j] == len(ball[j].inv() * ball[i])


def test_group_matrix_examples():
    ball = enumerate_ball(2, 1)
    assert np.array_equal(group_matrix(RadialProfile.constant(1.0), ball).entries, np.ones((5, 5)))
    r = 0.3
    g = group_matrix(RadialProfile.geometric(r), ball).entries
    assert np.allclose(np.diag(g), 1.0)
    a1, a2 = ball.index(Word((1,))), ball.index(Word((2,)))
    assert g[a1, a2] == pytest.approx(r ** 2)


def test_radial_norms():
    assert radial_b2_norm(RadialProfile.geometric(0.4)).total == pytest.approx(1.0, abs=1e-12)
    alt = radial_b2_norm(RadialProfile((), Constants(0.0, 1.0)))
    assert alt.phi0_constants == (0.0, 1.0) and alt.hankel_trace_norm == 0.0 and alt.total == 1.0
    for t in (0.2, 1.0):
        cert = radial_b2_norm(RadialProfile.exponential(t), "f2", 300)
        assert cert.total == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(NotBoundedError, match="not a Herz-Schur multiplier at declared tail"):
        radial_b2_norm(RadialProfile.polynomial(0, 1), "f2")


def test_c_constants():
    assert c_constants(RadialProfile.constant(3.0))[:2] == (3.0, 0.0)
    c_plus, c_minus, rem = c_constants(RadialProfile((), Geometric(0.5, 1.0, 2.0, 1.0)))
    assert (c_plus, c_minus) == (2.0, 1.0)
    assert np.allclose(rem(np.arange(10)), 0.5 ** np.arange(10))
    assert c_constants(RadialProfile((), Constants(0.0, 5.0)))[:2] == (0.0, 5.0)


@pytest.mark.parametrize("group", ["f2", "finf"])
def test_ball_restrictions_sit_below_radial_norm(group):
    prof = RadialProfile((1.0, 0.5, -0.25, 0.1))
    cert = radial_b2_norm(prof, group)
    prev = 0.0
    for radius in (1, 2):
        v = schur_norm(group_matrix(prof, enumerate_ball(2, radius)), 1e-6).certified_upper
        assert v >= prev - 1e-6
        if group == "f2":
            assert v <= cert.total + 1e-6
        prev = v


def test_mn_examples():
    x = TreeVertex(2, (1, 0))
    assert mn_pair(x, x) == (0, 0)
    assert mn_pair(x, x.contract()) == (1, 0)
    assert mn_pair(x.contract(), x) == (0, 1)
    portion = TreePortion(2, 1)
    with pytest.raises(TreeError):
        portion.mn_pair(x, TreeVertex(0))


@pytest.mark.parametrize("q,radius", [(2, 3), (3, 2), (3, 3)])
def test_tree_invariants(q, radius):
    portion = TreePortion(q, radius)
    assert additivity_check(portion) == 0
    assert symmetry_violations(portion) == 0
    m, n = portion.mn_matrices()
    assert np.array_equal(m + n, portion.graph_distances())
    for x in portion.vertices[:20]:
        for y in portion.vertices:
            a, b = mn_pair(x, y)
            cx, cy = x, y
            for _ in range(a):
                cx = cx.contract()
            for _ in range(b):
                cy = cy.contract()
            assert cx == cy


def test_tree_ball_size():
    # degree q + 1 tree: 1 + (q+1) sum q^(k-1)
    assert len(TreePortion(3, 3)) == ball_size(2, 3)


@pytest.mark.parametrize("s", [1.0, -1.0, np.exp(0.7j)])
def test_cocycle_lift_is_positive_with_unit_norm(s):
    portion = TreePortion(3, 2)
    k = tree_lift_phi(lambda m, n: s ** (m - n), portion)
    assert is_positive_definite(k).verdict
    assert np.allclose(np.diag(k.entries), 1.0)
    a = k.entries
    assert np.allclose(a[:, None, :], a[:, :, None] * a[None, :, :])
    assert schur_norm(k, 1e-6).certified_upper == pytest.approx(1.0, abs=1e-5)


def test_lift_of_delta_and_one():
    portion = TreePortion(2, 2)
    assert np.array_equal(tree_lift_phi(lambda m, n: 1.0, portion).entries, np.ones((len(portion),) * 2))
    delta = tree_lift_phi(lambda m, n: float(m == 0 and n == 0), portion).entries
    assert np.array_equal(delta, np.eye(len(portion)))


def test_word_ball_maps_isomorphically_onto_tree_ball():
    mapping = word_vertex_map(2, 3)
    ball = enumerate_ball(2, 3)
    portion = TreePortion(3, 3)
    assert set(mapping) == set(ball)
    assert set(mapping.values()) == set(portion.vertices)
    d_words = word_distances(ball)
    d_tree = portion.graph_distances()
    idx = [portion.index[mapping[w]] for w in ball]
    assert np.array_equal(d_words == 1, d_tree[np.ix_(idx, idx)] == 1)

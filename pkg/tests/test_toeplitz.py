import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from herzschur.kernel_core import Constants, Geometric, HankelKernel, Kernel, RadialProfile, exp_scale, lift_radial
from herzschur.toeplitz import (
    NotBoundedError,
    SplitError,
    bounded_part_conditions,
    diagonal_limit_phi0,
    diagonal_tail_sums,
    generator_conditions,
    generator_split,
    geometric_trace_norm,
    hankel_h,
    omega_norm,
    s_membership,
    state_conditions,
    trace_norm,
)

seeds = st.integers(0, 2**32 - 1)


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0, 2.0])
def test_exponential_norm_is_one(t):
    cert = omega_norm(lift_radial(RadialProfile.exponential(t)), 200)
    assert cert.total == pytest.approx(1.0, abs=1e-12)
    assert cert.tail_bound == 0.0


@pytest.mark.parametrize("t", [0.05, 0.5])
def test_section_route_agrees_with_closed_form(t):
    k = lift_radial(RadialProfile.exponential(t))
    section = trace_norm(hankel_h(k), 400)
    assert section.value <= 1 + 1e-12
    assert section.value + section.tail_bound >= 1 - 1e-12


def test_alternating_profile_is_pure_atom():
    cert = omega_norm(lift_radial(RadialProfile((), Constants(0.0, 1.0))))
    assert cert.hankel_trace_norm == 0.0
    assert cert.phi0_constants == (0.0, 1.0)
    assert cert.total == 1.0


def test_constant_profile():
    cert = omega_norm(lift_radial(RadialProfile.constant(3.0)))
    assert cert.total == pytest.approx(3.0)


def test_divergent_limits_rejected():
    with pytest.raises(NotBoundedError):
        omega_norm(lift_radial(RadialProfile.polynomial(0, 1)))


def test_finite_kernel_has_no_atoms_or_tail():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((6, 6))
    a = a + a.T
    cert = omega_norm(Kernel(a))
    assert cert.phi0_constants is None and cert.tail_bound is None
    assert cert.to_json()["phi0_constants"] == "absent"
    assert cert.to_json()["tail_bound"] == "unknown"
    h = a[:-1, :-1] - a[1:, 1:]
    assert cert.total == pytest.approx(np.linalg.norm(h, "nuc"))


def test_trace_norm_tail_bound_holds():
    # slowly decaying difference kernel; compare sections with a much larger one
    k = hankel_h(exp_scale(lift_radial(RadialProfile.polynomial(0, 0, 0.01)), 1.0))
    small = trace_norm(k, 40)
    big = trace_norm(k, 400)
    assert small.value <= big.value + 1e-12
    assert big.value <= small.value + small.tail_bound + 1e-12


def test_trace_norm_of_finite_matrix_cut():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((10, 10))
    full = np.linalg.norm(a, "nuc")
    cut = trace_norm(a, 6)
    assert cut.value <= full + 1e-12 <= cut.value + cut.tail_bound + 1e-9
    with pytest.raises(ValueError):
        trace_norm(a, tail_policy="bogus")


@settings(max_examples=25)
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=6), st.floats(-0.95, 0.95),
       st.floats(-2, 2), st.integers(0, 3))
def test_closed_form_matches_large_section(prefix, r, scale, offset):
    prof = RadialProfile(tuple(prefix), Geometric(r, scale))
    k = HankelKernel(prof, offset, difference=True)
    exact = geometric_trace_norm(k)
    sec = trace_norm(k, 700)
    assert exact == pytest.approx(sec.value, abs=1e-9 + abs(r) ** 1300 * 1e3)


def test_diagonal_limits():
    k = lift_radial(RadialProfile((), Geometric(0.5, 1.0, 2.0, 1.0)))
    assert diagonal_limit_phi0(k) == (2.0, 1.0)
    odd = HankelKernel(k.profile, 1)
    assert diagonal_limit_phi0(odd) == (2.0, -1.0)


def test_state_conditions_for_exponential():
    rep = state_conditions(lift_radial(RadialProfile.exponential(0.7)), 30)
    assert rep.passed, rep.failing


def test_generator_conditions_linear_and_square():
    assert generator_conditions(lift_radial(RadialProfile.polynomial(0, 1)), 40).passed
    rep = generator_conditions(lift_radial(RadialProfile.polynomial(0, 0, 1)), 40)
    assert not rep.passed
    assert "conditionally_negative_definite" in rep.failing


def test_bounded_part_conditions_on_constant():
    theta = Kernel(np.full((5, 5), 0.4))
    assert bounded_part_conditions(theta).passed


def test_membership_linear_and_square():
    lin = s_membership(lift_radial(RadialProfile.polynomial(0, 1)))
    assert lin.verdict == "consistent"
    assert all(abs(e.certificate.total - 1) <= 1e-8 for e in lin.entries)
    sq = s_membership(lift_radial(RadialProfile.polynomial(0, 0, 1)))
    assert sq.verdict == "not_in_S"
    assert sq.witness.excess >= 1e-3


def test_diagonal_tail_sums():
    h = np.arange(16.0).reshape(4, 4)
    s = diagonal_tail_sums(h)
    assert s[0, 0] == h[0, 0] + h[1, 1] + h[2, 2] + h[3, 3]
    assert s[0, 1] == h[0, 1] + h[1, 2] + h[2, 3]
    assert s[2, 0] == h[2, 0] + h[3, 1]


def test_generator_split_constant():
    split = generator_split(lift_radial(RadialProfile.constant(2.0)), 0.5, n=20)
    assert np.allclose(split.psi.entries, 0.0)
    assert np.allclose(split.theta.entries, (1 - math.exp(-1.0)) / 0.5)
    assert split.certified


def test_generator_split_linear():
    t = 0.3
    split = generator_split(lift_radial(RadialProfile.polynomial(0, 1)), t, n=40)
    m = np.add.outer(np.arange(40), np.arange(40))
    target = (1 - np.exp(-t * m)) / t
    assert np.max(np.abs(split.psi.entries + split.theta.entries - target)) <= 1e-12
    assert split.certified


def test_generator_split_rejects_square():
    with pytest.raises(SplitError):
        generator_split(lift_radial(RadialProfile.polynomial(0, 0, 1)), 1.0, n=40)

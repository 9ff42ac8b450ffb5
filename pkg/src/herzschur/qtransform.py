"""The q-calculus for radial functions on free groups with finitely many generators.

``F = (1 - 1/q) sum_n tau^n / q^n`` and the diagonal recursion ``G`` act on
kernels over N0 x N0.  Both only look up and to the left along diagonals, so
their values on an N-section are exact.
"""

from __future__ import annotations

import numpy as np

from .definiteness import is_cond_negative_definite
from .kernel_core import AnyKernel, HankelKernel, Kernel, as_array, exp_scale, section
from .toeplitz import (
    DEFAULT_N,
    DEFAULT_T_GRID,
    ConditionsReport,
    MembershipReport,
    OmegaNormCertificate,
    ScalarCheck,
    TraceNorm,
    _certificate,
    _hankel_tail,
    _pd,
    _scalar_tol,
    diagonal_limit_phi0,
    hankel_h,
    membership_verdict,
    trace_norm,
)


def _check_q(q) -> float:
    if q < 2:
        raise ValueError(f"q must be at least 2, got {q}")
    return float(q)


def _diagonal_recursion(a: np.ndarray, q: float, scale_border: bool) -> np.ndarray:
    """``out = c*a + out(m-1, n-1)/q`` with ``c = 1 - 1/q``.

    Row and column 0 get ``c*a`` when ``scale_border`` is set, else ``a``.
    """
    c = 1.0 - 1.0 / q
    out = c * a if scale_border else a.copy()
    if not scale_border:
        out[1:, 1:] = c * a[1:, 1:]
    size = a.shape[0]
    for lvl in range(1, size):
        out[lvl, lvl:] += out[lvl - 1, lvl - 1:size - 1] / q
        out[lvl + 1:, lvl] += out[lvl:size - 1, lvl - 1] / q
    return out


def _array(k) -> np.ndarray:
    a = as_array(k)
    return a.astype(np.complex128 if np.iscomplexobj(a) else np.float64)


def F_apply(k, q) -> Kernel:
    return Kernel(_diagonal_recursion(_array(k), _check_q(q), True))


def F_inv(k, q) -> Kernel:
    """``(1 - 1/q)^{-1} (k - tau(k)/q)``."""
    q = _check_q(q)
    a = _array(k)
    out = a.copy()
    out[1:, 1:] -= a[:-1, :-1] / q
    return Kernel(out / (1.0 - 1.0 / q))


def G_apply(k, q) -> Kernel:
    return Kernel(_diagonal_recursion(_array(k), _check_q(q), False))


def G_inv(k, q) -> Kernel:
    q = _check_q(q)
    a = _array(k)
    out = a.copy()
    out[1:, 1:] = (a[1:, 1:] - a[:-1, :-1] / q) / (1.0 - 1.0 / q)
    return Kernel(out)


def fg_identity_residual(k, q) -> float:
    """``max |(Gk - Gk o sigma) - F(k - k o sigma)|`` on the common section."""
    a = _array(k)
    if a.shape[0] < 2:
        return 0.0
    g = G_apply(a, q).entries
    lhs = g[:-1, :-1] - g[1:, 1:]
    rhs = F_apply(a[:-1, :-1] - a[1:, 1:], q).entries
    return float(np.max(np.abs(lhs - rhs)))


def _spill(h: np.ndarray, q: float) -> float:
    """Trace norm that ``F`` of the embedded section pushes outside the section."""
    size = h.shape[0]
    total = float(np.sum(np.linalg.svd(h, compute_uv=False)))
    cols = np.sqrt(np.sum(np.abs(h) ** 2, axis=0))
    suffix = np.concatenate([np.cumsum(cols[::-1])[::-1], [0.0]])
    out = 0.0
    for shift in range(1, size + 1):
        out += q ** -shift * min(total, 2 * suffix[size - shift])
    return (1 - 1 / q) * out


def chi_norm(phi: AnyKernel, q, n: int | None = None) -> OmegaNormCertificate:
    """``|F h|_1 + |c_plus| + |c_minus|`` with ``h = phi - phi o sigma``.

    For Hankel inputs the tail bound adds the Hankel truncation bound (``F``
    is a trace-norm contraction) and the part of ``F`` of the embedded section
    that lands outside it.
    """
    q = _check_q(q)
    method = f"chi:q={q:g}"
    if isinstance(phi, HankelKernel):
        n = DEFAULT_N if n is None else n
        phi0 = diagonal_limit_phi0(phi)
        hk = hankel_h(phi)
        h = hk.section(n).entries
        value = trace_norm(F_apply(h, q)).value
        tail = _hankel_tail(hk, n)
        if tail is not None:
            tail += _spill(h, q)
        return _certificate(TraceNorm(value, tail), phi0, n, method)
    h = hankel_h(section(phi, n))
    return _certificate(TraceNorm(trace_norm(F_apply(h, q)).value, None), None, h.size, method)


def _diff_sections(phi: AnyKernel, n: int | None):
    """``(A, A - A o sigma)`` on the largest sections available."""
    if isinstance(phi, HankelKernel):
        n = DEFAULT_N if n is None else n
        return phi.section(n).entries, hankel_h(phi).section(n).entries
    a = section(phi, n).entries
    return a, a[:-1, :-1] - a[1:, 1:]


def q_state_conditions(phi: AnyKernel, q, n: int | None = None, tol: float | None = None) -> ConditionsReport:
    """``F(phi - phi o sigma)`` PD, ``G phi`` PD and ``phi(0,0) = 1``."""
    a, h = _diff_sections(phi, n)
    stol = _scalar_tol(a, tol)
    checks = {
        "f_difference_positive_definite": _pd(F_apply(h, q).entries, tol),
        "g_positive_definite": _pd(G_apply(a, q).entries, tol),
        "unit_at_origin": ScalarCheck(bool(abs(a[0, 0] - 1) <= stol), float(np.real(a[0, 0])), stol),
    }
    return ConditionsReport(f"q_state:q={q}", checks, a.shape[0])


def q_generator_conditions(psi: AnyKernel, q, n: int | None = None, tol: float | None = None) -> ConditionsReport:
    """``G psi`` CND, ``F(psi o sigma - psi)`` PD and ``psi(0,0) = 0``."""
    a, h = _diff_sections(psi, n)
    stol = _scalar_tol(a, tol)
    checks = {
        "g_conditionally_negative_definite": is_cond_negative_definite(G_apply(a, q), tol),
        "f_increment_positive_definite": _pd(F_apply(-h, q).entries, tol),
        "zero_at_origin": ScalarCheck(bool(abs(a[0, 0]) <= stol), float(np.real(a[0, 0])), stol),
    }
    return ConditionsReport(f"q_generator:q={q}", checks, a.shape[0])


def q_s_membership(phi: HankelKernel, q, t_grid=DEFAULT_T_GRID, n: int = DEFAULT_N,
                   tol: float = 1e-8) -> MembershipReport:
    """Evaluate ``chi_norm(exp(-t phi), q)`` across ``t_grid``."""
    certs = [chi_norm(exp_scale(phi, t), q, n) for t in t_grid]
    return membership_verdict(certs, t_grid, n, tol)

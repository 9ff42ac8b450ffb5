"""Norms of Toeplitz-algebra functionals attached to kernels on N0 x N0, and the class of split generators.

A bounded hermitian kernel ``phi`` whose diagonal increment ``h = phi - phi o sigma``
is trace class and whose diagonal limits exist defines a functional of norm
``|h|_1 + |c_plus| + |c_minus|``, where ``phi(m+k, n+k) -> c_plus + c_minus (-1)**(m-n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .definiteness import DefinitenessReport, is_cond_negative_definite, is_positive_definite
from .kernel_core import (
    AnyKernel,
    Constants,
    Geometric,
    Polynomial,
    HankelKernel,
    Kernel,
    KernelError,
    as_array,
    exp_scale,
    section,
)

DEFAULT_N = 200
DEFAULT_T_GRID = (1.0, 0.3, 0.1, 0.03, 0.01)
EXACT_SPLIT_CAP = 4000


class NotBoundedError(ValueError):
    """The kernel has no finite diagonal limits, so it defines no bounded functional."""


class SplitError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# trace norms


class TraceNorm(NamedTuple):
    value: float
    tail_bound: float | None


def hankel_h(phi: AnyKernel) -> AnyKernel:
    """``phi(m, n) - phi(m+1, n+1)``; a finite section loses one row and column."""
    if isinstance(phi, HankelKernel):
        if phi.difference:
            raise KernelError("kernel is already a diagonal difference")
        return HankelKernel(phi.profile, phi.offset, difference=True)
    a = as_array(phi)
    if a.shape[0] < 2:
        raise KernelError("a size-1 section has no diagonal difference")
    return Kernel(a[:-1, :-1] - a[1:, 1:])


def _hankel_tail(k: HankelKernel, n: int) -> float | None:
    """Bound on ``|A|_1 - |A_n|_1`` for the infinite Hankel matrix ``A`` of ``k``.

    ``A - A_n`` splits into the columns ``j >= n`` and the rows ``i >= n``
    restricted to the first ``n`` columns; by symmetry both are covered by
    ``sum_{j >= n} |col_j|``, hence the factor 2.
    """
    lim = k.limits()
    if lim is None or lim != (0.0, 0.0):
        return None
    s0 = max(n, k.envelope_start())
    env = k.envelope_at(s0)
    if env is None:
        return None
    e0, rho = env
    if not rho < 1:
        return None
    if s0 - n > 10**6:
        return None
    far = e0 / math.sqrt(1 - rho * rho)
    total = far / (1 - rho)
    if s0 > n:
        vals = np.abs(k.dot(np.arange(n, s0))) ** 2
        # column j in [n, s0): exact part over s in [j, s0) plus the envelope beyond
        partial = np.cumsum(vals[::-1])[::-1]
        total += float(np.sum(np.sqrt(partial + far * far)))
    return float(2.0 * total)


def _matrix_tail(a: np.ndarray, n: int) -> float:
    cols = np.sqrt(np.sum(np.abs(a[:, n:]) ** 2, axis=0)).sum()
    rows = np.sqrt(np.sum(np.abs(a[n:, :n]) ** 2, axis=1)).sum()
    return float(cols + rows)


def trace_norm(m, n: int | None = None, tail_policy: str = "bound") -> TraceNorm:
    """Sum of singular values of the ``n``-section, with a bound on what lies outside it.

    ``tail_policy="bound"`` attaches a rigorous bound on the truncation error
    (``None`` when the tail rule gives no summable bound); ``"none"`` skips it.
    Finite matrices cut at ``n`` get the exact column/row bound of the
    discarded part; uncut matrices have tail 0.
    """
    if tail_policy not in ("bound", "none"):
        raise ValueError(f"unknown tail policy {tail_policy!r}")
    if isinstance(m, HankelKernel):
        n = DEFAULT_N if n is None else n
        a = m.section(n).entries
        tail = _hankel_tail(m, n) if tail_policy == "bound" else None
    else:
        full = as_array(m)
        if n is None or n >= full.shape[0]:
            a, tail = full, 0.0
        else:
            a = full[:n, :n]
            tail = _matrix_tail(full, n) if tail_policy == "bound" else None
    value = float(np.sum(np.linalg.svd(a, compute_uv=False))) if a.size else 0.0
    return TraceNorm(value, tail)


# --------------------------------------------------------------------------
# functional norms


def diagonal_limit_phi0(phi: HankelKernel) -> tuple[float, float]:
    """``(c_plus, c_minus)`` from the even/odd limits of the tail rule."""
    lim = phi.limits()
    if lim is None or not all(math.isfinite(L) for L in lim):
        raise NotBoundedError("not a bounded functional: diagonal limits diverge")
    even, odd = lim
    return ((even + odd) / 2, (even - odd) / 2)


@dataclass(frozen=True)
class OmegaNormCertificate:
    """``total = hankel_trace_norm + |c_plus| + |c_minus|``.

    ``phi0_constants`` is None ("absent") for finite sections, whose diagonal
    limits are not determined.  ``tail_bound`` is None when unknown; the
    true norm then lies in ``[total, total + tail_bound]`` when known and is at
    least ``total`` in any case.
    """

    hankel_trace_norm: float
    tail_bound: float | None
    phi0_constants: tuple[float, float] | None
    total: float
    truncation: int
    method: str = "omega"

    @property
    def upper(self) -> float | None:
        return None if self.tail_bound is None else self.total + self.tail_bound

    def to_json(self) -> dict:
        return {"method": self.method, "hankel_trace_norm": self.hankel_trace_norm,
                "tail_bound": "unknown" if self.tail_bound is None else self.tail_bound,
                "phi0_constants": "absent" if self.phi0_constants is None else list(self.phi0_constants),
                "total": self.total, "truncation": self.truncation}


def _certificate(trace: TraceNorm, phi0, n: int, method: str) -> OmegaNormCertificate:
    atoms = 0.0 if phi0 is None else abs(phi0[0]) + abs(phi0[1])
    return OmegaNormCertificate(trace.value, trace.tail_bound, phi0, trace.value + atoms, n, method)


CLOSED_FORM_CAP = 2000


def geometric_trace_norm(k: HankelKernel) -> float | None:
    """Exact trace norm of a Hankel kernel that is geometric past a finite prefix.

    If ``g(s) = g(P) r**(s - P)`` for ``s >= P``, the matrix acts on the span
    of the first ``P`` unit vectors and ``v = (r**j)`` placed from index ``P``
    on, and vanishes on the orthogonal complement; its trace norm is that of
    the ``(P+1)``-square compression.  ``None`` when the tail is not of that form.
    """
    tail = k.profile.tail
    if isinstance(tail, Constants) or (isinstance(tail, Polynomial) and tail.degree == 0):
        r = 0.0
    elif isinstance(tail, Geometric):
        if abs(tail.r) > 1:
            return None
        r = tail.r if abs(tail.r) < 1 and tail.scale != 0 else 0.0
    else:
        return None
    if not k.difference and tail.limits() != (0.0, 0.0):
        return None
    p = max(0, k.profile.prefix_end - k.offset)
    if p > CLOSED_FORM_CAP:
        return None
    g = k.dot(np.arange(2 * p + 1))
    vnorm = 1.0 / math.sqrt(1.0 - r * r)
    m = np.empty((p + 1, p + 1))
    idx = np.add.outer(np.arange(p), np.arange(p))
    m[:p, :p] = g[idx]
    m[:p, p] = m[p, :p] = g[p:2 * p] * vnorm
    m[p, p] = g[2 * p] * vnorm * vnorm
    return float(np.sum(np.linalg.svd(m, compute_uv=False)))


def omega_norm(phi: AnyKernel, n: int | None = None) -> OmegaNormCertificate:
    """Norm of the functional attached to ``phi`` from its ``n``-section.

    Profiles that are geometric past a finite prefix are evaluated exactly
    (tail bound 0, method ``"omega:closed-form"``).
    """
    if isinstance(phi, HankelKernel):
        n = DEFAULT_N if n is None else n
        phi0 = diagonal_limit_phi0(phi)
        exact = geometric_trace_norm(hankel_h(phi))
        if exact is not None:
            return _certificate(TraceNorm(exact, 0.0), phi0, n, "omega:closed-form")
        return _certificate(trace_norm(hankel_h(phi), n), phi0, n, "omega")
    k = section(phi, n)
    h = hankel_h(k)
    return _certificate(TraceNorm(trace_norm(h).value, None), None, h.size, "omega")


# --------------------------------------------------------------------------
# definiteness conditions


@dataclass(frozen=True)
class ScalarCheck:
    verdict: bool
    value: float
    tolerance_used: float

    def __bool__(self):
        return self.verdict

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "value": self.value, "tolerance_used": self.tolerance_used}


@dataclass(frozen=True)
class ConditionsReport:
    """Named sub-verdicts on one truncation."""

    name: str
    checks: dict
    truncation: int

    @property
    def passed(self) -> bool:
        return all(c.verdict for c in self.checks.values())

    def __bool__(self):
        return self.passed

    @property
    def failing(self) -> list[str]:
        return [k for k, c in self.checks.items() if not c.verdict]

    def to_json(self) -> dict:
        return {"name": self.name, "passed": self.passed, "truncation": self.truncation,
                "checks": {k: c.to_json() for k, c in self.checks.items()}}


def _section_and_shift(phi: AnyKernel, n: int | None):
    """``(A, A(m+1, n+1) on the same index range)``; finite inputs lose a row."""
    if isinstance(phi, HankelKernel):
        n = DEFAULT_N if n is None else n
        a = phi.section(n).entries
        shifted = HankelKernel(phi.profile, phi.offset + 2).section(n).entries
        return a, shifted
    a = section(phi, n).entries
    return a, a[1:, 1:]


def _scalar_tol(a: np.ndarray, tol: float | None) -> float:
    return tol if tol is not None else 1e-9 * max(1.0, float(np.max(np.abs(a))))


def _pd(m: np.ndarray, tol) -> DefinitenessReport:
    return is_positive_definite(Kernel(m), tol)


def state_conditions(phi: AnyKernel, n: int | None = None, tol: float | None = None) -> ConditionsReport:
    """``phi`` PD, ``phi - phi o sigma`` PD and ``phi(0,0) = 1``."""
    a, sh = _section_and_shift(phi, n)
    m = sh.shape[0]
    checks = {
        "positive_definite": _pd(a, tol),
        "difference_positive_definite": _pd(a[:m, :m] - sh, tol),
        "unit_at_origin": ScalarCheck(bool(abs(a[0, 0] - 1) <= _scalar_tol(a, tol)), float(np.real(a[0, 0])),
                                      _scalar_tol(a, tol)),
    }
    return ConditionsReport("state", checks, a.shape[0])


def generator_conditions(psi: AnyKernel, n: int | None = None, tol: float | None = None) -> ConditionsReport:
    """``psi`` CND with ``psi(0,0) = 0`` and ``psi o sigma - psi`` PD."""
    a, sh = _section_and_shift(psi, n)
    m = sh.shape[0]
    checks = {
        "conditionally_negative_definite": is_cond_negative_definite(Kernel(a), tol),
        "zero_at_origin": ScalarCheck(bool(abs(a[0, 0]) <= _scalar_tol(a, tol)), float(np.real(a[0, 0])),
                                      _scalar_tol(a, tol)),
        "increment_positive_definite": _pd(sh - a[:m, :m], tol),
    }
    return ConditionsReport("generator", checks, a.shape[0])


def bounded_part_conditions(theta: AnyKernel, n: int | None = None, tol: float | None = None) -> ConditionsReport:
    """``theta - theta(0,0)/2`` PD and ``theta - theta o sigma`` PD."""
    a, sh = _section_and_shift(theta, n)
    m = sh.shape[0]
    checks = {
        "half_shift_positive_definite": _pd(a - 0.5 * a[0, 0], tol),
        "difference_positive_definite": _pd(a[:m, :m] - sh, tol),
    }
    return ConditionsReport("bounded_part", checks, a.shape[0])


# --------------------------------------------------------------------------
# membership


@dataclass(frozen=True)
class MembershipEntry:
    t: float
    certificate: OmegaNormCertificate
    excess: float

    def to_json(self) -> dict:
        return {"t": self.t, "excess": self.excess, "certificate": self.certificate.to_json()}


@dataclass(frozen=True)
class MembershipReport:
    """Verdict on a t-grid and a truncation.

    ``"consistent"``: every section norm is at most ``1 + tol`` and every tail
    bound is known, so each full norm lies in ``[total, total + tail]``.
    ``"not_in_S"``: some section norm, itself a lower bound, exceeds ``1 + tol``.
    ``"inconclusive"``: nothing exceeds 1 on the section but some tail bound is unknown.
    """

    verdict: str
    entries: tuple[MembershipEntry, ...]
    truncation: int
    tol: float

    @property
    def consistent(self) -> bool:
        return self.verdict == "consistent"

    @property
    def witness(self) -> MembershipEntry | None:
        bad = [e for e in self.entries if e.excess > self.tol]
        return max(bad, key=lambda e: e.excess) if bad else None

    def to_json(self) -> dict:
        w = self.witness
        return {"verdict": self.verdict, "truncation": self.truncation, "tol": self.tol,
                "witness_t": None if w is None else w.t,
                "entries": [e.to_json() for e in self.entries]}


def membership_verdict(certs, t_grid, n: int, tol: float) -> MembershipReport:
    entries = tuple(MembershipEntry(float(t), c, c.total - 1.0) for t, c in zip(t_grid, certs))
    if any(e.excess > tol for e in entries):
        verdict = "not_in_S"
    elif all(e.certificate.tail_bound is not None for e in entries):
        verdict = "consistent"
    else:
        verdict = "inconclusive"
    return MembershipReport(verdict, entries, n, tol)


def s_membership(phi: HankelKernel, t_grid=DEFAULT_T_GRID, n: int = DEFAULT_N,
                 tol: float = 1e-8) -> MembershipReport:
    """Evaluate ``omega_norm(exp(-t phi))`` across ``t_grid``."""
    certs = [omega_norm(exp_scale(phi, t), n) for t in t_grid]
    return membership_verdict(certs, t_grid, n, tol)


# --------------------------------------------------------------------------
# generator splitting


@dataclass(frozen=True)
class SplitWitness:
    """``psi + theta`` equals ``(1 - exp(-t phi)) / t`` on the section.

    ``certificates`` holds the checks for ``psi`` (CND, zero at the origin,
    increment PD) and ``theta`` (half-shift PD, difference PD).
    ``inner_size`` is the larger section used for the spectral split and
    ``remainder_bound`` bounds what that section leaves out.
    """

    psi: Kernel
    theta: Kernel
    target: Kernel
    certificates: dict
    t: float
    inner_size: int
    remainder_bound: float | None
    reconstruction_error: float = field(default=0.0)

    @property
    def certified(self) -> bool:
        return all(c.verdict for c in self.certificates.values())

    def to_json(self) -> dict:
        return {"t": self.t, "truncation": self.psi.size, "inner_size": self.inner_size,
                "remainder_bound": self.remainder_bound,
                "reconstruction_error": self.reconstruction_error,
                "certificates": {k: c.to_json() for k, c in self.certificates.items()},
                "psi": self.psi.to_json(), "theta": self.theta.to_json()}


def diagonal_tail_sums(h: np.ndarray) -> np.ndarray:
    """``S(m, n) = sum_{i >= 0} h(m+i, n+i)`` inside the section."""
    s = np.array(h, dtype=h.dtype, copy=True)
    size = s.shape[0]
    for i in range(size - 2, -1, -1):
        s[i, i:size - 1] += s[i + 1, i + 1:]
        s[i + 1:size - 1, i] += s[i + 2:, i + 1]
    return s


def _inner_size(phi_t: HankelKernel, n: int, scale: float, cap: int) -> tuple[int, float | None]:
    """Section size whose truncation leaves a diagonal remainder below rounding level."""
    target = 1e-15 * max(scale, 1e-300)
    for size in sorted({n, 2 * n, 4 * n} | set(range(n, cap + 1, max(1, n // 2)))):
        s_min = 2 * size - (n - 1)
        s0 = max(s_min, phi_t.envelope_start())
        env = phi_t.envelope_at(s0)
        if env is None:
            continue
        e0, rho = env
        bound = e0 if s0 == s_min else e0 + float(np.max(np.abs(
            phi_t.dot(np.arange(s_min, s0)) - _limit_values(phi_t, np.arange(s_min, s0)))))
        if bound <= target:
            return size, bound
    return cap, None


def _limit_values(k: HankelKernel, s: np.ndarray) -> np.ndarray:
    even, odd = k.limits()
    return np.where(s % 2 == 0, even, odd)


def generator_split(phi: HankelKernel, t: float, n: int = DEFAULT_N, tol: float | None = None,
                    inner_cap: int = EXACT_SPLIT_CAP) -> SplitWitness:
    """Split ``(1 - exp(-t phi)) / t`` into a CND part and a bounded part.

    The diagonal increment of ``exp(-t phi)`` is split into positive and
    negative spectral parts on a section large enough that the neglected
    diagonal remainder is at rounding level; the diagonal limit atoms are
    split by sign.  With ``phi_plus`` the positive kernel so obtained and
    ``c = phi_plus(0, 0)``, ``psi = (c - phi_plus) / t`` and
    ``theta = (1 - exp(-t phi)) / t - psi``.
    """
    if not t > 0:
        raise SplitError("t must be positive")
    phi_t = exp_scale(phi, t)
    cert = omega_norm(phi_t, n)
    allowance = cert.tail_bound if cert.tail_bound is not None else 0.0
    if cert.total > 1 + allowance + 1e-8:
        raise SplitError(f"membership fails at t={t}: norm {cert.total:.12g} exceeds 1")
    c_plus, c_minus = diagonal_limit_phi0(phi_t)
    base = phi_t.section(n).entries
    size, remainder = _inner_size(phi_t, n, float(np.max(np.abs(base))), max(inner_cap, n))

    h = hankel_h(phi_t).section(size).entries
    w, v = np.linalg.eigh(h)
    h_plus = (v * np.clip(w, 0, None)) @ v.T
    h_plus = 0.5 * (h_plus + h_plus.T)
    pos = diagonal_tail_sums(h_plus)[:n, :n]
    d = np.subtract.outer(np.arange(n), np.arange(n))
    sign = np.where(d % 2 == 0, 1.0, -1.0)
    atoms_plus = max(c_plus, 0.0) + max(c_minus, 0.0) * sign
    phi_plus = pos + atoms_plus
    c = phi_plus[0, 0]
    target = (1.0 - base) / t
    psi = (c - phi_plus) / t
    theta = target - psi

    tol = tol if tol is not None else 1e-9 * max(1.0, float(np.max(np.abs(target))))
    certs = dict(generator_conditions(Kernel(psi), n, tol).checks)
    certs.update(bounded_part_conditions(Kernel(theta), n, tol).checks)
    split = SplitWitness(Kernel(psi), Kernel(theta), Kernel(target), certs, t, size, remainder,
                         float(np.max(np.abs(psi + theta - target))))
    if not split.certified:
        failing = [k for k, v in certs.items() if not v.verdict]
        raise SplitError(f"split certificate failed: {', '.join(failing)}")
    return split

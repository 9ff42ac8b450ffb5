"""Numerical experiments on radial generators: linear growth scans, combined multipliers and finite-level R/S maps."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .definiteness import cnd_embed, default_tol
from .free_group import _q_of, group_matrix
from .kernel_core import Kernel, RadialProfile, as_array, lift_radial
from .qtransform import q_s_membership
from .schur_norm import schur_norm
from .toeplitz import DEFAULT_T_GRID, MembershipReport, s_membership

DEFAULT_N_LADDER = (100, 200, 400)
DEFAULT_WINDOW = 50


class ExperimentError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# linear growth scan


@dataclass(frozen=True)
class ScanReport:
    """``status`` is ``"fitted"``, ``"violation"`` or ``"inconclusive"``.

    When fitted, ``phi(k) <= b + a k`` holds on ``0 <= k <= window``.  When a
    violation is found, ``witness_t``, ``witness_n`` and ``excess`` locate it.
    """

    profile: dict
    group: str
    t_grid: tuple[float, ...]
    reports: dict
    status: str
    verdict: str
    a: float | None = None
    b: float | None = None
    window: int = DEFAULT_WINDOW
    witness_t: float | None = None
    witness_n: int | None = None
    excess: float | None = None

    def to_json(self) -> dict:
        return {"profile": self.profile, "group": self.group, "t_grid": list(self.t_grid),
                "status": self.status, "verdict": self.verdict, "a": self.a, "b": self.b,
                "window": self.window, "witness_t": self.witness_t, "witness_n": self.witness_n,
                "excess": self.excess,
                "reports": {str(n): r.to_json() for n, r in self.reports.items()}}

    def rows(self) -> list[tuple]:
        """``(n, t, total, tail_bound)`` per tested point, for CSV export."""
        return [(n, e.t, e.certificate.total, e.certificate.tail_bound)
                for n, r in self.reports.items() for e in r.entries]


def fit_linear_bound(values: np.ndarray) -> tuple[float, float]:
    """Slope ``a`` from the origin value, then the least intercept ``b`` for that slope.

    ``a = max(0, max_k (phi(k) - phi(0)) / k)`` and
    ``b = max(0, max_k (phi(k) - a k))`` over the window.
    """
    values = np.asarray(values, dtype=float)
    k = np.arange(values.size)
    a = max(0.0, float(np.max((values[1:] - values[0]) / k[1:]))) if values.size > 1 else 0.0
    b = max(0.0, float(np.max(values - a * k)))
    return a, b


def linear_bound_scan(profile: RadialProfile, group="infinite", t_grid=DEFAULT_T_GRID,
                      n_ladder: Sequence[int] = DEFAULT_N_LADDER, window: int = DEFAULT_WINDOW,
                      tol: float = 1e-8) -> ScanReport:
    """Look for ``|exp(-t phi)| > 1`` along the truncation ladder; fit a linear bound otherwise."""
    q = _q_of(group)
    phi = lift_radial(profile)
    group_name = "infinite" if q is None else f"q={q:g}"
    t_grid = tuple(float(t) for t in t_grid)
    reports: dict[int, MembershipReport] = {}
    for n in n_ladder:
        rep = s_membership(phi, t_grid, n, tol) if q is None else q_s_membership(phi, q, t_grid, n, tol)
        reports[int(n)] = rep
        if rep.verdict == "not_in_S":
            w = rep.witness
            return ScanReport(profile.to_json(), group_name, t_grid, reports, "violation",
                              f"violation at t = {w.t:g}", window=window, witness_t=w.t,
                              witness_n=int(n), excess=w.excess)
    if any(r.verdict != "consistent" for r in reports.values()):
        return ScanReport(profile.to_json(), group_name, t_grid, reports, "inconclusive",
                          "no violation found at desk scale; some tail bounds unknown", window=window)
    a, b = fit_linear_bound(profile.values(np.arange(window + 1)))
    return ScanReport(profile.to_json(), group_name, t_grid, reports, "fitted",
                      f"all <= 1: linear bound fitted ({a:g}, {b:g})", a, b, window)


# --------------------------------------------------------------------------
# combining multipliers into a proper generator


def z_window(radius: int) -> np.ndarray:
    """``0, 1, -1, 2, -2, ...`` up to ``radius``."""
    out = [0]
    for k in range(1, radius + 1):
        out += [k, -k]
    return np.array(out)


def default_candidates(limit: float = 1e12, ratio: float = 1.25) -> list[float]:
    """Geometric grid of family parameters, rounded to distinct integers."""
    out, x = [], 1.0
    while x <= limit:
        v = float(round(x))
        if not out or v > out[-1]:
            out.append(v)
        x *= ratio
    return out


@dataclass(frozen=True)
class CombinedMultiplier:
    """``phi = sum_n alpha_n (1 - |phi_{m_n}|^2)`` on the window."""

    points: np.ndarray
    values: np.ndarray
    parameters: tuple[float, ...]
    alphas: tuple[float, ...]
    epsilons: tuple[float, ...]
    sublevel_sizes: dict = field(default_factory=dict)
    tail_minimum: np.ndarray = field(default=None, repr=False)

    @property
    def nondecreasing_tail_minimum(self) -> bool:
        return bool(np.all(np.diff(self.tail_minimum) >= 0))

    def to_json(self) -> dict:
        return {"points": self.points.tolist(), "values": self.values.tolist(),
                "parameters": list(self.parameters), "alphas": list(self.alphas),
                "epsilons": list(self.epsilons),
                "sublevel_sizes": {f"{k:.6g}": v for k, v in self.sublevel_sizes.items()},
                "tail_minimum": self.tail_minimum.tolist()}


def wh_combine(family: Callable[[float, np.ndarray], np.ndarray], points: np.ndarray,
               declared_norm: Callable[[float], float] | float = 1.0,
               n_terms: int | None = None,
               alpha: Callable[[int], float] = lambda n: float(n),
               epsilon: Callable[[int], float] = lambda n: float(n) ** -3,
               candidates: Iterable[float] | None = None) -> CombinedMultiplier:
    """Sum ``alpha_n (1 - |phi_{m_n}|^2)`` where ``m_n`` is the first candidate parameter
    with ``max(1 - |phi_m|^2)`` over the first ``n`` points at most ``epsilon_n``.

    ``family(m, points)`` evaluates one member on the window.  Members must
    declare a norm at most 1 and so satisfy ``|phi_m| <= 1`` pointwise.
    """
    points = np.asarray(points)
    n_terms = len(points) if n_terms is None else int(n_terms)
    cands = default_candidates() if candidates is None else list(candidates)
    norm_of = declared_norm if callable(declared_norm) else (lambda m: float(declared_norm))
    for m in cands:
        if norm_of(m) > 1:
            raise ExperimentError(f"family member {m:g} declares norm {norm_of(m):g} > 1")
    alphas = [alpha(n) for n in range(1, n_terms + 1)]
    eps = [epsilon(n) for n in range(1, n_terms + 1)]
    if any(b <= a for a, b in zip(alphas, alphas[1:])) or any(e <= 0 for e in eps) \
            or any(b > a for a, b in zip(eps, eps[1:])):
        raise ExperimentError("schedule needs increasing alpha_n and positive nonincreasing epsilon_n")

    cache: dict[float, np.ndarray] = {}

    def defect(m):
        if m not in cache:
            vals = np.asarray(family(m, points))
            if np.any(np.abs(vals) > 1 + 1e-12):
                raise ExperimentError(f"family member {m:g} exceeds 1 in modulus")
            cache[m] = np.clip(1.0 - np.abs(vals) ** 2, 0.0, None)
        return cache[m]

    total = np.zeros(len(points))
    chosen = []
    for n in range(1, n_terms + 1):
        pick = next((m for m in cands if defect(m)[:n].max() <= eps[n - 1]), None)
        if pick is None:
            raise ExperimentError(f"no family member meets the error {eps[n - 1]:.3g} on the first {n} points "
                                  f"(term n = {n})")
        chosen.append(pick)
        total += alphas[n - 1] * defect(pick)
    levels = np.unique(np.quantile(total, np.linspace(0, 1, 11)))
    sub = {float(s): int(np.count_nonzero(total <= s)) for s in levels}
    tail_min = np.minimum.accumulate(total[::-1])[::-1]
    return CombinedMultiplier(points, total, tuple(chosen), tuple(alphas), tuple(eps), sub, tail_min)


# --------------------------------------------------------------------------
# finite-level R/S maps


@dataclass(frozen=True)
class RSMaps:
    """Rows ``R[x]``, ``S[x]`` with ``|R(x) - R(y)|^2 + |S(x) + S(y)|^2`` close to ``phi(y^-1 x)``.

    ``level_residual`` compares with ``level * (1 - exp(-phi / level))``, which
    the construction reproduces exactly; ``residual`` compares with ``phi``.
    """

    R: np.ndarray
    S: np.ndarray
    level: int
    residual: float
    level_residual: float
    schur_value: float

    def to_json(self) -> dict:
        return {"level": self.level, "residual": self.residual, "level_residual": self.level_residual,
                "schur_value": self.schur_value, "R": self.R.tolist(), "S": self.S.tolist(),
                "r_norm_max": float(np.linalg.norm(self.R, axis=1).max()),
                "s_norm_max": float(np.linalg.norm(self.S, axis=1).max())}


def rs_form(R: np.ndarray, S: np.ndarray) -> np.ndarray:
    def sq_dist(u, v, sign):
        g = u @ v.T
        du, dv = np.sum(u * u, axis=1), np.sum(v * v, axis=1)
        return du[:, None] + dv[None, :] + sign * 2 * g

    return sq_dist(R, R, -1) + sq_dist(S, S, +1)


def extract_rs(phi, level: int, tol: float = 1e-6, ball=None) -> RSMaps:
    """Build ``R`` and ``S`` from a positive block completion of ``exp(-phi / level)``.

    ``phi`` is a real symmetric kernel on a finite set, or a radial profile
    together with ``ball``.
    """
    if isinstance(phi, RadialProfile):
        if ball is None:
            raise ExperimentError("a radial profile needs a ball")
        phi = group_matrix(phi, ball)
    a = np.asarray(as_array(phi), dtype=float)
    if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ExperimentError("phi must be symmetric")
    if level < 1:
        raise ExperimentError("level must be a positive integer")
    k = np.exp(-a / level)
    cert = schur_norm(k, tol)
    if cert.lower_bracket > 1 + tol:
        raise ExperimentError(f"phi not a contractive semigroup at scale 1/{level}: "
                              f"exp(-phi/{level}) has Schur norm {cert.lower_bracket:.9g} > 1")
    size = a.shape[0]
    C = cert.certified_upper
    w = cert.witness
    if C <= 1:
        # (1 - C) diag(b, c) + C * block(k / C) keeps the unscaled b, c
        block = np.block([[w.b, k], [k.T, w.c]])
    else:
        block = w.block(k, C)
    block = np.real(0.5 * (block + block.conj().T))
    block += np.diag(1.0 - np.diag(block))
    rows = cnd_embed(Kernel(level * (1.0 - block), hermitian=True), default_tol(level * (1.0 - block)))
    P, Q = rows[:size], rows[size:]
    R = (P + Q) / 2
    R = R - R[0]
    S = (P - Q) / 2
    form = rs_form(R, S)
    target = level * (1.0 - k)
    return RSMaps(R, S, int(level), float(np.max(np.abs(form - a))),
                  float(np.max(np.abs(form - target))), cert.value)

"""Schur multiplier norms of finite matrices.

A matrix ``a`` has Schur norm at most ``C`` exactly when there are positive
semidefinite ``b``, ``c`` with diagonals at most 1 such that the block matrix
``[[b, a/C], [(a/C)*, c]]`` is positive semidefinite.  Feasibility of that
completion is tested with Dykstra's alternating projections and the norm is
found by bisection on ``C``.

Every iterate also yields rigorous bounds: an almost-feasible block shifted by
its most negative eigenvalue gives an upper bound, and any test matrix ``W``
gives the lower bound ``|a o W| / |W|`` (operator norms).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .definiteness import gram_factorize, gram_of
from .kernel_core import Kernel, as_array

STALL_WINDOW = 200
STALL_IMPROVEMENT = 1e-3
CHECK_EVERY = 5


class SchurNormError(RuntimeError):
    pass


@dataclass(frozen=True)
class GilbertWitness:
    b: np.ndarray
    c: np.ndarray
    residual: float

    def block(self, a: np.ndarray, C: float = 1.0) -> np.ndarray:
        a = np.asarray(a) / C
        return np.block([[self.b, a], [a.conj().T, self.c]])


@dataclass(frozen=True)
class FeasibilityResult:
    """Outcome of one completion test at level ``C``.

    ``status`` is ``"feasible"``, ``"infeasible"`` or ``"indeterminate"``.
    ``certified_upper`` and ``certified_lower`` are rigorous bounds on the
    Schur norm harvested along the way (the lower one may be 0).
    """

    status: str
    C: float
    residual: float
    iterations: int
    witness: GilbertWitness | None
    certified_upper: float
    certified_lower: float
    upper_witness: GilbertWitness | None = field(default=None, repr=False)
    state: tuple | None = field(default=None, repr=False)

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


@dataclass(frozen=True)
class NormCertificate:
    value: float
    lower_bracket: float
    upper_bracket: float
    certified_lower: float
    certified_upper: float
    iterations: int
    tol: float
    method: str = "initial-bracket"
    witness: GilbertWitness | None = field(default=None, repr=False)

    def to_json(self, with_witness: bool = False) -> dict:
        out = {"value": self.value, "lower_bracket": self.lower_bracket,
               "upper_bracket": self.upper_bracket, "certified_lower": self.certified_lower,
               "certified_upper": self.certified_upper, "iterations": self.iterations,
               "tol": self.tol, "method": self.method}
        if with_witness and self.witness is not None:
            out["witness"] = {"b": _matrix_json(self.witness.b), "c": _matrix_json(self.witness.c),
                              "residual": self.witness.residual}
        return out


def _matrix_json(m: np.ndarray):
    if np.iscomplexobj(m):
        return {"re": m.real.tolist(), "im": m.imag.tolist()}
    return m.tolist()


def _as_matrix(a) -> np.ndarray:
    a = as_array(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise SchurNormError(f"need a nonempty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise SchurNormError("matrix has non-finite entries")
    return a.astype(np.complex128 if np.iscomplexobj(a) else np.float64)


def _psd_part(y: np.ndarray):
    w, v = np.linalg.eigh(y)
    pos = np.clip(w, 0.0, None)
    return (v * pos) @ v.conj().T, w, v


def _project_box(y: np.ndarray, corner: np.ndarray) -> np.ndarray:
    n = corner.shape[0]
    x = y.copy()
    x[:n, n:] = corner
    x[n:, :n] = corner.conj().T
    d = np.minimum(np.real(np.diag(x)), 1.0)
    np.fill_diagonal(x, d)
    return x


def op_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2)) if m.size else 0.0


def lower_bound_from(a: np.ndarray, w: np.ndarray) -> float:
    """``|a o w| / |w|``, a valid lower bound on the Schur norm for any ``w != 0``."""
    nw = op_norm(w)
    if not nw > 0 or not math.isfinite(nw):
        return 0.0
    return op_norm(a * w) / nw


def _dual_candidates(a: np.ndarray, x: np.ndarray, w: np.ndarray, v: np.ndarray):
    """Test matrices built from the negative spectral part of an iterate."""
    n = a.shape[0]
    neg = w < 0
    if not neg.any():
        return []
    z = (v[:, neg] * (-w[neg])) @ v[:, neg].conj().T
    xi = np.sqrt(np.clip(np.real(np.diag(z))[:n], 0.0, None))
    eta = np.sqrt(np.clip(np.real(np.diag(z))[n:], 0.0, None))
    denom = np.outer(xi, eta)
    if not np.any(denom > 0):
        return []
    k = np.divide(z[:n, n:], denom, out=np.zeros_like(z[:n, n:]), where=denom > 1e-300 * denom.max())
    cands = [k, -k]
    if np.iscomplexobj(k):
        cands += [k.conj(), -k.conj()]
    return cands


def _certified_upper(x: np.ndarray, w: np.ndarray, C: float):
    """Shift ``x`` to a PSD matrix with diagonal at most 1 and return the implied bound."""
    lam = max(0.0, -float(w[0]))
    n = x.shape[0] // 2
    y = (x + lam * np.eye(2 * n)) / (1.0 + lam)
    return C * (1.0 + lam), GilbertWitness(y[:n, :n], y[n:, n:], 0.0)


def _start(a: np.ndarray, C: float) -> np.ndarray:
    n = a.shape[0]
    corner = a / C
    return np.block([[np.eye(n, dtype=a.dtype), corner], [corner.conj().T, np.eye(n, dtype=a.dtype)]])


def gilbert_feasible(a, C: float, tol: float = 1e-9, max_iter: int = 20000,
                     warm: tuple | None = None, stop_below: float | None = None) -> FeasibilityResult:
    """Test whether ``a / C`` admits a positive block completion.

    ``residual`` is the Frobenius distance of the current constraint-satisfying
    block from the PSD cone, which bounds its most negative eigenvalue.
    ``warm`` is the ``state`` of an earlier result to restart from.  When
    ``stop_below`` is given the run also ends, feasible, as soon as the
    certified upper bound drops below it.
    """
    a = _as_matrix(a)
    if not C > 0:
        raise SchurNormError("C must be positive")
    n = a.shape[0]
    corner = a / C
    if warm is not None:
        x = _project_box(warm[0], corner)
    else:
        x = _start(a, C)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    best_upper, best_upper_w = math.inf, None
    best_lower = 0.0
    history: list[float] = []
    residual = math.inf
    it = 0
    status = "indeterminate"
    while it < max_iter:
        it += 1
        y, _, _ = _psd_part(x + p)
        p = x + p - y
        x_new = _project_box(y + q, corner)
        q = y + q - x_new
        x = x_new
        if it % CHECK_EVERY and it != max_iter:
            continue
        xp, w, v = _psd_part(x)
        residual = float(np.linalg.norm(x - xp))
        up, up_w = _certified_upper(x, w, C)
        if up < best_upper:
            best_upper, best_upper_w = up, up_w
        if residual <= tol or (stop_below is not None and best_upper <= stop_below):
            status = "feasible"
            break
        history.append(residual)
        window = STALL_WINDOW // CHECK_EVERY
        if len(history) > window and residual > 10 * tol:
            old = history[-window - 1]
            if old - residual < STALL_IMPROVEMENT * old:
                for cand in _dual_candidates(a, x, w, v):
                    best_lower = max(best_lower, lower_bound_from(a, cand))
                status = "infeasible"
                break
    else:
        if residual > 10 * tol:
            status = "infeasible" if _stalled(history) else "indeterminate"

    xp, w, v = _psd_part(x)
    residual = float(np.linalg.norm(x - xp))
    witness = GilbertWitness(x[:n, :n].copy(), x[n:, n:].copy(), residual)
    if status != "infeasible":
        for cand in _dual_candidates(a, x, w, v):
            best_lower = max(best_lower, lower_bound_from(a, cand))
    return FeasibilityResult(status, C, residual, it, witness if status == "feasible" else None,
                             best_upper, best_lower, best_upper_w, (x,))


def _stalled(history: list[float]) -> bool:
    window = STALL_WINDOW // CHECK_EVERY
    if len(history) <= window:
        return False
    old = history[-window - 1]
    return old - history[-1] < STALL_IMPROVEMENT * old


def trace_norm_of(a: np.ndarray) -> float:
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


@dataclass(frozen=True)
class DualBounds:
    """Two-sided certificate from weighted trace norms.

    For unit vectors ``xi``, ``eta`` the trace norm of ``diag(xi) a diag(eta)``
    is a lower bound on the Schur norm.  Its singular value decomposition
    ``U S V*`` suggests factors ``p = U sqrt(S) / xi`` and
    ``q = V sqrt(S) / eta`` (row-wise); the block ``[[p p*, a], [a*, q q*]]``
    with the exact corner, shifted by its most negative eigenvalue, gives a
    rigorous upper bound.  At a stationary point of the weights the two agree.
    Weights are floored so that rows which do not matter at the optimum do not
    amplify rounding errors.
    """

    lower: float
    upper: float
    witness: GilbertWitness
    iterations: int


WEIGHT_FLOOR = 1e-5


def _upper_from_weights(a, u, s, vh, xi, eta):
    root = np.sqrt(s)
    p = (u * root) / xi[:, None]
    q = (vh.conj().T * root) / eta[:, None]
    pn = np.sqrt(np.sum(np.abs(p) ** 2, axis=1)).max()
    qn = np.sqrt(np.sum(np.abs(q) ** 2, axis=1)).max()
    r = math.sqrt(qn / pn)
    p, q = p * r, q / r
    gp, gq = gram_of(p), gram_of(q)
    block = np.block([[gp, a], [a.conj().T, gq]])
    lam = max(0.0, -float(np.linalg.eigvalsh(block)[0]))
    # eigensolver backward error on the shifted block
    lam += 8 * np.finfo(float).eps * block.shape[0] * max(float(pn * qn), float(np.abs(a).max()))
    upper = float(pn * qn) + lam
    n = a.shape[0]
    eye = np.eye(n)
    return upper, GilbertWitness((gp + lam * eye) / upper, (gq + lam * eye) / upper, 0.0)


def dual_bounds(a, tol: float = 1e-9, max_iter: int = 5000) -> DualBounds:
    a = _as_matrix(a)
    n = a.shape[0]
    xi = np.full(n, 1 / math.sqrt(n))
    eta = xi.copy()
    lo, hi, witness = 0.0, math.inf, None
    it = 0
    for it in range(1, max_iter + 1):
        m = xi[:, None] * a * eta[None, :]
        u, s, vh = np.linalg.svd(m)
        total = float(s.sum())
        if total == 0.0:
            z = np.zeros_like(a)
            return DualBounds(0.0, 0.0, GilbertWitness(z, z, 0.0), it)
        lo = max(lo, total)
        if it == 1 or it % CHECK_EVERY == 0 or it == max_iter:
            up, w = _upper_from_weights(a, u, s, vh, xi, eta)
            if up < hi:
                hi, witness = up, w
            if hi - lo <= tol:
                break
        diag_p = np.sum(np.abs(u) ** 2 * s, axis=1)
        diag_q = np.sum(np.abs(vh.conj().T) ** 2 * s, axis=1)
        xi = np.maximum(np.sqrt(diag_p / total), WEIGHT_FLOOR)
        eta = np.maximum(np.sqrt(diag_q / total), WEIGHT_FLOOR)
        xi /= np.linalg.norm(xi)
        eta /= np.linalg.norm(eta)
    return DualBounds(lo, hi, witness, it)


def initial_bracket(a: np.ndarray):
    """Certified ``(lower, upper, upper_witness)`` from cheap constructions."""
    lo = float(np.max(np.abs(a)))
    hi = trace_norm_of(a)
    witness = None
    if np.allclose(a, a.conj().T, rtol=0, atol=1e-14 * max(lo, 1e-300)):
        ev = np.linalg.eigvalsh(a)
        d = float(np.max(np.real(np.diag(a))))
        if ev[0] >= 0 and 0 < d <= hi:
            hi, witness = d, GilbertWitness(a / d, a / d, 0.0)
    return lo, hi, witness


def _witness_from_factors(p: np.ndarray, q: np.ndarray, C: float) -> GilbertWitness:
    return GilbertWitness(gram_of(p) / C, gram_of(q) / C, 0.0)


def schur_norm(a, tol: float = 1e-6, max_iter: int = 20000, eig_tol: float | None = None) -> NormCertificate:
    """Schur norm by certified bracketing and bisection.

    The bracket starts from the entry bound, the trace norm and the
    weighted-trace-norm certificate of :func:`dual_bounds`.  If it is still
    wider than ``2 * tol``, bisection with :func:`gilbert_feasible` narrows it.
    The returned ``value`` is the bracket midpoint, so feasibility holds at
    ``value + tol`` and fails at ``value - tol``.  ``certified_lower`` and
    ``certified_upper`` hold the rigorous part of the bracket; the rest comes
    from stall-detected infeasibility.
    """
    a = _as_matrix(a)
    lo, hi, up_w = initial_bracket(a)
    if hi == 0.0:
        z = np.zeros_like(a)
        return NormCertificate(0.0, 0.0, 0.0, 0.0, 0.0, 0, tol, witness=GilbertWitness(z, z, 0.0))
    iterations = 0
    steps = ["initial-bracket"]
    if hi - lo > 2 * tol:
        steps.append("dual-bracket")
        db = dual_bounds(a, tol=tol, max_iter=max_iter)
        iterations += db.iterations
        lo = max(lo, db.lower)
        if db.upper < hi:
            hi, up_w = db.upper, db.witness
    if up_w is None:
        _, _, up_w = _svd_witness(a)
    cert_lo, cert_hi = lo, hi
    if hi - lo > 2 * tol:
        steps.append("gilbert-bisection")
    state = None
    while hi - lo > 2 * tol:
        C = 0.5 * (lo + hi)
        etol = eig_tol if eig_tol is not None else 0.25 * tol / C
        res = None
        for budget in (max_iter, 4 * max_iter):
            res = gilbert_feasible(a, C, etol, budget, warm=state, stop_below=C + 0.5 * tol)
            iterations += res.iterations
            if res.status != "indeterminate":
                break
        assert res is not None
        if res.certified_upper < cert_hi:
            cert_hi, up_w = res.certified_upper, res.upper_witness
        cert_lo = max(cert_lo, res.certified_lower)
        if res.status == "indeterminate":
            raise SchurNormError(
                f"feasibility undecided at C={C:.9g} after {4 * max_iter} iterations "
                f"(residual {res.residual:.3e}, bracket [{lo:.9g}, {hi:.9g}])")
        if res.status == "feasible":
            state = res.state
        else:
            lo = C
        hi = min(hi, cert_hi)
        lo = max(lo, cert_lo)
        if lo > hi:
            # a heuristic infeasible verdict contradicts a certified upper bound
            lo = cert_lo
    value = 0.5 * (lo + hi)
    return NormCertificate(value, lo, hi, cert_lo, cert_hi, iterations, tol, "+".join(steps), witness=up_w)


def _svd_witness(a: np.ndarray):
    u, s, vh = np.linalg.svd(a)
    p = u * np.sqrt(s)
    q = vh.conj().T * np.sqrt(s)
    pn, qn = np.linalg.norm(p, axis=1).max(), np.linalg.norm(q, axis=1).max()
    r = math.sqrt(qn / pn)
    C = float(pn * qn)
    return C, C, _witness_from_factors(p * r, q / r, C)


@dataclass(frozen=True)
class Factorization:
    p: np.ndarray
    q: np.ndarray
    reconstruction_error: float
    max_norm: float


def factorization_witness(a, C: float, tol: float = 1e-9, max_iter: int = 20000) -> Factorization:
    """Vectors ``p[i]``, ``q[j]`` with ``<p[i], q[j]> = a[i, j]`` and norms near ``sqrt(C)``."""
    a = _as_matrix(a)
    n = a.shape[0]
    db = dual_bounds(a, tol=tol)
    if db.upper <= C * (1 + tol):
        m, C = db.witness.block(a, db.upper), db.upper
    else:
        res = gilbert_feasible(a, C, tol, max_iter)
        if not res.feasible:
            raise SchurNormError(f"no positive completion at C={C} ({res.status}, residual {res.residual:.3e})")
        m = res.witness.block(a, C)
    lam = max(0.0, -float(np.linalg.eigvalsh(m)[0]))
    m = m + lam * np.eye(2 * n)
    rows = gram_factorize(Kernel(m, hermitian=True), tol) * math.sqrt(C)
    p, q = rows[:n], rows[n:]
    # <p_i, q_j> = sum_k p_ik conj(q_jk)
    err = float(np.max(np.abs(p @ q.conj().T - a)))
    norms = np.sqrt(np.sum(np.abs(rows) ** 2, axis=1))
    return Factorization(p, q, err, float(norms.max()))


def restricted_norm(k, subset, tol: float = 1e-6) -> NormCertificate:
    """Schur norm of the principal submatrix on ``subset``."""
    idx = list(subset)
    if not idx:
        raise SchurNormError("subset must be nonempty")
    a = _as_matrix(k)
    return schur_norm(a[np.ix_(idx, idx)], tol)

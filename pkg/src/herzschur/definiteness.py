"""Positive definite and conditionally negative definite kernels on finite sections."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack

from .kernel_core import AnyKernel, HankelKernel, Kernel, KernelError, exp_scale, section, shift_sigma

DEFAULT_RTOL = 1e-9


class DefinitenessError(ValueError):
    pass


@dataclass(frozen=True)
class DefinitenessReport:
    """Outcome of an eigenvalue test.

    ``extremal_eigenvalue`` is the smallest eigenvalue for PD tests and the
    largest eigenvalue of the compressed matrix for CND tests.  When the
    verdict is negative, ``witness_vector`` holds coefficients whose quadratic
    form violates the inequality by more than the tolerance, and
    ``failing_size`` is the smallest leading section that already fails.
    """

    verdict: bool
    extremal_eigenvalue: float
    tolerance_used: float
    witness_vector: np.ndarray | None = None
    witness_value: float | None = None
    truncation: int = 0
    failing_size: int | None = None

    def __bool__(self):
        return self.verdict

    def to_json(self) -> dict:
        w = self.witness_vector
        if w is not None:
            w = [[z.real, z.imag] for z in w.tolist()] if np.iscomplexobj(w) else w.tolist()
        return {"verdict": self.verdict, "extremal_eigenvalue": self.extremal_eigenvalue,
                "tolerance_used": self.tolerance_used, "witness_vector": w,
                "witness_value": self.witness_value, "truncation": self.truncation,
                "failing_size": self.failing_size}


def default_tol(a: np.ndarray) -> float:
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    return DEFAULT_RTOL * (scale if scale > 0 else 1.0)


def _hermitian_matrix(k) -> np.ndarray:
    if isinstance(k, HankelKernel):
        raise DefinitenessError("pass a finite section, not a Hankel kernel")
    kk = k if isinstance(k, Kernel) else Kernel(np.asarray(k))
    if not kk.hermitian:
        raise DefinitenessError("kernel is not hermitian")
    return kk.entries


def _first_failing_leading_section(a: np.ndarray, tol: float) -> int | None:
    """Order of the first leading minor of ``a + tol*I`` that is not positive."""
    shifted = a + tol * np.eye(a.shape[0])
    potrf = lapack.zpotrf if np.iscomplexobj(a) else lapack.dpotrf
    _, info = potrf(shifted, lower=True)
    return int(info) if info > 0 else None


def is_positive_definite(k, tol: float | None = None) -> DefinitenessReport:
    """Smallest eigenvalue test: PD iff ``lambda_min >= -tol``."""
    a = _hermitian_matrix(k)
    tol = default_tol(a) if tol is None else float(tol)
    w, v = np.linalg.eigh(a)
    lam = float(w[0])
    if lam >= -tol:
        return DefinitenessReport(True, lam, tol, truncation=a.shape[0])
    vec = v[:, 0]
    val = float(np.real(vec.conj() @ a @ vec))
    return DefinitenessReport(False, lam, tol, vec, val, a.shape[0],
                              _first_failing_leading_section(a, tol))


def compress(a: np.ndarray) -> np.ndarray:
    """``B(i,j) = k(i,j) - k(i,0) - k(0,j) + k(0,0)`` on indices 1..N-1."""
    return a[1:, 1:] - a[1:, :1] - a[:1, 1:] + a[0, 0]


def is_cond_negative_definite(k, tol: float | None = None) -> DefinitenessReport:
    """CND iff the compression at base point 0 is negative semidefinite."""
    a = _hermitian_matrix(k)
    tol = default_tol(a) if tol is None else float(tol)
    n = a.shape[0]
    if n == 1:
        return DefinitenessReport(True, 0.0, tol, truncation=1)
    b = compress(a)
    w, v = np.linalg.eigh(b)
    lam = float(w[-1])
    if lam <= tol:
        return DefinitenessReport(True, lam, tol, truncation=n)
    tail = v[:, -1]
    c = np.concatenate([[-tail.sum()], tail])
    val = float(np.real(c.conj() @ a @ c))
    failing = _first_failing_leading_section(-b, tol)
    return DefinitenessReport(False, lam, tol, c, val, n, None if failing is None else failing + 1)


def gram_factorize(k, tol: float | None = None) -> np.ndarray:
    """Rows ``a[i]`` with ``<a[i], a[j]> = k(i, j)`` (inner product conjugate-linear in the second slot).

    Eigenvalues in ``[-tol, tol]`` are dropped; anything below ``-tol`` is an error.
    """
    a = _hermitian_matrix(k)
    tol = default_tol(a) if tol is None else float(tol)
    w, v = np.linalg.eigh(a)
    if w[0] < -tol:
        raise DefinitenessError(f"not positive definite: eigenvalue {w[0]:.3e} < -{tol:.1e}")
    keep = w > tol
    if not keep.any():
        return np.zeros((a.shape[0], 1), dtype=a.dtype)
    return v[:, keep] * np.sqrt(w[keep])


def gram_of(rows: np.ndarray) -> np.ndarray:
    return rows @ rows.conj().T


def cnd_embed(k, tol: float | None = None) -> np.ndarray:
    """Rows ``a[i]`` with ``|a[i] - a[j]|^2 = k(i, j)`` and ``a[0] = 0``."""
    a = _hermitian_matrix(k)
    if np.iscomplexobj(a):
        raise DefinitenessError("embedding needs a real kernel")
    tol = default_tol(a) if tol is None else float(tol)
    if np.max(np.abs(np.diag(a))) > tol:
        raise DefinitenessError("embedding needs a zero diagonal")
    n = a.shape[0]
    if n == 1:
        return np.zeros((1, 1))
    # -B/2 is the Gram matrix of a[i] - a[0]
    rows = gram_factorize(-0.5 * compress(a), tol)
    return np.vstack([np.zeros((1, rows.shape[1])), rows])


def distances_of(rows: np.ndarray) -> np.ndarray:
    g = gram_of(rows).real
    d = np.diag(g)
    return d[:, None] + d[None, :] - 2 * g


@dataclass(frozen=True)
class SchoenbergReport:
    t_grid: tuple[float, ...]
    pd_per_t: tuple[bool, ...]
    reports: tuple[DefinitenessReport, ...]
    cnd: DefinitenessReport

    @property
    def all_pd(self) -> bool:
        return all(self.pd_per_t)

    @property
    def consistent(self) -> bool:
        """CND verdict agrees with "PD for every tested t"."""
        return self.cnd.verdict == self.all_pd

    def to_json(self) -> dict:
        return {"t_grid": list(self.t_grid), "pd_per_t": list(self.pd_per_t),
                "cnd": self.cnd.to_json(), "all_pd": self.all_pd}


def schoenberg_check(k, t_grid, tol: float | None = None) -> SchoenbergReport:
    """Test ``exp(-t k)`` for positive definiteness at each grid point."""
    kk = Kernel(_hermitian_matrix(k))
    reports = tuple(is_positive_definite(exp_scale(kk, t), tol) for t in t_grid)
    return SchoenbergReport(tuple(float(t) for t in t_grid), tuple(r.verdict for r in reports),
                            reports, is_cond_negative_definite(kk, tol))


@dataclass(frozen=True)
class EtaReport:
    """Vectors with ``<eta[m], eta[n]> = psi(m+1, n+1) - psi(m, n)``."""

    eta: np.ndarray
    increments: np.ndarray = field(repr=False)
    partial_sums: np.ndarray = field(repr=False)
    reconstruction_error: float = 0.0


def cnd_eta_vectors(psi: AnyKernel, n: int | None = None, tol: float | None = None) -> EtaReport:
    """Factorize the diagonal increment of ``psi`` and track ``sum |eta_k - eta_(k+1)|^2``."""
    if isinstance(psi, HankelKernel):
        if n is None:
            raise KernelError("a truncation size is needed for Hankel kernels")
        diff = section(shift_sigma(psi), n).entries - section(psi, n).entries
    else:
        a = section(psi, n).entries
        diff = a[1:, 1:] - a[:-1, :-1]
    diff = Kernel(diff)
    rep = is_positive_definite(diff, tol)
    if not rep.verdict:
        raise DefinitenessError(
            f"diagonal increment is not positive definite (eigenvalue {rep.extremal_eigenvalue:.3e})")
    eta = gram_factorize(diff, rep.tolerance_used)
    steps = np.sum(np.abs(eta[:-1] - eta[1:]) ** 2, axis=1)
    err = float(np.max(np.abs(gram_of(eta) - diff.entries)))
    return EtaReport(eta, steps, np.cumsum(steps), err)

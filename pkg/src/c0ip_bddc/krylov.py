"""Conjugate gradients, SPD factorizations and extreme eigenvalues."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import InvalidParameterError, NotSPDError, SymmetryError

Operator = Callable[[np.ndarray], np.ndarray]


@dataclass
class SolveReport:
    iterations: int = 0
    residual_history: list[float] = field(default_factory=list)
    converged: bool = False
    lambda_min: float | None = None
    lambda_max: float | None = None
    kappa: float | None = None
    wall_time: float = 0.0


class SPDFactor:
    """Dense Cholesky factorization reused across right-hand sides."""

    def __init__(self, A):
        A = A.toarray() if sp.issparse(A) else np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvalidParameterError("factor_spd needs a square matrix")
        self.n = A.shape[0]
        if self.n == 0:
            self._cho = None
            return
        try:
            self._cho = sla.cho_factor(A, lower=True, check_finite=True)
        except np.linalg.LinAlgError as exc:
            raise NotSPDError(f"non-positive pivot in Cholesky factorization: {exc}") from None

    def solve(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.n == 0:
            return np.zeros_like(r)
        return sla.cho_solve(self._cho, r, check_finite=False)

    __call__ = solve


def factor_spd(A) -> SPDFactor:
    return SPDFactor(A)


def pcg(apply_A: Operator, apply_B: Operator | None, b: np.ndarray, tol: float = 1e-6,
        max_iter: int = 10_000, x0: np.ndarray | None = None) -> tuple[np.ndarray, SolveReport]:
    """Preconditioned CG stopped on the unpreconditioned relative residual.

    Exceeding ``max_iter`` is reported through ``report.converged``; a
    non-positive curvature ``p.A p`` or ``r.B r`` raises :class:`NotSPDError`.
    """
    if not 0 < tol < 1:
        raise InvalidParameterError(f"tol must lie in (0, 1), got {tol}")
    b = np.asarray(b, dtype=float)
    norm_b = np.linalg.norm(b)
    if norm_b == 0:
        raise InvalidParameterError("right-hand side must be nonzero")
    precond = apply_B if apply_B is not None else (lambda r: r)

    t0 = time.perf_counter()
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - apply_A(x) if x0 is not None else b.copy()
    report = SolveReport(residual_history=[np.linalg.norm(r) / norm_b])
    if report.residual_history[-1] <= tol:
        report.converged = True
        report.wall_time = time.perf_counter() - t0
        return x, report

    z = precond(r)
    rz = r @ z
    if rz <= 0:
        raise NotSPDError("preconditioner is not positive definite")
    p = z.copy()
    for it in range(1, max_iter + 1):
        Ap = apply_A(p)
        pAp = p @ Ap
        if pAp <= 0:
            raise NotSPDError(f"p.A p = {pAp:.3e} <= 0 at iteration {it}")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        rel = np.linalg.norm(r) / norm_b
        report.residual_history.append(rel)
        report.iterations = it
        if rel <= tol:
            report.converged = True
            break
        z = precond(r)
        rz_new = r @ z
        if rz_new <= 0:
            raise NotSPDError("preconditioner is not positive definite")
        p = z + (rz_new / rz) * p
        rz = rz_new
    report.wall_time = time.perf_counter() - t0
    return x, report


def dense_operator(apply: Operator | np.ndarray | sp.spmatrix, dim: int) -> np.ndarray:
    if sp.issparse(apply):
        return apply.toarray()
    if isinstance(apply, np.ndarray):
        return apply
    return np.asarray(apply(np.eye(dim)))


def _relative_asymmetry(M: np.ndarray) -> float:
    scale = np.abs(M).max()
    return 0.0 if scale == 0 else np.abs(M - M.T).max() / scale


def spectrum(apply_M, apply_S, dim: int) -> np.ndarray:
    """All eigenvalues of ``M S`` for SPD ``M`` and ``S``, ascending.

    Uses ``S = L L^T`` and the similar symmetric matrix ``L^T M L``.
    """
    M = dense_operator(apply_M, dim)
    S = dense_operator(apply_S, dim)
    if max(_relative_asymmetry(M), _relative_asymmetry(S)) > 1e-10:
        ev = np.linalg.eigvals(M @ S)
        raise SymmetryError(
            f"operators are not symmetric; max |Im lambda| = {np.abs(ev.imag).max():.2e}"
        )
    M = (M + M.T) / 2
    S = (S + S.T) / 2
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise NotSPDError("second operator is not positive definite") from None
    ev = sla.eigvalsh(L.T @ M @ L)
    if ev[0] < -1e-10 * abs(ev[-1]):
        raise SymmetryError(f"negative eigenvalue {ev[0]:.3e}")
    return ev


def lanczos_extremes(apply_M: Operator, apply_S: Operator, dim: int,
                     steps: int | None = None, seed: int = 0) -> tuple[float, float]:
    """Extreme eigenvalues of ``M S`` by Lanczos in the S-inner product."""
    k = min(dim, steps or 300)
    rng = np.random.default_rng(seed)
    Q = np.zeros((dim, k + 1))
    SQ = np.zeros((dim, k + 1))
    alpha = np.zeros(k)
    beta = np.zeros(k)
    q = rng.standard_normal(dim)
    Sq = apply_S(q)
    nrm = np.sqrt(q @ Sq)
    Q[:, 0], SQ[:, 0] = q / nrm, Sq / nrm
    used = k
    for i in range(k):
        w = apply_M(SQ[:, i])
        alpha[i] = w @ SQ[:, i]
        # full reorthogonalization (twice) in the S-inner product
        for _ in range(2):
            w -= Q[:, : i + 1] @ (SQ[:, : i + 1].T @ w)
        Sw = apply_S(w)
        b = np.sqrt(max(w @ Sw, 0.0))
        if i + 1 == k or b <= 1e-12 * abs(alpha[: i + 1]).max():
            used = i + 1
            break
        beta[i] = b
        Q[:, i + 1], SQ[:, i + 1] = w / b, Sw / b
    T = np.diag(alpha[:used]) + np.diag(beta[: used - 1], 1) + np.diag(beta[: used - 1], -1)
    ritz = np.linalg.eigvalsh(T)
    return float(ritz[0]), float(ritz[-1])


def extreme_eigs(apply_M, apply_S, dim: int, method: str = "dense",
                 steps: int | None = None) -> tuple[float, float, float]:
    """``(lambda_min, lambda_max, kappa)`` of ``M S``, with ``kappa = max/min``."""
    if method == "dense":
        ev = spectrum(apply_M, apply_S, dim)
        lmin, lmax = float(ev[0]), float(ev[-1])
    elif method == "lanczos":
        M = apply_M if callable(apply_M) else (lambda v, A=apply_M: A @ v)
        S = apply_S if callable(apply_S) else (lambda v, A=apply_S: A @ v)
        lmin, lmax = lanczos_extremes(M, S, dim, steps)
    else:
        raise InvalidParameterError(f"unknown eigenvalue method {method!r}")
    if lmin <= 0:
        raise SymmetryError(f"non-positive eigenvalue {lmin:.3e}")
    return lmin, lmax, lmax / lmin

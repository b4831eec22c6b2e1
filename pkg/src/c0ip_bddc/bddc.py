"""BDDC preconditioner for the interface Schur complement, and the full
three-part preconditioner for A_h.

Broken interface space layout: the coordinates of H_C are the per-subdomain
copies of every non-corner interface coordinate (subdomain 0 first), followed
by one shared copy of every cross-point coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .assembly import assemble_standard, subdomain_edges
from .errors import ConstructionError
from .krylov import SPDFactor, factor_spd
from .splitting import SplitOperators, SubspaceSplit


@dataclass
class LocalProblem:
    """Subdomain data in local V_C coordinates."""

    j: int
    c_pos: np.ndarray  # positions within V_C
    K: np.ndarray  # a_{h,j} on those coordinates
    gamma: np.ndarray  # global interface positions of the local interface coordinates
    S_full: np.ndarray  # Schur complement onto the local interface
    delta: np.ndarray  # indices into ``gamma`` of non-corner coordinates
    pi: np.ndarray  # indices into ``gamma`` of corner coordinates


def local_c_coordinates(split: SubspaceSplit, j: int) -> np.ndarray:
    p, q = split.space.dec.subdomain_ij(j)
    c = split.c_idx
    return np.array([
        pos for pos, i in enumerate(c) if p in split.sub_x[i] and q in split.sub_y[i]
    ], dtype=int)


def build_local_problem(split: SubspaceSplit, j: int, eta: float = 5.0) -> LocalProblem:
    space = split.space
    c_pos = local_c_coordinates(split, j)
    A_std = assemble_standard(space.mesh, eta, space.dec.elements_of(j), subdomain_edges(space, j))
    T = split.basis_c[:, c_pos]
    K = (T.T @ A_std @ T).toarray()
    K = (K + K.T) / 2

    gamma_of_c = np.full(split.dim_c, -1)
    gamma_of_c[split.c_gamma] = np.arange(split.n_gamma)
    g_local = gamma_of_c[c_pos]
    is_if = g_local >= 0
    I, G = np.flatnonzero(~is_if), np.flatnonzero(is_if)
    try:
        fac = factor_spd(K[np.ix_(I, I)])
    except Exception as exc:
        raise ConstructionError(f"local interior block of subdomain {j} is singular: {exc}") from None
    S = K[np.ix_(G, G)] - K[np.ix_(G, I)] @ fac.solve(K[np.ix_(I, G)])
    S = (S + S.T) / 2
    gamma = g_local[G]
    cross = split.is_cross[gamma]
    return LocalProblem(j, c_pos, K, gamma, S, np.flatnonzero(~cross), np.flatnonzero(cross))


class BDDCPreconditioner:
    """``B = (P I_0) S_0^{-1} (P I_0)^t + sum_j (P E_j) S_j^{-1} (P E_j)^t``."""

    def __init__(self, split: SubspaceSplit, eta: float = 5.0):
        self.split = split
        self.eta = eta
        n_g = split.n_gamma
        self.locals = [build_local_problem(split, j, eta) for j in range(split.space.dec.J)]
        self.weights = 1.0 / split.multiplicity  # arithmetic averaging

        self.pi_global = np.flatnonzero(split.is_cross)
        pi_pos = np.full(n_g, -1)
        pi_pos[self.pi_global] = np.arange(self.pi_global.size)
        self.pi_pos = pi_pos
        n_pi = self.pi_global.size

        self.local_factors: list[SPDFactor] = []
        self.coarse_ext: list[np.ndarray] = []
        S0 = np.zeros((n_pi, n_pi))
        Psi = np.zeros((n_g, n_pi))
        Psi[self.pi_global, np.arange(n_pi)] = 1.0
        for lp in self.locals:
            S = lp.S_full
            d, p = lp.delta, lp.pi
            try:
                fac = factor_spd(S[np.ix_(d, d)])
            except Exception as exc:
                raise ConstructionError(f"S_j of subdomain {lp.j} is not SPD: {exc}") from None
            self.local_factors.append(fac)
            phi = -fac.solve(S[np.ix_(d, p)]) if d.size else np.zeros((0, p.size))
            self.coarse_ext.append(phi)
            cols = pi_pos[lp.gamma[p]]
            S0[np.ix_(cols, cols)] += S[np.ix_(p, p)] + S[np.ix_(p, d)] @ phi
            rows = lp.gamma[d]
            Psi[np.ix_(rows, cols)] += self.weights[rows][:, None] * phi
        self.S0 = (S0 + S0.T) / 2
        self.coarse_factor = factor_spd(self.S0) if n_pi else None
        self.Psi = Psi

        offsets = np.cumsum([0] + [lp.delta.size for lp in self.locals])
        self.broken_offsets = offsets
        self.n_broken = offsets[-1] + n_pi

    @property
    def n_gamma(self) -> int:
        return self.split.n_gamma

    @property
    def dim_coarse(self) -> int:
        return self.pi_global.size

    # -- broken space H_C ---------------------------------------------------

    def inject(self, g: np.ndarray) -> np.ndarray:
        """Copy interface coordinates into the broken space."""
        g = np.asarray(g, dtype=float)
        out = np.zeros((self.n_broken,) + g.shape[1:])
        for lp, lo in zip(self.locals, self.broken_offsets):
            out[lo:lo + lp.delta.size] = g[lp.gamma[lp.delta]]
        out[self.broken_offsets[-1]:] = g[self.pi_global]
        return out

    def project_gamma(self, v: np.ndarray) -> np.ndarray:
        """Average duplicated copies; corner coordinates pass through."""
        v = np.asarray(v, dtype=float)
        out = np.zeros((self.n_gamma,) + v.shape[1:])
        w = self.weights
        for lp, lo in zip(self.locals, self.broken_offsets):
            rows = lp.gamma[lp.delta]
            np.add.at(out, rows, _scale(w[rows], v[lo:lo + lp.delta.size]))
        out[self.pi_global] = v[self.broken_offsets[-1]:]
        return out

    def coarse_basis(self) -> np.ndarray:
        """Coarse basis functions as columns in broken coordinates."""
        n_pi = self.dim_coarse
        out = np.zeros((self.n_broken, n_pi))
        for lp, lo, phi in zip(self.locals, self.broken_offsets, self.coarse_ext):
            cols = self.pi_pos[lp.gamma[lp.pi]]
            out[lo:lo + lp.delta.size, cols] = phi
        out[self.broken_offsets[-1]:] = np.eye(n_pi)
        return out

    def broken_energy_matrix(self) -> np.ndarray:
        """Matrix of ``a_h^C`` on broken interface coordinates (harmonic extensions)."""
        A = np.zeros((self.n_broken, self.n_broken))
        pi_off = self.broken_offsets[-1]
        for lp, lo in zip(self.locals, self.broken_offsets):
            idx = np.empty(lp.gamma.size, dtype=int)
            idx[lp.delta] = lo + np.arange(lp.delta.size)
            idx[lp.pi] = pi_off + self.pi_pos[lp.gamma[lp.pi]]
            A[np.ix_(idx, idx)] += lp.S_full
        return A

    # -- operator -----------------------------------------------------------

    def apply(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        z = np.zeros_like(r)
        if self.coarse_factor is not None:
            z += self.Psi @ self.coarse_factor.solve(self.Psi.T @ r)
        w = self.weights
        for lp, fac in zip(self.locals, self.local_factors):
            if not lp.delta.size:
                continue
            rows = lp.gamma[lp.delta]
            local = fac.solve(_scale(w[rows], r[rows]))
            np.add.at(z, rows, _scale(w[rows], local))
        return z

    __call__ = apply

    def schur_from_subdomains(self) -> np.ndarray:
        """``S_h = sum_j R_j^T S_j^full R_j``; needs no global matrix."""
        S = np.zeros((self.n_gamma, self.n_gamma))
        for lp in self.locals:
            S[np.ix_(lp.gamma, lp.gamma)] += lp.S_full
        return (S + S.T) / 2

    @cached_property
    def matrix(self) -> np.ndarray:
        B = self.apply(np.eye(self.n_gamma))
        return (B + B.T) / 2


def _scale(w: np.ndarray, v: np.ndarray) -> np.ndarray:
    return w.reshape((-1,) + (1,) * (v.ndim - 1)) * v


class FullPreconditioner:
    """Additive preconditioner for A_h over V_D, V_C(interior) and V_C(Gamma).

    Works on residuals in modified coordinates.  The interface part injects
    discrete biharmonic functions, i.e. the extension of the BDDC output.
    """

    def __init__(self, ops: SplitOperators, bddc: BDDCPreconditioner):
        self.ops = ops
        self.bddc = bddc
        self.split = ops.split

    def apply_split(self, r: np.ndarray) -> np.ndarray:
        """Same operator acting on residuals in split coordinates."""
        s, ops = self.split, self.ops
        r = np.asarray(r, dtype=float)
        z = np.zeros_like(r)
        z[s.d_idx] = ops.factor_D.solve(r[s.d_idx])
        r_c = r[s.c_idx]
        r_i, r_g = r_c[s.c_interior], r_c[s.c_gamma]
        z_i = ops.solve_interior(r_i)
        g = self.bddc.apply(r_g - ops.A_IG.T @ z_i)
        z_c = np.zeros_like(r_c)
        z_c[s.c_gamma] = g
        z_c[s.c_interior] = z_i + ops.extension_interior(g)
        z[s.c_idx] = z_c
        return z

    def apply(self, r: np.ndarray) -> np.ndarray:
        Q = self.split.Q
        return Q @ self.apply_split(Q.T @ r)

    __call__ = apply


def build_preconditioners(split: SubspaceSplit, eta: float = 5.0,
                          A: sp.spmatrix | None = None):
    ops = SplitOperators(split, A, eta)
    bddc = BDDCPreconditioner(split, eta)
    return ops, bddc, FullPreconditioner(ops, bddc)

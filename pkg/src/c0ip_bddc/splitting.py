"""Subspace splitting V_h = V_C + V_D and the interface (Schur) reduction.

At every interior skeleton point the 1D pair of one-sided derivatives is
replaced by its average ``A = (d- + d+)/2`` and jump ``J = d+ - d-``.  A 2D
split coordinate is a pair of 1D coordinate types:

    R  nodal value strictly inside a subdomain interval
    G  nodal value on a skeleton line
    A  average one-sided derivative on a skeleton line
    J  derivative jump on a skeleton line
    B  inward derivative on the domain boundary

``V_C`` is spanned by pairs drawn from {R, G, A}; every pair touching J or B
spans ``V_D``.  Inside ``V_C`` the pair (R, R) is subdomain-interior and the
remaining pairs carry the interface.
"""

from __future__ import annotations

from enum import IntEnum
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .assembly import assemble_global
from .errors import ConstructionError
from .krylov import SPDFactor, factor_spd
from .modified_q2 import Kind1D, Line, ModifiedQ2Space


class SplitType(IntEnum):
    R = 0
    G = 1
    A = 2
    J = 3
    B = 4
    END = 5  # boundary nodal value, removed by the essential condition


def line_types(line: Line) -> np.ndarray:
    special = set(line.special)
    out = np.empty(line.size, dtype=np.int8)
    for i, (a, k) in enumerate(zip(line.anchor, line.kind)):
        if k == Kind1D.VALUE:
            if a in (0, 2 * line.n):
                out[i] = SplitType.END
            else:
                out[i] = SplitType.G if a in special else SplitType.R
        elif a in special:
            out[i] = SplitType.A if k == Kind1D.DERIV_MINUS else SplitType.J
        else:
            out[i] = SplitType.B
    return out


def line_split_matrices(line: Line) -> tuple[np.ndarray, np.ndarray]:
    """``(Q, Qinv)``: split -> one-sided coordinates and back, in 1D.

    The average takes the slot of ``d-`` and the jump the slot of ``d+``.
    """
    Q = np.eye(line.size)
    Qinv = np.eye(line.size)
    special = set(line.special)
    idx = {(a, k): i for i, (a, k) in enumerate(zip(line.anchor, line.kind))}
    for s in special:
        im, ip = idx[(s, Kind1D.DERIV_MINUS)], idx[(s, Kind1D.DERIV_PLUS)]
        # d- = A - J/2, d+ = A + J/2
        Q[np.ix_([im, ip], [im, ip])] = [[1.0, -0.5], [1.0, 0.5]]
        # A = (d- + d+)/2, J = d+ - d-
        Qinv[np.ix_([im, ip], [im, ip])] = [[0.5, 0.5], [-1.0, 1.0]]
    return Q, Qinv


def line_intervals(line: Line, k: int, m: int) -> list[tuple[int, ...]]:
    """Subdomain intervals whose closure carries the support of each 1D coordinate."""
    out = []
    width = 2 * k
    for a, kind in zip(line.anchor, line.kind):
        if a % width == 0:
            t = a // width
            out.append(tuple(i for i in (t - 1, t) if 0 <= i < m))
        else:
            out.append((a // width,))
    return out


class SubspaceSplit:
    """Coordinates of V_C and V_D and the maps to modified coordinates."""

    def __init__(self, space: ModifiedQ2Space):
        self.space = space
        dofs = space.dofs
        free = dofs.free
        fx, fy = dofs.fx[free], dofs.fy[free]
        tx_line, ty_line = line_types(space.line_x), line_types(space.line_y)
        self.tx = tx_line[fx]
        self.ty = ty_line[fy]

        nx = space.line_x.size
        kron_idx = dofs.fy * nx + dofs.fx
        cols = kron_idx[free]
        Qx, Qxi = line_split_matrices(space.line_x)
        Qy, Qyi = line_split_matrices(space.line_y)
        self.Q = sp.kron(sp.csr_matrix(Qy), sp.csr_matrix(Qx), format="csr")[cols][:, cols].tocsr()
        self.Qinv = sp.kron(sp.csr_matrix(Qyi), sp.csr_matrix(Qxi), format="csr")[cols][:, cols].tocsr()

        cset = (SplitType.R, SplitType.G, SplitType.A)
        in_c = np.isin(self.tx, cset) & np.isin(self.ty, cset)
        self.c_idx = np.flatnonzero(in_c)
        self.d_idx = np.flatnonzero(~in_c)
        interior = (self.tx == SplitType.R) & (self.ty == SplitType.R)
        self.interior_idx = np.flatnonzero(interior)  # full split coordinates
        self.gamma_idx = np.flatnonzero(in_c & ~interior)
        pos = np.full(space.N, -1)
        pos[self.c_idx] = np.arange(self.c_idx.size)
        self.c_interior = pos[self.interior_idx]  # positions within V_C
        self.c_gamma = pos[self.gamma_idx]
        gam = (self.tx != SplitType.R) & (self.ty != SplitType.R)
        self.is_cross = gam[self.gamma_idx]  # interface coordinates at cross points

        dec = space.dec
        ix = line_intervals(space.line_x, dec.k, dec.m)
        iy = line_intervals(space.line_y, dec.k, dec.m)
        self.sub_x = [ix[i] for i in fx]
        self.sub_y = [iy[i] for i in fy]

    @property
    def N(self) -> int:
        return self.space.N

    @property
    def dim_c(self) -> int:
        return self.c_idx.size

    @property
    def dim_d(self) -> int:
        return self.d_idx.size

    @property
    def n_gamma(self) -> int:
        return self.gamma_idx.size

    def subdomains_of(self, i: int) -> list[int]:
        m = self.space.dec.m
        return [q * m + p for q in self.sub_y[i] for p in self.sub_x[i]]

    @cached_property
    def multiplicity(self) -> np.ndarray:
        """Number of subdomains sharing each interface coordinate."""
        return np.array([len(self.subdomains_of(i)) for i in self.gamma_idx])

    def to_split(self, v: np.ndarray) -> np.ndarray:
        return self.Qinv @ v

    def to_modified(self, w: np.ndarray) -> np.ndarray:
        return self.Q @ w

    def embed_c(self, vc: np.ndarray) -> np.ndarray:
        """V_C coordinates -> modified coordinates."""
        return self.Q[:, self.c_idx] @ vc

    def embed_d(self, vd: np.ndarray) -> np.ndarray:
        return self.Q[:, self.d_idx] @ vd

    def split_cd(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        w = self.to_split(v)
        return w[self.c_idx], w[self.d_idx]

    @cached_property
    def basis_c(self) -> sp.csr_matrix:
        """Standard nodal values of the V_C basis functions (columns)."""
        return (self.space.C @ self.Q[:, self.c_idx]).tocsr()


def split_cd(split: SubspaceSplit, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return split.split_cd(v)


class SplitOperators:
    """A_C, A_D, the interior solver and the Schur complement S_h."""

    def __init__(self, split: SubspaceSplit, A: sp.spmatrix | None = None, eta: float = 5.0):
        self.split = split
        self.A = assemble_global(split.space, eta) if A is None else sp.csr_matrix(A)
        Q = split.Q
        self.A_split = (Q.T @ self.A @ Q).tocsr()
        self.A_C = self.A_split[split.c_idx][:, split.c_idx].tocsr()
        self.A_D = self.A_split[split.d_idx][:, split.d_idx].tocsr()
        ci, cg = split.c_interior, split.c_gamma
        self.A_II = self.A_C[ci][:, ci].tocsr()
        self.A_IG = self.A_C[ci][:, cg].tocsr()
        self.A_GG = self.A_C[cg][:, cg].tocsr()

        # interior coordinates grouped by their (unique) subdomain
        m = split.space.dec.m
        owner = np.array([split.sub_y[i][0] * m + split.sub_x[i][0] for i in split.interior_idx])
        self.interior_owner = owner
        self.blocks: list[np.ndarray] = []
        self.block_factors: list[SPDFactor] = []
        for j in range(split.space.dec.J):
            idx = np.flatnonzero(owner == j)
            self.blocks.append(idx)
            try:
                self.block_factors.append(factor_spd(self.A_II[idx][:, idx]))
            except Exception as exc:
                raise ConstructionError(f"interior block of subdomain {j} is singular: {exc}") from None

    @cached_property
    def factor_D(self) -> SPDFactor:
        return factor_spd(self.A_D)

    def solve_interior(self, r: np.ndarray) -> np.ndarray:
        """Block-diagonal solve with ``A_{C, interior}``, one block per subdomain."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for idx, fac in zip(self.blocks, self.block_factors):
            if idx.size:
                out[idx] = fac.solve(r[idx])
        return out

    def extension_interior(self, g: np.ndarray) -> np.ndarray:
        return -self.solve_interior(self.A_IG @ g)

    def discrete_biharmonic_extension(self, g: np.ndarray) -> np.ndarray:
        """V_C coordinates of the discrete biharmonic function with interface data g."""
        g = np.asarray(g, dtype=float)
        v = np.zeros((self.split.dim_c,) + g.shape[1:])
        v[self.split.c_gamma] = g
        v[self.split.c_interior] = self.extension_interior(g)
        return v

    def apply_schur(self, g: np.ndarray) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        return self.A_GG @ g + self.A_IG.T @ self.extension_interior(g)

    @cached_property
    def schur_matrix(self) -> np.ndarray:
        S = self.apply_schur(np.eye(self.split.n_gamma))
        return (S + S.T) / 2


def operator_AC(ops: SplitOperators) -> sp.csr_matrix:
    return ops.A_C


def operator_AD(ops: SplitOperators) -> sp.csr_matrix:
    return ops.A_D

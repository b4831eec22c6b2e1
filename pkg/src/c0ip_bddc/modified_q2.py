"""The modified Q2 space: one-sided derivative dofs on the skeleton and boundary.

The space itself is the ordinary continuous Q2 space; only its basis changes.
The basis is the tensor product of a 1D modified basis in x and in y.  On a
line with skeleton points ``s`` (lattice indices), the 1D functionals are

* the nodal value at every lattice node that is not a neighbour of a
  skeleton/boundary point,
* ``d- = h * dv/dx`` from the left at ``s`` (replaces the value at ``s-1``),
* ``d+ = h * dv/dx`` from the right at ``s`` (replaces the value at ``s+1``),

with only the inward derivative at the two domain ends.  Products of two 1D
functionals give nodal values, scaled one-sided normal derivatives and, where
two skeleton lines cross, the four quadrant mixed derivatives ``h**2 dxy v``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .errors import ConstructionError, InvalidParameterError, OutOfDomainError
from .grid import (
    Decomposition,
    Mesh,
    NodeCategory,
    build_decomposition,
    build_mesh,
    classify_nodes,
)

ONE_SIDED = np.array([-3.0, 4.0, -1.0])


class Kind1D(IntEnum):
    VALUE = 0
    DERIV_MINUS = 1
    DERIV_PLUS = 2


class DofKind(IntEnum):
    VALUE = 0
    NDERIV_ONESIDED = 1
    MIXED_DERIV = 2


# -- reference Q2 basis on [0, 1] with nodes 0, 1/2, 1 ---------------------

def lagrange_1d(t, order: int = 0) -> np.ndarray:
    """Q2 Lagrange basis (or its derivative) on [0, 1]; shape ``(3, len(t))``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if order == 0:
        return np.array([2 * (t - 0.5) * (t - 1), -4 * t * (t - 1), 2 * t * (t - 0.5)])
    if order == 1:
        return np.array([4 * t - 3, -8 * t + 4, 4 * t - 1])
    if order == 2:
        one = np.ones_like(t)
        return np.array([4 * one, -8 * one, 4 * one])
    return np.zeros((3, t.size))


def tensor_basis(xi, eta, dx: int = 0, dy: int = 0, h: float = 1.0) -> np.ndarray:
    """Derivatives of the 9 element shape functions at points ``(xi, eta)``.

    Local points are in the unit reference square; derivatives are returned
    with respect to physical coordinates on an element of size ``h``.  Row
    ``b*3 + a`` is the shape function of local node ``(a, b)``.
    """
    if dx > 2 or dy > 2:
        raise InvalidParameterError("derivative order above 2 per direction is unsupported")
    bx = lagrange_1d(xi, dx) / h**dx
    by = lagrange_1d(eta, dy) / h**dy
    return (by[:, None, :] * bx[None, :, :]).reshape(9, -1)


# -- 1D modified basis ------------------------------------------------------

@dataclass(frozen=True)
class Line:
    """Modified Q2 basis on [0, 1] subdivided into ``n`` elements."""

    n: int
    special: tuple[int, ...]
    anchor: np.ndarray
    kind: np.ndarray
    slot: np.ndarray
    F: np.ndarray  # functionals x nodal values
    C: np.ndarray  # inverse of F: modified coefficients -> nodal values

    @property
    def size(self) -> int:
        return 2 * self.n + 1

    @property
    def is_end_value(self) -> np.ndarray:
        return (self.kind == Kind1D.VALUE) & ((self.anchor == 0) | (self.anchor == 2 * self.n))


def one_sided_stencil_1d(anchor: int, side: int, n_lattice: int) -> tuple[np.ndarray, np.ndarray]:
    """Lattice indices and weights of ``h * dv`` taken from one side of ``anchor``."""
    if side not in (-1, 1):
        raise InvalidParameterError("side must be -1 or +1")
    idx = anchor + side * np.arange(3)
    if idx.min() < 0 or idx.max() >= n_lattice:
        raise OutOfDomainError(f"one-sided stencil at {anchor} (side {side:+d}) leaves the domain")
    return idx, side * ONE_SIDED


def build_line(n: int, special: tuple[int, ...]) -> Line:
    last = 2 * n
    derivative_points = sorted({0, last, *special})
    consumed: dict[int, tuple[int, int]] = {}
    for s in derivative_points:
        for side in (-1, 1):
            if 0 <= s + side <= last:
                tgt = s + side
                if tgt in consumed or tgt in derivative_points:
                    raise ConstructionError(
                        f"lattice node {tgt} is claimed twice; skeleton points need "
                        "at least two elements between them"
                    )
                consumed[tgt] = (s, side)

    anchor, kind, slot = [], [], []
    for node in range(last + 1):
        if node in consumed:
            continue
        anchor.append(node)
        kind.append(Kind1D.VALUE)
        slot.append(node)
        if node in derivative_points:
            for side, k in ((-1, Kind1D.DERIV_MINUS), (1, Kind1D.DERIV_PLUS)):
                if 0 <= node + side <= last:
                    anchor.append(node)
                    kind.append(k)
                    slot.append(node + side)

    size = last + 1
    F = np.zeros((size, size))
    for row, (a, k) in enumerate(zip(anchor, kind)):
        if k == Kind1D.VALUE:
            F[row, a] = 1.0
        else:
            idx, w = one_sided_stencil_1d(a, -1 if k == Kind1D.DERIV_MINUS else 1, size)
            F[row, idx] = w
    # F is a permuted triangular matrix: value rows are identity rows and each
    # derivative row owns its slot column with weight +-4.
    if not np.all(np.isfinite(F)) or abs(np.linalg.det(F[:, slot])) < 1e-300:
        raise ConstructionError("1D change of basis is singular")
    C = np.linalg.inv(F)
    return Line(n, tuple(special), np.array(anchor), np.array(kind), np.array(slot), F, C)


# -- 2D dof map -------------------------------------------------------------

@dataclass(frozen=True)
class DofMap:
    """Enumeration of the 2D modified dofs.

    Arrays of length ``n_full`` describe every tensor-product dof; ``free``
    selects the dofs kept after removing nodal values on the boundary.  Dof
    ``d`` corresponds to x-functional ``fx[d]`` and y-functional ``fy[d]``.
    """

    fx: np.ndarray
    fy: np.ndarray
    kind: np.ndarray
    anchor: np.ndarray
    side_x: np.ndarray
    side_y: np.ndarray
    scale: np.ndarray
    bc: np.ndarray
    free: np.ndarray

    @property
    def n_full(self) -> int:
        return self.fx.size

    @property
    def N(self) -> int:
        return self.free.size


def _side(kind: np.ndarray) -> np.ndarray:
    return np.where(kind == Kind1D.DERIV_MINUS, -1, np.where(kind == Kind1D.DERIV_PLUS, 1, 0))


def build_dof_map(mesh: Mesh, dec: Decomposition, line_x: Line, line_y: Line) -> DofMap:
    nl = mesh.n_lattice
    nx = line_x.size
    kron_fy, kron_fx = np.divmod(np.arange(nx * line_y.size), nx)
    ax, ay = line_x.anchor[kron_fx], line_y.anchor[kron_fy]
    kx, ky = line_x.kind[kron_fx], line_y.kind[kron_fy]
    # node-major, kind-minor
    order = np.lexsort((kx, ky, ax, ay))
    fx, fy = kron_fx[order], kron_fy[order]
    ax, ay, kx, ky = ax[order], ay[order], kx[order], ky[order]

    n_deriv = (kx != Kind1D.VALUE).astype(int) + (ky != Kind1D.VALUE).astype(int)
    kind = np.array([DofKind.VALUE, DofKind.NDERIV_ONESIDED, DofKind.MIXED_DERIV])[n_deriv]
    bc = line_x.is_end_value[fx] | line_y.is_end_value[fy]
    return DofMap(
        fx=fx,
        fy=fy,
        kind=kind,
        anchor=ay * nl + ax,
        side_x=_side(kx),
        side_y=_side(ky),
        scale=mesh.h**n_deriv,
        bc=bc,
        free=np.flatnonzero(~bc),
    )


@dataclass(frozen=True)
class ChangeOfBasis:
    """``matrix`` maps free modified coefficients to standard nodal values;
    ``inverse`` evaluates the free modified functionals on nodal values."""

    matrix: sp.csr_matrix
    inverse: sp.csr_matrix

    def apply(self, c: np.ndarray) -> np.ndarray:
        return self.matrix @ c

    def inverse_apply(self, u: np.ndarray) -> np.ndarray:
        return self.inverse @ u


def _tensor_matrix(mx: np.ndarray, my: np.ndarray, rows: np.ndarray | None,
                   cols: np.ndarray | None) -> sp.csr_matrix:
    full = sp.kron(sp.csr_matrix(my), sp.csr_matrix(mx), format="csr")
    if rows is not None:
        full = full[rows]
    if cols is not None:
        full = full[:, cols]
    full = sp.csr_matrix(full)
    full.data[np.abs(full.data) < 1e-14] = 0.0
    full.eliminate_zeros()
    return full


def build_change_of_basis(dof_map: DofMap, line_x: Line, line_y: Line) -> ChangeOfBasis:
    # kron index of dof d is fy*nx + fx
    kron_idx = dof_map.fy * line_x.size + dof_map.fx
    cols = kron_idx[dof_map.free]
    C = _tensor_matrix(line_x.C, line_y.C, None, cols)
    Finv = _tensor_matrix(line_x.F, line_y.F, cols, None)
    check = (Finv @ C - sp.identity(dof_map.N)).tocoo()
    if check.nnz and np.abs(check.data).max() > 1e-10:
        raise ConstructionError("change of basis does not invert")
    return ChangeOfBasis(C, Finv)


class ModifiedQ2Space:
    """Mesh, decomposition and modified Q2 basis bundled together."""

    def __init__(self, mesh: Mesh, dec: Decomposition):
        self.mesh = mesh
        self.dec = dec
        self.node_category = classify_nodes(mesh, dec)
        self.line = build_line(mesh.n, dec.gamma_lines)
        self.dofs = build_dof_map(mesh, dec, self.line, self.line)
        self.basis = build_change_of_basis(self.dofs, self.line, self.line)

    @property
    def line_x(self) -> Line:
        return self.line

    @property
    def line_y(self) -> Line:
        return self.line

    @property
    def N(self) -> int:
        return self.dofs.N

    @property
    def C(self) -> sp.csr_matrix:
        return self.basis.matrix

    @cached_property
    def free_kind(self) -> np.ndarray:
        return self.dofs.kind[self.dofs.free]

    @cached_property
    def free_anchor(self) -> np.ndarray:
        return self.dofs.anchor[self.dofs.free]

    def interpolate(self, f: Callable, restrict: bool = True) -> np.ndarray:
        """Nodal interpolation of ``f(x, y)`` expressed in modified coefficients.

        With ``restrict=False`` the boundary nodal values are kept, which is
        only meaningful for functions that do not vanish on the boundary.
        """
        x, y = self.mesh.nodes[:, 0], self.mesh.nodes[:, 1]
        u = np.broadcast_to(np.asarray(f(x, y), dtype=float), x.shape)
        if restrict:
            return self.basis.inverse_apply(u)
        nx = self.line_x.size
        full = sp.kron(sp.csr_matrix(self.line_y.F), sp.csr_matrix(self.line_x.F)) @ u
        return full[self.dofs.fy * nx + self.dofs.fx]

    def evaluate(self, coeffs: np.ndarray, element: int, point, deriv=(0, 0)) -> float:
        dx, dy = deriv
        u = self.C @ coeffs
        phi = tensor_basis(point[0], point[1], dx, dy, self.mesh.h)[:, 0]
        return float(u[self.mesh.element_nodes[element]] @ phi)


def one_sided_derivative_stencil(mesh: Mesh, node: int, direction: str, side: int):
    """Lattice nodes and weights of the scaled one-sided derivative ``h * dv/dn``.

    ``direction`` is ``"x"`` or ``"y"``; ``side`` is -1 or +1.  Weights are
    (-3, 4, -1) on nodes at distance 0, h/2, h for ``side=+1`` and the negated
    weights, mirrored, for ``side=-1``.
    """
    k, l = mesh.node_ij(node)
    if direction == "x":
        idx, w = one_sided_stencil_1d(k, side, mesh.n_lattice)
        return np.array([mesh.node_index(i, l) for i in idx]), w
    if direction == "y":
        idx, w = one_sided_stencil_1d(l, side, mesh.n_lattice)
        return np.array([mesh.node_index(k, j) for j in idx]), w
    raise InvalidParameterError(f"direction must be 'x' or 'y', got {direction!r}")


def build_space(n: int, m: int = 1) -> ModifiedQ2Space:
    mesh = build_mesh(n)
    return ModifiedQ2Space(mesh, build_decomposition(mesh, m))


def node_categories_of_free_dofs(space: ModifiedQ2Space) -> np.ndarray:
    return space.node_category[space.free_anchor]


__all__ = [
    "ChangeOfBasis",
    "DofKind",
    "DofMap",
    "Kind1D",
    "Line",
    "ModifiedQ2Space",
    "NodeCategory",
    "build_change_of_basis",
    "build_dof_map",
    "build_line",
    "build_space",
    "lagrange_1d",
    "one_sided_derivative_stencil",
    "tensor_basis",
]

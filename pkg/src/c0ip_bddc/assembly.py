"""Assembly of the C0 interior penalty form, its localized pieces and loads.

Everything is first assembled in the standard Q2 nodal basis and then carried
to modified coordinates with one congruence ``C.T @ A @ C``.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, Iterable

import numpy as np
import scipy.sparse as sp

from .errors import InvalidParameterError
from .grid import Edge, Mesh
from .modified_q2 import ModifiedQ2Space, tensor_basis


def gauss(nq: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(nq)
    return (x + 1) / 2, w / 2


@lru_cache(maxsize=None)
def _element_stiffness(h: float, nq: int) -> np.ndarray:
    t, w = gauss(nq)
    xi, eta = (a.ravel() for a in np.meshgrid(t, t))
    wq = np.outer(w, w).ravel() * h * h
    dxx = tensor_basis(xi, eta, 2, 0, h)
    dxy = tensor_basis(xi, eta, 1, 1, h)
    dyy = tensor_basis(xi, eta, 0, 2, h)
    K = (dxx * wq) @ dxx.T + 2 * (dxy * wq) @ dxy.T + (dyy * wq) @ dyy.T
    return (K + K.T) / 2


def element_stiffness(mesh: Mesh, nq: int = 3) -> np.ndarray:
    """9x9 Hessian inner product matrix of one (any) mesh element."""
    return _element_stiffness(mesh.h, nq).copy()


def _normal_traces(vertical: bool, side: str, s: np.ndarray, h: float):
    """First and second normal derivatives of the 9 shape functions on an edge.

    ``side='minus'`` means the element lies behind the normal (edge at local
    coordinate 1), ``'plus'`` in front of it (edge at local coordinate 0).
    """
    c = np.full_like(s, 1.0 if side == "minus" else 0.0)
    if vertical:
        return tensor_basis(c, s, 1, 0, h), tensor_basis(c, s, 2, 0, h)
    return tensor_basis(s, c, 0, 1, h), tensor_basis(s, c, 0, 2, h)


@lru_cache(maxsize=None)
def _edge_matrix(vertical: bool, sides: tuple[str, ...], h: float, eta: float,
                 consistency: bool, nq: int) -> np.ndarray:
    s, w = gauss(nq)
    w = w * h
    jumps, avgs = [], []
    interior = len(sides) == 2
    for side in sides:
        d1, d2 = _normal_traces(vertical, side, s, h)
        sign = 1.0 if side == "plus" else -1.0
        jumps.append(sign * d1)
        avgs.append(d2 / 2 if interior else d2)
    jump, avg = np.vstack(jumps), np.vstack(avgs)
    M = (eta / h) * (jump * w) @ jump.T
    if consistency:
        cons = (avg * w) @ jump.T
        M = M + cons + cons.T
    return (M + M.T) / 2


def edge_coupling(mesh: Mesh, edge: Edge, eta: float, consistency: bool = True,
                  nq: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Edge contribution over the adjacent elements' nodes.

    Returns ``(nodes, M)`` where ``nodes`` concatenates the 9 lattice nodes of
    the ``minus`` element (if any) and of the ``plus`` element (if any).
    Penalty ``eta/|e|`` on the normal-derivative jump, plus both symmetric
    consistency terms with the average of the second normal derivative.
    """
    sides, nodes = [], []
    for side, el in (("minus", edge.minus), ("plus", edge.plus)):
        if el is not None:
            sides.append(side)
            nodes.append(mesh.element_nodes[el])
    M = _edge_matrix(edge.vertical, tuple(sides), mesh.h, float(eta), consistency, nq)
    return np.concatenate(nodes), M.copy()


def assemble_standard(mesh: Mesh, eta: float, elements: Iterable[int] | None = None,
                      edges: Iterable[Edge] | None = None, consistency: bool = True,
                      nq: int = 3, hessian: bool = True) -> sp.csr_matrix:
    """Assemble in the standard nodal basis over the given elements and edges."""
    if eta <= 0:
        raise InvalidParameterError(f"penalty eta must be positive, got {eta}")
    elements = np.arange(mesh.n_elements) if elements is None else np.asarray(list(elements), int)
    edges = mesh.edges if edges is None else tuple(edges)
    rows, cols, vals = [], [], []
    if hessian and elements.size:
        K = _element_stiffness(mesh.h, nq)
        en = mesh.element_nodes[elements]
        rows.append(np.repeat(en, 9, axis=1).ravel())
        cols.append(np.tile(en, (1, 9)).ravel())
        vals.append(np.tile(K.ravel(), elements.size))
    for e in edges:
        nodes, M = edge_coupling(mesh, e, eta, consistency, nq)
        rows.append(np.repeat(nodes, nodes.size))
        cols.append(np.tile(nodes, nodes.size))
        vals.append(M.ravel())
    n = mesh.n_nodes
    if not rows:
        return sp.csr_matrix((n, n))
    A = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    A.sum_duplicates()
    return A


def to_modified(space: ModifiedQ2Space, A_std: sp.spmatrix) -> sp.csr_matrix:
    C = space.C
    A = (C.T @ A_std @ C).tocsr()
    A = (A + A.T) / 2
    A.data[np.abs(A.data) < 1e-15 * max(1.0, abs(A.data).max(initial=0.0))] = 0.0
    A.eliminate_zeros()
    return A.tocsr()


def assemble_global(space: ModifiedQ2Space, eta: float = 5.0, nq: int = 3) -> sp.csr_matrix:
    """``A_h`` in free modified coordinates."""
    return to_modified(space, assemble_standard(space.mesh, eta, nq=nq))


def subdomain_edges(space: ModifiedQ2Space, j: int) -> list[Edge]:
    sub = space.dec.subdomain_of_element
    return [
        e for e in space.mesh.edges
        if not e.is_boundary and sub[e.minus] == j and sub[e.plus] == j
    ]


def assemble_subdomain(space: ModifiedQ2Space, j: int, eta: float = 5.0,
                       nq: int = 3) -> sp.csr_matrix:
    """``a_{h,j}``: elements of subdomain ``j`` and the edges interior to it.

    Returned in global free modified coordinates (rows of dofs not touching
    the subdomain are empty).
    """
    if not 0 <= j < space.dec.J:
        raise InvalidParameterError(f"subdomain index {j} out of range")
    A = assemble_standard(space.mesh, eta, space.dec.elements_of(j),
                          subdomain_edges(space, j), nq=nq)
    return to_modified(space, A)


def seminorm_matrix(space: ModifiedQ2Space) -> sp.csr_matrix:
    """Gram matrix of the broken H2 seminorm plus the scaled jump terms."""
    A = assemble_standard(space.mesh, 1.0, consistency=False)
    return to_modified(space, A)


def energy_seminorm(space: ModifiedQ2Space, v: np.ndarray,
                    matrix: sp.spmatrix | None = None) -> float:
    """Squared mesh-dependent seminorm of ``v``."""
    E = seminorm_matrix(space) if matrix is None else matrix
    return float(v @ (E @ v))


def assemble_load_standard(mesh: Mesh, f: Callable, nq: int = 3) -> np.ndarray:
    t, w = gauss(nq)
    xi, eta = (a.ravel() for a in np.meshgrid(t, t))
    wq = np.outer(w, w).ravel() * mesh.h**2
    phi = tensor_basis(xi, eta)
    x0 = mesh.elements[:, 0] * mesh.h
    y0 = mesh.elements[:, 1] * mesh.h
    X = x0[:, None] + xi[None, :] * mesh.h
    Y = y0[:, None] + eta[None, :] * mesh.h
    fq = np.broadcast_to(np.asarray(f(X, Y), dtype=float), X.shape)
    local = (fq * wq) @ phi.T  # (n_elements, 9)
    b = np.zeros(mesh.n_nodes)
    np.add.at(b, mesh.element_nodes.ravel(), local.ravel())
    return b


def assemble_load(space: ModifiedQ2Space, f: Callable, nq: int = 3) -> np.ndarray:
    return space.C.T @ assemble_load_standard(space.mesh, f, nq)


def export_coo(matrix: sp.spmatrix, path) -> None:
    """Write ``row col value`` lines, 0-based, in row-major order."""
    A = sp.csr_matrix(matrix).tocoo()
    order = np.lexsort((A.col, A.row))
    with open(path, "w") as fh:
        for r, c, v in zip(A.row[order], A.col[order], A.data[order]):
            fh.write(f"{r} {c} {v:.17g}\n")

"""Uniform rectangular meshes of the unit square and their subdomain partitions.

Nodes live on the Q2 lattice of spacing h/2.  Node ``(k, l)`` sits at
``(k/(2n), l/(2n))`` and has flat index ``l*(2n+1) + k`` (x fastest).
Element ``(i, j)`` covers ``[i*h, (i+1)*h] x [j*h, (j+1)*h]`` and has flat
index ``j*n + i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import InvalidParameterError, MisalignmentError


class NodeCategory(IntEnum):
    SUBDOMAIN_INTERIOR = 0
    GAMMA_EDGE = 1
    CROSS_POINT = 2
    DOMAIN_BOUNDARY = 3


class EdgeCategory(IntEnum):
    SUBDOMAIN_INTERIOR = 0
    ON_GAMMA = 1
    ON_BOUNDARY = 2


@dataclass(frozen=True)
class Edge:
    """A mesh edge with its reference normal.

    ``minus`` is the element the normal points away from and ``plus`` the
    element it points into; one of them is ``None`` on the domain boundary.
    """

    index: int
    vertical: bool
    nodes: tuple[int, int, int]  # start, midpoint, end (lattice indices)
    normal: tuple[float, float]
    minus: int | None
    plus: int | None
    length: float

    @property
    def is_boundary(self) -> bool:
        return self.minus is None or self.plus is None

    @property
    def elements(self) -> tuple[int, ...]:
        return tuple(e for e in (self.minus, self.plus) if e is not None)


@dataclass(frozen=True)
class Mesh:
    n: int
    h: float
    nodes: np.ndarray  # ((2n+1)**2, 2)
    elements: np.ndarray  # (n*n, 2) of (i, j)
    element_nodes: np.ndarray  # (n*n, 9) lattice indices, local index b*3 + a
    edges: tuple[Edge, ...]

    @property
    def n_lattice(self) -> int:
        return 2 * self.n + 1

    @property
    def n_nodes(self) -> int:
        return self.n_lattice**2

    @property
    def n_elements(self) -> int:
        return self.n * self.n

    def node_index(self, k: int, l: int) -> int:
        return l * self.n_lattice + k

    def node_ij(self, node: int) -> tuple[int, int]:
        l, k = divmod(node, self.n_lattice)
        return k, l

    def element_index(self, i: int, j: int) -> int:
        return j * self.n + i


@dataclass(frozen=True)
class Decomposition:
    m: int
    J: int
    H: float
    k: int  # elements per subdomain side
    subdomain_of_element: np.ndarray
    gamma_edges: tuple[int, ...]
    cross_points: tuple[tuple[float, float], ...]
    gamma_lines: tuple[int, ...] = field(default=())  # lattice indices of interior lines

    def subdomain_index(self, p: int, q: int) -> int:
        return q * self.m + p

    def subdomain_ij(self, j: int) -> tuple[int, int]:
        q, p = divmod(j, self.m)
        return p, q

    def elements_of(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.subdomain_of_element == j)


def build_mesh(n: int) -> Mesh:
    if int(n) != n or n < 1:
        raise InvalidParameterError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    h = 1.0 / n
    nl = 2 * n + 1
    ks, ls = np.meshgrid(np.arange(nl), np.arange(nl))
    nodes = np.column_stack([ks.ravel(), ls.ravel()]) / (2 * n)

    jj, ii = np.divmod(np.arange(n * n), n)
    elements = np.column_stack([ii, jj])
    b, a = np.divmod(np.arange(9), 3)
    element_nodes = (2 * jj[:, None] + b[None, :]) * nl + (2 * ii[:, None] + a[None, :])

    raw = []
    # vertical edges x = i*h, i = 0..n, spanning [j*h, (j+1)*h]
    for j in range(n):
        for i in range(n + 1):
            nodes3 = tuple((2 * j + t) * nl + 2 * i for t in range(3))
            minus = j * n + i - 1 if i > 0 else None
            plus = j * n + i if i < n else None
            raw.append(((2 * j + 1, 2 * i), True, nodes3, (1.0, 0.0), minus, plus))
    # horizontal edges y = j*h
    for j in range(n + 1):
        for i in range(n):
            nodes3 = tuple(2 * j * nl + 2 * i + t for t in range(3))
            minus = (j - 1) * n + i if j > 0 else None
            plus = j * n + i if j < n else None
            raw.append(((2 * j, 2 * i + 1), False, nodes3, (0.0, 1.0), minus, plus))
    # lexicographic by midpoint coordinates, x fastest
    raw.sort(key=lambda r: r[0])
    edges = tuple(
        Edge(idx, vert, nodes3, normal, minus, plus, h)
        for idx, (_, vert, nodes3, normal, minus, plus) in enumerate(raw)
    )
    return Mesh(n, h, nodes, elements, element_nodes, edges)


def build_decomposition(mesh: Mesh, m: int) -> Decomposition:
    if int(m) != m or m < 1:
        raise InvalidParameterError(f"m must be a positive integer, got {m!r}")
    m = int(m)
    if mesh.n % m:
        raise MisalignmentError(f"m={m} does not divide n={mesh.n}")
    k = mesh.n // m
    ii, jj = mesh.elements[:, 0], mesh.elements[:, 1]
    sub = (jj // k) * m + (ii // k)
    gamma = tuple(
        e.index
        for e in mesh.edges
        if not e.is_boundary and sub[e.minus] != sub[e.plus]
    )
    cps = tuple((p / m, q / m) for q in range(1, m) for p in range(1, m))
    lines = tuple(2 * k * t for t in range(1, m))
    return Decomposition(m, m * m, 1.0 / m, k, sub, gamma, cps, lines)


def classify_nodes(mesh: Mesh, dec: Decomposition) -> np.ndarray:
    """Return one :class:`NodeCategory` per lattice node."""
    nl = mesh.n_lattice
    on_line = np.zeros(nl, dtype=bool)
    on_line[list(dec.gamma_lines)] = True
    at_end = np.zeros(nl, dtype=bool)
    at_end[[0, nl - 1]] = True

    ks, ls = np.meshgrid(np.arange(nl), np.arange(nl))
    ks, ls = ks.ravel(), ls.ravel()
    cat = np.full(nl * nl, NodeCategory.SUBDOMAIN_INTERIOR, dtype=np.int8)
    cat[on_line[ks] | on_line[ls]] = NodeCategory.GAMMA_EDGE
    cat[on_line[ks] & on_line[ls]] = NodeCategory.CROSS_POINT
    cat[at_end[ks] | at_end[ls]] = NodeCategory.DOMAIN_BOUNDARY
    return cat


def classify_edges(mesh: Mesh, dec: Decomposition) -> np.ndarray:
    """Return one :class:`EdgeCategory` per mesh edge."""
    sub = dec.subdomain_of_element
    cat = np.empty(len(mesh.edges), dtype=np.int8)
    for e in mesh.edges:
        if e.is_boundary:
            cat[e.index] = EdgeCategory.ON_BOUNDARY
        elif sub[e.minus] != sub[e.plus]:
            cat[e.index] = EdgeCategory.ON_GAMMA
        else:
            cat[e.index] = EdgeCategory.SUBDOMAIN_INTERIOR
    return cat

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from c0ip_bddc.errors import InvalidParameterError, MisalignmentError
from c0ip_bddc.grid import (
    EdgeCategory,
    NodeCategory,
    build_decomposition,
    build_mesh,
    classify_edges,
    classify_nodes,
)


def _edge_counts(mesh):
    interior = sum(not e.is_boundary for e in mesh.edges)
    return interior, len(mesh.edges) - interior


@pytest.mark.parametrize("n, n_el, n_nodes, n_edges, n_int, n_bnd", [
    (8, 64, 289, 144, 112, 32),
    (1, 1, 9, 4, 0, 4),
    (24, 576, 2401, 1200, 1104, 96),
])
def test_mesh_counts(n, n_el, n_nodes, n_edges, n_int, n_bnd):
    mesh = build_mesh(n)
    assert mesh.n_elements == n_el
    assert mesh.n_nodes == n_nodes
    assert len(mesh.edges) == n_edges
    assert _edge_counts(mesh) == (n_int, n_bnd)


def test_mesh_rejects_zero():
    with pytest.raises(InvalidParameterError):
        build_mesh(0)


def test_mesh_is_deterministic():
    a, b = build_mesh(6), build_mesh(6)
    assert np.array_equal(a.nodes, b.nodes)
    assert np.array_equal(a.element_nodes, b.element_nodes)
    assert a.edges == b.edges


def test_edge_normals_and_sides():
    mesh = build_mesh(4)
    for e in mesh.edges:
        assert e.length == pytest.approx(mesh.h)
        if e.vertical:
            assert e.normal == (1.0, 0.0)
        else:
            assert e.normal == (0.0, 1.0)
        start, mid, end = (mesh.nodes[i] for i in e.nodes)
        assert np.allclose(mid, (start + end) / 2)
        # the plus element lies on the side the normal points to
        if e.plus is not None:
            centre = mesh.nodes[mesh.element_nodes[e.plus, 4]]
            assert np.dot(centre - mid, e.normal) > 0
        if e.minus is not None:
            centre = mesh.nodes[mesh.element_nodes[e.minus, 4]]
            assert np.dot(centre - mid, e.normal) < 0


def test_decomposition_n8_m4():
    mesh = build_mesh(8)
    dec = build_decomposition(mesh, 4)
    assert (dec.J, dec.H, mesh.h) == (16, 0.25, 0.125)
    assert len(dec.gamma_edges) == 48
    assert len(dec.cross_points) == 9


def test_decomposition_single_subdomain():
    dec = build_decomposition(build_mesh(4), 1)
    assert dec.J == 1 and dec.gamma_edges == () and dec.cross_points == ()


def test_misaligned_decomposition():
    with pytest.raises(MisalignmentError):
        build_decomposition(build_mesh(10), 4)


def test_node_classification_n8_m4():
    mesh = build_mesh(8)
    cat = classify_nodes(mesh, build_decomposition(mesh, 4))
    counts = np.bincount(cat, minlength=4)
    assert counts.sum() == 17 * 17
    assert counts[NodeCategory.CROSS_POINT] == 9
    assert counts[NodeCategory.DOMAIN_BOUNDARY] == 64
    assert counts[NodeCategory.GAMMA_EDGE] == 72


def test_edge_classification_n8_m4():
    mesh = build_mesh(8)
    cat = classify_edges(mesh, build_decomposition(mesh, 4))
    counts = np.bincount(cat, minlength=3)
    assert counts[EdgeCategory.ON_GAMMA] == 48
    assert counts[EdgeCategory.ON_BOUNDARY] == 32
    assert counts[EdgeCategory.SUBDOMAIN_INTERIOR] == 64


@settings(max_examples=30, deadline=None)
@given(k=st.integers(1, 5), m=st.integers(1, 5))
def test_decomposition_invariants(k, m):
    n = k * m
    mesh = build_mesh(n)
    dec = build_decomposition(mesh, m)
    ecat = classify_edges(mesh, dec)
    ncat = classify_nodes(mesh, dec)
    assert len(dec.gamma_edges) == 2 * (m - 1) * n
    assert np.count_nonzero(ecat == EdgeCategory.ON_GAMMA) == 2 * (m - 1) * n
    assert np.count_nonzero(ecat == EdgeCategory.ON_BOUNDARY) == 4 * n
    assert np.count_nonzero(ncat == NodeCategory.DOMAIN_BOUNDARY) == 8 * n
    assert np.count_nonzero(ncat == NodeCategory.CROSS_POINT) == (m - 1) ** 2
    sub = dec.subdomain_of_element
    for idx in dec.gamma_edges:
        e = mesh.edges[idx]
        assert sub[e.minus] != sub[e.plus]
    # cross points are interior to the domain
    for x, y in dec.cross_points:
        assert 0 < x < 1 and 0 < y < 1

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tumorhopf.discretization import (build_grid, integrate, kernel_operator, laplacian,
                                      quadrature_weights, sample_kernel)
from tumorhopf.errors import ConfigError
from tumorhopf.model import KernelSpec


def test_small_grid_nodes():
    g = build_grid(3, "dirichlet", min_nodes=3)
    assert np.allclose(g.nodes, [math.pi / 4, math.pi / 2, 3 * math.pi / 4])
    assert g.h == pytest.approx(math.pi / 4)


def test_default_grid_spacing():
    assert build_grid(199).h == pytest.approx(math.pi / 200, abs=1e-15)


@pytest.mark.parametrize("bc", ["dirichlet", "neumann"])
def test_too_few_nodes_rejected(bc):
    with pytest.raises(ConfigError):
        build_grid(7, bc)


def test_unknown_bc_rejected():
    with pytest.raises(ConfigError):
        build_grid(20, "periodic")


@pytest.mark.parametrize("bc, n", [("dirichlet", 50), ("neumann", 51)])
def test_grid_invariants(bc, n):
    g = build_grid(n, bc)
    assert g.size == n
    assert np.all(np.diff(g.nodes) > 0)
    assert np.allclose(np.diff(g.nodes), g.h, atol=1e-14)
    if bc == "dirichlet":
        assert g.nodes[0] > 0 and g.nodes[-1] < math.pi
    else:
        assert g.nodes[0] == 0 and g.nodes[-1] == math.pi


def test_laplacian_zero_field():
    g = build_grid(30)
    assert np.all(laplacian(g, 0.1).apply(np.zeros(30)) == 0)


def test_laplacian_dirichlet_top_eigenvalue():
    g = build_grid(99)
    d = 0.25
    L = laplacian(g, d).to_dense()
    assert np.allclose(L, L.T)
    top = np.max(np.linalg.eigvalsh(L / d))
    assert -top == pytest.approx(2 / g.h ** 2 * (1 - math.cos(g.h)), rel=1e-12)
    assert -top == pytest.approx(1.0, abs=g.h ** 2 / 10)


def test_laplacian_on_sine():
    d = 0.1
    g = build_grid(199)
    out = laplacian(g, d).apply(np.sin(g.nodes))
    assert np.max(np.abs(out + d * np.sin(g.nodes))) <= d * g.h ** 2 / 10


def test_laplacian_second_order():
    errs = []
    for n in (49, 99, 199):
        g = build_grid(n)
        lam = np.min(np.linalg.eigvalsh(-laplacian(g, 1.0).to_dense()))
        errs.append(abs(lam - 1.0))
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(3.5 <= r <= 4.5 for r in ratios)


def test_neumann_rows_sum_to_zero():
    g = build_grid(40, "neumann")
    L = laplacian(g, 0.3).to_dense()
    assert np.allclose(L.sum(axis=1), 0.0, atol=1e-10)


def test_neumann_constant_in_kernel():
    g = build_grid(40, "neumann")
    assert np.allclose(laplacian(g, 0.3).apply(np.ones(40)), 0.0, atol=1e-10)


@settings(max_examples=20)
@given(seed=st.integers(0, 2 ** 32 - 1))
def test_dirichlet_laplacian_negative_definite(seed):
    g = build_grid(40)
    v = np.random.default_rng(seed).standard_normal(40)
    assert v @ laplacian(g, 0.1).apply(v) < 0


@pytest.mark.parametrize("f, exact", [(np.sin, 2.0),
                                      (lambda x: np.sin(x) ** 2, math.pi / 2),
                                      (lambda x: np.sin(x) ** 3, 4 / 3)])
def test_quadrature_of_sine_powers(f, exact):
    g = build_grid(199)
    assert integrate(f(g.nodes), g) == pytest.approx(exact, abs=1e-8)


@pytest.mark.parametrize("n", [8, 9, 20, 21, 199])
def test_full_weights_nonnegative_and_sum_to_pi(n):
    for bc in ("dirichlet", "neumann"):
        g = build_grid(n, bc)
        w = quadrature_weights(g, include_boundary=True)
        assert np.all(w >= 0)
        assert w.sum() == pytest.approx(math.pi, abs=1e-12)


@pytest.mark.parametrize("n", [8, 9, 10, 11])
def test_quadrature_exact_for_cubics(n):
    g = build_grid(n, "neumann")
    x = g.nodes
    val = integrate(x ** 3 - 2 * x ** 2 + x - 1, g)
    exact = math.pi ** 4 / 4 - 2 * math.pi ** 3 / 3 + math.pi ** 2 / 2 - math.pi
    assert val == pytest.approx(exact, rel=1e-12)


def test_kernel_rank_one_and_outer_product():
    g = build_grid(199)
    w = quadrature_weights(g)
    K = kernel_operator(KernelSpec(), g, w)
    assert np.max(np.abs(K.matrix - np.outer(np.sin(g.nodes), w * np.sin(g.nodes)))) < 1e-14
    s = np.linalg.svd(K.matrix, compute_uv=False)
    assert s[1] < 1e-10 * s[0]
    assert np.max(np.abs(K.apply(np.sin(g.nodes)) - math.pi / 2 * np.sin(g.nodes))) < 1e-6
    assert np.all(K.apply(np.zeros(199)) == 0)


@settings(max_examples=20)
@given(v=arrays(float, 40, elements=st.floats(0, 10)))
def test_kernel_positivity(v):
    g = build_grid(40)
    K = kernel_operator(KernelSpec(), g)
    out = K.apply(v)
    assert np.min(out) >= -1e-12
    if np.any(v > 0):
        assert np.all(out > 0)


def test_tabulated_kernel_matches_separable():
    g = build_grid(41)
    table = sample_kernel(KernelSpec(), g)
    tab = kernel_operator(KernelSpec("tabulated", values=table, nodes=g.nodes), g)
    sep = kernel_operator(KernelSpec(), g)
    assert not tab.is_rank_one
    v = np.cos(g.nodes) ** 2
    assert np.allclose(tab.apply(v), sep.apply(v), atol=1e-14)


def test_tabulated_kernel_size_mismatch():
    g = build_grid(41)
    nodes = np.linspace(0.1, 3.0, 10)
    k = KernelSpec("tabulated", values=np.ones((10, 10)), nodes=nodes)
    with pytest.raises(ConfigError):
        kernel_operator(k, g)

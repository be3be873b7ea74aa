import itertools
import json
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from opengraphon import (
    ContractViolation,
    DomainError,
    SbmGraphon,
    constant_graphon,
    exp_mu2,
    exp_mu2_max,
    expected_graph,
    laplacian_spectrum,
    mu2,
    sample_simple_graph,
    sbm_mu2_analytic,
    sbm_reduction,
    two_block_sbm,
)
from opengraphon.spectral import batch_mu2, block_sizes, laplacian


def enumerate_exp_mu2(p_matrix, gamma):
    """Brute force over edge subsets with networkx spectra."""
    n = p_matrix.shape[0]
    pairs = list(itertools.combinations(range(n), 2))
    total = 0.0
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        g = nx.empty_graph(n)
        w = 1.0
        for (i, j), b in zip(pairs, bits):
            w *= p_matrix[i, j] if b else 1.0 - p_matrix[i, j]
            if b:
                g.add_edge(i, j)
        lam = np.sort(nx.laplacian_spectrum(g))
        total += w * math.exp(-2.0 * gamma * max(lam[1], 0.0) / n)
    return total


# -- spectra --------------------------------------------------------------------------


def test_spectrum_small_graphs():
    s = laplacian_spectrum(np.array([[0.0, 1.0], [1.0, 0.0]]))
    np.testing.assert_allclose(s.eigenvalues, [0, 2], atol=1e-14)
    np.testing.assert_allclose(s.mu, [0, 1], atol=1e-14)
    np.testing.assert_allclose(laplacian_spectrum(np.zeros((4, 4))).eigenvalues, 0, atol=0)
    path = nx.to_numpy_array(nx.path_graph(3))
    np.testing.assert_allclose(laplacian_spectrum(path).eigenvalues, [0, 1, 3], atol=1e-12)


def test_spectrum_rejects_asymmetric():
    with pytest.raises(ContractViolation):
        laplacian_spectrum(np.array([[0.0, 1.0], [0.0, 0.0]]))
    with pytest.raises(ContractViolation):
        laplacian_spectrum(np.zeros((2, 3)))


def test_spectrum_csv(tmp_path):
    path = tmp_path / "s.csv"
    laplacian_spectrum(nx.to_numpy_array(nx.path_graph(3))).to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "index,lambda,mu"
    assert len(lines) == 4
    assert float(lines[3].split(",")[1]) == pytest.approx(3.0)


@given(st.integers(2, 40), st.floats(0.0, 1.0), st.integers(0, 10**6))
def test_spectrum_sanity_matches_networkx(n, p, seed):
    g = sample_simple_graph(expected_graph(constant_graphon(p), n), seed)
    s = laplacian_spectrum(g)
    assert abs(s.eigenvalues[0]) <= 1e-9 * n
    assert np.all(np.diff(s.eigenvalues) >= 0)
    assert np.all(s.mu <= 1 + 1e-9)
    trace = np.trace(laplacian(g.adjacency))
    assert math.isclose(s.eigenvalues.sum(), trace, rel_tol=1e-8, abs_tol=1e-9)
    ref = np.sort(nx.laplacian_spectrum(nx.from_numpy_array(g.adjacency)))
    np.testing.assert_allclose(s.eigenvalues, ref, atol=1e-9 * n)


def test_eigen_residual_contract(rng):
    a = np.triu((rng.random((60, 60)) < 0.3).astype(float), 1)
    a = a + a.T
    lap = laplacian(a)
    w, v = np.linalg.eigh(lap)
    assert np.max(np.linalg.norm(lap @ v - v * w, axis=0)) <= 1e-8 * 60


def test_batch_mu2_both_paths(rng):
    for n in (10, 80):
        a = np.triu((rng.random((3, n, n)) < 0.4).astype(float), 1)
        a = a + np.swapaxes(a, 1, 2)
        ref = [np.sort(nx.laplacian_spectrum(nx.from_numpy_array(m)))[1] / n for m in a]
        np.testing.assert_allclose(batch_mu2(a), ref, atol=1e-12)


# -- mu2 -----------------------------------------------------------------------------------


@pytest.mark.parametrize("n", [2, 5, 17])
def test_mu2_complete(n):
    assert mu2(expected_graph(constant_graphon(1.0), n)) == pytest.approx(1.0, abs=1e-12)


def test_mu2_disconnected():
    a = nx.to_numpy_array(nx.disjoint_union(nx.complete_graph(3), nx.complete_graph(4)))
    assert mu2(a) == pytest.approx(0.0, abs=1e-12)


def test_mu2_expected_constant():
    assert mu2(expected_graph(constant_graphon(0.35), 6)) == pytest.approx(0.35, abs=1e-12)


def test_mu2_needs_two_vertices():
    with pytest.raises(DomainError):
        mu2(np.zeros((1, 1)))


# -- SBM reduction ---------------------------------------------------------------------------


def test_reduction_one_block():
    red = sbm_reduction(constant_graphon(0.3), 10)
    np.testing.assert_allclose(red.adjacency, [[0.3]])
    assert red.delta_min == pytest.approx(0.3)
    np.testing.assert_allclose(red.laplacian, [[0.0]], atol=1e-15)


def test_reduction_two_equal_blocks(sbm):
    red = sbm_reduction(sbm, 100)
    assert red.block_sizes.tolist() == [50, 50]
    np.testing.assert_allclose(red.adjacency, [[0.4, 0.1], [0.1, 0.4]], atol=1e-15)
    np.testing.assert_allclose(red.degrees, [0.5, 0.5], atol=1e-15)
    np.testing.assert_allclose(red.laplacian, [[0.1, -0.1], [-0.1, 0.1]], atol=1e-15)


def test_reduction_unequal_blocks():
    a, b, c = 0.9, 0.4, 0.3
    g = SbmGraphon((0, 2 / 3, 1), [[a, b], [b, c]])
    red = sbm_reduction(g, 3)
    assert red.block_sizes.tolist() == [2, 1]
    np.testing.assert_allclose(red.adjacency, np.array([[2 * a, b], [2 * b, c]]) / 3, atol=1e-15)
    assert np.array_equal(red.degrees, red.adjacency.sum(axis=1))


def test_reduction_empty_block():
    g = SbmGraphon((0, 0.05, 1), [[0.5, 0.5], [0.5, 0.5]])
    assert block_sizes(g, 10).tolist() == [0, 10]
    with pytest.raises(DomainError):
        sbm_reduction(g, 10)


def test_mu2_analytic_examples():
    assert sbm_mu2_analytic(constant_graphon(0.6), 8) == pytest.approx(0.6, abs=1e-12)
    assert mu2(expected_graph(constant_graphon(0.6), 8)) == pytest.approx(0.6, abs=1e-12)
    for p, q, ref in ((0.8, 0.2, 0.2), (0.2, 0.8, 0.5)):
        g = two_block_sbm(p, q)
        assert sbm_mu2_analytic(g, 100) == pytest.approx(ref, abs=1e-12)
        assert mu2(expected_graph(g, 100)) == pytest.approx(ref, abs=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_mu2_analytic_matches_dense(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 5))
    n = int(rng.integers(max(m, 2), 61))
    cuts = np.sort(rng.choice(np.arange(1, n), m - 1, replace=False)) if m > 1 else []
    g = SbmGraphon(np.concatenate([[0.0], np.asarray(cuts) / n, [1.0]]), _sym(rng, m))
    dense = mu2(expected_graph(g, n))
    assert math.isclose(sbm_mu2_analytic(g, n), dense, rel_tol=1e-9, abs_tol=1e-12)


def _sym(rng, m):
    p = rng.random((m, m))
    return np.triu(p) + np.triu(p, 1).T


# -- E[exp(-2 gamma mu2)] ----------------------------------------------------------------------


@pytest.mark.parametrize("p", [0.0, 0.3, 1.0])
@pytest.mark.parametrize("gamma", [0.5, 2.0])
def test_exp_mu2_two_vertices(p, gamma):
    est = exp_mu2(expected_graph(constant_graphon(p), 2), gamma)
    assert est.estimate == pytest.approx(p * math.exp(-2 * gamma) + 1 - p, abs=1e-15)
    assert est.stderr == 0.0
    assert est.method == "exact"


def test_exp_mu2_gamma_zero(sbm):
    for n in (3, 9):
        for method in ("auto", "monte-carlo"):
            assert exp_mu2(expected_graph(sbm, n), 0.0, method, 50, 1).estimate == 1.0


def test_exp_mu2_exact_matches_brute_force():
    eg = expected_graph(constant_graphon(0.5), 4)
    ref = enumerate_exp_mu2(eg.adjacency, 1.0)
    assert ref == pytest.approx(0.7516244137834461, rel=1e-12)
    assert exp_mu2(eg, 1.0).estimate == pytest.approx(ref, rel=1e-12)
    g = SbmGraphon((0, 0.4, 1), [[0.7, 0.25], [0.25, 0.55]])
    for n in (3, 5):
        eg = expected_graph(g, n)
        assert exp_mu2(eg, 0.8).estimate == pytest.approx(enumerate_exp_mu2(eg.adjacency, 0.8), rel=1e-12)


def test_exp_mu2_mc_agrees_with_exact():
    eg = expected_graph(constant_graphon(0.5), 4)
    exact = exp_mu2(eg, 1.0).estimate
    mc = exp_mu2(eg, 1.0, "monte-carlo", 100_000, np.random.default_rng(1))
    assert mc.trials == 100_000
    assert abs(mc.estimate - exact) <= 3 * mc.stderr


def test_exp_mu2_exact_refuses_large_n(half):
    with pytest.raises(DomainError, match="2\\^15"):
        exp_mu2(expected_graph(half, 6), 1.0, "exact")
    # deterministic graphs have a single outcome and stay exact
    est = exp_mu2(expected_graph(constant_graphon(1.0), 30), 1.0, "exact")
    assert est.estimate == pytest.approx(math.exp(-2.0), rel=1e-12)


def test_exp_mu2_argument_errors(half):
    eg = expected_graph(half, 3)
    with pytest.raises(DomainError):
        exp_mu2(eg, 1.0, "monte-carlo", 0)
    with pytest.raises(DomainError):
        exp_mu2(eg, -1.0)
    with pytest.raises(DomainError):
        exp_mu2(eg, 1.0, "bogus")


def test_mc_single_trial_has_infinite_stderr(half):
    est = exp_mu2(expected_graph(half, 8), 1.0, "mc", 1, 0)
    assert est.stderr == math.inf
    assert est.upper() == 1.0


@given(st.integers(2, 5), st.floats(0.05, 0.95), st.integers(0, 1000))
def test_exp_mu2_nonincreasing_in_gamma(n, p, seed):
    eg = expected_graph(two_block_sbm(p, 1 - p), n)
    vals = [exp_mu2(eg, g).estimate for g in np.linspace(0, 4, 9)]
    assert all(0 < v <= 1 for v in vals)
    assert np.all(np.diff(vals) <= 1e-15)


def test_exp_mu2_estimate_json(tmp_path, half):
    est = exp_mu2_max(half, 1.0, 2, 4)
    path = tmp_path / "e.json"
    est.to_json(path)
    doc = json.loads(path.read_text())
    assert set(doc) >= {"estimate", "stderr", "method", "trials", "argmax_n"}


def test_exp_mu2_max_examples(half):
    assert exp_mu2_max(half, 0.0, 2, 6, "auto", 100).estimate == 1.0
    full = exp_mu2_max(constant_graphon(1.0), 0.7, 3, 40)
    assert full.estimate == pytest.approx(math.exp(-1.4), rel=1e-12)
    res = exp_mu2_max(half, 1.0, 2, 4)
    per = [exp_mu2(expected_graph(half, n), 1.0).estimate for n in (2, 3, 4)]
    assert res.estimate == max(per)
    assert res.argmax_n == 2 + int(np.argmax(per))
    assert [e for _, e, _ in res.per_n] == per


def test_exp_mu2_max_range_errors(half):
    for lo, hi in ((1, 4), (4, 4), (5, 3)):
        with pytest.raises(DomainError):
            exp_mu2_max(half, 1.0, lo, hi)

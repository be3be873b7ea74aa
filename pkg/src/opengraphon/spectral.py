"""Laplacian spectra, the SBM block reduction, and ``E[exp(-2 gamma mu_2)]``.

Eigenvalues are reported raw (``lambda_i``) and normalized by the graph size
(``mu_i = lambda_i / n``). All eigenproblems are dense and symmetric.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from os import PathLike

import numpy as np
from scipy.linalg import eigh

from ._errors import ContractViolation, DomainError
from ._rng import as_generator, substream
from .graphon import (
    ExpectedGraph,
    SbmGraphon,
    SimpleGraph,
    expected_graph,
    latent_points,
    pairs_to_adjacency,
)

EXACT_MAX_N = 5
# graphs per Monte Carlo chunk are capped so a chunk holds ~2e7 matrix entries
_CHUNK_ENTRIES = 20_000_000
# above this size computing only lambda_2 beats a full batched solve
_SUBSET_MIN_N = 64


def laplacian(adjacency: np.ndarray) -> np.ndarray:
    """``D - A`` for one matrix or a stack of matrices; self-loops cancel."""
    a = np.asarray(adjacency, dtype=float)
    n = a.shape[-1]
    lap = -a
    idx = np.arange(n)
    lap[..., idx, idx] += a.sum(axis=-1)
    return lap


def _adjacency_of(graph) -> np.ndarray:
    if isinstance(graph, (SimpleGraph, ExpectedGraph)):
        return graph.adjacency
    return np.asarray(graph)


@dataclass(frozen=True)
class LaplacianSpectrum:
    n: int
    eigenvalues: np.ndarray = field(repr=False)

    @property
    def mu(self) -> np.ndarray:
        return self.eigenvalues / self.n

    def to_csv(self, path: str | PathLike) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "lambda", "mu"])
            for i, (lam, mu) in enumerate(zip(self.eigenvalues, self.mu), start=1):
                writer.writerow([i, repr(float(lam)), repr(float(mu))])


def laplacian_spectrum(graph) -> LaplacianSpectrum:
    """Ascending Laplacian eigenvalues of a symmetric nonnegative adjacency."""
    a = np.asarray(_adjacency_of(graph), dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation(f"adjacency must be square, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    if not np.allclose(a, a.T, rtol=0.0, atol=1e-12 * scale):
        raise ContractViolation("adjacency must be symmetric")
    lam = np.linalg.eigvalsh(laplacian(a))
    lam.setflags(write=False)
    return LaplacianSpectrum(a.shape[0], lam)


def mu2(graph) -> float:
    """Second smallest normalized Laplacian eigenvalue (0 for disconnected graphs)."""
    a = _adjacency_of(graph)
    if np.shape(a)[0] < 2:
        raise DomainError("mu2 needs at least two vertices")
    return float(laplacian_spectrum(a).mu[1])


def batch_mu2(adjacency: np.ndarray) -> np.ndarray:
    """``mu_2`` of each matrix in an ``(T, n, n)`` stack."""
    n = adjacency.shape[-1]
    lap = laplacian(adjacency)
    if n < _SUBSET_MIN_N:
        return np.linalg.eigvalsh(lap)[..., 1] / n
    flat = lap.reshape(-1, n, n)
    out = np.array([
        eigh(m, eigvals_only=True, subset_by_index=[1, 1], driver="evr", check_finite=False)[0]
        for m in flat
    ])
    return out.reshape(lap.shape[:-2]) / n


# -- SBM reduction --------------------------------------------------------------


@dataclass(frozen=True)
class SbmReduction:
    """``m x m`` matrices that carry the expected-graph spectrum of an SBM.

    ``adjacency = P @ diag(block_sizes) / n``; ``degrees`` are its row sums and
    ``laplacian = diag(degrees) - adjacency``. Neither matrix is symmetric in
    general.
    """

    n: int
    block_sizes: np.ndarray
    adjacency: np.ndarray = field(repr=False)
    degrees: np.ndarray
    laplacian: np.ndarray = field(repr=False)

    @property
    def delta_min(self) -> float:
        return float(self.degrees.min())

    def laplacian_eigenvalues(self) -> np.ndarray:
        # similar to diag(degrees) - sqrt(E) P sqrt(E) / n, which is symmetric
        s = np.sqrt(self.block_sizes.astype(float))
        P = self.adjacency * self.n / self.block_sizes[None, :]
        sym = np.diag(self.degrees) - s[:, None] * P * s[None, :] / self.n
        return np.linalg.eigvalsh(sym)


def block_sizes(graphon: SbmGraphon, n: int) -> np.ndarray:
    return np.bincount(graphon.block_of(latent_points(n)), minlength=graphon.m)


def sbm_reduction(graphon: SbmGraphon, n: int) -> SbmReduction:
    if int(n) != n or n < 1:
        raise DomainError(f"graph size must be a positive integer, got {n}")
    sizes = block_sizes(graphon, int(n))
    empty = np.flatnonzero(sizes == 0)
    if empty.size:
        raise DomainError(
            f"blocks {empty.tolist()} hold no latent point u_i = i/{n}; "
            "the reduction needs every block populated"
        )
    a = graphon.P * sizes[None, :] / n
    deg = a.sum(axis=1)
    return SbmReduction(int(n), sizes, a, deg, np.diag(deg) - a)


def sbm_mu2_analytic(graphon: SbmGraphon, n: int) -> float:
    """``mu_2`` of the expected graph from the ``m x m`` reduction.

    Equals ``min(lambda_2(L_SBM), delta_min)``. Block degrees only count when
    their block has at least two vertices, since a singleton block
    contributes no within-block eigenvalue. For ``m = 1`` there is no
    ``lambda_2(L_SBM)`` and the block degree is returned.
    """
    if n < 2:
        raise DomainError("mu2 needs at least two vertices")
    red = sbm_reduction(graphon, n)
    candidates = list(red.degrees[red.block_sizes >= 2])
    if graphon.m >= 2:
        candidates.append(red.laplacian_eigenvalues()[1])
    return float(min(candidates))


# -- E[exp(-2 gamma mu_2)] -------------------------------------------------------


@dataclass(frozen=True)
class ExpMu2Estimate:
    """Estimate of ``E[exp(-2 gamma mu_2)]``.

    ``trials`` counts enumerated graphs for the exact method and samples for
    Monte Carlo. ``per_n`` holds ``(n, estimate, stderr)`` rows when the
    estimate is a maximum over sizes.
    """

    estimate: float
    method: str
    trials: int
    stderr: float
    argmax_n: int | None = None
    per_n: tuple[tuple[int, float, float], ...] | None = None

    def upper(self, k: float = 3.0) -> float:
        """``estimate + k * stderr`` capped at 1; a conservative E-term."""
        return min(1.0, self.estimate + k * self.stderr)

    def upper_max(self, k: float = 3.0) -> float:
        """Max over sizes of the per-size inflated estimates."""
        if not self.per_n:
            return self.upper(k)
        return max(min(1.0, e + k * s) for _, e, s in self.per_n)

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.per_n is not None:
            d["per_n"] = [list(r) for r in self.per_n]
        return d

    def to_json(self, path: str | PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def _normalize_method(method: str) -> str:
    aliases = {"mc": "monte-carlo", "monte_carlo": "monte-carlo"}
    method = aliases.get(method, method)
    if method not in ("exact", "monte-carlo", "auto"):
        raise DomainError(f"unknown estimation method {method!r}")
    return method


def _enumerate(expected: ExpectedGraph, gamma: float) -> ExpMu2Estimate:
    n = expected.n
    p = expected.pair_probabilities
    n_pairs = p.size
    codes = np.arange(2**n_pairs)
    edges = ((codes[:, None] >> np.arange(n_pairs)) & 1).astype(bool)
    weight = np.prod(np.where(edges, p, 1.0 - p), axis=1)
    m2 = np.maximum(batch_mu2(pairs_to_adjacency(edges.astype(float), n)), 0.0)
    est = math.fsum(weight * np.exp(-2.0 * gamma * m2))
    return ExpMu2Estimate(min(est, 1.0), "exact", int(codes.size), 0.0)


def mc_samples(expected: ExpectedGraph, gamma: float, trials: int, rng) -> np.ndarray:
    """``exp(-2 gamma mu_2)`` of ``trials`` sampled graphs, in stream order."""
    n = expected.n
    p = expected.pair_probabilities
    chunk = max(1, _CHUNK_ENTRIES // (n * n))
    out = np.empty(trials)
    done = 0
    while done < trials:
        c = min(chunk, trials - done)
        edges = rng.random((c, p.size)) < p
        m2 = np.maximum(batch_mu2(pairs_to_adjacency(edges.astype(float), n)), 0.0)
        out[done : done + c] = np.exp(-2.0 * gamma * m2)
        done += c
    return out


def exp_mu2(
    expected: ExpectedGraph,
    gamma: float,
    method: str = "exact",
    trials: int | None = None,
    rng=None,
) -> ExpMu2Estimate:
    """``E[exp(-2 gamma mu_2)]`` over graphs sampled from ``expected``.

    ``method="exact"`` sums over all ``2^(n(n-1)/2)`` graphs and is limited to
    ``n <= 5``. ``method="monte-carlo"`` averages ``trials`` samples drawn
    from ``rng``. ``method="auto"`` is exact when the size allows it or when
    the sampled graph is deterministic, and Monte Carlo otherwise.
    """
    method = _normalize_method(method)
    if gamma < 0:
        raise DomainError("gamma must be nonnegative")
    if expected.n < 2:
        raise DomainError("mu2 needs at least two vertices")
    if method == "auto":
        method = "exact" if expected.n <= EXACT_MAX_N or expected.deterministic else "monte-carlo"

    if method == "exact":
        if expected.deterministic:
            m2 = max(mu2(expected.adjacency), 0.0)
            return ExpMu2Estimate(math.exp(-2.0 * gamma * m2), "exact", 1, 0.0)
        if expected.n > EXACT_MAX_N:
            n_pairs = expected.n * (expected.n - 1) // 2
            raise DomainError(
                f"exact enumeration needs 2^{n_pairs} eigenproblems for n={expected.n}; "
                f"it is limited to n <= {EXACT_MAX_N}, use monte-carlo"
            )
        if gamma == 0:
            return ExpMu2Estimate(1.0, "exact", 2 ** (expected.pair_probabilities.size), 0.0)
        return _enumerate(expected, gamma)

    if trials is None or trials < 1:
        raise DomainError("monte-carlo needs trials >= 1")
    f = mc_samples(expected, gamma, int(trials), as_generator(rng))
    est = math.fsum(f) / trials
    se = float(np.std(f, ddof=1) / math.sqrt(trials)) if trials > 1 else math.inf
    return ExpMu2Estimate(est, "monte-carlo", int(trials), se)


def exp_mu2_max(
    graphon,
    gamma: float,
    n_min: int,
    n_max: int,
    method: str = "auto",
    trials: int | None = None,
    seed: int = 0,
) -> ExpMu2Estimate:
    """Max over ``n in [n_min, n_max]`` of ``E[exp(-2 gamma mu_2^(n))]``.

    Each size gets its own random stream derived from ``seed`` and ``n``.
    The result carries the argmax size and the per-size table.
    """
    if not (2 <= n_min < n_max):
        raise DomainError(f"need 2 <= n_min < n_max, got [{n_min}, {n_max}]")
    rows = []
    methods = set()
    for n in range(n_min, n_max + 1):
        est = exp_mu2(
            expected_graph(graphon, n),
            gamma,
            method=method,
            trials=trials,
            rng=substream(seed, n, "estimate"),
        )
        methods.add(est.method)
        rows.append((n, est.estimate, est.stderr, est.trials))
    best = max(rows, key=lambda r: r[1])
    return ExpMu2Estimate(
        best[1],
        "exact" if methods == {"exact"} else "monte-carlo",
        best[3],
        best[2],
        argmax_n=best[0],
        per_n=tuple((n, e, s) for n, e, s, _ in rows),
    )

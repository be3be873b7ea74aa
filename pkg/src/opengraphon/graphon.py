"""Graphons, their degree functions, and two-stage graph sampling.

A graph of size ``n`` is drawn from a graphon ``W`` in two steps. First, the
expected graph puts the deterministic latent points ``u_i = i/n``
(``i = 1..n``) on ``[0, 1]`` and weights every pair with ``W(u_i, u_j)``.
Second, every unordered pair of distinct vertices is connected with that
weight as an independent Bernoulli probability.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from os import PathLike
from typing import Any, Callable, NamedTuple

import numpy as np

from ._errors import ContractViolation, DomainError
from ._rng import as_generator

QUADRATURE_NODES = 2048
INF_GRID_POINTS = 1025

_CHECK_GRID = np.linspace(0.0, 1.0, 17)


@dataclass(frozen=True)
class PiecewiseLipschitz:
    """Intervals ``[a_{k-1}, a_k)`` on which the graphon is ``lipschitz``-Lipschitz."""

    boundaries: tuple[float, ...]
    lipschitz: float

    def __post_init__(self):
        b = np.asarray(self.boundaries, dtype=float)
        if b.ndim != 1 or b.size < 2 or b[0] != 0.0 or b[-1] != 1.0:
            raise ContractViolation("boundaries must start at 0 and end at 1")
        if np.any(np.diff(b) <= 0):
            raise ContractViolation("boundaries must be strictly increasing")
        if self.lipschitz < 0:
            raise ContractViolation("Lipschitz constant must be nonnegative")

    @property
    def pieces(self) -> int:
        """Number of interior boundary points (``K`` pieces beyond the first)."""
        return len(self.boundaries) - 2

    @property
    def min_width(self) -> float:
        return float(np.min(np.diff(self.boundaries)))


class Graphon:
    """A symmetric kernel ``w(x, y)`` with values in ``[0, 1]``.

    ``func`` must accept broadcastable numpy arrays. Symmetry and range are
    checked on a 17x17 grid at construction.
    """

    def __init__(
        self,
        func: Callable[[np.ndarray, np.ndarray], np.ndarray],
        piecewise: PiecewiseLipschitz | None = None,
        name: str | None = None,
    ):
        self._func = func
        self.piecewise = piecewise
        self.name = name or getattr(func, "__name__", "graphon")
        self._validate()

    def __call__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.broadcast_to(np.asarray(self._func(x, y), dtype=float), np.broadcast(x, y).shape)
        return out if out.ndim else float(out)

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"

    def _validate(self):
        xs, ys = np.meshgrid(_CHECK_GRID, _CHECK_GRID, indexing="ij")
        w = self(xs, ys)
        if not np.all(np.isfinite(w)) or w.min() < 0.0 or w.max() > 1.0:
            raise ContractViolation(f"{self!r} takes values outside [0, 1]")
        if not np.allclose(w, w.T, rtol=0.0, atol=1e-12):
            raise ContractViolation(f"{self!r} is not symmetric")


class SbmGraphon(Graphon):
    """Piecewise constant graphon ``sum_ij P_ij 1[x in B_i] 1[y in B_j]``.

    Blocks are the right-closed intervals ``(b_{k-1}, b_k]``; the point 0
    belongs to the first block. With latent points ``u_i = i/n`` this puts
    exactly ``n |B_k|`` points in block ``k`` whenever that count is an integer.
    """

    def __init__(self, boundaries, P, name: str | None = None):
        boundaries = tuple(float(b) for b in boundaries)
        P = np.array(P, dtype=float)
        m = len(boundaries) - 1
        if P.shape != (m, m):
            raise ContractViolation(f"P must be {m}x{m} for {m} blocks, got {P.shape}")
        if not np.array_equal(P, P.T):
            raise ContractViolation("P must be symmetric")
        if P.min() < 0.0 or P.max() > 1.0:
            raise ContractViolation("P entries must lie in [0, 1]")
        P.setflags(write=False)
        self.boundaries = boundaries
        self.P = P
        super().__init__(
            self._evaluate,
            PiecewiseLipschitz(boundaries, 0.0),
            name=name or f"sbm{m}",
        )

    @property
    def m(self) -> int:
        return len(self.boundaries) - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.boundaries)

    def block_of(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.boundaries, x, side="left") - 1
        return np.clip(idx, 0, self.m - 1)

    def _evaluate(self, x, y):
        return self.P[self.block_of(x), self.block_of(y)]

    def block_degrees(self) -> np.ndarray:
        return self.P @ self.widths


def constant_graphon(p: float) -> SbmGraphon:
    """``W = p`` everywhere, as a one-block SBM."""
    return SbmGraphon((0.0, 1.0), [[p]], name=f"const{p:g}")


def two_block_sbm(p_in: float, p_out: float, split: float = 0.5) -> SbmGraphon:
    return SbmGraphon(
        (0.0, split, 1.0),
        [[p_in, p_out], [p_out, p_in]],
        name=f"sbm2({p_in:g},{p_out:g})",
    )


def _check_unit(x):
    x = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError("degree is defined for x in [0, 1]")
    return x


def degree(graphon: Graphon, x):
    """Degree function ``d(x) = int_0^1 W(x, y) dy``.

    Exact for SBM graphons. Otherwise a midpoint rule with
    ``QUADRATURE_NODES`` nodes, whose error is ``O(L / QUADRATURE_NODES^2)``
    for a smooth kernel, and ``O(jump / QUADRATURE_NODES)`` per discontinuity.
    """
    x = _check_unit(x)
    if isinstance(graphon, SbmGraphon):
        out = graphon.block_degrees()[graphon.block_of(x)]
    else:
        y = (np.arange(QUADRATURE_NODES) + 0.5) / QUADRATURE_NODES
        out = graphon(x[..., None], y).mean(axis=-1)
    return out if np.ndim(out) else float(out)


class DegreeExtremum(NamedTuple):
    value: float
    grid_points: int | None  # None when exact


def inf_degree(graphon: Graphon) -> DegreeExtremum:
    """Infimum of the degree function.

    Exact (minimum over blocks) for SBM graphons; otherwise the minimum over
    ``INF_GRID_POINTS`` equispaced points, reported in ``grid_points``.
    """
    if isinstance(graphon, SbmGraphon):
        return DegreeExtremum(float(graphon.block_degrees().min()), None)
    xs = np.linspace(0.0, 1.0, INF_GRID_POINTS)
    return DegreeExtremum(float(np.min(degree(graphon, xs))), INF_GRID_POINTS)


def max_degree(graphon: Graphon) -> DegreeExtremum:
    if isinstance(graphon, SbmGraphon):
        return DegreeExtremum(float(graphon.block_degrees().max()), None)
    xs = np.linspace(0.0, 1.0, INF_GRID_POINTS)
    return DegreeExtremum(float(np.max(degree(graphon, xs))), INF_GRID_POINTS)


def latent_points(n: int) -> np.ndarray:
    return np.arange(1, n + 1, dtype=float) / n


@dataclass(frozen=True)
class ExpectedGraph:
    """Complete weighted graph with ``adjacency[i, j] = W(u_i, u_j)``, zero diagonal."""

    n: int
    latent: np.ndarray = field(repr=False)
    adjacency: np.ndarray = field(repr=False)

    @property
    def pair_probabilities(self) -> np.ndarray:
        """Edge probabilities of the pairs ``i < j`` in row-major order."""
        return self.adjacency[np.triu_indices(self.n, 1)]

    @property
    def deterministic(self) -> bool:
        """True when every pair probability is 0 or 1, so sampling has one outcome."""
        p = self.pair_probabilities
        return bool(np.all((p == 0.0) | (p == 1.0)))


@dataclass(frozen=True)
class SimpleGraph:
    n: int
    adjacency: np.ndarray = field(repr=False)

    @property
    def edge_count(self) -> int:
        return int(self.adjacency.sum()) // 2


def expected_graph(graphon: Graphon, n: int) -> ExpectedGraph:
    if int(n) != n or n < 1:
        raise DomainError(f"graph size must be a positive integer, got {n}")
    n = int(n)
    u = latent_points(n)
    w = np.asarray(graphon(u[:, None], u[None, :]), dtype=float).reshape(n, n)
    # mirror the strict upper triangle: exact symmetry, zero diagonal
    upper = np.triu(w, 1)
    adj = upper + upper.T
    u.setflags(write=False)
    adj.setflags(write=False)
    return ExpectedGraph(n, u, adj)


def pairs_to_adjacency(edges: np.ndarray, n: int) -> np.ndarray:
    """Expand ``(..., n(n-1)/2)`` row-major pair indicators into ``(..., n, n)``."""
    edges = np.asarray(edges)
    iu, ju = np.triu_indices(n, 1)
    out = np.zeros(edges.shape[:-1] + (n, n), dtype=edges.dtype)
    out[..., iu, ju] = edges
    out[..., ju, iu] = edges
    return out


def sample_simple_graph(expected: ExpectedGraph, rng=None) -> SimpleGraph:
    """Draw one graph: one uniform per pair ``i < j`` in row-major order.

    Pair ``(i, j)`` is an edge when its uniform is below ``adjacency[i, j]``.
    """
    rng = as_generator(rng)
    p = expected.pair_probabilities
    edges = rng.random(p.size) < p
    adj = pairs_to_adjacency(edges, expected.n)
    adj.setflags(write=False)
    return SimpleGraph(expected.n, adj)


# -- structured text documents ------------------------------------------------


def graphon_from_dict(doc: dict[str, Any]) -> SbmGraphon:
    """Build a graphon from a JSON-compatible document.

    Accepted forms::

        {"kind": "sbm", "boundaries": [0, 0.5, 1], "P": [[0.8, 0.2], [0.2, 0.8]]}
        {"kind": "constant", "p": 0.5}

    ``kind`` defaults to ``"sbm"``.
    """
    if not isinstance(doc, dict):
        raise ContractViolation("graphon document must be a JSON object")
    kind = doc.get("kind", "sbm")
    name = doc.get("name")
    if kind == "constant":
        if "p" not in doc:
            raise ContractViolation("constant graphon needs field 'p'")
        g = constant_graphon(float(doc["p"]))
        return g if name is None else SbmGraphon(g.boundaries, g.P, name=name)
    if kind == "sbm":
        for key in ("boundaries", "P"):
            if key not in doc:
                raise ContractViolation(f"sbm graphon needs field {key!r}")
        return SbmGraphon(doc["boundaries"], doc["P"], name=name)
    raise ContractViolation(f"unknown graphon kind {kind!r}")


def graphon_to_dict(graphon: Graphon) -> dict[str, Any]:
    if not isinstance(graphon, SbmGraphon):
        raise ContractViolation("only SBM graphons have a document form")
    return {
        "kind": "sbm",
        "name": graphon.name,
        "boundaries": list(graphon.boundaries),
        "P": graphon.P.tolist(),
    }


def load_graphon(path: str | PathLike) -> SbmGraphon:
    with open(path) as fh:
        return graphon_from_dict(json.load(fh))


def dump_graphon(graphon: Graphon, path: str | PathLike) -> None:
    with open(path, "w") as fh:
        json.dump(graphon_to_dict(graphon), fh, indent=2)

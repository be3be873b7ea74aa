"""Linear consensus ``dx/dt = -L x`` on a fixed graph, and the disagreement.

Between two events the Laplacian is constant, so the flow is the matrix
exponential ``exp(-L dt)``. It is applied through the symmetric
eigendecomposition ``L = Q diag(lam) Q^T``, which is exact up to the
eigensolver and avoids step-size control entirely.
"""

from __future__ import annotations

import numpy as np

from ._errors import ContractViolation, DomainError
from .graphon import ExpectedGraph, SimpleGraph
from .spectral import laplacian


def disagreement(x) -> float:
    """``V(x) = |x|^2 / n - mean(x)^2``, evaluated as a population variance."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise DomainError("disagreement of an empty state")
    return float(np.var(x))


class Propagator:
    """Flow map of one graph; the eigendecomposition is computed once."""

    def __init__(self, graph):
        a = graph.adjacency if isinstance(graph, (SimpleGraph, ExpectedGraph)) else graph
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ContractViolation(f"adjacency must be square, got {a.shape}")
        self.n = a.shape[0]
        self.eigenvalues, self.eigenvectors = np.linalg.eigh(laplacian(a))

    @property
    def lambda2(self) -> float:
        return float(self.eigenvalues[1]) if self.n >= 2 else 0.0

    def __call__(self, x, dt: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ContractViolation(f"state of length {x.shape} on a graph of size {self.n}")
        if dt < 0:
            raise DomainError("dt must be nonnegative")
        if dt == 0:
            return x.copy()
        q = self.eigenvectors
        return q @ (np.exp(-self.eigenvalues * dt) * (q.T @ x))


def propagate(x, graph, dt: float) -> np.ndarray:
    """``exp(-L dt) x`` for the Laplacian ``L`` of ``graph``."""
    return Propagator(graph)(x, dt)


def batch_propagate(
    eigenvalues: np.ndarray, eigenvectors: np.ndarray, x: np.ndarray, dt: float
) -> np.ndarray:
    """Propagate a ``(T, n)`` stack of states with stacked eigendecompositions."""
    if dt == 0:
        return np.array(x, dtype=float)
    coef = np.matmul(x[:, None, :], eigenvectors)[:, 0, :]
    coef *= np.exp(-eigenvalues * dt)
    return np.matmul(eigenvectors, coef[:, :, None])[:, :, 0]

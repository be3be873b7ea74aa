"""Open multi-agent consensus: replacements, arrivals and departures.

Each step of a simulation does three things. It samples a fresh topology of
the current size from the graphon, runs consensus on it for
``gamma / n`` time units, and then applies one event. Trials run in batches.
The eigendecompositions of a batch are stacked, but every trial reads its own
random sub-streams, keyed by ``(seed, trial, purpose)``. A trajectory
therefore depends only on its configuration, seed and trial index, and not
on which other trials share its batch.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from os import PathLike
from typing import Sequence

import numpy as np

from ._errors import ContractViolation, DomainError
from ._rng import as_generator, substream
from .consensus import batch_propagate
from .graphon import Graphon, expected_graph, pairs_to_adjacency
from .spectral import laplacian

REPLACEMENT = "replacement"
ARRIVAL = "arrival"
DEPARTURE = "departure"


@dataclass(frozen=True)
class ArrivalDistribution:
    """Zero-mean law of a newcomer's state: Gaussian, or uniform on ``±sqrt(3 var)``."""

    family: str = "gaussian"
    variance: float = 1.0

    def __post_init__(self):
        if self.family not in ("gaussian", "uniform"):
            raise DomainError(f"unknown arrival family {self.family!r}")
        if self.variance < 0:
            raise DomainError("variance must be nonnegative")

    def sample(self, rng, size=None):
        if self.family == "gaussian":
            return rng.normal(0.0, np.sqrt(self.variance), size)
        half = np.sqrt(3.0 * self.variance)
        return rng.uniform(-half, half, size)


# -- single events -----------------------------------------------------------------


def _uniform_index(rng, n: int) -> int:
    return min(int(rng.random() * n), n - 1)


def apply_departure(x, rng=None) -> np.ndarray:
    """Remove one agent chosen uniformly at random."""
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise DomainError("a departure would leave the system empty")
    return np.delete(x, _uniform_index(as_generator(rng), x.size))


def apply_arrival(x, dist: ArrivalDistribution, rng=None) -> np.ndarray:
    """Append one newcomer drawn from ``dist``."""
    rng = as_generator(rng)
    return np.append(np.asarray(x, dtype=float), dist.sample(rng))


def apply_replacement(x, dist: ArrivalDistribution, rng=None) -> np.ndarray:
    """Overwrite a uniformly chosen agent with a fresh draw (index first, then value)."""
    x = np.array(x, dtype=float)
    if x.size < 2:
        raise DomainError("replacements need at least two agents")
    rng = as_generator(rng)
    x[_uniform_index(rng, x.size)] = dist.sample(rng)
    return x


# -- configurations ----------------------------------------------------------------


def _check_initial(initial):
    if isinstance(initial, str):
        if initial not in ("random", "constant"):
            raise DomainError(f"initial rule must be 'random', 'constant' or a vector, got {initial!r}")
        return initial
    return tuple(float(v) for v in initial)


@dataclass(frozen=True)
class ReplacementConfig:
    """Fixed-size system with one replacement every ``gamma / n`` time units."""

    graphon: Graphon
    n: int
    gamma: float
    sigma2: float = 1.0
    family: str = "gaussian"
    k_max: int = 1000
    initial: str | tuple = "random"
    initial_value: float = 0.0
    seed: int = 0
    resample_topology: bool = True

    def __post_init__(self):
        if self.n < 2:
            raise DomainError("replacement systems need n >= 2")
        if self.k_max < 1:
            raise DomainError("k_max must be >= 1")
        if self.gamma < 0:
            raise DomainError("gamma must be nonnegative")
        object.__setattr__(self, "initial", _check_initial(self.initial))
        if isinstance(self.initial, tuple) and len(self.initial) != self.n:
            raise ContractViolation("explicit initial state must have n entries")
        ArrivalDistribution(self.family, self.sigma2)

    @property
    def dt(self) -> float:
        return self.gamma / self.n

    @property
    def distribution(self) -> ArrivalDistribution:
        return ArrivalDistribution(self.family, self.sigma2)


@dataclass(frozen=True)
class OpenSystemConfig:
    """Arrivals and departures with size confined to ``[n_min, n_max]``.

    At size ``n`` the next event is a departure with probability
    ``tau (n - n_min)`` and an arrival otherwise, where
    ``tau = 1 / (n_max - n_min)``.
    """

    graphon: Graphon
    n_min: int
    n_max: int
    gamma: float
    sigma2: float = 1.0
    n0: int | None = None
    family: str = "gaussian"
    k_max: int = 1000
    initial: str | tuple = "random"
    initial_value: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_min < 1 or self.n_max <= self.n_min:
            raise DomainError(f"need 1 <= n_min < n_max, got [{self.n_min}, {self.n_max}]")
        if self.n0 is None:
            object.__setattr__(self, "n0", (self.n_min + self.n_max) // 2)
        if not (self.n_min <= self.n0 <= self.n_max):
            raise DomainError(f"n0={self.n0} outside [{self.n_min}, {self.n_max}]")
        if self.k_max < 1:
            raise DomainError("k_max must be >= 1")
        if self.gamma < 0:
            raise DomainError("gamma must be nonnegative")
        object.__setattr__(self, "initial", _check_initial(self.initial))
        if isinstance(self.initial, tuple) and len(self.initial) != self.n0:
            raise ContractViolation("explicit initial state must have n0 entries")
        ArrivalDistribution(self.family, self.sigma2)

    @property
    def tau(self) -> float:
        return 1.0 / (self.n_max - self.n_min)

    @property
    def distribution(self) -> ArrivalDistribution:
        return ArrivalDistribution(self.family, self.sigma2)


def departure_probability(n: int, n_min: int, n_max: int) -> float:
    if not (n_min <= n <= n_max):
        raise DomainError(f"size {n} outside [{n_min}, {n_max}]")
    return (n - n_min) / (n_max - n_min)


def next_event(n: int, cfg: OpenSystemConfig, rng=None) -> str:
    """Departure with probability ``tau (n - n_min)``, else arrival."""
    p_dep = departure_probability(n, cfg.n_min, cfg.n_max)
    return DEPARTURE if as_generator(rng).random() < p_dep else ARRIVAL


# -- trajectories ------------------------------------------------------------------

CSV_COLUMNS = ("k", "t", "event", "n_before", "n_after", "V_before", "V_after", "mu2")


@dataclass
class Trajectory:
    """Per-event record of one trial.

    Row ``k`` (1-based) describes the interval that ends in event ``k``:
    ``mu2`` is the topology used on that interval, ``v_before`` the
    disagreement at its end, and ``v_after`` the disagreement right after the
    event. ``t`` is nondecreasing; it stays flat when ``gamma = 0``.
    """

    t: np.ndarray
    event: np.ndarray
    n_before: np.ndarray
    n_after: np.ndarray
    v_before: np.ndarray
    v_after: np.ndarray
    mu2: np.ndarray
    v0: float
    final_state: np.ndarray = field(repr=False)

    @property
    def k(self) -> np.ndarray:
        return np.arange(1, len(self.t) + 1)

    def __len__(self):
        return len(self.t)

    def _tail(self, burn_in: float) -> slice:
        if not (0.0 <= burn_in < 1.0):
            raise DomainError("burn-in fraction must lie in [0, 1)")
        return slice(int(np.floor(len(self) * burn_in)), None)

    def steady_state(self, burn_in: float = 0.5) -> float:
        """Mean post-event disagreement after discarding the burn-in fraction."""
        return float(np.mean(self.v_after[self._tail(burn_in)]))

    def mean_size(self, burn_in: float = 0.5) -> float:
        return float(np.mean(self.n_after[self._tail(burn_in)]))

    def to_csv(self, path: str | PathLike) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for row in zip(
                self.k, self.t, self.event, self.n_before, self.n_after,
                self.v_before, self.v_after, self.mu2,
            ):
                k, t, ev, nb, na, vb, va, m = row
                w.writerow([k, repr(float(t)), ev, nb, na, repr(float(vb)), repr(float(va)), repr(float(m))])


# -- engines -----------------------------------------------------------------------


def _initial_state(cfg, trial: int, n: int) -> np.ndarray:
    if isinstance(cfg.initial, tuple):
        return np.array(cfg.initial, dtype=float)
    if cfg.initial == "constant":
        return np.full(n, float(cfg.initial_value))
    return np.asarray(cfg.distribution.sample(substream(cfg.seed, trial, "initial"), n), dtype=float)


class _TopologySampler:
    """Stacked eigendecompositions of freshly sampled graphs of one size."""

    def __init__(self, graphon: Graphon, n: int):
        self.n = n
        self.expected = expected_graph(graphon, n)
        self.p = self.expected.pair_probabilities
        self.fixed = None
        if self.expected.deterministic:
            self.fixed = np.linalg.eigh(laplacian(self.expected.adjacency))

    def sample(self, gens: Sequence[np.random.Generator]):
        if self.fixed is not None:
            w, q = self.fixed
            return np.broadcast_to(w, (len(gens), self.n)), q
        u = np.stack([g.random(self.p.size) for g in gens]) if self.p.size else np.empty((len(gens), 0))
        adj = pairs_to_adjacency((u < self.p).astype(float), self.n)
        return np.linalg.eigh(laplacian(adj))


def _mu2_of(w: np.ndarray, n: int) -> np.ndarray:
    if n < 2:
        return np.full(w.shape[0], np.nan)
    return w[..., 1] / n


def simulate_replacement_trials(cfg: ReplacementConfig, trials: Sequence[int]) -> list[Trajectory]:
    """Run the listed trials of a replacement system as one batch."""
    trials = list(trials)
    T, n, K, dt = len(trials), cfg.n, cfg.k_max, cfg.dt
    dist = cfg.distribution
    sampler = _TopologySampler(cfg.graphon, n)
    topo = [substream(cfg.seed, t, "topology") for t in trials]
    ev_gens = [substream(cfg.seed, t, "events") for t in trials]
    # per trial: K index uniforms, then K newcomer states
    idx = np.empty((T, K), dtype=np.int64)
    vals = np.empty((T, K))
    for j, g in enumerate(ev_gens):
        idx[j] = np.minimum((g.random(K) * n).astype(np.int64), n - 1)
        vals[j] = dist.sample(g, K)

    x = np.stack([_initial_state(cfg, t, n) for t in trials])
    v0 = x.var(axis=1)
    vb = np.empty((T, K))
    va = np.empty((T, K))
    m2 = np.empty((T, K))
    rows = np.arange(T)
    w = q = None
    for k in range(K):
        if w is None or cfg.resample_topology:
            w, q = sampler.sample(topo)
        x = batch_propagate(w, q, x, dt)
        vb[:, k] = x.var(axis=1)
        m2[:, k] = _mu2_of(w, n)
        x[rows, idx[:, k]] = vals[:, k]
        va[:, k] = x.var(axis=1)

    t_axis = np.cumsum(np.full(K, dt))
    sizes = np.full(K, n)
    events = np.full(K, REPLACEMENT)
    return [
        Trajectory(t_axis.copy(), events.copy(), sizes.copy(), sizes.copy(),
                   vb[j], va[j], m2[j], float(v0[j]), x[j].copy())
        for j in range(T)
    ]


def simulate_replacements(cfg: ReplacementConfig, trial: int = 0) -> Trajectory:
    """One trial: sample topology, propagate ``gamma/n``, replace; ``k_max`` times.

    With ``resample_topology=False`` the first sampled topology is kept for
    the whole run.
    """
    return simulate_replacement_trials(cfg, [trial])[0]


def simulate_open_trials(cfg: OpenSystemConfig, trials: Sequence[int]) -> list[Trajectory]:
    """Run the listed trials of an arrival/departure system as one batch."""
    trials = list(trials)
    T, K = len(trials), cfg.k_max
    dist = cfg.distribution
    topo = [substream(cfg.seed, t, "topology") for t in trials]
    u_kind = np.empty((T, K))
    u_idx = np.empty((T, K))
    vals = np.empty((T, K))
    for j, t in enumerate(trials):
        g = substream(cfg.seed, t, "events")
        u_kind[j] = g.random(K)
        u_idx[j] = g.random(K)
        vals[j] = dist.sample(g, K)

    states = [_initial_state(cfg, t, cfg.n0) for t in trials]
    v0 = [float(np.var(s)) for s in states]
    size = np.full(T, cfg.n0)
    nb = np.empty((T, K), dtype=np.int64)
    na = np.empty((T, K), dtype=np.int64)
    vb = np.empty((T, K))
    va = np.empty((T, K))
    m2 = np.empty((T, K))
    tt = np.zeros((T, K))
    is_dep = np.zeros((T, K), dtype=bool)
    samplers: dict[int, _TopologySampler] = {}
    clock = np.zeros(T)

    for k in range(K):
        for n in np.unique(size):
            n = int(n)
            members = np.flatnonzero(size == n)
            sampler = samplers.get(n)
            if sampler is None:
                sampler = samplers[n] = _TopologySampler(cfg.graphon, n)
            w, q = sampler.sample([topo[j] for j in members])
            dt = cfg.gamma / n
            x = batch_propagate(w, q, np.stack([states[j] for j in members]), dt)
            m2[members, k] = _mu2_of(w, n)
            for row, j in enumerate(members):
                states[j] = x[row]
            clock[members] += dt
        tt[:, k] = clock
        for j in range(T):
            n = int(size[j])
            x = states[j]
            nb[j, k] = n
            vb[j, k] = np.var(x)
            if u_kind[j, k] < (n - cfg.n_min) * cfg.tau:
                is_dep[j, k] = True
                x = np.delete(x, min(int(u_idx[j, k] * n), n - 1))
            else:
                x = np.append(x, vals[j, k])
            states[j] = x
            size[j] = x.size
            na[j, k] = x.size
            va[j, k] = np.var(x)
        if size.min() < cfg.n_min or size.max() > cfg.n_max:
            raise AssertionError("size process left [n_min, n_max]")

    return [
        Trajectory(tt[j], np.where(is_dep[j], DEPARTURE, ARRIVAL), nb[j], na[j],
                   vb[j], va[j], m2[j], v0[j], states[j])
        for j in range(T)
    ]


def simulate_open(cfg: OpenSystemConfig, trial: int = 0) -> Trajectory:
    """One trial of the arrival/departure system (propagate first, then the event)."""
    return simulate_open_trials(cfg, [trial])[0]

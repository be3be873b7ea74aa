"""Closed-form disagreement bounds and the estimator of ``E[exp(-2 gamma mu_2)]``.

``E-term`` below always means ``E[exp(-2 gamma mu_2)]`` for the topology
distribution at hand, a number in ``(0, 1]``.

Formula tags carried by :class:`BoundReport`:

``thm1``
    steady-state disagreement under replacements at fixed size ``n``;
``thm2``
    steady-state disagreement under arrivals/departures in ``[n_min, n_max]``;
``thm3``
    upper bound on the E-term from the expected graph's ``mu_2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from os import PathLike
from typing import NamedTuple

from ._errors import ContractViolation, DomainError, HypothesisViolation
from .graphon import Graphon, max_degree

DEFAULT_EPSILON = math.exp(-1.0) / 2.0


@dataclass(frozen=True)
class BoundReport:
    """A bound value with its inputs and the conditions it was checked against.

    ``value`` is ``None`` when the formula could not be evaluated. A report
    is ``valid`` only if every flag holds.
    """

    value: float | None
    formula: str
    inputs: dict
    flags: dict = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return self.value is not None and all(self.flags.values())

    @property
    def failed(self) -> list[str]:
        return [k for k, ok in self.flags.items() if not ok]

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "formula": self.formula,
            "inputs": dict(self.inputs),
            "flags": dict(self.flags),
            "valid": self.valid,
        }

    def to_json(self, path: str | PathLike) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


class EventMaps(NamedTuple):
    continuous: float
    departure: float
    arrival: float
    replacement: float


def event_maps(V: float, n: int, sigma2: float, lambda2: float, dt: float) -> EventMaps:
    """Right-hand sides of the one-step disagreement recursions at size ``n``.

    ``continuous`` is the decay over ``dt`` at connectivity ``lambda2``. The
    other three are the expected post-event disagreement (departure exact,
    arrival and replacement upper bounds).
    """
    if n < 2:
        raise DomainError("event maps need n >= 2")
    return EventMaps(
        V * math.exp(-2.0 * lambda2 * dt),
        (1.0 - 1.0 / (n - 1) ** 2) * V,
        n / (n + 1) * V + sigma2 / (n + 1),
        (n * n - n - 1) / n**2 * V + (n * n - 1) / n**3 * sigma2,
    )


def _check_e_term(e_term: float):
    if not (0.0 < e_term <= 1.0):
        raise DomainError(f"E-term must lie in (0, 1], got {e_term}")


def replacement_bound(
    n: int, sigma2: float, gamma: float, e_term: float, e_source: str = "given"
) -> BoundReport:
    """``limsup E[V] <= sigma2 (n^2-1) / (n (n^2 - (n^2-n-1) e_term))``.

    ``e_term = exp(-2 gamma mu_2)`` of a fixed graph gives the variant in
    which the topology is never resampled.
    """
    if n < 2:
        raise DomainError("replacement bound needs n >= 2")
    _check_e_term(e_term)
    denom = n * (n * n - (n * n - n - 1) * e_term)
    return BoundReport(
        sigma2 * (n * n - 1) / denom,
        "thm1",
        {"n": n, "sigma2": sigma2, "gamma": gamma, "e_term": e_term, "e_source": e_source},
        {"denominator_positive": denom > 0},
    )


def open_bound(
    n_min: int, n_max: int, sigma2: float, gamma: float, e_term_max: float, e_source: str = "given"
) -> BoundReport:
    """``sigma2 (n_max-1)^2 / (2 (n_min+1) ((n_max-1)^2 - n_max (n_max-2) e_term_max))``.

    Holds only for ``n_max > 3``. ``e_term_max`` is the largest E-term over
    the admissible sizes.
    """
    if n_max <= 3:
        raise HypothesisViolation(f"the arrival/departure bound needs n_max > 3, got {n_max}")
    if n_min < 1 or n_min > n_max:
        raise DomainError(f"need 1 <= n_min <= n_max, got [{n_min}, {n_max}]")
    _check_e_term(e_term_max)
    a = (n_max - 1) ** 2
    denom = 2 * (n_min + 1) * (a - n_max * (n_max - 2) * e_term_max)
    return BoundReport(
        sigma2 * a / denom,
        "thm2",
        {
            "n_min": n_min,
            "n_max": n_max,
            "sigma2": sigma2,
            "gamma": gamma,
            "e_term": e_term_max,
            "e_source": e_source,
        },
        {"denominator_positive": denom > 0, "n_max_gt_3": True},
    )


def psi(n: float, gamma: float) -> float:
    """Correction term of the E-term bound; ``O(1/sqrt(n))``.

    Defined when ``n > 9 gamma`` and ``sqrt(n log(2en)) >= 3 gamma``; raises
    :class:`DomainError` otherwise. The difference of square roots is
    rearranged as ``(b - a) / (sqrt(1-a) + sqrt(1-b))`` to avoid cancellation.
    """
    if gamma < 0:
        raise DomainError("gamma must be nonnegative")
    if gamma == 0:
        return 0.0
    log_term = math.log(2.0 * math.e * n)
    if n <= 9.0 * gamma or math.sqrt(n * log_term) < 3.0 * gamma:
        raise DomainError(f"psi undefined at n={n}, gamma={gamma}: needs n > 9 gamma")
    x1 = 4.0 / (9.0 * math.pi * n) * (n - 9.0 * gamma) ** 2
    x2 = (math.sqrt(n * log_term) - 3.0 * gamma) ** 2 / n
    a, b = math.exp(-x1), math.exp(-x2)
    diff = (b - a) / (math.sqrt(-math.expm1(-x1)) + math.sqrt(-math.expm1(-x2)))
    return 12.0 * gamma * math.sqrt(math.pi * n) * math.exp(9.0 * gamma**2 / n) * diff


class LargeEnough(NamedTuple):
    """The four size conditions under which the E-term bound holds."""

    interval_width: bool
    degree_margin: bool
    epsilon_tail: bool
    log_growth: bool

    @property
    def all(self) -> bool:
        return all(self)


def large_enough(
    n: int,
    epsilon: float = DEFAULT_EPSILON,
    pieces: int = 0,
    lipschitz: float = 0.0,
    max_degree: float = 1.0,
    min_width: float = 1.0,
) -> LargeEnough:
    """Check whether ``n`` is large enough for a piecewise Lipschitz graphon.

    ``pieces`` is the number of interior boundaries, ``min_width`` the
    narrowest interval. With no interior boundary the width condition is
    vacuous.
    """
    if not (0.0 < epsilon < math.exp(-1.0)):
        raise HypothesisViolation(f"epsilon must lie in (0, 1/e), got {epsilon}")
    if n < 1:
        raise DomainError("n must be positive")
    return LargeEnough(
        pieces == 0 or 2.0 / n < min_width,
        math.log(2.0 * n / epsilon) / n + (2 * pieces + 3 * lipschitz) / n < max_degree,
        n * math.exp(-n / 5.0) < epsilon,
        9.0 * math.log(2.0 * math.e * n) < n,
    )


def large_enough_for(graphon: Graphon, n: int, epsilon: float = DEFAULT_EPSILON) -> LargeEnough:
    pw = graphon.piecewise
    if pw is None:
        raise ContractViolation(f"{graphon!r} has no piecewise Lipschitz descriptor")
    return large_enough(
        n,
        epsilon,
        pieces=pw.pieces,
        lipschitz=pw.lipschitz,
        max_degree=max_degree(graphon).value,
        min_width=pw.min_width,
    )


def exp_mu2_bound(
    mu2_bar: float, n: int, gamma: float, size_check: LargeEnough | None = None
) -> BoundReport:
    """``E[exp(-2 gamma mu_2)] <= exp(-2 gamma mu2_bar) (exp(6 gamma sqrt(log(2en)/n)) + psi(n))``.

    ``mu2_bar`` is the normalized algebraic connectivity of the expected
    graph. The result is usable as an E-term only when flagged
    ``below_one``. Passing ``size_check`` adds its verdict as a flag.
    """
    if not (0.0 <= mu2_bar <= 1.0 + 1e-12):
        raise DomainError(f"mu2_bar must lie in [0, 1], got {mu2_bar}")
    inputs = {"mu2_bar": mu2_bar, "n": n, "gamma": gamma}
    flags = {}
    if size_check is not None:
        flags["large_enough"] = size_check.all
    try:
        p = psi(n, gamma)
    except DomainError:
        flags["psi_domain"] = False
        return BoundReport(None, "thm3", inputs, flags)
    flags["psi_domain"] = True
    value = math.exp(-2.0 * gamma * mu2_bar) * (
        math.exp(6.0 * gamma * math.sqrt(math.log(2.0 * math.e * n) / n)) + p
    )
    inputs["psi"] = p
    flags["below_one"] = value < 1.0
    return BoundReport(value, "thm3", inputs, flags)


def expected_n_limit(n_min: int, n_max: int) -> float:
    """Long-run mean size of the bounded arrival/departure process."""
    if n_max <= n_min:
        raise DomainError("need n_max > n_min")
    return (n_max + n_min) / 2.0


def size_recursion(mean_n: float, n_min: int, n_max: int) -> float:
    """One-step map ``E[n'] = (1 - 2 tau) E[n] + tau (n_max + n_min)``."""
    if n_max <= n_min:
        raise DomainError("need n_max > n_min")
    tau = 1.0 / (n_max - n_min)
    return (1.0 - 2.0 * tau) * mean_n + tau * (n_max + n_min)

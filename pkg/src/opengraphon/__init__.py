"""Open multi-agent consensus on graphs sampled from graphons."""

from ._errors import ContractViolation, DomainError, HypothesisViolation
from .bounds import (
    BoundReport,
    EventMaps,
    LargeEnough,
    event_maps,
    exp_mu2_bound,
    expected_n_limit,
    large_enough,
    large_enough_for,
    open_bound,
    psi,
    replacement_bound,
    size_recursion,
)
from .consensus import Propagator, disagreement, propagate
from .graphon import (
    ExpectedGraph,
    Graphon,
    PiecewiseLipschitz,
    SbmGraphon,
    SimpleGraph,
    constant_graphon,
    degree,
    expected_graph,
    graphon_from_dict,
    graphon_to_dict,
    inf_degree,
    load_graphon,
    max_degree,
    sample_simple_graph,
    two_block_sbm,
)
from .openmas import (
    ArrivalDistribution,
    OpenSystemConfig,
    ReplacementConfig,
    Trajectory,
    apply_arrival,
    apply_departure,
    apply_replacement,
    next_event,
    simulate_open,
    simulate_open_trials,
    simulate_replacement_trials,
    simulate_replacements,
)
from .spectral import (
    ExpMu2Estimate,
    LaplacianSpectrum,
    SbmReduction,
    exp_mu2,
    exp_mu2_max,
    laplacian_spectrum,
    mu2,
    sbm_mu2_analytic,
    sbm_reduction,
)

__version__ = "0.1.0"

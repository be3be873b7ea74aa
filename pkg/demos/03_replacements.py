"""
Replacements at fixed size
==========================

Every gamma/n time units one agent leaves and a newcomer with a random
opinion takes its place. The network is redrawn at each replacement.
Consensus pulls the disagreement down, replacements push it up, and the
two balance out in a steady state that the closed-form bound caps.
"""

import math

import numpy as np

from opengraphon import ReplacementConfig, constant_graphon, exp_mu2, expected_graph, replacement_bound, two_block_sbm
from opengraphon.harness import run_trials

n, trials = 10, 300
for name, W in [("complete", constant_graphon(1.0)), ("sbm", two_block_sbm(0.8, 0.2))]:
    for gamma in (0.25, 1.0, 4.0):
        cfg = ReplacementConfig(W, n, gamma, k_max=600, seed=1)
        steady = np.mean([t.steady_state() for t in run_trials(cfg, trials)])
        est = exp_mu2(expected_graph(W, n), gamma, "auto", 20_000, 0)
        bound = replacement_bound(n, 1.0, gamma, est.upper()).value
        print(f"{name:9s} gamma={gamma:<5} steady V = {steady:.4f}   bound = {bound:.4f}")

# the gamma -> 0 and gamma -> infinity ends of the bound
print("no consensus time:", replacement_bound(n, 1.0, 0.0, 1.0).value, "=", (n - 1) / n)
print("instant consensus:", replacement_bound(2, 1.0, 50.0, math.exp(-100)).value, "= 3/8")

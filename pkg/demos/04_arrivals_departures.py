"""
Arrivals and departures
=======================

The population wanders between n_min and n_max. At size n a departure
happens with probability (n - n_min)/(n_max - n_min), otherwise an arrival.
Its mean size settles at the midpoint.
"""

import numpy as np

from opengraphon import OpenSystemConfig, expected_n_limit, open_bound, two_block_sbm
from opengraphon.harness import ETermOptions, e_term_max, run_trials

W = two_block_sbm(0.8, 0.2)
cfg = OpenSystemConfig(W, 4, 10, gamma=1.0, k_max=800, n0=4, seed=2)
trajs = run_trials(cfg, 300)

sizes = np.array([t.n_after for t in trajs])
print("mean size after 1, 5, 20, 800 events:", sizes[:, [0, 4, 19, -1]].mean(axis=0).round(3))
print("limit:", expected_n_limit(4, 10))

steady = np.mean([t.steady_state() for t in trajs])
et = e_term_max(W, 4, 10, 1.0, ETermOptions(trials=5000), seed=0)
print(f"largest E-term {et.value:.4f} at n={et.estimate['argmax_n']}")
print(f"steady V = {steady:.4f}   bound = {open_bound(4, 10, 1.0, 1.0, et.value).value:.4f}")

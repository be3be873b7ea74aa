"""
Sampling graphs from a graphon
==============================

A two-block stochastic block model: agents in the same half connect with
probability 0.8, agents in different halves with probability 0.2.
"""

import numpy as np

from opengraphon import expected_graph, laplacian_spectrum, mu2, sample_simple_graph, two_block_sbm
from opengraphon._rng import substream

W = two_block_sbm(0.8, 0.2)

# the expected graph weights each pair with W(i/n, j/n)
eg = expected_graph(W, 8)
print(eg.adjacency)

# one realization; the same seed always gives the same graph
g = sample_simple_graph(expected_graph(W, 60), substream(0, 0, "topology"))
print("edges:", g.edge_count, "of", 60 * 59 // 2)

spec = laplacian_spectrum(g)
print("smallest normalized eigenvalues:", np.round(spec.mu[:4], 4))

# mu_2 of sampled graphs fluctuates around mu_2 of the expected graph
samples = [mu2(sample_simple_graph(expected_graph(W, 60), substream(0, t, "topology"))) for t in range(200)]
print(f"expected graph mu2 = {mu2(expected_graph(W, 60)):.4f}")
print(f"sampled mu2: mean {np.mean(samples):.4f}, sd {np.std(samples):.4f}")

"""
Algebraic connectivity of an SBM without the big eigenproblem
=============================================================

For an SBM the expected graph's mu_2 comes from an m x m matrix: the
smaller of lambda_2 of the reduced Laplacian and the block degrees.
"""

import time

from opengraphon import SbmGraphon, expected_graph, mu2, sbm_mu2_analytic, sbm_reduction, two_block_sbm

for p, q in [(0.8, 0.2), (0.2, 0.8)]:
    W = two_block_sbm(p, q)
    red = sbm_reduction(W, 100)
    print(f"p={p}, q={q}")
    print("  reduced adjacency:", red.adjacency.tolist())
    print("  block degrees:    ", red.degrees.tolist())
    print(f"  shortcut {sbm_mu2_analytic(W, 100):.6f}   dense {mu2(expected_graph(W, 100)):.6f}")

W = SbmGraphon((0, 0.2, 0.55, 1), [[0.9, 0.1, 0.3], [0.1, 0.6, 0.2], [0.3, 0.2, 0.7]])
t0 = time.perf_counter()
fast = sbm_mu2_analytic(W, 2000)
t1 = time.perf_counter()
slow = mu2(expected_graph(W, 2000))
t2 = time.perf_counter()
print(f"n=2000: shortcut {fast:.10f} in {t1 - t0:.4f} s, dense {slow:.10f} in {t2 - t1:.2f} s")

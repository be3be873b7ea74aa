"""
Bounding E[exp(-2 gamma mu_2)] from the expected graph
======================================================

For large n the random mu_2 concentrates around the expected graph's
value. The closed-form bound turns that into an upper bound on the
E-term, but it only drops below one once n is large.
"""

import numpy as np

from opengraphon import constant_graphon, exp_mu2, exp_mu2_bound, expected_graph, large_enough_for, psi, sbm_mu2_analytic

W = constant_graphon(0.5)
gamma = 0.25
for n in (100, 200, 400):
    check = large_enough_for(W, n)
    rep = exp_mu2_bound(sbm_mu2_analytic(W, n), n, gamma, check)
    est = exp_mu2(expected_graph(W, n), gamma, "monte-carlo", 300, n)
    print(f"n={n}: MC {est.estimate:.4f}  bound {rep.value:.4f}  usable={rep.valid}  flags={rep.flags}")

# the correction term shrinks like 1/sqrt(n)
for n in np.geomspace(1e3, 1e7, 5).astype(int):
    print(f"n={n:>8}  psi={psi(n, 1.0):.6f}  sqrt(n)*psi={np.sqrt(n) * psi(n, 1.0):.4f}")

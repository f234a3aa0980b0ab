"""
Fitting the network and choosing the penalty
=============================================

Every node is regressed on the others over a shared path of penalties.
StARS refits on subsamples and picks the smallest penalty whose edge set
is still stable.
"""

import numpy as np

from llgm import LlgmConfig, SimulationConfig, StabilityConfig, fit_llgm, simulate, tpr_fpr

X, A_true = simulate(SimulationConfig(p=30, n=200, graph_kind="hub", seed=1))

# a short path and 20 subsamples keep this quick; 100 and 100 are the defaults
cfg = LlgmConfig(path_length=30, stability=StabilityConfig(B=20, beta=0.05, seed=0))
fit = fit_llgm(X, cfg)

st = fit.stability
print("path", round(fit.path.rho_max, 2), "->", fit.path.rho_min)
print("rho_opt", round(fit.rho_opt, 4), "at index", st.selected_index)
print("edges selected", fit.adjacency.n_edges, "true", A_true.n_edges)

# instability rises as the penalty falls; the running max makes it monotone
for rho, d, dm in st.curve_rows()[::5]:
    print(f"  rho {rho:9.4f}  D {d:.3f}  monotone {dm:.3f}")

tpr, fpr = tpr_fpr(fit.adjacency, A_true)
print("TPR", round(tpr, 3), "FPR", round(fpr, 3))

# strongest edges by coefficient size
for a, b, w in sorted(fit.edges(), key=lambda e: -e[2])[:5]:
    print(" ", a, b, round(w, 3))

# the node coefficients themselves
theta = fit.theta.theta
print("nonzero coefficients", int(np.count_nonzero(theta)))

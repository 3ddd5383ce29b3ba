"""
Bounds and the feasible subsampling range
=========================================

How the single-subsample misclassification bound behaves as the
retention probability changes, and when a usable range for ``p_s`` exists.
"""

# %%
import numpy as np

from dpgcn import GcnModel, gcn_forward
from dpgcn.graph import SbmParams, generate_sbm, sbm_features
from dpgcn.theory import BoundInputs, InfeasibleError, bound_f, feasible_range, solve_ps_star

g, planted = generate_sbm(SbmParams(20, 0.5, 0.05), seed=0)
x = sbm_features(planted, 0.3, seed=1)
print(g)

# %%
# The bound only needs five numbers: n, ||L||, C_sigma, |h1| and the margin.
model = GcnModel(h0=1.0, h1=-0.05)
forward = gcn_forward(g, x, model)
inputs = BoundInputs.from_model(g, model, forward)
print(inputs)

for p in np.linspace(0.1, 1.0, 10):
    print(f"p_s={p:.1f}  f={bound_f(inputs, p, 0.25):.4f}")

# %%
# At p_s = 1 nothing is removed, yet f stays positive: the log term does not vanish.
# The lower endpoint is where n * f(p, 1/4) drops to 1. Here it never does.
try:
    solve_ps_star(inputs)
except InfeasibleError as exc:
    print(exc)

# %%
# A weaker filter shrinks the prefactor until a root appears.
model = GcnModel(h0=1.0, h1=-0.002)
inputs = BoundInputs.from_model(g, model, gcn_forward(g, x, model))
root, residual = solve_ps_star(inputs)
print("p_s* =", root, "residual", residual, "n*f =", g.n * bound_f(inputs, root, 0.25))

# %%
# The upper endpoint comes from the privacy side and is usually tiny.
for eps, delta in [(1.0, 0.01), (4.0, 0.05), (10.0, 0.5)]:
    print(eps, delta, feasible_range(inputs, eps, delta))

# %%
# A very weak filter leaves so much margin that p_s* is 0 and any small p_s works.
weak = BoundInputs(inputs.n, inputs.lap_norm, 1.0, 1e-4, inputs.gamma_min)
print(feasible_range(weak, 4.0, 0.05))

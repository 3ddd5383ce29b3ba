"""
Auditing privacy on neighboring graphs
======================================
"""

# %%
from dpgcn import GcnModel, MechanismConfig, audit_dp
from dpgcn.audit import constant_factory, raw_release_factory, subsample_gcn_factory
from dpgcn.graph import SbmParams, generate_sbm, sbm_features

g, planted = generate_sbm(SbmParams(20, 0.5, 0.05), seed=0)
x = sbm_features(planted, 0.3, seed=1)

# %%
# Sanity anchors: a constant output leaks nothing.
print(audit_dp(g, (0, 1), 2000, 1.0, 0.01, constant_factory()).eps_hat)

# %%
# Releasing raw labels leaks everything whenever the toggled edge changes a label.
model = GcnModel(h0=1.0, h1=-1.0, activation="identity")
for u in range(1, g.n):
    rep = audit_dp(g, (0, u), 200, 1.0, 0.01, raw_release_factory(x, model))
    if rep.infinite:
        print("edge", (0, u), "distinguishes the raw outputs")
        break

# %%
# The subsampled mechanism in a feasible configuration.
model = GcnModel(h0=1.0, h1=1e-4)
cfg = MechanismConfig(epsilon=4.0, delta=0.05, p_s=0.03)
rep = audit_dp(g, (0, 1), 20_000, 4.0, 0.05, subsample_gcn_factory(x, model, cfg))
print(rep.eps_hat, (rep.eps_lower, rep.eps_upper), rep.release_freq)

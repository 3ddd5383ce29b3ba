"""
Monte Carlo checks of the bounds
================================
"""

# %%
from dpgcn import GcnModel, MechanismConfig
from dpgcn.graph import SbmParams, generate_sbm, sbm_features
from dpgcn.verify import verify_bernstein, verify_theorem1, verify_theorem2

g, planted = generate_sbm(SbmParams(100, 0.5, 0.05), seed=0)
x = sbm_features(planted, 0.5, seed=1)

# %%
# Spectral norm of the perturbation versus its concentration bound.
rep = verify_bernstein(g, 0.5, 1000, 0.05, seed=0)
print(rep.violation_fraction, "allowed", rep.allowed, "identity gap", rep.variance_identity_diff)

# %%
# Misclassification rate of one subsample. Every trial also checks the
# deterministic flip-count inequality; that one must never fail.
rep = verify_theorem1(g, x, GcnModel(h1=-0.1), 0.8, 0.25, 1000, seed=0)
print(rep.violation_fraction, rep.lemma1_checked, rep.lemma1_violations)
print("largest Hamming distance:", max(r.hamming for r in rep.records))

# %%
# The consensus of m subsamples, before the release test.
cfg = MechanismConfig(epsilon=1.0, delta=0.01, p_s=0.8)
rep = verify_theorem2(g, x, GcnModel(h1=-0.3), cfg, 0.25, 50, seed=0)
print(rep.extras["bound"], rep.violation_fraction, rep.passed)

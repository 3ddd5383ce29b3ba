"""
Running the private labeling mechanism
======================================
"""

# %%
from dpgcn import GcnModel, MechanismConfig, SubsampleGcnMechanism
from dpgcn.graph import SbmParams, generate_sbm, sbm_features

g, planted = generate_sbm(SbmParams(50, 0.5, 0.05), seed=0)
x = sbm_features(planted, 0.5, seed=1)

# %%
# A strong filter so that subsamples actually disagree with the full graph.
model = GcnModel(h0=1.0, h1=-0.3)
config = MechanismConfig(epsilon=1.0, delta=0.01, p_s=0.8, seed=7)
mech = SubsampleGcnMechanism(g, x, model, config)
print("m =", mech.m, "certified:", mech.certified)

# %%
tally = mech.tally(config.seed)
print("c1, c2, distinct vectors:", tally.c1, tally.c2, tally.distinct)

out = mech.run()
print(out.to_dict()["released"], out.d_hat, out.d_tilde, out.threshold)

# %%
# With most subsamples differing from each other, the stability score is
# negative and the test refuses. Different seeds give different noise only.
print([mech.run(seed).released for seed in range(10)])

# %%
# Same seed, same answer, regardless of worker threads.
par = SubsampleGcnMechanism(g, x, model, MechanismConfig(1.0, 0.01, 0.8, seed=7, workers=4))
print(par.run().same_as(out))

import numpy as np
import pytest

from dpgcn.graph import SbmParams, build_graph, generate_sbm, sbm_features


@pytest.fixture
def p3():
    return build_graph(3, [(0, 1), (1, 2)])


@pytest.fixture
def k3():
    return build_graph(3, [(0, 1), (1, 2), (0, 2)])


def sbm_instance(n=50, p_in=0.5, p_out=0.05, seed=0, noise=0.5, feature_seed=1):
    g, planted = generate_sbm(SbmParams(n, p_in, p_out), seed)
    return g, sbm_features(planted, noise, feature_seed)


@pytest.fixture
def sbm50():
    return sbm_instance(50)


@pytest.fixture
def sbm20():
    return sbm_instance(20)


def random_graph(n, p, seed):
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    return build_graph(n, zip(iu[keep], ju[keep]))


def tune_h1(g, x, target_ps, h0=1.0, iters=30):
    """|h1| placing the lower feasible endpoint at ``target_ps`` (fixed-point on the margin)."""
    import math

    from dpgcn.gcn import GcnModel, gcn_forward
    from dpgcn.spectral import spectral_norm
    from dpgcn.theory import BoundInputs, ps_equation

    lap = spectral_norm(g.laplacian()).value
    h1 = 1e-3
    for _ in range(iters):
        fw = gcn_forward(g, x, GcnModel(h0=h0, h1=h1))
        inp = BoundInputs(g.n, lap, 1.0, h1, fw.gamma_min)
        h1 = fw.gamma_min / (math.sqrt(g.n) * (ps_equation(inp, target_ps) + inp.margin_budget))
    return h1

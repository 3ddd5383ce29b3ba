import numpy as np
import pytest

from dpgcn.graph import SbmParams, generate_sbm, laplacian
from dpgcn.spectral import SpectralNormError, power_iteration, spectral_norm


def _oracle(m):
    # General (non-symmetric) eigensolver as an independent path.
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def test_p3_and_k3(p3, k3):
    for g in (p3, k3):
        lap = laplacian(g)
        assert _oracle(lap) == pytest.approx(3.0, abs=1e-12)
        assert spectral_norm(lap).value == pytest.approx(3.0, abs=1e-12)
        assert spectral_norm(lap, method="power").value == pytest.approx(3.0, abs=1e-10)


def test_zero_matrix():
    for method in ("exact", "power"):
        assert spectral_norm(np.zeros((4, 4)), method=method).value == 0.0


def test_rejects_nonsymmetric():
    with pytest.raises(ValueError, match="symmetric"):
        spectral_norm(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_sign_invariance_on_indefinite():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((30, 30))
    m = a + a.T
    for method in ("exact", "power"):
        assert spectral_norm(-m, method=method).value == pytest.approx(
            spectral_norm(m, method=method).value, rel=1e-9)
    assert spectral_norm(m).value == pytest.approx(_oracle(m), rel=1e-12)


def test_power_matches_exact_on_100_sbm_laplacians():
    tol = 1e-10
    rng = np.random.default_rng(1)
    for seed in range(100):
        n = int(rng.choice([10, 20, 30, 40]))
        p_in = float(rng.uniform(0.2, 0.9))
        g, _ = generate_sbm(SbmParams(n, p_in, p_in * float(rng.uniform(0, 1))), seed)
        lap = laplacian(g)
        exact = spectral_norm(lap, method="exact").value
        power = spectral_norm(lap, tol=tol, method="power")
        assert abs(power.value - exact) <= tol * max(1.0, exact), (seed, power, exact)
        assert exact <= 2 * g.degrees.max() + 1e-12


def test_power_iteration_cap_raises_with_estimate():
    g, _ = generate_sbm(SbmParams(40, 0.5, 0.2), 0)
    with pytest.raises(SpectralNormError) as info:
        power_iteration(laplacian(g), tol=1e-14, max_iter=3)
    assert info.value.estimate > 0


def test_power_restarts_when_start_vector_is_null():
    # Node 0 isolated: the all-ones start plus a bump on node 0 lies in ker(L).
    from dpgcn.graph import build_graph
    lap = laplacian(build_graph(4, [(1, 2), (2, 3)]))
    assert spectral_norm(lap, method="power").value == pytest.approx(3.0, abs=1e-10)


def test_near_degenerate_top_eigenvalues():
    d = np.diag([5.0, -4.995, 4.99, 1.0, 0.0])
    q, _ = np.linalg.qr(np.random.default_rng(3).standard_normal((5, 5)))
    m = q @ d @ q.T
    m = 0.5 * (m + m.T)
    # The default cap (10 n log(1/tol)) is too small at n = 5 for this gap.
    with pytest.raises(SpectralNormError):
        power_iteration(m)
    res = power_iteration(m, max_iter=200_000)
    assert abs(res.value - 5.0) <= 1e-10 * 5


def test_large_matrix_defaults_to_power_iteration():
    g, _ = generate_sbm(SbmParams(600, 0.05, 0.01), 2)
    res = spectral_norm(laplacian(g))
    assert res.method == "power-iteration"
    exact = spectral_norm(laplacian(g), method="exact").value
    assert abs(res.value - exact) <= 1e-10 * exact

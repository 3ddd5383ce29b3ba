import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from dpgcn.theory import (BernsteinParams, BoundInputs, InfeasibleError, bound_aggregated,
                          bound_f, choose_m, dp_upper_ps, feasible_range, hoeffding_term,
                          perturbation_bound, ps_equation, solve_ps_star, theory_report)

HAND = BoundInputs(n=100, lap_norm=10.0, c_sigma=1.0, h1_abs=0.01, gamma_min=1.0)


def equation_oracle(inp, p):
    """The lower-endpoint equation, written out independently of the library."""
    L, n = inp.lap_norm, inp.n
    return ((1 - p) * L + np.sqrt(np.maximum(4 * L * np.log(8 * n) * p * (1 - p), 0))
            + 4 / 3 * np.log(8 * n) - inp.gamma_min / (np.sqrt(n) * inp.c_sigma * inp.h1_abs))


def f_oracle(inp, p, eta):
    pre = inp.c_sigma * inp.h1_abs / (math.sqrt(inp.n) * inp.gamma_min)
    lg = math.log(2 * inp.n / eta)
    return pre * ((1 - p) * inp.lap_norm + math.sqrt(4 * p * (1 - p) * inp.lap_norm * lg)
                  + 4 / 3 * lg)


def last_sign_change(inp, points=1_000_001):
    ps = np.linspace(0, 1, points)
    vals = equation_oracle(inp, ps)
    k = np.flatnonzero(vals >= 0)[-1]
    return ps[k], ps[k + 1]


def test_bound_f_at_full_retention():
    inp = BoundInputs(n=4, lap_norm=3.0, c_sigma=1.0, h1_abs=1.0, gamma_min=0.5)
    assert bound_f(inp, 1.0, 0.5) == pytest.approx(4 / 3 * math.log(16), rel=1e-15)
    assert bound_f(inp, 1.0, 0.5) == pytest.approx(3.6968, abs=1e-4)


def test_bound_f_minimized_at_full_retention():
    grid = np.linspace(0.001, 0.999, 999)
    for eta in (0.05, 0.25, 0.9):
        f1 = bound_f(HAND, 1.0, eta)
        assert all(f1 < bound_f(HAND, p, eta) for p in grid)


def test_bound_f_matches_oracle_and_scales_with_margin():
    for p in (0.1, 0.5, 0.93):
        assert bound_f(HAND, p, 0.2) == pytest.approx(f_oracle(HAND, p, 0.2), rel=1e-14)
    doubled = BoundInputs(n=100, lap_norm=10.0, c_sigma=1.0, h1_abs=0.01, gamma_min=2.0)
    assert bound_f(doubled, 0.4, 0.1) == bound_f(HAND, 0.4, 0.1) / 2


@pytest.mark.parametrize("kwargs", [dict(gamma_min=0.0), dict(gamma_min=-1.0)])
def test_bound_inputs_reject_nonpositive_margin(kwargs):
    with pytest.raises(ValueError):
        BoundInputs(n=10, lap_norm=1.0, c_sigma=1.0, h1_abs=1.0, **kwargs)


def test_bound_f_domain():
    with pytest.raises(ValueError):
        bound_f(HAND, 0.0, 0.5)
    with pytest.raises(ValueError):
        bound_f(HAND, 0.5, 1.0)


def test_bound_f_monotone_in_eta_and_margin():
    etas = np.linspace(0.01, 0.99, 60)
    for p in (0.2, 0.7, 1.0):
        vals = [bound_f(HAND, p, e) for e in etas]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        gammas = np.linspace(0.1, 5, 40)
        vals = [bound_f(BoundInputs(100, 10.0, 1.0, 0.01, gm), p, 0.3) for gm in gammas]
        assert all(a > b for a, b in zip(vals, vals[1:]))


def test_perturbation_bound_is_bracket():
    # n * bound_f with C |h1| / gamma = sqrt(n) scaling removed is the perturbation bound.
    inp = BoundInputs(n=50, lap_norm=7.0, c_sigma=1.0, h1_abs=1.0, gamma_min=1.0)
    for p in (0.3, 0.5, 0.8):
        assert perturbation_bound(50, 7.0, p, 0.1) == pytest.approx(
            bound_f(inp, p, 0.1) * math.sqrt(50), rel=1e-13)
    assert BernsteinParams.for_laplacian(7.0, 0.5).variance_proxy == 3.5


def test_aggregated_bound():
    f = bound_f(HAND, 0.9, 0.25)
    assert bound_aggregated(HAND, 0.9, 0.25, 10**15) == pytest.approx(f / 4, abs=1e-7)
    eta_vote = 2 / math.e ** 2  # log(2/eta_vote) = 2, so m = 10^4 gives 0.01
    assert bound_aggregated(HAND, 0.9, 0.25, 10_000, eta_vote) == pytest.approx(f / 4 + 0.01,
                                                                                 rel=1e-14)
    for m in (1, 7, 250):
        assert hoeffding_term(4 * m, 0.1) == pytest.approx(hoeffding_term(m, 0.1) / 2, rel=1e-14)
    with pytest.raises(ValueError):
        hoeffding_term(0, 0.1)


def test_ps_star_hand_fixture():
    lo, hi = last_sign_change(HAND)
    assert 0.9958 < lo < hi < 0.9959
    star, residual = solve_ps_star(HAND)
    assert lo <= star <= hi
    assert 0.9955 < star < 0.9965
    assert residual <= 1e-9
    assert abs(ps_equation(HAND, star)) <= 1e-9
    assert HAND.n * f_oracle(HAND, star, 0.25) == pytest.approx(1.0, rel=1e-6)


def test_ps_star_unsatisfiable():
    # g(1) = (4/3) log(8n) - gamma / (sqrt(n) C |h1|) > 0.
    tiny_margin = BoundInputs(n=100, lap_norm=10.0, c_sigma=1.0, h1_abs=0.01, gamma_min=0.5)
    assert equation_oracle(tiny_margin, 1.0) > 0
    with pytest.raises(InfeasibleError, match="unsatisfiable"):
        solve_ps_star(tiny_margin)
    rng = feasible_range(tiny_margin, 1.0, 0.01)
    assert not rng.feasible and "unsatisfiable" in rng.reason


def test_ps_star_slack_when_equation_negative_everywhere():
    loose = BoundInputs(n=100, lap_norm=10.0, c_sigma=1.0, h1_abs=1e-4, gamma_min=1.0)
    assert solve_ps_star(loose) == (0.0, None)
    rng = feasible_range(loose, 1.0, 0.01)
    assert rng.feasible and rng.ps_star == 0.0


bound_inputs = st.builds(
    BoundInputs,
    n=st.integers(2, 5000),
    lap_norm=st.floats(0.5, 200),
    c_sigma=st.sampled_from([0.25, 1.0]),
    h1_abs=st.floats(1e-4, 1.0),
    gamma_min=st.floats(1e-3, 1.0),
)


@settings(max_examples=200, deadline=None)
@given(bound_inputs)
def test_ps_star_identity_and_largest_root(inp):
    try:
        star, residual = solve_ps_star(inp)
    except InfeasibleError:
        assert equation_oracle(inp, 1.0) > 0
        return
    assume(residual is not None)
    assert residual <= 1e-9
    assume(star < 1.0)
    assert inp.n * f_oracle(inp, star, 0.25) == pytest.approx(1.0, rel=1e-6)
    # No sign change to the right of the returned root.
    right = np.linspace(star, 1, 2001)[1:]
    assert np.all(equation_oracle(inp, right) < 1e-9)


def test_ps_star_agrees_with_dense_scan():
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 5:
        inp = BoundInputs(n=int(rng.integers(10, 500)), lap_norm=float(rng.uniform(1, 50)),
                          c_sigma=1.0, h1_abs=float(rng.uniform(1e-3, 0.05)),
                          gamma_min=float(rng.uniform(0.05, 1)))
        try:
            star, res = solve_ps_star(inp)
        except InfeasibleError:
            continue
        if res is None:
            continue
        lo, hi = last_sign_change(inp)
        assert lo - 1e-12 <= star <= hi + 1e-12
        checked += 1


def test_ps_upper_examples():
    assert dp_upper_ps(1.0, 0.01) == pytest.approx(1 / (32 * 4.605170186), rel=1e-9)
    assert dp_upper_ps(1.0, 0.01) == pytest.approx(0.006786, abs=1e-6)
    rng = feasible_range(HAND, 1.0, 0.01)
    assert not rng.feasible
    assert rng.reason == "ps_star >= ps_upper: vacuous regime"
    assert rng.ps_star == pytest.approx(0.99585, abs=1e-4)
    clipped = feasible_range(HAND, 1.0, 0.999)
    assert clipped.clipped and clipped.ps_upper == 1.0 and "clipped" in clipped.reason


@settings(max_examples=100, deadline=None)
@given(bound_inputs, st.floats(0.1, 50), st.floats(1e-6, 0.5), st.floats(1.0, 4.0))
def test_feasible_range_monotone(inp, eps, delta, factor):
    base = feasible_range(inp, eps, delta).feasible
    more_eps = feasible_range(inp, eps * factor, delta).feasible
    wider = BoundInputs(inp.n, inp.lap_norm, inp.c_sigma, inp.h1_abs, inp.gamma_min * factor)
    more_margin = feasible_range(wider, eps, delta).feasible
    assert not base or (more_eps and more_margin)


def test_choose_m():
    assert choose_m(100, 1e-3, 0.2) == 288
    assert math.log(1e5) / 0.04 == pytest.approx(287.82, abs=0.01)
    raw = lambda p: math.log(100 / 1e-3) / p ** 2
    assert raw(0.1) == pytest.approx(4 * raw(0.2), rel=1e-14)
    assert choose_m(1, 1 / math.e, 1.0) == 1
    with pytest.warns(RuntimeWarning, match="exceeds cap"):
        assert choose_m(100, 1e-3, 0.001, cap=5000) == 5000
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert choose_m(100, 1e-3, 0.001, cap=None) == math.ceil(math.log(1e5) / 1e-6)


def test_theory_report_fields():
    rep = theory_report(HAND, 1.0, 0.01, eta=0.25).to_dict()
    assert rep["feasible"] is False and rep["m"] is None
    assert rep["ps_star_residual"] <= 1e-9
    assert len(rep["f_grid"]) == 5

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfrelay import power_alloc as pa_
from cfrelay.closed_form import PowerAllocation, full_power_downlink, rate_report
from cfrelay.config import SystemConfig
from cfrelay.gp import solve_gp
from cfrelay.model import LargeScaleFading, draw_large_scale, homogeneous_large_scale

from conftest import random_fading

pos = st.floats(1e-3, 1e3)


def _cfg(M=10, N=2, W=1):
    return SystemConfig(num_aps=M, antennas_per_ap=N, num_pairs=W, pilot_symbols=max(2 * W, 2))


# --- coefficients ----------------------------------------------------------

def test_a1_hand_value():
    ls = LargeScaleFading.from_gains([[1.0]], [[1.0]], 1, 1.0)  # phi = 1/2
    co = pa_.build_coefficients(ls, full_power_downlink(ls, 1), 1)
    assert co.a1[0] == pytest.approx(0.25)
    assert co.a2[0] == pytest.approx(0.25)


def test_a_coefficients_swap_symmetry(rng):
    ls = random_fading(rng, 6, 3)
    co = pa_.build_coefficients(ls, full_power_downlink(ls, 2), 2)
    cs = pa_.build_coefficients(ls.swapped(), full_power_downlink(ls.swapped(), 2), 2)
    assert np.allclose(co.a1, cs.a2) and np.allclose(co.a3, cs.a4)


def test_homogeneous_rows_identical():
    # gains equal across APs: a3[i, j] = alpha_A,j whatever the pair i
    ls = homogeneous_large_scale([1.0, 2.0], [0.5, 1.5], 4, 4, 1.0)
    co = pa_.build_coefficients(ls, full_power_downlink(ls, 2), 2)
    assert np.allclose(co.a3[0], co.a3[1]) and np.allclose(co.a4[0], co.a4[1])
    assert np.allclose(co.a3[0], [1.0, 2.0])


def test_degenerate_pair():
    ls = LargeScaleFading.from_gains([[1.0, 0.0]], [[1.0, 0.0]], 2, 1.0)
    with pytest.raises(pa_.DegeneratePairError):
        pa_.build_coefficients(ls, full_power_downlink(ls, 1), 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(1, 8), st.integers(0, 10_000))
def test_model_equals_closed_form(W, M, seed):
    gen = np.random.default_rng(seed)
    ls = random_fading(gen, M, W)
    N = 2
    dl = full_power_downlink(ls, N)
    co = pa_.build_coefficients(ls, dl, N)
    eA, eB, p_r = gen.uniform(0.1, 5, W), gen.uniform(0.1, 5, W), gen.uniform(1, 50)
    pa = PowerAllocation(eA, eB, *dl, 1.0, 1.0, p_r)  # p_u = 1 so eta_ul = eta~
    cfg = _cfg(M, N, W)
    r = rate_report(ls, pa, cfg)
    s = pa_.model_sinrs(co, eA, eB, p_r)
    assert np.allclose(s.mac_pair, r.gamma_mac_pair, rtol=1e-12)
    assert np.allclose(s.bc_A, r.gamma_bc_dir[:, 0], rtol=1e-12)
    assert pa_.model_sum_se(co, eA, eB, p_r, cfg.prelog) == pytest.approx(r.sum_se, rel=1e-12)


def test_literal_coefficients_differ_on_heterogeneous_fading(rng):
    ls = random_fading(rng, 5, 2)
    dl = full_power_downlink(ls, 2)
    a = pa_.build_coefficients(ls, dl, 2).a3
    b = pa_.build_coefficients(ls, dl, 2, literal=True).a3
    assert not np.allclose(a, b)


# --- monomial fits ---------------------------------------------------------

def test_objective_fit_values():
    delta, mu = pa_.monomial_objective_fit([1.0])
    assert mu[0] == pytest.approx(0.5) and delta[0] == pytest.approx(2.0)
    _, mu = pa_.monomial_objective_fit([1e9])
    assert mu[0] == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(ValueError):
        pa_.monomial_objective_fit([0.0])


@given(pos, pos)
def test_objective_fit_is_global_lower_bound(g0, g):
    delta, mu = pa_.monomial_objective_fit([g0])
    assert delta[0] * g0 ** mu[0] == pytest.approx(1 + g0, rel=1e-12)
    assert delta[0] * g ** mu[0] <= (1 + g) * (1 + 1e-12)


def test_am_gm_split_values():
    wA, wB = pa_.am_gm_split([2.0], [2.0])
    assert (wA[0], wB[0]) == (0.5, 0.5)
    with pytest.raises(ValueError):
        pa_.am_gm_split([0.0], [0.0])
    with pytest.raises(ValueError):
        pa_.am_gm_split([-1.0], [2.0])


def test_am_gm_bound_random_points():
    gen = np.random.default_rng(0)
    tA0, tB0 = gen.uniform(0.01, 10, 10_000), gen.uniform(0.01, 10, 10_000)
    wA, wB = pa_.am_gm_split(tA0, tB0)
    assert np.allclose((tA0 / wA) ** wA * (tB0 / wB) ** wB, tA0 + tB0, rtol=1e-12)
    tA, tB = gen.uniform(0.01, 10, 10_000), gen.uniform(0.01, 10, 10_000)
    assert np.all((tA / wA) ** wA * (tB / wB) ** wB <= (tA + tB) * (1 + 1e-12))


def test_xy_fit_values():
    zeta, lx, ly = pa_.xy_monomial_fit([1.0], [1.0])
    assert lx[0] == pytest.approx(2 / 3) and ly[0] == pytest.approx(2 / 3)
    assert zeta[0] == pytest.approx(3.0)
    z2, lx2, ly2 = pa_.xy_monomial_fit([2.0], [0.5])
    z3, lx3, ly3 = pa_.xy_monomial_fit([0.5], [2.0])
    assert (lx2[0], ly2[0]) == pytest.approx((ly3[0], lx3[0]))
    with pytest.raises(ValueError):
        pa_.xy_monomial_fit([0.0], [1.0])


def test_xy_bound_random_points():
    gen = np.random.default_rng(1)
    x0, y0 = gen.uniform(0.01, 10, 10_000), gen.uniform(0.01, 10, 10_000)
    zeta, lx, ly = pa_.xy_monomial_fit(x0, y0)
    assert np.allclose(zeta * x0 ** lx * y0 ** ly, x0 + y0 + x0 * y0, rtol=1e-12)
    x, y = gen.uniform(0.01, 10, 10_000), gen.uniform(0.01, 10, 10_000)
    assert np.all(zeta * x ** lx * y ** ly <= (x + y + x * y) * (1 + 1e-12))


# --- subproblem ------------------------------------------------------------

@pytest.fixture
def instance():
    cfg = SystemConfig(num_aps=20, antennas_per_ap=2, num_pairs=2, pilot_symbols=4)
    _, ls = draw_large_scale(cfg)
    co = pa_.build_coefficients(ls, full_power_downlink(ls, 2), 2)
    P = 1.5717e10
    point = pa_.OperatingPoint.from_allocation(co, *pa_.uniform_point(2, P))
    return cfg, ls, co, P, point


def test_constraint_count(instance):
    cfg, _, co, P, point = instance
    W = co.num_pairs
    assert len(pa_.build_gp_subproblem(co, point, 1.1, P, 0.0, cfg).constraints) == 16 * W + 1
    assert len(pa_.build_gp_subproblem(co, point, 1.1, P, 0.1, cfg).constraints) == 17 * W + 1


def test_expansion_point_tightness(instance):
    cfg, _, co, P, point = instance
    gp = pa_.build_gp_subproblem(co, point, 1.1, P, 0.0, cfg)
    x = point.as_dict()
    vals = {lab: sum(m(x) for m in p) for lab, p in zip(gp.labels, gp.constraints)}
    s = pa_.model_sinrs(co, point.eA, point.eB, point.p_r)
    for i in range(2):
        # monomialized rows evaluate to the exact ratios at the expansion point
        assert vals[f"mac_pair:{i}"] == pytest.approx(point.g[i] / s.mac_pair[i], rel=1e-10)
        gA, gB = point.gA[i], point.gB[i]
        assert vals[f"couple:{i}"] == pytest.approx(point.g[i] / (gA + gB + gA * gB), rel=1e-10)
        assert max(vals[f"mac_A:{i}"], vals[f"bc_B:{i}"]) == pytest.approx(1.0, rel=1e-10)
    assert vals["budget"] == pytest.approx(1.0)
    assert max(vals.values()) <= 1 + 1e-10


def test_trust_region_respected(instance):
    cfg, _, co, P, point = instance
    theta = 1.1
    sol = solve_gp(pa_.build_gp_subproblem(co, point, theta, P, 0.0, cfg), x0=point.as_dict())
    x0 = point.as_dict()
    for k, v in sol.x.items():
        if k == "pr":
            continue
        assert x0[k] / theta * (1 - 1e-7) <= v <= x0[k] * theta * (1 + 1e-7)


def test_theta_validated(instance):
    cfg, _, co, P, point = instance
    with pytest.raises(ValueError):
        pa_.build_gp_subproblem(co, point, 1.0, P, 0.0, cfg)


# --- algorithm -------------------------------------------------------------

def test_run_validates_inputs(instance):
    cfg, ls, *_ = instance
    for kw in ({"P": 0.0}, {"P": 1.0, "theta": 1.0}, {"P": 1.0, "eps": 0.0}):
        with pytest.raises(ValueError):
            pa_.run_algorithm1(ls, cfg, **kw)


def test_ascent_and_budget(instance):
    cfg, ls, co, P, _ = instance
    res = pa_.run_algorithm1(ls, cfg, P, max_iter=15)
    assert np.all(np.diff(res.history) >= -1e-6)
    assert res.history[0] == pytest.approx(res.initial_sum_se)
    assert res.sum_se >= res.initial_sum_se
    assert res.total_power <= P * (1 + 1e-6)
    assert np.all(res.eta_tilde_A >= 0) and res.p_r >= 0
    assert res.sum_se == pytest.approx(pa_.model_sum_se(co, res.eta_tilde_A, res.eta_tilde_B,
                                                        res.p_r, cfg.prelog))


def test_single_pair_matches_grid_oracle():
    cfg = _cfg(M=30, N=2, W=1)
    _, ls = draw_large_scale(cfg)
    P = 1.5717e10
    res = pa_.run_algorithm1(ls, cfg, P)
    orc = pa_.brute_force_oracle(ls, cfg, P, grid_points=50)
    assert res.sum_se >= orc.sum_se * 0.98
    assert res.sum_se >= res.initial_sum_se


def test_rate_floor_met_when_attainable(instance):
    cfg, ls, co, P, point = instance
    floor = 0.5 * cfg.prelog * np.log2(1 + point.g.min())
    res = pa_.run_algorithm1(ls, cfg, P, R_min=floor, max_iter=10)
    assert np.all(cfg.prelog * np.log2(1 + res.gamma) >= floor * (1 - 1e-9))


def test_unattainable_rate_floor_reported(instance):
    cfg, ls, _, P, _ = instance
    res = pa_.run_algorithm1(ls, cfg, P, R_min=50.0, max_iter=5)
    assert not res.converged
    assert "failed" in res.message or "not met" in res.message
    assert res.total_power <= P * (1 + 1e-6)


def test_literal_flag_runs(instance):
    cfg, ls, _, P, _ = instance
    res = pa_.run_algorithm1(ls, cfg, P, max_iter=5, literal=True)
    assert np.all(np.diff(res.history) >= -1e-6)


# --- oracle ----------------------------------------------------------------

def test_oracle_refuses_large_problems(instance):
    cfg, *_ = instance
    ls = random_fading(np.random.default_rng(0), 4, 3)
    with pytest.raises(ValueError):
        pa_.brute_force_oracle(ls, cfg.replace(num_pairs=3, pilot_symbols=6), 1.0)
    with pytest.raises(ValueError):
        pa_.brute_force_oracle(ls.pairs([0]), cfg, 1.0, grid_points=51)


def test_oracle_grid_contains_uniform_level():
    g = pa_.oracle_grid(100.0, 2, 50)
    assert len(g) == 50 and 12.5 in g and g[0] == pytest.approx(0.01) and g[-1] == 100.0


def test_oracle_at_least_uniform(instance):
    cfg, ls, co, P, point = instance
    orc = pa_.brute_force_oracle(ls, cfg, P, grid_points=12)
    uni = pa_.model_sum_se(co, *pa_.uniform_point(2, P), cfg.prelog)
    assert orc.sum_se >= uni - 1e-12


def test_oracle_symmetric_single_pair():
    # with identical A/B statistics the sum SE is symmetric in (eA, eB), and the
    # equal split of the oracle's user power is optimal as well
    ls = homogeneous_large_scale([1e-9], [1e-9], 10, 2, 1e10)
    cfg = _cfg(M=10, W=1)
    orc = pa_.brute_force_oracle(ls, cfg, 1e9, grid_points=40)
    co = pa_.build_coefficients(ls, full_power_downlink(ls, 2), 2)
    mirror = pa_.model_sum_se(co, orc.eta_tilde_B, orc.eta_tilde_A, orc.p_r, cfg.prelog)
    assert mirror == pytest.approx(orc.sum_se, rel=1e-12)
    e = (orc.eta_tilde_A + orc.eta_tilde_B) / 2
    assert pa_.model_sum_se(co, e, e, orc.p_r, cfg.prelog) >= orc.sum_se * (1 - 1e-12)

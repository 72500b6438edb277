import math

import numpy as np
import pytest

from mixflow.costs import (ClassParams, cnl_commonalities, cnl_commonality,
                           evaluate_links, fuel_gallons, link_generalized_cost,
                           link_travel_time, mixed_capacity, overlap_alpha,
                           overlap_log_weights, path_cost, perceived_cost_av,
                           perceived_cost_rv)
from mixflow.network import Link
from mixflow.paths import Path, yen_k_shortest

from conftest import random_network
from oracles import mp_cnl_commonality, mp_perceived_cost_rv, naive_cnl_commonality


def test_mixed_capacity_pure_rv_boundary():
    assert mixed_capacity(500.0, 0.0, 2000.0, 4000.0) == 2000.0


def test_mixed_capacity_equal_caps_any_shares():
    assert mixed_capacity(123.0, 456.0, 1500.0, 1500.0) == pytest.approx(1500.0)


def test_mixed_capacity_even_split():
    # harmonic mean of 2000 and 4000 at equal shares
    assert mixed_capacity(300.0, 300.0, 2000.0, 4000.0) == pytest.approx(8000.0 / 3.0, abs=0.01)


def test_mixed_capacity_zero_flow_convention():
    assert mixed_capacity(0.0, 0.0, 2000.0, 4000.0) == 2000.0


def test_mixed_capacity_bracketing_randomized():
    rng = np.random.default_rng(5)
    for _ in range(300):
        x_rv, x_av = rng.uniform(0.0, 5000.0, size=2)
        cap_rv, cap_av = rng.uniform(100.0, 8000.0, size=2)
        cap = mixed_capacity(x_rv, x_av, cap_rv, cap_av)
        assert min(cap_rv, cap_av) - 1e-9 <= cap <= max(cap_rv, cap_av) + 1e-9


def test_link_travel_time_free_flow():
    assert link_travel_time(0.0, 0.0, 7.5, 1000.0) == 7.5


def test_link_travel_time_at_capacity():
    assert link_travel_time(600.0, 400.0, 10.0, 1000.0) == pytest.approx(11.5)


def test_link_travel_time_at_double_capacity():
    assert link_travel_time(1500.0, 500.0, 10.0, 1000.0) == pytest.approx(34.0)


def test_link_travel_time_monotone_per_class():
    rng = np.random.default_rng(6)
    for _ in range(200):
        cap = float(rng.uniform(200.0, 4000.0))
        t0 = float(rng.uniform(1.0, 20.0))
        x_rv, x_av, bump = rng.uniform(0.0, 3000.0, size=3)
        base = link_travel_time(x_rv, x_av, t0, cap)
        assert link_travel_time(x_rv + bump, x_av, t0, cap) >= base
        assert link_travel_time(x_rv, x_av + bump, t0, cap) >= base
        assert base >= t0


def test_composite_time_monotone_when_caps_equal():
    # equal class caps pin the mixed capacity, so time rises with total flow
    rng = np.random.default_rng(61)
    cap = 1500.0
    for _ in range(100):
        x_rv, x_av = rng.uniform(0.0, 2000.0, size=2)
        scale = float(rng.uniform(1.0, 3.0))
        lo = link_travel_time(x_rv, x_av, 8.0, mixed_capacity(x_rv, x_av, cap, cap))
        hi = link_travel_time(scale * x_rv, scale * x_av, 8.0,
                              mixed_capacity(scale * x_rv, scale * x_av, cap, cap))
        assert hi >= lo


def test_fuel_unit_speed():
    # 1 mph: one mile takes 60 minutes
    assert fuel_gallons(1.0, 60.0) == pytest.approx(14.58 / 36.44, rel=1e-12)


def test_fuel_at_30_mph():
    # frozen from the 60-digit transliteration of the fuel curve
    assert fuel_gallons(1.0, 2.0) == pytest.approx(0.04775054925733729, rel=1e-12)
    assert fuel_gallons(1.0, 2.0) == pytest.approx(0.0478, abs=5e-4)


def test_fuel_vanishes_with_length_at_fixed_speed():
    prev = math.inf
    for length in (1.0, 0.1, 0.01, 0.001):
        gallons = fuel_gallons(length, length * 2.0)  # constant 30 mph
        assert gallons < prev
        prev = gallons
    assert prev < 1e-4


def test_link_generalized_cost_zero_prices():
    assert link_generalized_cost(12.0, 0.3, 0.0, 0.0) == 0.0


def test_link_generalized_cost_frozen():
    assert link_generalized_cost(10.0, 0.05, 1.0, 5.5) == pytest.approx(10.275)


def test_link_generalized_cost_vot_monotone():
    base = link_generalized_cost(10.0, 0.05, 0.5, 5.5)
    assert link_generalized_cost(10.0, 0.05, 1.0, 5.5) > base


def test_path_cost_empty_and_single():
    empty = Path(links=(), nodes=(), length=0.0)
    assert path_cost(empty, {}) == 0.0
    one = Path(links=(7,), nodes=(1, 2), length=3.0)
    assert path_cost(one, {7: 4.25}) == 4.25
    two = Path(links=(7, 9), nodes=(1, 2, 3), length=5.0)
    assert path_cost(two, {7: 3.0, 9: 4.0}) == 7.0


def test_overlap_alpha_membership():
    path = Path(links=(1, 2), nodes=(1, 2, 3), length=5.0)
    inside = Link(1, 1, 2, 2.0, 2.0, 10.0, 20.0)
    outside = Link(9, 2, 3, 3.0, 3.0, 10.0, 20.0)
    assert overlap_alpha(outside, path) == 0.0
    assert overlap_alpha(inside, path) == pytest.approx(0.4)
    single = Path(links=(1,), nodes=(1, 2), length=2.0)
    assert overlap_alpha(inside, single) == 1.0


def test_overlap_weights_sum_to_one_randomized(params):
    rng = np.random.default_rng(7)
    for _ in range(20):
        net = random_network(rng)
        costs = net.free_times.copy()
        od = net.od_pairs[0]
        paths = yen_k_shortest(net, costs, od.origin, od.destination, 4)
        lengths = {l.id: l.length for l in net.links}
        _, ln_alpha = overlap_log_weights(paths, lengths)
        sums = np.exp(ln_alpha).sum(axis=0)
        assert np.allclose(sums, 1.0, atol=1e-12)


def _crafted_group():
    p1 = Path(links=(1, 2), nodes=(1, 2, 3), length=1.0)
    p2 = Path(links=(1, 3), nodes=(1, 2, 3), length=1.0)
    p3 = Path(links=(4,), nodes=(1, 3), length=1.0)
    lengths = {1: 0.5, 2: 0.5, 3: 0.5, 4: 1.0}
    return [p1, p2, p3], lengths


def test_commonality_zero_at_unit_nesting():
    paths, lengths = _crafted_group()
    _, ln_alpha = overlap_log_weights(paths, lengths)
    h = cnl_commonalities(ln_alpha, [3.0, 5.0, 4.0], theta=0.2, u=1.0)
    assert np.allclose(h, 0.0, atol=1e-12)


def test_commonality_symmetric_disjoint_paths():
    p1 = Path(links=(1,), nodes=(1, 2), length=2.0)
    p2 = Path(links=(2,), nodes=(1, 2), length=2.0)
    _, ln_alpha = overlap_log_weights([p1, p2], {1: 2.0, 2: 2.0})
    h = cnl_commonalities(ln_alpha, [6.0, 6.0], theta=0.1, u=0.5)
    assert h[0] == pytest.approx(h[1], rel=1e-12)


def test_commonality_matches_extended_precision_oracle():
    paths, lengths = _crafted_group()
    _, ln_alpha = overlap_log_weights(paths, lengths)
    costs = [7.0, 7.0, 7.0]
    h = cnl_commonalities(ln_alpha, costs, theta=0.1, u=0.5)
    expected = mp_cnl_commonality(np.exp(ln_alpha), costs, 0.1, 0.5)
    assert np.allclose(h, expected, rtol=1e-12, atol=1e-12)
    # hand-derived closed form for the equal-cost overlap instance
    assert h[0] == pytest.approx(math.log(0.5 / math.sqrt(2.0) + 0.5) + 0.7, rel=1e-12)
    assert h[2] == pytest.approx(0.7, rel=1e-12)


def test_commonality_log_domain_matches_naive_when_it_fits():
    rng = np.random.default_rng(8)
    for _ in range(25):
        net = random_network(rng)
        od = net.od_pairs[0]
        paths = yen_k_shortest(net, net.free_times.copy(), od.origin, od.destination, 5)
        lengths = {l.id: l.length for l in net.links}
        _, ln_alpha = overlap_log_weights(paths, lengths)
        costs = rng.uniform(5.0, 40.0, size=len(paths))
        theta = float(rng.uniform(0.02, 0.4))
        u = float(rng.uniform(0.2, 1.0))
        naive = naive_cnl_commonality(np.exp(ln_alpha), costs, theta, u)
        if not np.isfinite(naive).all():
            continue
        stable = cnl_commonalities(ln_alpha, costs, theta, u)
        assert np.allclose(stable, naive, rtol=1e-9)


def test_commonality_survives_costs_that_overflow_naive():
    paths, lengths = _crafted_group()
    _, ln_alpha = overlap_log_weights(paths, lengths)
    costs = [40000.0, 40010.0, 40005.0]
    naive = naive_cnl_commonality(np.exp(ln_alpha), costs, theta=0.5, u=0.3)
    assert not np.isfinite(naive).all()
    stable = cnl_commonalities(ln_alpha, costs, theta=0.5, u=0.3)
    assert np.isfinite(stable).all()
    expected = mp_cnl_commonality(np.exp(ln_alpha), costs, 0.5, 0.3)
    assert np.allclose(stable, expected, rtol=1e-9)


def test_cnl_commonality_scalar_wrapper():
    paths, lengths = _crafted_group()
    params = ClassParams(dispersion=0.1, nesting=0.5)
    h2 = cnl_commonality(2, paths, lengths, [7.0, 7.0, 7.0], params)
    assert h2 == pytest.approx(0.7, rel=1e-12)


def test_perceived_cost_rv_single_path_carries_demand():
    params = ClassParams(nesting=1.0, dispersion=0.25)
    # u=1 makes the commonality vanish; f = q kills the log term
    assert perceived_cost_rv(12.5, 80.0, 80.0, 0.0, params) == pytest.approx(12.5)


def test_perceived_cost_rv_log_term_sign():
    params = ClassParams()
    scale = params.nesting / params.dispersion
    below = perceived_cost_rv(10.0, 20.0, 100.0, 0.3, params)
    assert below < 10.0 - scale * 0.3


def test_perceived_cost_rv_ratio_invariance():
    params = ClassParams()
    one = perceived_cost_rv(10.0, 20.0, 100.0, 0.3, params)
    two = perceived_cost_rv(10.0, 40.0, 200.0, 0.3, params)
    assert one == pytest.approx(two, rel=1e-15)


def test_perceived_cost_rv_matches_extended_precision():
    params = ClassParams(nesting=0.6, dispersion=0.15)
    got = perceived_cost_rv(17.0, 35.0, 120.0, 0.42, params)
    want = mp_perceived_cost_rv(17.0, 35.0, 120.0, 0.42, 0.15, 0.6)
    assert got == pytest.approx(want, rel=1e-12)


def test_perceived_cost_rv_floor_guards_zero_flow():
    params = ClassParams()
    value = perceived_cost_rv(10.0, 0.0, 100.0, 0.0, params)
    assert np.isfinite(value)
    expected = 10.0 + params.nesting / params.dispersion * math.log(params.flow_floor / 100.0)
    assert value == pytest.approx(expected)


def test_perceived_cost_rv_requires_demand():
    with pytest.raises(ValueError):
        perceived_cost_rv(10.0, 1.0, 0.0, 0.0, ClassParams())


def test_perceived_cost_av_identity_bit_exact():
    assert perceived_cost_av(0.0) == 0.0
    assert perceived_cost_av(17.3) == 17.3
    values = np.array([0.1, 2.0, 3.7e9, 5e-300])
    out = perceived_cost_av(values)
    assert out is values


def test_evaluate_links_respects_free_flow(params):
    net = random_network(np.random.default_rng(9))
    zeros = np.zeros(net.n_links)
    state = evaluate_links(net, zeros, zeros, params)
    assert np.allclose(state.minutes, net.free_times)
    assert np.allclose(state.mixed_cap, net.caps_rv)
    assert np.all(state.cost_rv >= state.cost_av)


def test_class_params_validation():
    with pytest.raises(ValueError):
        ClassParams(dispersion=0.0)
    with pytest.raises(ValueError):
        ClassParams(nesting=1.2)
    with pytest.raises(ValueError):
        ClassParams(vot_rv=0.1, vot_av=0.5)
    with pytest.raises(ValueError):
        ClassParams(penetration=1.5)

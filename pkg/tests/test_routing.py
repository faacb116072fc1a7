from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from signalkit.errors import ContractViolation, DimensionError, DisconnectedError, InvalidSchemeError
from signalkit.routing import (
    BRAESS_SHORTCUT,
    AffineLatencies,
    Commodity,
    RoutingInstance,
    ZeroOptimumError,
    braess,
    full_revelation_routing,
    gadget_prior_exact,
    grid_best_scheme,
    mix_latencies,
    nash_cost_with_tolls,
    nash_flow,
    optimal_flow,
    path_gap,
    pigou,
    price_of_anarchy,
    qualifying_signals,
    routing_scheme_value,
    scheme_from_tolls,
    scheme_posteriors_exact,
    tolls_from_scheme,
    tolls_gadget,
    total_latency,
    wardrop_residual,
)
from signalkit.zerosum import SignalingScheme

ONE = (Commodity("s", "t", 1.0),)
TOL = 1e-9


def random_instance(seed, states=2, n=6, commodities=1):
    rng = np.random.default_rng(seed)
    edges = [(str(i), str(i + 1)) for i in range(n - 1)]
    for i in range(n):
        for j in range(i + 2, n):
            if rng.random() < 0.5:
                edges.append((str(i), str(j)))
    E = len(edges)
    slopes = rng.uniform(0, 2, size=(states, E)) * (rng.random((states, E)) < 0.8)
    intercepts = rng.uniform(0, 2, size=(states, E)) * (rng.random((states, E)) < 0.7)
    comms = [Commodity("0", str(n - 1), float(rng.uniform(0.3, 1.0)))]
    if commodities > 1:
        comms.append(Commodity("1", str(n - 2), float(rng.uniform(0.3, 1.0))))
    prior = rng.dirichlet(np.ones(states))
    return RoutingInstance(tuple(str(i) for i in range(n)), tuple(edges), slopes, intercepts, tuple(comms), prior)


def test_mix_of_point_mass_is_that_state():
    inst = random_instance(0, states=3)
    lat = mix_latencies(inst, [0, 1, 0])
    assert np.array_equal(lat.slopes, inst.slopes[1])
    assert np.array_equal(lat.intercepts, inst.intercepts[1])


def test_mix_averages_intercepts():
    inst = RoutingInstance(("s", "t"), (("s", "t"),), [[1.0], [1.0]], [[0.0], [2.0]], ONE)
    assert mix_latencies(inst, [0.5, 0.5]).intercepts[0] == pytest.approx(1.0)


@given(st.integers(0, 10_000), st.floats(0, 1))
@settings(max_examples=40, deadline=None)
def test_mix_is_linear(seed, t):
    inst = random_instance(seed % 50, states=3)
    rng = np.random.default_rng(seed)
    p, q = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
    mixed = mix_latencies(inst, t * p + (1 - t) * q)
    lp, lq = mix_latencies(inst, p), mix_latencies(inst, q)
    assert np.allclose(mixed.slopes, t * lp.slopes + (1 - t) * lq.slopes, atol=1e-12)
    assert np.allclose(mixed.intercepts, t * lp.intercepts + (1 - t) * lq.intercepts, atol=1e-12)


def test_pigou_nash_and_optimum():
    lat = pigou()
    nash = nash_flow(lat, ONE)
    assert np.allclose(nash.edge_flows, [0.0, 1.0], atol=1e-9)
    assert total_latency(lat, nash) == pytest.approx(1.0, abs=1e-9)
    opt = optimal_flow(lat, ONE)
    assert np.allclose(opt.edge_flows, [0.5, 0.5], atol=1e-9)
    assert total_latency(lat, opt) == pytest.approx(0.75, abs=1e-9)
    assert price_of_anarchy(lat, ONE) == pytest.approx(4 / 3, abs=1e-3)


def test_identical_links_split_evenly():
    lat = AffineLatencies(("s", "t"), (("s", "t"), ("s", "t")), [1.0, 1.0], [0.0, 0.0])
    assert np.allclose(nash_flow(lat, ONE).edge_flows, [0.5, 0.5], atol=1e-9)


def test_braess_before_and_after_removal():
    lat = braess()
    assert total_latency(lat, nash_flow(lat, ONE)) == pytest.approx(2.0, abs=1e-4)
    cut, _ = lat.without_edges([BRAESS_SHORTCUT])
    assert total_latency(cut, nash_flow(cut, ONE)) == pytest.approx(1.5, abs=1e-4)


def test_single_edge_carries_everything():
    lat = AffineLatencies(("s", "t"), (("s", "t"),), [2.0], [1.0])
    assert optimal_flow(lat, ONE).edge_flows[0] == pytest.approx(1.0)
    assert price_of_anarchy(AffineLatencies(("s", "t"), (("s", "t"),), [0.0], [3.0]), ONE) == pytest.approx(1.0)


def test_zero_optimum_raises():
    lat = AffineLatencies(("s", "t"), (("s", "t"),), [0.0], [0.0])
    with pytest.raises(ZeroOptimumError):
        price_of_anarchy(lat, ONE)


def test_total_latency_basics():
    lat = braess()
    assert total_latency(lat, np.zeros(5)) == 0.0
    rng = np.random.default_rng(3)
    f = rng.random(5)
    parts = sum(float(f[e] * lat(f)[e]) for e in range(5))
    assert total_latency(lat, f) == pytest.approx(parts, abs=1e-14)


@pytest.mark.parametrize("seed", range(15))
def test_random_instances_satisfy_flow_invariants(seed):
    inst = random_instance(seed, states=1, n=7, commodities=1 + seed % 2)
    lat = inst.latencies(0)
    nash = nash_flow(lat, inst.commodities, TOL)
    opt = optimal_flow(lat, inst.commodities, TOL)
    assert wardrop_residual(lat, inst.commodities, nash) <= TOL
    assert path_gap(lat, inst.commodities, opt, marginal=True) <= TOL
    for flow in (nash, opt):
        assert flow.conservation_residual(inst.nodes, inst.commodities) <= 1e-9
        assert np.all(flow.commodity_flows >= 0)
    c_nash, c_opt = total_latency(lat, nash), total_latency(lat, opt)
    assert c_opt <= c_nash + TOL
    if c_opt > 0:
        assert 1 - 1e-9 <= c_nash / c_opt <= 4 / 3 + 1e-6
    restarts = [total_latency(lat, nash_flow(lat, inst.commodities, TOL, seed=r)) for r in range(5)]
    assert max(restarts) - min(restarts) <= 2 * TOL


def test_optimal_flow_matches_convex_minimum_on_parallel_links():
    # independent check with a generic constrained minimizer
    a = np.array([1.0, 2.0, 0.5])
    b = np.array([0.3, 0.0, 0.9])
    lat = AffineLatencies(("s", "t"), (("s", "t"),) * 3, a, b)
    from scipy.optimize import minimize

    res = minimize(lambda f: np.sum(a * f * f + b * f), np.full(3, 1 / 3), constraints=[{"type": "eq", "fun": lambda f: f.sum() - 1}],
                   bounds=[(0, None)] * 3, method="SLSQP", options={"ftol": 1e-14})
    got = total_latency(lat, optimal_flow(lat, ONE))
    assert got == pytest.approx(res.fun, abs=1e-9 * (1 + abs(res.fun)))


def test_disconnected_and_invalid_instances():
    with pytest.raises(DisconnectedError):
        RoutingInstance(("s", "a", "t"), (("s", "a"),), [[1.0]], [[0.0]], ONE)
    with pytest.raises(DimensionError):
        RoutingInstance(("s", "t"), (("s", "t"),), [[-1.0]], [[0.0]], ONE)
    with pytest.raises(DimensionError):
        AffineLatencies(("s", "t"), (("s", "t"),), [np.inf], [0.0])


def test_single_state_scheme_value_ignores_scheme():
    inst = RoutingInstance(braess().nodes, braess().edges, [braess().slopes], [braess().intercepts], ONE)
    scheme, value = full_revelation_routing(inst)
    assert len(scheme) == 1 and np.array_equal(scheme.posteriors[0], [1.0])
    assert value == pytest.approx(2.0, abs=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_full_revelation_value_is_prior_weighted(seed):
    inst = random_instance(seed, states=3)
    _, value = full_revelation_routing(inst)
    direct = sum(inst.prior[t] * total_latency(inst.latencies(t), nash_flow(inst.latencies(t), inst.commodities))
                 for t in range(3))
    assert value == pytest.approx(direct, abs=1e-6)


def test_scheme_value_rejects_bad_scheme():
    inst = random_instance(1)
    with pytest.raises(InvalidSchemeError):
        routing_scheme_value(inst, SignalingScheme([1.0], [[1.0, 0.0]]))


@given(st.integers(0, 30), st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_no_scheme_beats_full_revelation_by_more_than_poa(inst_seed, scheme_seed):
    inst = random_instance(inst_seed, states=2)
    rng = np.random.default_rng(scheme_seed)
    lam = inst.prior
    # two posteriors on either side of the prior
    lo, hi = rng.uniform(0, lam[0]), rng.uniform(lam[0], 1)
    if hi - lo < 1e-6:
        return
    w = (hi - lam[0]) / (hi - lo)
    scheme = SignalingScheme([w, 1 - w], [[lo, 1 - lo], [hi, 1 - hi]])
    _, full = full_revelation_routing(inst)
    assert routing_scheme_value(inst, scheme) >= full / (4 / 3) - 1e-6


@pytest.mark.parametrize("seed", range(4))
def test_full_revelation_within_poa_of_grid_scheme(seed):
    inst = random_instance(seed + 100, states=2)
    _, full = full_revelation_routing(inst)
    _, best = grid_best_scheme(inst, 1 / 32)
    assert full <= 4 / 3 * best + 1e-2


def braess_gadget(removed=(BRAESS_SHORTCUT,)):
    return tolls_gadget(braess(), "s", "t", 1.0, removed)


def test_gadget_structure():
    g = braess_gadget()
    m = 5
    assert g.instance.num_states == 2 * m + 2
    assert g.L == pytest.approx(2.0, abs=1e-6)
    assert g.L_star == pytest.approx(1.5, abs=1e-6)
    for e in g.links:
        assert np.all(g.instance.slopes[:, e] == 0)
        assert np.all(g.instance.intercepts[np.arange(2 * m + 2) != e, e] == 0)
    assert np.allclose(g.instance.prior[: 2 * m], 1 / m**2)
    assert np.allclose(g.instance.prior[2 * m :], (1 - 2 / m) / 2)
    # state θ raises exactly edge θ by 8m³L
    diff = g.instance.intercepts - g.instance.intercepts.min(axis=0)
    assert np.allclose(diff[:, : 2 * m + 2], np.eye(2 * m + 2) * 8 * m**3 * g.L)


def test_gadget_needs_two_edges():
    lat = AffineLatencies(("s", "t"), (("s", "t"),), [1.0], [0.0])
    with pytest.raises(DimensionError):
        tolls_gadget(lat, "s", "t")


def test_gadget_normalizes_demand():
    g = tolls_gadget(pigou(), "s", "t", demand=2.0)
    assert g.demand_scale == 2.0
    assert np.allclose(g.base.slopes, [0.0, 2.0])


@pytest.mark.parametrize("m,removed", [(5, (4,)), (5, ()), (7, (0, 3)), (2, (1,))])
def test_posteriors_average_to_prior_exactly(m, removed):
    mu1, mu2 = scheme_posteriors_exact(m, removed)
    assert [(x + y) / 2 for x, y in zip(mu1, mu2)] == gadget_prior_exact(m)
    assert sum(mu1) == 1 and sum(mu2) == 1
    assert sum(gadget_prior_exact(m)) == Fraction(1)


def test_scheme_from_tolls_attains_l_star():
    g = braess_gadget()
    scheme = scheme_from_tolls(g)
    assert scheme.residual(g.instance.prior) <= 1e-12
    assert routing_scheme_value(g.instance, scheme) == pytest.approx(1.5, abs=1e-4)


def test_scheme_without_removal_gives_base_latency():
    g = braess_gadget(removed=())
    scheme = scheme_from_tolls(g)
    for mu in scheme.posteriors:
        assert g.instance.value_at(mu) == pytest.approx(g.L, abs=1e-6)


def test_round_trip_tolls():
    g = braess_gadget()
    res = tolls_from_scheme(g, scheme_from_tolls(g))
    assert set(np.flatnonzero(res.tolls)) == {BRAESS_SHORTCUT}
    cost = nash_cost_with_tolls(g.base, ONE, res.tolls)
    assert cost <= res.scheme_value / (1 - 4 / g.m) + 1e-4
    assert cost == pytest.approx(1.5, abs=1e-4)


def test_uninformative_scheme_gets_zero_tolls():
    g = braess_gadget(removed=())
    lam = SignalingScheme([1.0], [g.instance.prior])
    res = tolls_from_scheme(g, lam)
    assert np.all(res.tolls == 0) and res.chosen_signal is None


def test_selection_threshold_is_one_over_m():
    g = braess_gadget()
    m = g.m
    n = 2 * m + 2
    at = np.zeros(n)
    at[2 * m] = at[2 * m + 1] = 1 / (2 * m)
    at[0] = 1 - 1 / m
    below = np.zeros(n)
    below[2 * m] = 1 / (2 * m) - 1e-9
    below[1] = 1 - below[2 * m]
    scheme = SignalingScheme([0.5, 0.5], [at, below])
    assert qualifying_signals(g, scheme) == [0]


def test_missing_qualifying_posterior_is_a_contract_violation():
    g = braess_gadget()
    m = g.m
    # a valid gadget scheme always has a qualifying signal, so move the
    # prior off the source links and inflate L to reach the check
    inst = g.instance.with_prior(np.concatenate([np.full(2 * m, 1 / (2 * m)), [0, 0]]))
    fake = type(g)(inst, g.base, g.source, g.sink, g.removed, m, 1e9, g.L_star, 1.0, g.copies, g.links)
    scheme = SignalingScheme([1.0], [inst.prior])
    with pytest.raises(ContractViolation):
        tolls_from_scheme(fake, scheme)

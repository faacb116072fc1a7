"""Bayesian selfish routing with affine latencies.

Wardrop and optimal flows are computed by path-based flow shifting: each
step moves flow from the costliest used path of a commodity to its current
shortest path, with an exact line search (costs are affine, so the step has
a closed form).  Nash flows equalize latencies; optimal flows equalize
marginal costs 2·a·f + b.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ContractViolation, DimensionError, DisconnectedError, InvalidSchemeError, NumericalFailure
from .lp import LinearProgram, solve_lp
from .signaling import delta_net
from .zerosum import SCHEME_VALUE_TOL, SignalingScheme, as_posterior, baseline_scheme

FLOW_TOL = 1e-9
MAX_SWEEPS = 100_000


@dataclass(frozen=True)
class Commodity:
    source: str
    sink: str
    demand: float

    def __post_init__(self):
        if not (math.isfinite(self.demand) and self.demand > 0):
            raise DimensionError("commodity demand must be positive and finite")


def _check_coeffs(arr, name):
    if not np.all(np.isfinite(arr)):
        raise DimensionError(f"{name} must be finite")
    if np.any(arr < 0):
        raise DimensionError(f"{name} must be nonnegative")


class _Graph:
    def __init__(self, nodes, edges):
        self.nodes = tuple(str(v) for v in nodes)
        self.index = {v: i for i, v in enumerate(self.nodes)}
        if len(self.index) != len(self.nodes):
            raise DimensionError("duplicate node names")
        self.edges = tuple((str(u), str(v)) for u, v in edges)
        self.out = [[] for _ in self.nodes]
        for e, (u, v) in enumerate(self.edges):
            if u not in self.index or v not in self.index:
                raise DimensionError(f"edge {u}->{v} uses an unknown node")
            self.out[self.index[u]].append((e, self.index[v]))

    def shortest_path(self, weights, s: str, t: str):
        """Dijkstra on nonnegative edge weights; returns (distance, edge ids)."""
        src, dst = self.index[s], self.index[t]
        dist = [math.inf] * len(self.nodes)
        via = [-1] * len(self.nodes)
        dist[src] = 0.0
        heap = [(0.0, src)]
        done = [False] * len(self.nodes)
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            if u == dst:
                break
            for e, v in self.out[u]:
                nd = d + weights[e]
                if nd < dist[v]:
                    dist[v] = nd
                    via[v] = e
                    heapq.heappush(heap, (nd, v))
        if math.isinf(dist[dst]):
            return math.inf, None
        path = []
        v = dst
        while v != src:
            e = via[v]
            path.append(e)
            v = self.index[self.edges[e][0]]
        return dist[dst], tuple(reversed(path))

    def connected(self, s: str, t: str) -> bool:
        return self.shortest_path(np.zeros(len(self.edges)), s, t)[1] is not None


@dataclass(frozen=True, eq=False)
class AffineLatencies:
    """Single-state latencies l_e(x) = a_e x + b_e on a directed multigraph."""

    nodes: tuple
    edges: tuple
    slopes: np.ndarray
    intercepts: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.slopes, dtype=float).reshape(-1)
        b = np.asarray(self.intercepts, dtype=float).reshape(-1)
        if a.shape != (len(self.edges),) or b.shape != a.shape:
            raise DimensionError("one slope and one intercept per edge")
        _check_coeffs(a, "slopes")
        _check_coeffs(b, "intercepts")
        object.__setattr__(self, "slopes", a)
        object.__setattr__(self, "intercepts", b)
        object.__setattr__(self, "graph", _Graph(self.nodes, self.edges))
        object.__setattr__(self, "nodes", self.graph.nodes)
        object.__setattr__(self, "edges", self.graph.edges)

    def __call__(self, x) -> np.ndarray:
        return self.slopes * np.asarray(x, dtype=float) + self.intercepts

    def plus_tolls(self, tolls) -> "AffineLatencies":
        return AffineLatencies(self.nodes, self.edges, self.slopes, self.intercepts + np.asarray(tolls, dtype=float))

    def without_edges(self, removed) -> tuple["AffineLatencies", np.ndarray]:
        """Delete edges (an infinite toll); also returns the kept edge ids."""
        removed = set(int(e) for e in removed)
        keep = np.array([e for e in range(len(self.edges)) if e not in removed], dtype=np.int64)
        lat = AffineLatencies(self.nodes, tuple(self.edges[e] for e in keep), self.slopes[keep], self.intercepts[keep])
        return lat, keep


@dataclass(frozen=True, eq=False)
class RoutingInstance:
    """Per-state affine latencies: ``slopes[θ, e]``, ``intercepts[θ, e]``."""

    nodes: tuple
    edges: tuple
    slopes: np.ndarray
    intercepts: np.ndarray
    commodities: tuple
    prior: np.ndarray = None

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.slopes, dtype=float))
        b = np.atleast_2d(np.asarray(self.intercepts, dtype=float))
        if a.shape != b.shape or a.shape[1] != len(self.edges) or a.shape[0] < 1:
            raise DimensionError("slopes and intercepts must both be (states, edges)")
        _check_coeffs(a, "slopes")
        _check_coeffs(b, "intercepts")
        prior = np.full(a.shape[0], 1.0 / a.shape[0]) if self.prior is None else as_posterior(self.prior, a.shape[0])
        graph = _Graph(self.nodes, self.edges)
        comms = tuple(c if isinstance(c, Commodity) else Commodity(str(c[0]), str(c[1]), float(c[2]))
                      for c in self.commodities)
        if not comms:
            raise DimensionError("at least one commodity is required")
        for c in comms:
            if c.source not in graph.index or c.sink not in graph.index:
                raise DimensionError(f"commodity {c.source}->{c.sink} uses an unknown node")
            if not graph.connected(c.source, c.sink):
                raise DisconnectedError(f"no path from {c.source} to {c.sink}")
        for arr in (a, b, prior):
            arr.setflags(write=False)
        object.__setattr__(self, "nodes", graph.nodes)
        object.__setattr__(self, "edges", graph.edges)
        object.__setattr__(self, "slopes", a)
        object.__setattr__(self, "intercepts", b)
        object.__setattr__(self, "commodities", comms)
        object.__setattr__(self, "prior", prior)

    @property
    def num_states(self) -> int:
        return self.slopes.shape[0]

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def latencies(self, theta: int) -> AffineLatencies:
        return AffineLatencies(self.nodes, self.edges, self.slopes[theta], self.intercepts[theta])

    def mix(self, mu) -> AffineLatencies:
        return mix_latencies(self, mu)

    def value_at(self, mu, tol: float = FLOW_TOL) -> float:
        """Total latency of the Nash flow under the mixed latencies."""
        lat = mix_latencies(self, mu)
        return total_latency(lat, nash_flow(lat, self.commodities, tol))

    def with_prior(self, prior) -> "RoutingInstance":
        return RoutingInstance(self.nodes, self.edges, self.slopes, self.intercepts, self.commodities, prior)


def mix_latencies(inst: RoutingInstance, mu) -> AffineLatencies:
    """l^μ_e = Σ_θ μ_θ l^θ_e, coefficientwise."""
    mu = as_posterior(mu, inst.num_states)
    return AffineLatencies(inst.nodes, inst.edges, mu @ inst.slopes, mu @ inst.intercepts)


@dataclass(frozen=True, eq=False)
class Flow:
    edges: tuple
    paths: tuple  # per commodity: {edge-id path: volume}
    commodity_flows: np.ndarray  # (commodities, edges)

    @property
    def edge_flows(self) -> np.ndarray:
        return self.commodity_flows.sum(axis=0)

    def conservation_residual(self, nodes, commodities) -> float:
        graph = _Graph(nodes, self.edges)
        worst = 0.0
        for k, c in enumerate(commodities):
            net = np.zeros(len(graph.nodes))
            for e, (u, v) in enumerate(graph.edges):
                net[graph.index[u]] -= self.commodity_flows[k, e]
                net[graph.index[v]] += self.commodity_flows[k, e]
            net[graph.index[c.source]] += c.demand
            net[graph.index[c.sink]] -= c.demand
            worst = max(worst, float(np.max(np.abs(net))))
        return worst


def _edge_flows_from_paths(paths, num_edges):
    F = np.zeros((len(paths), num_edges))
    for k, pf in enumerate(paths):
        for p, x in pf.items():
            if x > 0:
                F[k, list(p)] += x
    return F


def _equilibrate(lat: AffineLatencies, commodities, tol: float, marginal: bool, seed, max_sweeps: int) -> Flow:
    graph = lat.graph
    a, b = lat.slopes, lat.intercepts
    mult = 2.0 if marginal else 1.0
    E = len(graph.edges)
    rng = np.random.default_rng(seed) if seed is not None else None
    paths = []
    for c in commodities:
        if rng is None:
            w = b + a
            starts = [graph.shortest_path(w, c.source, c.sink)[1]]
        else:
            starts = [graph.shortest_path(rng.random(E) * (1 + a + b), c.source, c.sink)[1]
                      for _ in range(int(rng.integers(1, 4)))]
        if starts[0] is None:
            raise DisconnectedError(f"no path from {c.source} to {c.sink}")
        share = rng.dirichlet(np.ones(len(starts))) if rng is not None else np.ones(1)
        pf = {}
        for p, s in zip(starts, share):
            pf[p] = pf.get(p, 0.0) + c.demand * float(s)
        paths.append(pf)
    f = _edge_flows_from_paths(paths, E).sum(axis=0)
    for sweep in range(max_sweeps):
        worst = 0.0
        for k, c in enumerate(commodities):
            pf = paths[k]
            for _ in range(4 * len(pf) + 4):
                cost = mult * a * f + b
                dmin, pmin = graph.shortest_path(cost, c.source, c.sink)
                used = [(float(cost[list(p)].sum()), p) for p, x in pf.items() if x > 0]
                cmax, pmax = max(used, key=lambda t: t[0])
                gap = cmax - dmin
                worst = max(worst, gap)
                if gap <= tol / 2 or pmax == pmin:
                    break
                out = set(pmax) - set(pmin)
                inn = set(pmin) - set(pmax)
                curv = mult * (a[list(out)].sum() + a[list(inn)].sum())
                avail = pf[pmax]
                step = avail if curv <= 0 else min(avail, gap / curv)
                if step >= avail * (1 - 1e-12):
                    step = avail
                    del pf[pmax]
                else:
                    pf[pmax] = avail - step
                pf[pmin] = pf.get(pmin, 0.0) + step
                f[list(out)] -= step
                f[list(inn)] += step
        F = _edge_flows_from_paths(paths, E)
        f = F.sum(axis=0)
        if worst <= tol:
            for pf in paths:
                for p in [p for p, x in pf.items() if x <= 0]:
                    del pf[p]
            return Flow(graph.edges, tuple(dict(sorted(pf.items())) for pf in paths), F)
    raise NumericalFailure(f"flow solver did not reach gap {tol} in {max_sweeps} sweeps")


def nash_flow(lat: AffineLatencies, commodities, tol: float = FLOW_TOL, seed=None,
              max_sweeps: int = MAX_SWEEPS) -> Flow:
    """Wardrop flow: every used path is within ``tol`` of the shortest."""
    return _equilibrate(lat, _commodities(commodities), tol, False, seed, max_sweeps)


def optimal_flow(lat: AffineLatencies, commodities, tol: float = FLOW_TOL, seed=None,
                 max_sweeps: int = MAX_SWEEPS) -> Flow:
    """Minimum total latency flow (marginal costs equalized on used paths)."""
    return _equilibrate(lat, _commodities(commodities), tol, True, seed, max_sweeps)


def _commodities(commodities):
    return tuple(c if isinstance(c, Commodity) else Commodity(str(c[0]), str(c[1]), float(c[2]))
                 for c in commodities)


def total_latency(lat: AffineLatencies, flow) -> float:
    """C(l; f) = Σ_e f_e l_e(f_e)."""
    f = flow.edge_flows if isinstance(flow, Flow) else np.asarray(flow, dtype=float)
    return float(np.sum(f * lat(f)))


def path_gap(lat: AffineLatencies, commodities, flow: Flow, marginal: bool = False) -> float:
    """Largest excess of a used path's (marginal) cost over the shortest path."""
    f = flow.edge_flows
    cost = (2.0 if marginal else 1.0) * lat.slopes * f + lat.intercepts
    worst = 0.0
    for c, pf in zip(_commodities(commodities), flow.paths):
        dmin, _ = lat.graph.shortest_path(cost, c.source, c.sink)
        for p, x in pf.items():
            if x > 0:
                worst = max(worst, float(cost[list(p)].sum()) - dmin)
    return worst


def wardrop_residual(lat: AffineLatencies, commodities, flow: Flow) -> float:
    return path_gap(lat, commodities, flow, marginal=False)


class ZeroOptimumError(DimensionError):
    pass


def price_of_anarchy(lat: AffineLatencies, commodities, tol: float = FLOW_TOL) -> float:
    nash = total_latency(lat, nash_flow(lat, commodities, tol))
    opt = total_latency(lat, optimal_flow(lat, commodities, tol))
    if opt <= 0:
        raise ZeroOptimumError("optimal total latency is zero")
    return nash / opt


def routing_scheme_value(inst: RoutingInstance, scheme: SignalingScheme, tol: float = FLOW_TOL) -> float:
    """Σ_σ α_σ C(l^{μ_σ}; f^{μ_σ}) with f^μ the Nash flow."""
    if scheme.num_states != inst.num_states:
        raise InvalidSchemeError(f"scheme has {scheme.num_states} states, instance has {inst.num_states}")
    res = scheme.residual(inst.prior)
    if res > SCHEME_VALUE_TOL:
        raise InvalidSchemeError(f"scheme does not decompose the prior (residual {res:.3g})")
    return float(sum(w * inst.value_at(mu, tol) for w, mu in scheme))


def full_revelation_routing(inst: RoutingInstance, tol: float = FLOW_TOL):
    """Reveal the state; value Σ_θ λ_θ C(l^θ; f^θ)."""
    scheme = baseline_scheme(inst, "full")
    return scheme, routing_scheme_value(inst, scheme, tol)


def grid_best_scheme(inst: RoutingInstance, delta: float, tol: float = FLOW_TOL):
    """Best scheme whose posteriors lie on the δ-net (min Σ α val(μ))."""
    net = delta_net(inst.num_states, delta).points
    vals = np.array([inst.value_at(mu, tol) for mu in net])
    lp = LinearProgram(vals, net.T, inst.prior, ("=",) * inst.num_states, sense="min")
    sol = solve_lp(lp)
    if not sol.optimal:
        raise NumericalFailure(f"grid scheme LP ended with status {sol.status}")
    return SignalingScheme.from_weights(sol.primal, net, inst.prior), float(sol.value)


# --- tolls gadget -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TollsGadget:
    instance: RoutingInstance
    base: AffineLatencies  # demand normalized to 1
    source: str
    sink: str
    removed: tuple  # K*, base edge ids
    m: int
    L: float  # Nash latency of the normalized base
    L_star: float  # Nash latency after deleting K*
    demand_scale: float
    copies: tuple = field(default=())  # (edge ids of copy 1, edge ids of copy 2) in H
    links: tuple = field(default=())  # H ids of (s,s1), (s,s2), (t1,t), (t2,t)

    @property
    def big(self) -> float:
        return 8 * self.m ** 3 * self.L


def normalize_demand(lat: AffineLatencies, demand: float) -> AffineLatencies:
    """Rescale so the demand is 1: with x = d·x', a·x + b = (a·d)·x' + b."""
    return AffineLatencies(lat.nodes, lat.edges, lat.slopes * demand, lat.intercepts)


def _fresh(name, taken):
    while name in taken:
        name += "'"
    return name


def tolls_gadget(base: AffineLatencies, source: str, sink: str, demand: float = 1.0, removed=(),
                 tol: float = FLOW_TOL) -> TollsGadget:
    """Two copies of the base network joined at a new source and sink.

    States are the copy edges (prior 1/m² each) and the two source links
    (sharing the remaining 1 − 2/m); state θ adds 8m³L to edge θ.
    """
    m = len(base.edges)
    if m < 2:
        raise DimensionError("the base network needs at least two edges")
    base = normalize_demand(base, demand)
    one = (Commodity(str(source), str(sink), 1.0),)
    L = total_latency(base, nash_flow(base, one, tol))
    removed = tuple(sorted(set(int(e) for e in removed)))
    cut, _ = base.without_edges(removed)
    if not cut.graph.connected(str(source), str(sink)):
        raise DisconnectedError("removing K* disconnects the base network")
    L_star = total_latency(cut, nash_flow(cut, one, tol))
    names = set(base.nodes)
    s, t = _fresh("s*", names), _fresh("t*", names)
    nodes = [s, t] + [f"{v}@{i}" for i in (1, 2) for v in base.nodes]
    edges, a, b = [], [], []
    copies = []
    for i in (1, 2):
        ids = []
        for e, (u, v) in enumerate(base.edges):
            ids.append(len(edges))
            edges.append((f"{u}@{i}", f"{v}@{i}"))
            a.append(base.slopes[e])
            b.append(base.intercepts[e])
        copies.append(tuple(ids))
    links = []
    for e in ((s, f"{source}@1"), (s, f"{source}@2"), (f"{sink}@1", t), (f"{sink}@2", t)):
        links.append(len(edges))
        edges.append(e)
        a.append(0.0)
        b.append(0.0)
    a, b = np.array(a), np.array(b)
    M = 2 * m + 2
    big = 8 * m ** 3 * L
    slopes = np.tile(a, (M, 1))
    intercepts = np.tile(b, (M, 1))
    intercepts[np.arange(M), np.arange(M)] += big  # state θ is H edge θ
    prior = np.concatenate([np.full(2 * m, 1.0 / m ** 2), np.full(2, (1 - 2 / m) / 2)])
    inst = RoutingInstance(tuple(nodes), tuple(edges), slopes, intercepts, (Commodity(s, t, 1.0),), prior)
    return TollsGadget(inst, base, str(source), str(sink), removed, m, float(L), float(L_star), float(demand),
                       tuple(copies), tuple(links))


def gadget_prior_exact(m: int) -> list:
    return [Fraction(1, m * m)] * (2 * m) + [(1 - Fraction(2, m)) / 2] * 2


def scheme_posteriors_exact(m: int, removed) -> tuple[list, list]:
    """μ¹ = 2/m² on K₁ ∪ E₂∖K₂ and 1−2/m on (s,s₂); μ² symmetric."""
    K = set(removed)
    mu1 = [Fraction(0)] * (2 * m + 2)
    mu2 = [Fraction(0)] * (2 * m + 2)
    for e in range(m):
        if e in K:
            mu1[e] = mu2[m + e] = Fraction(2, m * m)
        else:
            mu1[m + e] = mu2[e] = Fraction(2, m * m)
    mu1[2 * m + 1] = mu2[2 * m] = 1 - Fraction(2, m)
    return mu1, mu2


def scheme_from_tolls(gadget: TollsGadget, removed=None) -> SignalingScheme:
    removed = gadget.removed if removed is None else tuple(removed)
    mu1, mu2 = scheme_posteriors_exact(gadget.m, removed)
    P = np.array([[float(x) for x in mu1], [float(x) for x in mu2]])
    return SignalingScheme(np.array([0.5, 0.5]), P, ("copy1", "copy2"))


@dataclass(frozen=True, eq=False)
class TollsResult:
    tolls: np.ndarray  # per base edge
    scheme_value: float  # L′
    chosen_signal: int | None
    posterior_value: float | None
    copy: int | None  # which copy carries the flow (1 or 2)


def qualifying_signals(gadget: TollsGadget, scheme: SignalingScheme) -> list:
    """Signals whose posterior puts at least 1/m on the two source links."""
    m = gadget.m
    return [i for i, mu in enumerate(scheme.posteriors) if mu[2 * m] + mu[2 * m + 1] >= 1.0 / m]


def tolls_from_scheme(gadget: TollsGadget, scheme: SignalingScheme, tol: float = FLOW_TOL) -> TollsResult:
    """Tolls τ_e = μ′_e·8m³L read off a qualifying posterior μ′.

    μ′ qualifies when μ′(s,s₁) + μ′(s,s₂) ≥ 1/m; among those the one with
    the smallest Nash latency is used.
    """
    inst, m = gadget.instance, gadget.m
    vals = [inst.value_at(mu, tol) for mu in scheme.posteriors]
    Lp = routing_scheme_value(inst, scheme, tol)
    if Lp > gadget.L:
        return TollsResult(np.zeros(m), Lp, None, None, None)
    cand = qualifying_signals(gadget, scheme)
    if not cand:
        raise ContractViolation("no posterior puts mass 1/m on the source links")
    best = min(cand, key=lambda i: (vals[i], i))
    mu = scheme.posteriors[best]
    # heavy (s,s1) pushes the flow into copy 2, and vice versa
    copy = 2 if mu[2 * m] >= 1.0 / (2 * m) else 1
    ids = np.array(gadget.copies[copy - 1])
    tolls = mu[ids] * gadget.big
    return TollsResult(tolls, Lp, best, vals[best], copy)


def nash_cost_with_tolls(lat: AffineLatencies, commodities, tolls, tol: float = FLOW_TOL) -> float:
    """C(l+τ; f^NE(τ)): total latency plus tolls paid at the tolled Nash flow."""
    tolled = lat.plus_tolls(tolls)
    return total_latency(tolled, nash_flow(tolled, commodities, tol))


def pigou() -> AffineLatencies:
    return AffineLatencies(("s", "t"), (("s", "t"), ("s", "t")), [0.0, 1.0], [1.0, 0.0])


BRAESS_SHORTCUT = 4


def braess() -> AffineLatencies:
    """s→v: x, v→t: 1, s→w: 1, w→t: x, v→w: 0 (edge 4 is the shortcut)."""
    return AffineLatencies(
        ("s", "v", "w", "t"),
        (("s", "v"), ("v", "t"), ("s", "w"), ("w", "t"), ("v", "w")),
        [1.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 1.0, 1.0, 0.0, 0.0],
    )

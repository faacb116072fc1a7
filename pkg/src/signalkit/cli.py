"""Command-line entry point: ``signalkit <group> [<command>] [options]``.

Every command prints a short human summary (or, with ``--format json``, its
JSON report).  ``--out`` receives the command's main artifact: a scheme,
game, graph or instance document where one is produced, the report otherwise.
``--report`` additionally saves the report next to an artifact.

Exit codes: 0 success, 1 a library error (bad document, invalid scheme,
contract violation), 2 usage errors.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

import numpy as np

from . import __version__
from . import io as sio
from .errors import DimensionError, SignalKitError
from .planted import (
    HardnessGameParams,
    build_hardness_game,
    check_cover_condition,
    clique_cover_scheme,
    extract_clusters,
    gen_pcover,
    recover_clique,
)
from .routing import (
    Commodity,
    full_revelation_routing,
    nash_cost_with_tolls,
    nash_flow,
    optimal_flow,
    price_of_anarchy,
    routing_scheme_value,
    scheme_from_tolls,
    tolls_from_scheme,
    tolls_gadget,
    total_latency,
    wardrop_residual,
)
from .security import (
    bcbs_extract,
    bcbs_gadget,
    bcbs_parameters,
    bimatrix_extract,
    bimatrix_gadget,
    expand,
    is_vertex_cover,
    strategy_payoff,
    val_compact,
    vc_cover_scheme,
    vc_extract_cover,
    vc_grid_search,
    vc_principal_value,
    vc_scheme_value,
    vertex_cover_gadget,
)
from .signaling import (
    dual_oracle_grid,
    ellipsoid_signaling,
    max_prior_grid,
    optimal_signaling_dnet,
)
from .zerosum import as_posterior, baseline_scheme, game_value, scheme_value, val, validate_scheme


class UsageError(Exception):
    pass


def _vector(text: str, name: str) -> np.ndarray:
    try:
        return np.array([float(Fraction(t.strip())) for t in text.split(",") if t.strip()])
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"--{name}: expected comma-separated numbers, got {text!r}") from None


def _matrix(text: str, name: str) -> np.ndarray:
    rows = [_vector(r, name) for r in text.split(";")]
    if len({len(r) for r in rows}) != 1:
        raise UsageError(f"--{name}: rows must have equal length")
    return np.array(rows)


def _ints(text: str, name: str) -> list:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--{name}: expected comma-separated integers") from None


def _fmt(x) -> str:
    return "%.10g" % x


def _scheme_env(scheme, args):
    return sio.InstanceEnvelope("scheme", sio.scheme_body(scheme), args.seed, _provenance(args))


def _provenance(args) -> str:
    return f"signalkit {__version__} {args.command_path}"


def _graph_edges(env):
    if env.kind != "graph":
        raise sio.ParseError(f"expected a graph document, got {env.kind!r}", "/kind")
    return env.body["n"], [tuple(e) for e in env.body["edges"]]


# --- top-level game commands ------------------------------------------------


def cmd_value(args):
    game = sio.to_game(sio.load(args.game))
    mu = as_posterior(_vector(args.posterior, "posterior"), game.num_states)
    eq = game_value(game.mix(mu))
    v = val(game, mu)
    report = {"value": v, "posterior": mu, "row_strategy": eq.row_strategy, "col_strategy": eq.col_strategy}
    return report, None, f"val = {_fmt(v)}"


def cmd_mix(args):
    game = sio.to_game(sio.load(args.game))
    mu = as_posterior(_vector(args.posterior, "posterior"), game.num_states)
    A = game.mix(mu)
    return {"posterior": mu, "matrix": A}, None, f"mixed {A.shape[0]}x{A.shape[1]} matrix"


# --- signal -----------------------------------------------------------------


def _scheme_report(game, scheme, value):
    return {
        "value": value,
        "signals": len(scheme),
        "weights": scheme.weights,
        "posteriors": scheme.posteriors,
        "residual": scheme.residual(game.prior),
    }


def cmd_signal_dnet(args):
    game = sio.to_game(sio.load(args.game))
    sol = optimal_signaling_dnet(game, args.delta, full_output=True)
    report = _scheme_report(game, sol.scheme, sol.value)
    report.update({"delta": args.delta, "net_size": sol.net_size})
    return report, _scheme_env(sol.scheme, args), f"δ-net value {_fmt(sol.value)} with {len(sol.scheme)} signals"


def cmd_signal_ellipsoid(args):
    game = sio.to_game(sio.load(args.game))
    res = ellipsoid_signaling(game, args.eps, full_output=True)
    report = _scheme_report(game, res.scheme, res.value)
    report.update({"eps": args.eps, "nu_star": res.nu_star, "delta": res.delta, "oracle_delta": res.oracle_delta,
                   "ellipsoid_runs": res.ellipsoid_runs, "oracle_calls": res.oracle_calls})
    return report, _scheme_env(res.scheme, args), f"ellipsoid value {_fmt(res.value)} (ν* = {_fmt(res.nu_star)})"


def cmd_signal_dual_oracle(args):
    game = sio.to_game(sio.load(args.game))
    w = _vector(args.weights, "weights")
    if w.shape != (game.num_states,):
        raise DimensionError(f"--weights needs {game.num_states} entries")
    ans = dual_oracle_grid(game, w, args.eps, args.delta)
    report = {"case": ans.case, "witness": ans.witness, "slack": ans.slack, "eps": args.eps}
    return report, None, f"{ans.case} (max slack {_fmt(ans.slack)})"


def cmd_signal_max_prior(args):
    game = sio.to_game(sio.load(args.game))
    mu, v = max_prior_grid(game, args.delta)
    return {"posterior": mu, "value": v, "delta": args.delta}, None, f"best net posterior value {_fmt(v)}"


def _baseline(mode):
    def run(args):
        game = sio.to_game(sio.load(args.game))
        scheme = baseline_scheme(game, mode)
        v = scheme_value(game, scheme)
        return _scheme_report(game, scheme, v), _scheme_env(scheme, args), f"{mode}-revelation value {_fmt(v)}"

    return run


def cmd_signal_validate(args):
    game = sio.to_game(sio.load(args.game))
    scheme = sio.to_scheme(sio.load(args.scheme))
    rep = validate_scheme(game, scheme, args.tol)
    report = {"ok": rep.ok, "max_residual": rep.max_residual, "weight_sum": rep.weight_sum}
    if rep.ok:
        report["value"] = scheme_value(game, scheme)
    return report, None, "ok" if rep.ok else f"invalid (residual {_fmt(rep.max_residual)})"


# --- esg --------------------------------------------------------------------


def _load_esg(path):
    env = sio.load(path)
    if env.kind != "esg":
        raise sio.ParseError(f"expected an esg document, got {env.kind!r}", "/kind")
    return sio.to_game(env)


def cmd_esg_expand(args):
    esg = _load_esg(args.esg)
    game = expand(esg)
    env = sio.InstanceEnvelope("game", sio.game_body(game), args.seed, _provenance(args))
    return {"states": game.num_states, "shape": list(game.shape)}, env, f"expanded to {game.num_states} matrices"


def cmd_esg_val(args):
    esg = _load_esg(args.esg)
    mu = as_posterior(_vector(args.posterior, "posterior"), esg.num_states)
    eq = val_compact(esg, mu)
    return {"value": eq.value, "row_strategy": eq.row_strategy}, None, f"val = {_fmt(eq.value)}"


# --- gadgets ----------------------------------------------------------------


def _bcbs(args):
    env = sio.load(args.graph)
    n, edges = _graph_edges(env)
    left = env.body.get("left")
    if left is None:
        raise sio.ParseError("bipartite graph needs a 'left' field", "/body")
    n_left = len(left)
    if sorted(left) != list(range(n_left)):
        raise sio.ParseError("left side must be vertices 0..|left|-1", "/body/left")
    return bcbs_gadget(n_left, n - n_left, edges, args.r)


def cmd_bcbs_build(args):
    g = _bcbs(args)
    eps, eta, rho = g.exact
    env = sio.InstanceEnvelope("esg", sio.esg_body(g.game), args.seed, _provenance(args))
    report = {"n": g.n, "r": g.r, "eps": eps, "eta": eta, "rho": rho}
    return report, env, f"BCBS gadget on {g.n} vertices (η = {_fmt(float(eta))})"


def cmd_bcbs_extract(args):
    g = _bcbs(args)
    mu = as_posterior(_vector(args.posterior, "posterior"), g.n)
    x = _vector(args.strategy, "strategy") if args.strategy else val_compact(g.game, mu).row_strategy
    ext = bcbs_extract(g, mu, x)
    report = {"left": list(ext.left), "right": list(ext.right), "payoff": ext.payoff,
              "precondition_met": ext.precondition_met, "is_biclique": ext.is_biclique,
              "large_enough": ext.large_enough}
    return report, None, f"V' = {list(ext.left)}, W' = {list(ext.right)}"


def cmd_bcbs_verify(args):
    eps, eta, rho = bcbs_parameters(args.n, args.r)
    ok = eps == Fraction(1, 2 * args.n**8) and eta == 1 - (2 * args.n + 1) * eps and rho == 2 * args.r * args.n * eps
    return {"n": args.n, "r": args.r, "eps": eps, "eta": eta, "rho": rho, "identities_hold": ok}, None, \
        "identities hold" if ok else "identities FAIL"


def cmd_bimatrix_build(args):
    game = bimatrix_gadget(_matrix(args.R, "R"), _matrix(args.C, "C"), args.eps)
    env = sio.InstanceEnvelope("esg", sio.esg_body(game), args.seed, _provenance(args))
    return {"states": game.num_states, "shape": list(game.shape), "payoff_bound": game.payoff_bound}, env, \
        f"bimatrix gadget {game.shape[0]}x{game.shape[1]}, {game.num_states} states"


def cmd_bimatrix_extract(args):
    R, C = _matrix(args.R, "R"), _matrix(args.C, "C")
    ext = bimatrix_extract(R, C, args.eps, _vector(args.posterior, "posterior"))
    report = {"x": ext.x, "mu": ext.mu, "welfare": ext.welfare, "nash_residual": ext.nash_residual, "value": ext.value}
    return report, None, f"welfare {_fmt(ext.welfare)}, Nash residual {_fmt(ext.nash_residual)}"


def cmd_bimatrix_verify(args):
    R, C = _matrix(args.R, "R"), _matrix(args.C, "C")
    game = bimatrix_gadget(R, C, args.eps)
    rng = np.random.default_rng(args.seed or 0)
    worst = 0.0
    for _ in range(args.samples):
        x = rng.dirichlet(np.ones(R.shape[0]))
        mu = rng.dirichlet(np.ones(R.shape[1]))
        closed = (1 + 1 / args.eps) * x @ (R + C) @ mu - (np.max(R @ mu) + np.max(x @ C)) / args.eps
        worst = max(worst, abs(strategy_payoff(game, mu, x) - closed))
    return {"samples": args.samples, "max_error": worst}, None, f"max identity error {_fmt(worst)}"


def _vc(args):
    n, edges = _graph_edges(sio.load(args.graph))
    return vertex_cover_gadget(n, edges)


def cmd_vc_build(args):
    g = _vc(args)
    env = sio.InstanceEnvelope("game", sio.game_body(g.game), args.seed, _provenance(args))
    return {"n": g.n, "edges": [list(e) for e in g.edges], "columns": g.game.shape[1]}, env, \
        f"vertex-cover gadget with {g.game.shape[1]} columns"


def cmd_vc_extract(args):
    g = _vc(args)
    pv = vc_principal_value(g, _vector(args.posterior, "posterior"))
    mu = as_posterior(_vector(args.posterior, "posterior"), g.n)
    cover = list(vc_extract_cover(mu)) if pv.value else None
    report = {"principal_value": pv.value, "cover": cover,
              "is_cover": bool(cover is not None and is_vertex_cover(g.edges, cover))}
    return report, None, f"principal value {pv.value}" + (f", cover {cover}" if cover else "")


def cmd_vc_verify(args):
    g = _vc(args)
    report = {}
    if args.cover:
        cover = _ints(args.cover, "cover")
        report["cover"] = cover
        report["is_cover"] = is_vertex_cover(g.edges, cover)
        report["scheme_value"] = vc_scheme_value(g, vc_cover_scheme(g, cover))
    if args.delta:
        hits = vc_grid_search(g, args.delta)
        report["delta"] = args.delta
        report["positive_posteriors"] = len(hits)
    if not report:
        raise UsageError("give --cover and/or --delta")
    return report, None, ", ".join(f"{k}={v}" for k, v in report.items() if not isinstance(v, list))


# --- planted clique ---------------------------------------------------------


def _params(args):
    return HardnessGameParams(Z=args.Z, c2_scaled=args.c2, N_scaled=args.N, seed=args.seed or 0)


def cmd_pclique_gen(args):
    g = gen_pcover(args.n, args.p, args.k, args.r, args.seed or 0)
    env = sio.InstanceEnvelope("graph", sio.planted_graph_body(g), args.seed or 0, _provenance(args))
    return {"n": g.n, "edges": len(g.edges()), "planted_sets": [list(S) for S in g.planted_sets]}, env, \
        f"G({args.n}, {args.p}, {args.k}, {args.r}) with {len(g.edges())} edges"


def _pgraph(args):
    env = sio.load(args.graph)
    return sio.to_planted_graph(env)


def cmd_pclique_build_game(args):
    g = _pgraph(args)
    game = build_hardness_game(g, _params(args))
    report = {"states": game.num_states, "shape": list(game.shape), "payoff_bound": game.payoff_bound,
              "B_mean": float(game.B.mean()), "D_mean": float(game.D.mean()),
              "B_bad_entries": int(np.count_nonzero(game.B < 0)), "D_bad_entries": int(np.count_nonzero(game.D < 0))}
    return report, None, f"hardness game {game.shape[0]}x{game.shape[1]} (B mean {_fmt(report['B_mean'])})"


def _cover_values(args):
    g = _pgraph(args)
    game = build_hardness_game(g, _params(args))
    scheme = clique_cover_scheme(g, args.min_frac)
    values = [game.value_at(mu) for mu in scheme.posteriors]
    return g, game, scheme, values


def cmd_pclique_scheme(args):
    g, game, scheme, values = _cover_values(args)
    v = scheme_value(game, scheme, values)
    report = {"value": v, "signals": len(scheme), "labels": list(scheme.labels), "weights": scheme.weights,
              "signal_values": values}
    return report, _scheme_env(scheme, args), f"clique-cover scheme value {_fmt(v)}"


def cmd_pclique_extract(args):
    g, game, scheme, values = _cover_values(args)
    family = extract_clusters(game, scheme, args.eps, values)
    frac = check_cover_condition(family, g.planted_sets, args.cover_eps, args.c3, g.n)
    report = {"family": [list(T) for T in family], "cover_fraction": frac, "eps": args.eps}
    return report, None, f"{len(family)} clusters, cover fraction {_fmt(frac)}"


def cmd_pclique_recover(args):
    g = _pgraph(args)
    if args.T:
        T = _ints(args.T, "T")
    elif args.clique is not None:
        if not 0 <= args.clique < len(g.planted_sets):
            raise UsageError("--clique index out of range")
        T = list(g.planted_sets[args.clique])
    else:
        raise UsageError("give --T or --clique")
    k = args.k if args.k else g.k
    res = recover_clique(g, T, k, args.c3, args.seed or 0, args.sample_eps, args.max_subsets)
    report = {"success": res.success, "candidate": list(res.candidate) if res.candidate else None,
              "subsets_tried": res.subsets_tried, "matched_index": res.matched_index}
    return report, None, "recovered planted clique" if res.success else "recovery failed"


# --- routing ----------------------------------------------------------------


def _routing(args):
    inst = sio.to_routing(sio.load(args.instance))
    if args.posterior:
        mu = as_posterior(_vector(args.posterior, "posterior"), inst.num_states)
    else:
        mu = inst.prior
    return inst, inst.mix(mu)


def _flow_report(lat, comms, flow):
    return {"edge_flows": flow.edge_flows, "total_latency": total_latency(lat, flow),
            "wardrop_residual": wardrop_residual(lat, comms, flow)}


def cmd_routing_nash(args):
    inst, lat = _routing(args)
    flow = nash_flow(lat, inst.commodities, args.tol)
    rep = _flow_report(lat, inst.commodities, flow)
    return rep, None, f"Nash total latency {_fmt(rep['total_latency'])}"


def cmd_routing_opt(args):
    inst, lat = _routing(args)
    flow = optimal_flow(lat, inst.commodities, args.tol)
    rep = {"edge_flows": flow.edge_flows, "total_latency": total_latency(lat, flow)}
    return rep, None, f"optimal total latency {_fmt(rep['total_latency'])}"


def cmd_routing_poa(args):
    inst, lat = _routing(args)
    poa = price_of_anarchy(lat, inst.commodities, args.tol)
    return {"price_of_anarchy": poa}, None, f"PoA {_fmt(poa)}"


def cmd_routing_reveal(args):
    inst = sio.to_routing(sio.load(args.instance))
    scheme, v = full_revelation_routing(inst, args.tol)
    return {"value": v, "signals": len(scheme)}, _scheme_env(scheme, args), f"full-revelation latency {_fmt(v)}"


def _gadget(args):
    inst = sio.to_routing(sio.load(args.instance))
    if inst.num_states != 1 or len(inst.commodities) != 1:
        raise DimensionError("the tolls gadget needs a single-state, single-commodity base instance")
    c = inst.commodities[0]
    base = inst.latencies(0)
    removed = _ints(args.remove, "remove") if args.remove else []
    return tolls_gadget(base, c.source, c.sink, c.demand, removed, args.tol)


def cmd_routing_gadget(args):
    g = _gadget(args)
    env = sio.InstanceEnvelope("routing", sio.routing_body(g.instance), args.seed, _provenance(args))
    report = {"m": g.m, "states": g.instance.num_states, "L": g.L, "L_star": g.L_star,
              "removed": list(g.removed), "demand_scale": g.demand_scale}
    return report, env, f"gadget with {g.instance.num_states} states, L = {_fmt(g.L)}, L* = {_fmt(g.L_star)}"


def cmd_routing_tolls(args):
    g = _gadget(args)
    scheme = sio.to_scheme(sio.load(args.scheme)) if args.scheme else scheme_from_tolls(g)
    res = tolls_from_scheme(g, scheme, args.tol)
    one = (Commodity(g.source, g.sink, 1.0),)
    cost = nash_cost_with_tolls(g.base, one, res.tolls, args.tol)
    bound = res.scheme_value / (1 - 4 / g.m) if g.m > 4 else float("inf")
    report = {"tolls": res.tolls, "scheme_value": res.scheme_value, "nash_cost": cost,
              "scheme_routing_value": routing_scheme_value(g.instance, scheme, args.tol),
              "chosen_signal": res.chosen_signal, "copy": res.copy}
    if np.isfinite(bound):
        report["bound"] = bound
    return report, None, f"tolled Nash cost {_fmt(cost)} (scheme latency {_fmt(res.scheme_value)})"


# --- parser -----------------------------------------------------------------


def _common(p):
    p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed")
    p.add_argument("--out", default=None, help="write the main artifact here")
    p.add_argument("--report", default=None, help="also write the JSON report here")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--format", choices=("text", "json"), default="text")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="signalkit", description="Signaling in Bayesian zero-sum and routing games.")
    parser.add_argument("--version", action="version", version=f"signalkit {__version__}")
    top = parser.add_subparsers(dest="group", required=True)

    def leaf(sub, name, fn, **kw):
        p = sub.add_parser(name, **kw)
        _common(p)
        p.set_defaults(func=fn)
        return p

    p = leaf(top, "value", cmd_value, help="minimax value at a posterior")
    p.add_argument("--game", required=True)
    p.add_argument("--posterior", required=True)
    p = leaf(top, "mix", cmd_mix, help="mixed payoff matrix at a posterior")
    p.add_argument("--game", required=True)
    p.add_argument("--posterior", required=True)

    sig = top.add_parser("signal", help="signaling schemes").add_subparsers(dest="cmd", required=True)
    p = leaf(sig, "dnet", cmd_signal_dnet)
    p.add_argument("--game", required=True)
    p.add_argument("--delta", type=float, required=True)
    p = leaf(sig, "ellipsoid", cmd_signal_ellipsoid)
    p.add_argument("--game", required=True)
    p.add_argument("--eps", type=float, required=True)
    p = leaf(sig, "dual-oracle", cmd_signal_dual_oracle)
    p.add_argument("--game", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, default=None)
    p = leaf(sig, "max-prior", cmd_signal_max_prior)
    p.add_argument("--game", required=True)
    p.add_argument("--delta", type=float, required=True)
    for mode in ("full", "none"):
        p = leaf(sig, mode, _baseline(mode))
        p.add_argument("--game", required=True)
    p = leaf(sig, "validate", cmd_signal_validate)
    p.add_argument("--game", required=True)
    p.add_argument("--scheme", required=True)
    p.set_defaults(tol=1e-8)

    esg = top.add_parser("esg", help="extended security games").add_subparsers(dest="cmd", required=True)
    p = leaf(esg, "expand", cmd_esg_expand)
    p.add_argument("--esg", required=True)
    p = leaf(esg, "val", cmd_esg_val)
    p.add_argument("--esg", required=True)
    p.add_argument("--posterior", required=True)

    gad = top.add_parser("gadget", help="hardness gadgets").add_subparsers(dest="family", required=True)
    bc = gad.add_parser("bcbs").add_subparsers(dest="cmd", required=True)
    for name, fn in (("build", cmd_bcbs_build), ("extract", cmd_bcbs_extract)):
        p = leaf(bc, name, fn)
        p.add_argument("--graph", required=True)
        p.add_argument("--r", type=int, required=True)
        if name == "extract":
            p.add_argument("--posterior", required=True)
            p.add_argument("--strategy", default=None)
    p = leaf(bc, "verify", cmd_bcbs_verify)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    bm = gad.add_parser("bimatrix").add_subparsers(dest="cmd", required=True)
    for name, fn in (("build", cmd_bimatrix_build), ("extract", cmd_bimatrix_extract), ("verify", cmd_bimatrix_verify)):
        p = leaf(bm, name, fn)
        p.add_argument("--R", required=True, help="rows separated by ';', entries by ','")
        p.add_argument("--C", required=True)
        p.add_argument("--eps", type=float, required=True)
        if name == "extract":
            p.add_argument("--posterior", required=True)
        if name == "verify":
            p.add_argument("--samples", type=int, default=1000)
    vc = gad.add_parser("vc").add_subparsers(dest="cmd", required=True)
    for name, fn in (("build", cmd_vc_build), ("extract", cmd_vc_extract), ("verify", cmd_vc_verify)):
        p = leaf(vc, name, fn)
        p.add_argument("--graph", required=True)
        if name == "extract":
            p.add_argument("--posterior", required=True)
        if name == "verify":
            p.add_argument("--cover", default=None)
            p.add_argument("--delta", type=float, default=None)

    pc = top.add_parser("pclique", help="planted clique lab").add_subparsers(dest="cmd", required=True)
    p = leaf(pc, "gen", cmd_pclique_gen)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    for name, fn in (("build-game", cmd_pclique_build_game), ("scheme", cmd_pclique_scheme),
                     ("extract", cmd_pclique_extract)):
        p = leaf(pc, name, fn)
        p.add_argument("--graph", required=True)
        p.add_argument("--N", type=int, default=2000)
        p.add_argument("--Z", type=float, default=20.0)
        p.add_argument("--c2", type=int, default=8)
        p.add_argument("--min-frac", dest="min_frac", type=float, default=1e-4)
        if name == "extract":
            p.add_argument("--eps", type=float, default=0.03)
            p.add_argument("--cover-eps", dest="cover_eps", type=float, default=0.25)
            p.add_argument("--c3", type=float, default=4)
    p = leaf(pc, "recover", cmd_pclique_recover)
    p.add_argument("--graph", required=True)
    p.add_argument("--T", default=None)
    p.add_argument("--clique", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--c3", type=float, default=4)
    p.add_argument("--sample-eps", dest="sample_eps", type=float, default=1.0)
    p.add_argument("--max-subsets", dest="max_subsets", type=int, default=200)

    rt = top.add_parser("routing", help="Bayesian selfish routing").add_subparsers(dest="cmd", required=True)
    for name, fn in (("nash", cmd_routing_nash), ("opt", cmd_routing_opt), ("poa", cmd_routing_poa)):
        p = leaf(rt, name, fn)
        p.add_argument("--instance", required=True)
        p.add_argument("--posterior", default=None, help="defaults to the prior")
    p = leaf(rt, "reveal", cmd_routing_reveal)
    p.add_argument("--instance", required=True)
    for name, fn in (("gadget", cmd_routing_gadget), ("tolls", cmd_routing_tolls)):
        p = leaf(rt, name, fn)
        p.add_argument("--instance", required=True)
        p.add_argument("--remove", default=None, help="comma-separated base edge ids (K*)")
        if name == "tolls":
            p.add_argument("--scheme", default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.command_path = " ".join(x for x in (args.group, getattr(args, "family", None), getattr(args, "cmd", None)) if x)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("signalkit: error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        report, artifact, summary = args.func(args)
    except UsageError as exc:
        print(f"signalkit: error: {exc}", file=sys.stderr)
        return 2
    except (SignalKitError, ValueError) as exc:
        print(f"signalkit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"signalkit: {exc}", file=sys.stderr)
        return 1
    report_env = sio.InstanceEnvelope("report", dict(report, command=args.command_path), args.seed, _provenance(args))
    if args.out:
        sio.save(args.out, artifact if artifact is not None else report_env)
    if args.report:
        sio.save(args.report, report_env)
    if args.format == "json":
        sys.stdout.write(sio.serialize(report_env).decode("utf-8"))
    else:
        print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Canonical JSON envelopes for games, schemes, graphs and routing instances.

Canonical form: keys sorted, two-space indent, floats written with 17
significant digits, a trailing newline.  Parsing rejects unknown fields and
non-finite numbers and reports the offending location as a JSON pointer.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ParseError, SignalKitError
from .planted import PlantedGraph
from .routing import Commodity, RoutingInstance
from .security import ExtendedSecurityGame
from .zerosum import BayesianGame, SignalingScheme

FORMAT_VERSION = "1"
KINDS = ("game", "esg", "routing", "graph", "scheme", "report")
ENVELOPE_KEYS = {"format_version", "kind", "body", "seed", "provenance"}
SEED_MAX = 2**64 - 1


@dataclass(frozen=True, eq=False)
class InstanceEnvelope:
    kind: str
    body: dict
    seed: int | None = None
    provenance: str = ""
    format_version: str = FORMAT_VERSION


# --- serialization ----------------------------------------------------------


def _plain(obj, ptr="") -> object:
    if isinstance(obj, dict):
        return {str(k): _plain(v, f"{ptr}/{k}") for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v, f"{ptr}/{i}") for i, v in enumerate(obj)]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist(), ptr)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            raise SignalKitError(f"{ptr or '/'}: cannot serialize non-finite number")
        return x + 0.0  # folds -0.0 into 0.0
    if isinstance(obj, Fraction):
        return str(obj)
    if obj is None or isinstance(obj, str):
        return obj
    raise SignalKitError(f"{ptr or '/'}: cannot serialize {type(obj).__name__}")


def _emit(obj, indent: int, out: list):
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = sorted(obj.items())
        for i, (k, v) in enumerate(items):
            out.append(f"{pad}  {json.dumps(k, ensure_ascii=False)}: ")
            _emit(v, indent + 1, out)
            out.append(",\n" if i < len(items) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
        elif all(not isinstance(v, (dict, list)) for v in obj):
            out.append("[" + ", ".join(_scalar(v) for v in obj) + "]")
        else:
            out.append("[\n")
            for i, v in enumerate(obj):
                out.append(pad + "  ")
                _emit(v, indent + 1, out)
                out.append(",\n" if i < len(obj) - 1 else "\n")
            out.append(pad + "]")
    else:
        out.append(_scalar(obj))


def _scalar(v) -> str:
    if isinstance(v, float):
        return "%.17g" % v
    return json.dumps(v, ensure_ascii=False)


def dumps(obj) -> str:
    out = []
    _emit(_plain(obj), 0, out)
    return "".join(out) + "\n"


def serialize(env: InstanceEnvelope) -> bytes:
    doc = {"format_version": env.format_version, "kind": env.kind, "body": env.body}
    if env.seed is not None:
        doc["seed"] = env.seed
    if env.provenance:
        doc["provenance"] = env.provenance
    return dumps(doc).encode("utf-8")


# --- parsing ----------------------------------------------------------------


class _NonFinite:
    pass


_NONFINITE = _NonFinite()


def _find_nonfinite(obj, ptr=""):
    if obj is _NONFINITE:
        return ptr or "/"
    if isinstance(obj, dict):
        items = obj.items()
    elif isinstance(obj, list):
        items = enumerate(obj)
    else:
        return None
    for k, v in items:
        hit = _find_nonfinite(v, f"{ptr}/{k}")
        if hit:
            return hit
    return None


def parse_instance(data) -> InstanceEnvelope:
    if isinstance(data, str):
        data = data.encode("utf-8")
    try:
        text = bytes(data).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8: {exc}") from None
    try:
        doc = json.loads(text, parse_constant=lambda _: _NONFINITE)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    bad = _find_nonfinite(doc)
    if bad:
        raise ParseError("non-finite number", bad)
    if not isinstance(doc, dict):
        raise ParseError("envelope must be a JSON object")
    _keys(doc, {"format_version", "kind", "body"}, {"seed", "provenance"}, "")
    if doc["format_version"] != FORMAT_VERSION:
        raise ParseError(f"unsupported format version {doc['format_version']!r}", "/format_version")
    if doc["kind"] not in KINDS:
        raise ParseError(f"unknown kind {doc['kind']!r}", "/kind")
    seed = doc.get("seed")
    if seed is not None and not (isinstance(seed, int) and not isinstance(seed, bool) and 0 <= seed <= SEED_MAX):
        raise ParseError("seed must be an unsigned 64-bit integer", "/seed")
    prov = doc.get("provenance", "")
    if not isinstance(prov, str):
        raise ParseError("provenance must be a string", "/provenance")
    if not isinstance(doc["body"], dict):
        raise ParseError("body must be an object", "/body")
    BODY_CHECKS[doc["kind"]](doc["body"], "/body")
    return InstanceEnvelope(doc["kind"], doc["body"], seed, prov, doc["format_version"])


def _keys(obj, required, optional, ptr):
    if not isinstance(obj, dict):
        raise ParseError("expected an object", ptr)
    for k in obj:
        if k not in required and k not in optional:
            raise ParseError("unknown field", f"{ptr}/{k}")
    for k in sorted(required):
        if k not in obj:
            raise ParseError(f"missing field {k!r}", ptr)


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _array(obj, ptr, ndim: int, integer: bool = False):
    """Check a rectangular nested list of numbers; returns its shape."""
    if ndim == 0:
        if not _is_number(obj) or (integer and not isinstance(obj, int)):
            raise ParseError("expected an integer" if integer else "expected a number", ptr)
        return ()
    if not isinstance(obj, list):
        raise ParseError(f"expected a {ndim}-dimensional array", ptr)
    shapes = {_array(v, f"{ptr}/{i}", ndim - 1, integer) for i, v in enumerate(obj)}
    if len(shapes) > 1:
        raise ParseError("ragged array", ptr)
    return (len(obj),) + (shapes.pop() if shapes else (0,) * (ndim - 1))


def _check_game(body, ptr):
    _keys(body, {"payoffs", "prior"}, {"payoff_bound"}, ptr)
    shape = _array(body["payoffs"], f"{ptr}/payoffs", 3)
    prior = _array(body["prior"], f"{ptr}/prior", 1)
    if prior[0] != shape[0]:
        raise ParseError("prior length must match the number of states", f"{ptr}/prior")
    if "payoff_bound" in body:
        _array(body["payoff_bound"], f"{ptr}/payoff_bound", 0)


def _check_esg(body, ptr):
    _keys(body, {"Abar", "B", "D", "prior"}, {"payoff_bound"}, ptr)
    for k in ("Abar", "B", "D"):
        _array(body[k], f"{ptr}/{k}", 2)
    _array(body["prior"], f"{ptr}/prior", 1)
    if "payoff_bound" in body:
        _array(body["payoff_bound"], f"{ptr}/payoff_bound", 0)


def _check_scheme(body, ptr):
    _keys(body, {"weights", "posteriors"}, {"labels"}, ptr)
    w = _array(body["weights"], f"{ptr}/weights", 1)
    p = _array(body["posteriors"], f"{ptr}/posteriors", 2)
    if w[0] != p[0]:
        raise ParseError("one posterior per weight", f"{ptr}/posteriors")
    if "labels" in body:
        labels = body["labels"]
        if not isinstance(labels, list) or len(labels) != w[0]:
            raise ParseError("one label per weight", f"{ptr}/labels")


def _check_graph(body, ptr):
    _keys(body, {"n", "edges"}, {"left", "planted_sets", "background_edges", "p", "k"}, ptr)
    _array(body["n"], f"{ptr}/n", 0, integer=True)
    n = body["n"]
    for key in ("edges", "background_edges"):
        if key in body:
            shape = _array(body[key], f"{ptr}/{key}", 2, integer=True)
            if body[key] and shape[1] != 2:
                raise ParseError("edges are [u, v] pairs", f"{ptr}/{key}")
            for i, (u, v) in enumerate(body[key]):
                if not (0 <= u < n and 0 <= v < n) or u == v:
                    raise ParseError("edge endpoints must be distinct vertices in [0, n)", f"{ptr}/{key}/{i}")
    for key in ("left",):
        if key in body:
            _array(body[key], f"{ptr}/{key}", 1, integer=True)
    if "planted_sets" in body:
        _array(body["planted_sets"], f"{ptr}/planted_sets", 2, integer=True)
    if "p" in body:
        _array(body["p"], f"{ptr}/p", 0)
    if "k" in body:
        _array(body["k"], f"{ptr}/k", 0, integer=True)


def _check_routing(body, ptr):
    _keys(body, {"nodes", "edges", "slopes", "intercepts", "commodities", "prior"}, set(), ptr)
    if not isinstance(body["nodes"], list) or not all(isinstance(v, str) for v in body["nodes"]):
        raise ParseError("nodes must be a list of strings", f"{ptr}/nodes")
    edges = body["edges"]
    if not isinstance(edges, list):
        raise ParseError("edges must be a list", f"{ptr}/edges")
    for i, e in enumerate(edges):
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(v, str) for v in e)):
            raise ParseError("edges are [tail, head] name pairs", f"{ptr}/edges/{i}")
    for k in ("slopes", "intercepts"):
        _array(body[k], f"{ptr}/{k}", 2)
    _array(body["prior"], f"{ptr}/prior", 1)
    comms = body["commodities"]
    if not isinstance(comms, list):
        raise ParseError("commodities must be a list", f"{ptr}/commodities")
    for i, c in enumerate(comms):
        _keys(c, {"source", "sink", "demand"}, set(), f"{ptr}/commodities/{i}")
        _array(c["demand"], f"{ptr}/commodities/{i}/demand", 0)


def _check_report(body, ptr):
    if not isinstance(body, dict):
        raise ParseError("report body must be an object", ptr)


BODY_CHECKS = {
    "game": _check_game,
    "esg": _check_esg,
    "scheme": _check_scheme,
    "graph": _check_graph,
    "routing": _check_routing,
    "report": _check_report,
}


# --- typed conversion -------------------------------------------------------


def game_body(game: BayesianGame) -> dict:
    return {"payoffs": game.payoffs, "prior": game.prior, "payoff_bound": game.payoff_bound}


def esg_body(esg: ExtendedSecurityGame) -> dict:
    return {"Abar": esg.Abar, "B": esg.B, "D": esg.D, "prior": esg.prior, "payoff_bound": esg.payoff_bound}


def scheme_body(scheme: SignalingScheme) -> dict:
    body = {"weights": scheme.weights, "posteriors": scheme.posteriors}
    if scheme.labels is not None:
        body["labels"] = list(scheme.labels)
    return body


def graph_body(n: int, edges, **extra) -> dict:
    body = {"n": int(n), "edges": sorted([min(u, v), max(u, v)] for u, v in edges)}
    body.update({k: v for k, v in extra.items() if v is not None})
    return body


def planted_graph_body(g: PlantedGraph) -> dict:
    return graph_body(g.n, g.edges(), background_edges=sorted([u, v] for u, v in g.background_edges),
                      planted_sets=[list(S) for S in g.planted_sets], p=g.p, k=g.k)


def routing_body(inst: RoutingInstance) -> dict:
    return {
        "nodes": list(inst.nodes),
        "edges": [list(e) for e in inst.edges],
        "slopes": inst.slopes,
        "intercepts": inst.intercepts,
        "commodities": [{"source": c.source, "sink": c.sink, "demand": c.demand} for c in inst.commodities],
        "prior": inst.prior,
    }


def _wrap(fn, ptr):
    try:
        return fn()
    except ParseError:
        raise
    except (SignalKitError, ValueError) as exc:
        raise ParseError(str(exc), ptr) from None


def to_game(env: InstanceEnvelope):
    """A BayesianGame or ExtendedSecurityGame, depending on the envelope kind."""
    b = env.body
    if env.kind == "game":
        return _wrap(lambda: BayesianGame(np.array(b["payoffs"], dtype=float), np.array(b["prior"], dtype=float),
                                          float(b.get("payoff_bound", 1.0))), "/body")
    if env.kind == "esg":
        return _wrap(lambda: ExtendedSecurityGame(np.array(b["Abar"], dtype=float), np.array(b["B"], dtype=float),
                                                  np.array(b["D"], dtype=float), np.array(b["prior"], dtype=float),
                                                  b.get("payoff_bound")), "/body")
    raise ParseError(f"expected a game or esg document, got {env.kind!r}", "/kind")


def to_scheme(env: InstanceEnvelope) -> SignalingScheme:
    if env.kind != "scheme":
        raise ParseError(f"expected a scheme document, got {env.kind!r}", "/kind")
    b = env.body
    labels = tuple(b["labels"]) if "labels" in b else None
    return _wrap(lambda: SignalingScheme(np.array(b["weights"], dtype=float),
                                         np.array(b["posteriors"], dtype=float), labels), "/body")


def to_routing(env: InstanceEnvelope) -> RoutingInstance:
    if env.kind != "routing":
        raise ParseError(f"expected a routing document, got {env.kind!r}", "/kind")
    b = env.body
    comms = tuple(Commodity(c["source"], c["sink"], float(c["demand"])) for c in b["commodities"])
    return _wrap(lambda: RoutingInstance(tuple(b["nodes"]), tuple(tuple(e) for e in b["edges"]),
                                         np.array(b["slopes"], dtype=float), np.array(b["intercepts"], dtype=float),
                                         comms, np.array(b["prior"], dtype=float)), "/body")


def to_planted_graph(env: InstanceEnvelope) -> PlantedGraph:
    if env.kind != "graph":
        raise ParseError(f"expected a graph document, got {env.kind!r}", "/kind")
    b = env.body
    n = b["n"]
    adj = np.zeros((n, n), dtype=bool)
    for u, v in b["edges"]:
        adj[u, v] = adj[v, u] = True
    bg = np.zeros((n, n), dtype=bool)
    for u, v in b.get("background_edges", []):
        bg[u, v] = bg[v, u] = True
    sets = tuple(tuple(sorted(S)) for S in b.get("planted_sets", []))
    adj.setflags(write=False)
    bg.setflags(write=False)
    k = b.get("k", len(sets[0]) if sets else 0)
    return PlantedGraph(n, float(b.get("p", 0.0)), int(k), adj, bg, sets, int(env.seed or 0))


def load(path) -> InstanceEnvelope:
    with open(path, "rb") as fh:
        return parse_instance(fh.read())


def save(path, env: InstanceEnvelope):
    with open(path, "wb") as fh:
        fh.write(serialize(env))

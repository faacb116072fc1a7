"""Regenerate the static input documents used by the CLI golden tests."""

from pathlib import Path

import numpy as np

from signalkit import io as sio
from signalkit.planted import gen_pcover
from signalkit.routing import RoutingInstance, braess, pigou
from signalkit.security import ExtendedSecurityGame
from signalkit.zerosum import BayesianGame, SignalingScheme

HERE = Path(__file__).parent / "inputs"


def save(name, kind, body, seed=None):
    sio.save(HERE / name, sio.InstanceEnvelope(kind, body, seed, "golden input"))


def main():
    HERE.mkdir(exist_ok=True)
    game = BayesianGame(np.array([[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]]]), [0.5, 0.5])
    save("game2.json", "game", sio.game_body(game))
    save("scheme2.json", "scheme", sio.scheme_body(SignalingScheme([0.5, 0.5], [[1.0, 0.0], [0.0, 1.0]])))
    rng = np.random.default_rng(7)
    esg = ExtendedSecurityGame(rng.uniform(-0.3, 0.3, (3, 3)), rng.uniform(-0.3, 0.3, (3, 3)),
                               rng.uniform(-0.3, 0.3, (3, 3)), [0.2, 0.3, 0.5])
    save("esg3.json", "esg", sio.esg_body(esg))
    for name, lat in (("pigou.json", pigou()), ("braess.json", braess())):
        inst = RoutingInstance(lat.nodes, lat.edges, [lat.slopes], [lat.intercepts], [("s", "t", 1.0)])
        save(name, "routing", sio.routing_body(inst))
    two = RoutingInstance(("s", "t"), (("s", "t"), ("s", "t")), [[0.0, 1.0], [0.0, 1.0]], [[1.0, 0.0], [0.2, 0.5]],
                          [("s", "t", 1.0)], [0.4, 0.6])
    save("routing2.json", "routing", sio.routing_body(two))
    save("c4.json", "graph", sio.graph_body(4, [(0, 1), (1, 2), (2, 3), (0, 3)]))
    save("k4.json", "graph", sio.graph_body(4, [(u, v) for u in range(4) for v in range(u + 1, 4)]))
    save("k22.json", "graph", sio.graph_body(4, [(0, 2), (0, 3), (1, 2), (1, 3)], left=[0, 1]))
    g = gen_pcover(60, 0.5, 12, 2, 3)
    save("planted60.json", "graph", sio.planted_graph_body(g), seed=3)


if __name__ == "__main__":
    main()

"""Planted clique cover: recovery from a cluster and the cover scheme of the hardness game."""

import sys

from signalkit.planted import (
    HardnessGameParams,
    build_hardness_game,
    check_cover_condition,
    clique_cover_scheme,
    extract_clusters,
    gen_pcover,
    recover_clique,
)
from signalkit.zerosum import scheme_value

n, k, r = (int(v) for v in sys.argv[1:4]) if len(sys.argv) > 3 else (200, 30, 4)
g = gen_pcover(n, 0.5, k, r, seed=1)
res = recover_clique(g, g.planted_sets[0], k, seed=1)
print(f"recovery from the true clique: success={res.success} after {res.subsets_tried} subset(s)")

game = build_hardness_game(g, HardnessGameParams(N_scaled=500, seed=1))
scheme = clique_cover_scheme(g)
values = [game.value_at(mu) for mu in scheme.posteriors]
for label, w, v in zip(scheme.labels, scheme.weights, values):
    print(f"  {label:9s} weight {w:.3f}  value {v:+.3f}")
print(f"cover scheme value {scheme_value(game, scheme, values):+.4f}")
family = extract_clusters(game, scheme, 0.03, values)
print(f"{len(family)} cluster(s), cover fraction {check_cover_condition(family, g.planted_sets, 0.25, 4, n):.2f}")

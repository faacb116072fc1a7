"""Optimal signaling on a small random security game: δ-net LP vs the ellipsoid pipeline."""

import numpy as np

from signalkit.security import ExtendedSecurityGame
from signalkit.signaling import ellipsoid_signaling, optimal_signaling_dnet
from signalkit.zerosum import baseline_scheme, scheme_value, val

rng = np.random.default_rng(7)
M, r, c = 3, 4, 4
s = 1 / 3
game = ExtendedSecurityGame(rng.uniform(-s, s, (r, c)), rng.uniform(-s, s, (r, M)),
                            rng.uniform(-s, s, (c, M)), rng.dirichlet(np.ones(M) * 3))

print(f"Lipschitz constant {game.lipschitz_constant():.3f}")
print(f"no information     {val(game, game.prior):+.4f}")
print(f"full revelation    {scheme_value(game, baseline_scheme(game, 'full')):+.4f}")
dnet = optimal_signaling_dnet(game, 1 / 30, full_output=True)
print(f"δ-net LP (1/30)    {dnet.value:+.4f} with {len(dnet.scheme)} signals")
ell = ellipsoid_signaling(game, 0.05, full_output=True)
print(f"ellipsoid (ε=0.05) {scheme_value(game, ell.scheme):+.4f} after {ell.oracle_calls} oracle calls")
for w, mu in zip(ell.scheme.weights, ell.scheme.posteriors):
    print(f"  weight {w:.3f}  posterior {np.round(mu, 3)}")

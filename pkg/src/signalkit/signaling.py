"""Optimal and approximate signaling for Bayesian zero-sum games.

Everything here works on a finite grid of posteriors, the δ-net
S_δ = {μ ∈ Δ_M : μ_θ/δ ∈ ℤ}.  Concavifying val over the net is one LP;
the ellipsoid pipeline reaches the same value using only a dual oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ContractViolation, DimensionError, NetSizeError, NumericalFailure
from .lp import LinearProgram, SeparationAnswer, ellipsoid_feasibility, solve_lp
from .zerosum import SignalingScheme, val

NET_CAP = 2_000_000


def net_resolution(delta: float) -> int:
    """Return K = 1/δ, insisting that it is an integer."""
    if not delta > 0:
        raise DimensionError("delta must be positive")
    K = round(1.0 / delta)
    if K < 1 or abs(K - 1.0 / delta) > 1e-9 * K:
        raise DimensionError(f"1/delta must be an integer, got 1/{delta!r} = {1.0 / delta!r}")
    return int(K)


def net_size(M: int, K: int) -> int:
    return math.comb(M - 1 + K, M - 1)


def _compositions(M: int, K: int) -> np.ndarray:
    """All nonnegative integer M-tuples summing to K, in lexicographic order."""
    if M == 1:
        return np.array([[K]], dtype=np.int64)
    blocks = []
    for first in range(K + 1):
        rest = _compositions(M - 1, K - first)
        blocks.append(np.hstack([np.full((rest.shape[0], 1), first, dtype=np.int64), rest]))
    return np.vstack(blocks)


@dataclass(frozen=True, eq=False)
class DeltaNet:
    delta: float
    counts: np.ndarray  # integer coordinates, rows sum to 1/δ

    @property
    def resolution(self) -> int:
        return int(round(1.0 / self.delta))

    @property
    def points(self) -> np.ndarray:
        return self.counts / self.resolution

    def __len__(self):
        return self.counts.shape[0]


def delta_net(M: int, delta: float, cap: int = NET_CAP) -> DeltaNet:
    if M < 1:
        raise DimensionError("need at least one state")
    K = net_resolution(delta)
    size = net_size(M, K)
    if size > cap:
        raise NetSizeError(f"δ-net with M={M}, 1/δ={K} has {size} points (cap {cap})")
    return DeltaNet(1.0 / K, _compositions(M, K))


def round_to_net(mu, delta: float, w) -> np.ndarray:
    """The point of S_δ within ∞-distance δ of ``mu`` minimizing wᵀμ̂.

    Coordinates are boxed to [⌈(μ_θ−δ)/δ⌉, ⌊(μ_θ+δ)/δ⌋]; filling the lower
    ends and spending the remaining units on the cheapest coordinates is
    optimal for a separable linear objective.  Points already on the net are
    returned unchanged.
    """
    mu = np.asarray(mu, dtype=float)
    w = np.asarray(w, dtype=float)
    K = net_resolution(delta)
    scaled = mu * K
    on_net = np.rint(scaled)
    if np.all(np.abs(scaled - on_net) <= 1e-9) and on_net.sum() == K:
        return on_net / K
    lo = np.maximum(0, np.ceil(scaled - 1 - 1e-9)).astype(np.int64)
    hi = np.minimum(K, np.floor(scaled + 1 + 1e-9)).astype(np.int64)
    counts = lo.copy()
    left = K - int(counts.sum())
    for t in np.argsort(w, kind="stable"):
        if left <= 0:
            break
        add = min(left, int(hi[t] - counts[t]))
        counts[t] += add
        left -= add
    if left != 0:
        raise NumericalFailure("could not round posterior onto the net")
    return counts / K


class RestrictedGame:
    """View of a game on the states in ``support`` (zero-prior states dropped)."""

    def __init__(self, game, support):
        self.base = game
        self.support = np.asarray(support, dtype=np.int64)
        prior = np.asarray(game.prior, dtype=float)[self.support]
        self.prior = prior / prior.sum()
        self.payoff_bound = game.payoff_bound
        self.shape = game.shape

    @property
    def num_states(self):
        return self.support.shape[0]

    def embed(self, mu) -> np.ndarray:
        full = np.zeros(self.base.num_states)
        full[self.support] = mu
        return full

    def mix(self, mu):
        return self.base.mix(self.embed(mu))

    def value_at(self, mu):
        return val(self.base, self.embed(mu))

    def lipschitz_constant(self):
        fn = getattr(self.base, "lipschitz_constant", None)
        if fn is None:
            return None
        D = getattr(self.base, "D", None)
        if D is not None:
            return lipschitz_bound(np.asarray(D)[:, self.support].T)
        return fn()


def restrict_to_support(game):
    prior = np.asarray(game.prior, dtype=float)
    support = np.nonzero(prior > 0)[0]
    return RestrictedGame(game, support)


class NetValues:
    """Lazily computed val over a δ-net (one LP per point, computed once)."""

    def __init__(self, game, delta: float, cap: int = NET_CAP):
        self.game = game
        self.net = delta_net(game.num_states, delta, cap)
        self._values = None

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            pts = self.net.points
            self._values = np.array([val(self.game, p) for p in pts])
        return self._values


@dataclass(frozen=True, eq=False)
class DnetSolution:
    scheme: SignalingScheme
    value: float
    dual: np.ndarray  # w of the dual program, in full state coordinates
    dual_value: float
    net_size: int


def optimal_signaling_dnet(game, delta: float, cap: int = NET_CAP, full_output: bool = False,
                           net_values: NetValues | None = None):
    """Concavification LP over S_δ: max Σ α_μ val(μ) s.t. Σ α_μ μ = λ, α ≥ 0.

    The net is built on the support of the prior only.
    """
    sub = restrict_to_support(game)
    if net_values is None:
        net_values = NetValues(sub, delta, cap)
    pts = net_values.net.points
    vals = net_values.values
    lp = LinearProgram(vals, pts.T, sub.prior, ("=",) * sub.num_states)
    sol = solve_lp(lp)
    if not sol.optimal:
        raise NumericalFailure(f"δ-net LP ended with status {sol.status}")
    full_pts = np.array([sub.embed(p) for p in pts])
    scheme = SignalingScheme.from_weights(sol.primal, full_pts, game.prior)
    if not full_output:
        return scheme
    w = np.full(game.num_states, np.nan)
    w[sub.support] = sol.dual
    return DnetSolution(scheme, float(sol.value), w, float(sol.dual_value), len(net_values.net))


def dnet_value(game, delta: float, cap: int = NET_CAP) -> float:
    return optimal_signaling_dnet(game, delta, cap, full_output=True).value


@dataclass(frozen=True, eq=False)
class DualOracleAnswer:
    case: str  # "witness" | "empty"
    witness: np.ndarray | None
    slack: float  # max over the grid of val(μ) − wᵀμ


class GridDualOracle:
    """Exhaustive dual-signaling oracle over a δ-net.

    For a γ-Lipschitz extended security game with δ = ε/γ an "empty" answer
    certifies val(μ) < wᵀμ − ε for every posterior; otherwise it only
    speaks for the net itself.
    """

    def __init__(self, game, delta: float, cap: int = NET_CAP):
        self.game = game
        self.delta = delta
        self.table = NetValues(game, delta, cap)

    def __call__(self, w, eps: float = 0.0) -> DualOracleAnswer:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.game.num_states,):
            raise DimensionError("weight vector length does not match the number of states")
        pts = self.table.net.points
        gaps = self.table.values - pts @ w
        best = int(np.argmax(gaps))
        slack = float(gaps[best])
        if slack >= 0:
            return DualOracleAnswer("witness", pts[best].copy(), slack)
        return DualOracleAnswer("empty", None, slack)


def oracle_delta(game, eps: float) -> float:
    """ε/γ̂ rounded down to a unit fraction for Lipschitz games, ε/(M·bound) otherwise."""
    gamma = None
    fn = getattr(game, "lipschitz_constant", None)
    if fn is not None:
        gamma = fn()
    if gamma is None:
        gamma = game.num_states * game.payoff_bound
    if gamma <= 0:
        return 1.0
    return 1.0 / math.ceil(gamma / eps - 1e-12)


def dual_oracle_grid(game, w, eps: float, delta: float | None = None, cap: int = NET_CAP) -> DualOracleAnswer:
    if delta is None:
        delta = oracle_delta(game, eps)
    return GridDualOracle(game, delta, cap)(w, eps)


def max_prior_grid(game, delta: float, cap: int = NET_CAP):
    """Prior on S_δ maximizing the optimal signaling value over that net.

    The net-restricted optimum at a net prior is the upper concave hull of
    val over the net evaluated there, and the hull's maximum is attained at
    a net point, so this equals the best val over the net.
    """
    table = NetValues(game, delta, cap)
    best = int(np.argmax(table.values))
    return table.net.points[best].copy(), float(table.values[best])


def lipschitz_bound(A) -> float:
    """γ̂ = max_j (r/2)(max_i A_ij − min_i A_ij), a certified bound on
    ‖xᵀA − x′ᵀA‖∞ / ‖x − x′‖∞ over the simplex."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise DimensionError("expected a matrix")
    if A.size == 0:
        return 0.0
    r = A.shape[0]
    return float(np.max(A.max(axis=0) - A.min(axis=0)) * r / 2)


# ---------------------------------------------------------------------------
# ellipsoid pipeline


@dataclass(eq=False)
class EllipsoidSignalingResult:
    scheme: SignalingScheme
    value: float
    nu_star: float
    delta: float
    oracle_delta: float | None
    cut_posteriors: np.ndarray
    ellipsoid_runs: int = 0
    oracle_calls: int = 0
    cut_gaps: list = field(default_factory=list)


class _ValueCache:
    def __init__(self, game, K):
        self.game = game
        self.K = K
        self.store = {}

    def __call__(self, mu):
        key = tuple(int(v) for v in np.rint(np.asarray(mu) * self.K))
        if key not in self.store:
            self.store[key] = val(self.game, np.array(key, dtype=float) / self.K)
        return self.store[key]


def ellipsoid_signaling(
    game,
    eps: float,
    oracle: Callable | None = None,
    volume_tol: float | None = None,
    cap: int = NET_CAP,
    full_output: bool = False,
):
    """Approximately optimal signaling from a dual oracle via the ellipsoid method.

    ``oracle(sub_game, w, eps)`` must answer the dual signaling question on
    the prior's support; by default an exhaustive :class:`GridDualOracle`
    at δ' = ε/γ̂ is used.  Binary search on ν finds the smallest level at
    which {w : wᵀλ ≤ ν, wᵀμ ≥ val(μ) − ε on S_δ} is reported nonempty;
    the cuts collected just below that level span the compact LP that
    yields the scheme.
    """
    if not eps > 0:
        raise DimensionError("eps must be positive")
    sub = restrict_to_support(game)
    M = sub.num_states
    pb = float(game.payoff_bound)
    if M == 1:
        scheme = SignalingScheme(np.ones(1), sub.embed(np.ones(1))[None, :])
        value = val(game, scheme.posteriors[0])
        if full_output:
            return EllipsoidSignalingResult(scheme, value, value, 1.0, None, scheme.posteriors)
        return scheme

    K = math.ceil(M * pb / eps - 1e-12)
    delta = 1.0 / K
    value_of = _ValueCache(sub, K)
    odelta = None
    if oracle is None:
        odelta = oracle_delta(sub, eps)
        grid = GridDualOracle(sub, odelta, cap)
        oracle = lambda g, w, e: grid(w, e)  # noqa: E731
    lam = sub.prior
    radius = max(M * pb, 2 * (pb + 2 * eps) / float(lam.min()))
    if volume_tol is None:
        volume_tol = eps / 100
    stats = {"calls": 0}

    def separation(nu, cuts_out):
        def sep(w):
            if w @ lam > nu:
                return SeparationAnswer.cut(lam, nu)
            stats["calls"] += 1
            ans = oracle(sub, w, eps)
            if ans.case != "witness":
                return SeparationAnswer.inside(ans)
            mu = np.asarray(ans.witness, dtype=float)
            if val(sub, mu) < w @ mu - eps - 1e-9:
                raise ContractViolation("dual oracle witness has val(μ) < wᵀμ − ε")
            mu_hat = round_to_net(mu, delta, w)
            v_hat = value_of(mu_hat)
            gap = float(w @ mu_hat - v_hat)
            if gap > 2 * eps + 1e-7:
                raise ContractViolation(f"rounded witness has wᵀμ − val(μ) = {gap:.3g} > 2ε")
            cuts_out.append((mu_hat, gap))
            # separates w from {w : wᵀμ̂ ≥ val(μ̂) + 2ε}
            return SeparationAnswer.cut(-mu_hat, -(v_hat + 2 * eps), mu_hat)
        return sep

    def run(nu):
        cuts = []
        res = ellipsoid_feasibility(separation(nu, cuts), M, radius, volume_tol)
        return res.feasible, cuts

    runs = 0
    lo, hi = -pb - 2 * eps, pb + 2 * eps
    ok_hi, _ = run(hi)
    runs += 1
    if not ok_hi:
        raise NumericalFailure("binary search on ν could not bracket: upper end reported empty")
    ok_lo, _ = run(lo)
    runs += 1
    if ok_lo:
        raise NumericalFailure("binary search on ν could not bracket: lower end reported nonempty")
    while hi - lo > eps / 4:
        mid = (lo + hi) / 2
        feasible, _ = run(mid)
        runs += 1
        if feasible:
            hi = mid
        else:
            lo = mid
    nu_star = hi
    feasible, cuts = run(nu_star - eps)
    runs += 1
    if feasible:
        # the oracle is not monotone in ν; fall back to the largest infeasible level
        feasible, cuts = run(lo)
        runs += 1

    # compact primal over the cut posteriors plus the simplex vertices
    pts = [np.eye(M)[t] for t in range(M)] + [c[0] for c in cuts]
    keys = {}
    for p in pts:
        keys.setdefault(tuple(np.rint(p * K).astype(int)), p)
    T = np.array(list(keys.values()))
    vals = np.array([value_of(p) if np.allclose(p * K, np.rint(p * K)) else val(sub, p) for p in T])
    lp = LinearProgram(vals, T.T, lam, ("=",) * M)
    sol = solve_lp(lp)
    if not sol.optimal:
        raise NumericalFailure(f"compact LP ended with status {sol.status}")
    full = np.array([sub.embed(p) for p in T])
    scheme = SignalingScheme.from_weights(sol.primal, full, game.prior)
    if not full_output:
        return scheme
    value = float(np.dot(sol.primal, vals))
    return EllipsoidSignalingResult(
        scheme, value, nu_star, delta, odelta, T, runs, stats["calls"], [c[1] for c in cuts]
    )

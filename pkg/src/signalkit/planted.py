"""Planted clique covers and the zero-sum game built on top of them.

Random streams: every draw comes from PCG64 seeded by a
``SeedSequence(seed, spawn_key=...)``.  The graph uses key (0,), column j of
B uses (1, j), column j of D uses (2, j), and trial t of a batch uses (3, t).
Any single column can therefore be regenerated on its own.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, SignalKitError
from .zerosum import SignalingScheme, game_value_columns

GRAPH_STREAM = 0
B_STREAM = 1
D_STREAM = 2
TRIAL_STREAM = 3
GAME_ENTRY_CAP = 50_000_000


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=tuple(key))))


def trial_seed(seed: int, t: int) -> int:
    """Deterministic 63-bit seed for trial ``t`` of a batch."""
    return int(np.random.SeedSequence(int(seed), spawn_key=(TRIAL_STREAM, t)).generate_state(2, np.uint64)[0] >> np.uint64(1))


def max_threads() -> int:
    try:
        return max(1, int(os.environ.get("SIGNALKIT_THREADS", "1")))
    except ValueError:
        return 1


def run_trials(fn, seeds):
    """Map ``fn`` over seeds, with at most SIGNALKIT_THREADS workers; order is kept."""
    seeds = list(seeds)
    workers = min(max_threads(), len(seeds)) or 1
    if workers == 1:
        return [fn(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, seeds))


@dataclass(frozen=True, eq=False)
class PlantedGraph:
    n: int
    p: float
    k: int
    adjacency: np.ndarray  # bool, symmetric, zero diagonal
    background: np.ndarray  # bool, edges drawn before planting
    planted_sets: tuple  # tuple of sorted vertex tuples
    seed: int

    @property
    def r(self) -> int:
        return len(self.planted_sets)

    def edges(self, which: str = "all") -> list:
        if which == "all":
            adj = self.adjacency
        elif which == "background":
            adj = self.background
        elif which == "clique":
            adj = self.adjacency & ~self.background
        else:
            raise ValueError(which)
        iu, ju = np.nonzero(np.triu(adj, 1))
        return list(zip(iu.tolist(), ju.tolist()))

    @property
    def background_edges(self):
        return self.edges("background")

    @property
    def clique_edges(self):
        return self.edges("clique")


def gen_pcover(n: int, p: float, k: int, r: int, seed: int) -> PlantedGraph:
    """G(n, p, k, r): a G(n, p) background, then r random k-sets made cliques."""
    if not 0 <= p <= 1:
        raise DimensionError("p must lie in [0, 1]")
    if not 0 <= k <= n or r < 0 or n < 1:
        raise DimensionError("need 0 <= k <= n, r >= 0 and n >= 1")
    rng = stream(seed, GRAPH_STREAM)
    upper = np.triu(rng.random((n, n)) < p, 1)
    background = upper | upper.T
    adj = background.copy()
    sets = []
    for _ in range(r):
        S = np.sort(rng.choice(n, size=k, replace=False))
        adj[np.ix_(S, S)] = True
        sets.append(tuple(int(v) for v in S))
    np.fill_diagonal(adj, False)
    adj.setflags(write=False)
    background.setflags(write=False)
    return PlantedGraph(n, float(p), k, adj, background, tuple(sets), int(seed))


def bi_density(graph, S, T) -> float:
    """Fraction of ordered pairs (u, v) ∈ S×T joined by an edge."""
    adj = graph.adjacency if isinstance(graph, PlantedGraph) else np.asarray(graph, dtype=bool)
    S = np.asarray(sorted(S), dtype=np.int64)
    T = np.asarray(sorted(T), dtype=np.int64)
    if S.size == 0 or T.size == 0:
        raise DimensionError("bi-density needs nonempty sets")
    return float(adj[np.ix_(S, T)].sum()) / (S.size * T.size)


@dataclass(frozen=True)
class HardnessGameParams:
    Z: float = 20.0
    c2_scaled: int = 8
    N_scaled: int = 2000
    seed: int = 0

    def __post_init__(self):
        if not self.Z > 2:
            raise DimensionError("Z must exceed 2")
        if self.N_scaled < 1:
            raise DimensionError("N_scaled must be positive")


def random_sign_column(seed: int, which: int, j: int, n: int, Z: float) -> np.ndarray:
    """Column j of B (which=1) or D (which=2): 2−Z w.p. 3/(4Z), else 2."""
    rng = stream(seed, which, j)
    bad = rng.random(n) < 3.0 / (4.0 * Z)
    return np.where(bad, 2.0 - Z, 2.0)


@dataclass(frozen=True, eq=False)
class HardnessGame:
    """A^θ = [a^θ | B | 𝟙 (d^θ)ᵀ] with a^θ the θ-th adjacency column.

    States and row strategies are vertices; the prior is uniform.
    B is n×N and D is N×n, so d^θ = D[:, θ].
    """

    adjacency: np.ndarray
    B: np.ndarray
    D: np.ndarray
    Z: float
    prior: np.ndarray = field(default=None)

    def __post_init__(self):
        n = self.adjacency.shape[0]
        if self.prior is None:
            object.__setattr__(self, "prior", np.full(n, 1.0 / n))

    @property
    def num_states(self) -> int:
        return self.adjacency.shape[0]

    @property
    def shape(self):
        return self.adjacency.shape[0], 2 * self.B.shape[1] + 1

    @property
    def payoff_bound(self) -> float:
        return float(self.Z)

    def mix(self, mu) -> np.ndarray:
        mu = np.asarray(mu, dtype=float)
        n = self.num_states
        return np.hstack([(self.adjacency @ mu)[:, None], self.B, np.ones((n, 1)) * (self.D @ mu)[None, :]])

    def value_at(self, mu) -> float:
        """The D block is constant down each column, so
        val(μ) = min(min_j (Dμ)_j, value of [A_G μ | B])."""
        mu = np.asarray(mu, dtype=float)
        cap = float(np.min(self.D @ mu))
        inner = game_value_columns(np.hstack([(self.adjacency @ mu)[:, None], self.B]), initial=[0], stop_at=cap)
        return min(cap, inner.value)


def build_hardness_game(graph: PlantedGraph, params: HardnessGameParams,
                        entry_cap: int = GAME_ENTRY_CAP) -> HardnessGame:
    n, N = graph.n, params.N_scaled
    if n * (2 * N + 1) > entry_cap:
        raise SignalKitError(f"hardness game with {n}×{2 * N + 1} payoffs exceeds the cap {entry_cap}")
    B = np.column_stack([random_sign_column(params.seed, B_STREAM, j, n, params.Z) for j in range(N)])
    D = np.vstack([random_sign_column(params.seed, D_STREAM, j, n, params.Z) for j in range(N)])
    adj = graph.adjacency.astype(float)
    for arr in (adj, B, D):
        arr.setflags(write=False)
    return HardnessGame(adj, B, D, float(params.Z))


def clique_cover_scheme(graph: PlantedGraph, min_frac: float = 1e-4) -> SignalingScheme:
    """Signal which (disjointified) planted clique θ fell into.

    S′_i = S_i minus earlier cliques; sets smaller than min_frac·k join the
    residual signal, which is uniform on the uncovered vertices.
    """
    n = graph.n
    taken = np.zeros(n, dtype=bool)
    weights, posts, labels = [], [], []
    for i, S in enumerate(graph.planted_sets):
        S = np.asarray(S, dtype=np.int64)
        Sp = S[~taken[S]]
        taken[S] = True
        if Sp.size == 0 or Sp.size < min_frac * graph.k:
            taken[Sp] = False
            continue
        mu = np.zeros(n)
        mu[Sp] = 1.0 / Sp.size
        weights.append(Sp.size / n)
        posts.append(mu)
        labels.append(f"clique{i}")
    rest = np.nonzero(~taken)[0]
    if rest.size:
        mu = np.zeros(n)
        mu[rest] = 1.0 / rest.size
        weights.append(rest.size / n)
        posts.append(mu)
        labels.append("residual")
    w = np.array(weights)
    return SignalingScheme(w / w.sum(), np.array(posts), tuple(labels))


def soundness_thresholds(eps: float, Z: float):
    """(1 − √ε, 1 − Z√ε/(Z−2)): signal-value and vertex-membership cutoffs."""
    root = math.sqrt(eps)
    return 1 - root, 1 - Z * root / (Z - 2)


def extract_clusters(game: HardnessGame, scheme: SignalingScheme, eps: float = 0.03, values=None):
    """T_σ = {i : (A_G μ_σ)_i ≥ 1 − Z√ε/(Z−2)} for every signal with val ≥ 1 − √ε."""
    sig_thr, mem_thr = soundness_thresholds(eps, game.Z)
    if values is None:
        values = [game.value_at(mu) for mu in scheme.posteriors]
    family = []
    for v, mu in zip(values, scheme.posteriors):
        if v >= sig_thr:
            deg = game.adjacency @ mu
            family.append(tuple(int(i) for i in np.nonzero(deg >= mem_thr - 1e-12)[0]))
    return family


def check_cover_condition(family, planted_sets, eps: float, c3_scaled: float, n: int) -> float:
    """Fraction of planted sets S with some T in the family having
    |T ∩ S| ≥ max(ε|T|, c₃ ln n)."""
    if not planted_sets:
        return 0.0
    need_abs = c3_scaled * math.log(n)
    hit = 0
    fam = [set(T) for T in family]
    for S in planted_sets:
        S = set(S)
        if any(len(T & S) >= max(eps * len(T), need_abs) for T in fam if T):
            hit += 1
    return hit / len(planted_sets)


@dataclass(frozen=True)
class RecoveryResult:
    success: bool  # Ŝ equals a planted set
    candidate: tuple | None
    subsets_tried: int
    matched_index: int | None = None


def recovery_subset_size(n: int, c3_scaled: float) -> int:
    return max(1, math.ceil(c3_scaled * math.log(n)))


def _survivors(adj: np.ndarray, R: np.ndarray, k: int) -> np.ndarray:
    # common neighbours of R (members of R count when adjacent to the rest of R)
    hits = adj[:, R].sum(axis=1) + np.isin(np.arange(adj.shape[0]), R)
    Sp = np.nonzero(hits == R.size)[0]
    deg = adj[np.ix_(Sp, Sp)].sum(axis=1)
    return Sp[deg >= k - 1]


def recover_clique(graph: PlantedGraph, T, k: int, c3_scaled: float = 4, seed: int = 0,
                   eps: float = 1.0, max_subsets: int = 200) -> RecoveryResult:
    """Try to recover a planted k-clique from a cluster T that overlaps it.

    Sample ⌈|R|/ε⌉ vertices of T (|R| = ⌈c₃ ln n⌉), then draw random
    |R|-subsets of the sample; for each, keep the common neighbours of R and
    filter those with at least k−1 neighbours among them.  Stops at the
    first candidate that is a clique of size ≥ k.
    """
    T = np.asarray(sorted(set(int(v) for v in T)), dtype=np.int64)
    s = recovery_subset_size(graph.n, c3_scaled)
    if T.size < s:
        return RecoveryResult(False, None, 0)
    rng = stream(seed, TRIAL_STREAM, 0)
    m = min(T.size, math.ceil(s / eps))
    sample = rng.choice(T, size=m, replace=False)
    adj = graph.adjacency
    planted = {S: i for i, S in enumerate(graph.planted_sets)}
    for tried in range(1, max_subsets + 1):
        R = np.sort(rng.choice(sample, size=s, replace=False))
        cand = _survivors(adj, R, k)
        if cand.size >= k and adj[np.ix_(cand, cand)].sum() == cand.size * (cand.size - 1):
            key = tuple(int(v) for v in cand)
            idx = planted.get(key)
            return RecoveryResult(idx is not None, key, tried, idx)
    return RecoveryResult(False, None, max_subsets)


def spread_checks(params: HardnessGameParams, n: int, large: int, small: int, seed: int):
    """Spread checks on the B block for random vertex sets R.

    Returns (every column average over a random |R| = large set exceeds 1,
    some column is entirely 2−Z on a random |R| = small set).
    """
    game_B = np.column_stack([random_sign_column(params.seed, B_STREAM, j, n, params.Z)
                              for j in range(params.N_scaled)])
    rng = stream(seed, TRIAL_STREAM, 1)
    R_big = rng.choice(n, size=large, replace=False)
    R_small = rng.choice(n, size=small, replace=False)
    big_ok = bool(np.all(game_B[R_big].mean(axis=0) > 1))
    small_ok = bool(np.any(np.all(game_B[R_small] == 2 - params.Z, axis=0)))
    return big_ok, small_ok

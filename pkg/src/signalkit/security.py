"""Extended security games and the gadget families built on them.

An extended security game has payoffs A^θ = Ā + b^θ 𝟙ᵀ + 𝟙 (d^θ)ᵀ where
b^θ and d^θ are the θ-th columns of B (r×M) and D (c×M).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DimensionError, NumericalFailure
from .lp import LinearProgram, solve_lp
from .signaling import lipschitz_bound
from .zerosum import BayesianGame, Equilibrium, SignalingScheme, as_posterior, game_value


def _uniform(n):
    return np.full(n, 1.0 / n)


@dataclass(frozen=True, eq=False)
class ExtendedSecurityGame:
    Abar: np.ndarray  # r×c
    B: np.ndarray  # r×M
    D: np.ndarray  # c×M
    prior: np.ndarray | None = None
    payoff_bound: float | None = None

    def __post_init__(self):
        Abar = np.atleast_2d(np.asarray(self.Abar, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        D = np.atleast_2d(np.asarray(self.D, dtype=float))
        r, c = Abar.shape
        if B.shape[0] != r or D.shape[0] != c or B.shape[1] != D.shape[1]:
            raise DimensionError(f"incompatible shapes Ā{Abar.shape}, B{B.shape}, D{D.shape}")
        for name, arr in (("Abar", Abar), ("B", B), ("D", D)):
            if not np.all(np.isfinite(arr)):
                raise DimensionError(f"{name} has non-finite entries")
        M = B.shape[1]
        prior = _uniform(M) if self.prior is None else as_posterior(self.prior, M)
        actual = self.max_abs_payoff_of(Abar, B, D)
        bound = max(1.0, actual) if self.payoff_bound is None else float(self.payoff_bound)
        if actual > bound + 1e-12:
            raise DimensionError(f"payoffs reach {actual}, above the declared bound {bound}")
        for arr in (Abar, B, D, prior):
            arr.setflags(write=False)
        object.__setattr__(self, "Abar", Abar)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "payoff_bound", bound)

    @staticmethod
    def max_abs_payoff_of(Abar, B, D) -> float:
        best = 0.0
        for t in range(B.shape[1]):
            A = Abar + B[:, t][:, None] + D[:, t][None, :]
            best = max(best, float(np.max(np.abs(A))))
        return best

    @property
    def num_states(self) -> int:
        return self.B.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.Abar.shape

    def mix(self, mu) -> np.ndarray:
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (self.num_states,):
            raise DimensionError(f"posterior length {mu.shape} does not match {self.num_states} states")
        return self.Abar + (self.B @ mu)[:, None] + (self.D @ mu)[None, :]

    def value_at(self, mu) -> float:
        # same value as val_compact; the packing LP on the mixed matrix is faster
        return game_value(self.mix(mu)).value

    def lipschitz_constant(self) -> float:
        return lipschitz_bound(self.D.T)

    def with_prior(self, prior) -> "ExtendedSecurityGame":
        return ExtendedSecurityGame(self.Abar, self.B, self.D, prior, self.payoff_bound)


def expand(esg: ExtendedSecurityGame) -> BayesianGame:
    """Dense per-state payoff matrices of an extended security game."""
    A = esg.Abar[None] + esg.B.T[:, :, None] + esg.D.T[:, None, :]
    return BayesianGame(A, esg.prior, esg.payoff_bound)


def val_compact(esg: ExtendedSecurityGame, mu, method: str = "auto") -> Equilibrium:
    """max_x xᵀBμ + min_j (xᵀĀ + μᵀDᵀ)_j as an LP in (x, t)."""
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (esg.num_states,):
        raise DimensionError("posterior length does not match the number of states")
    r, c = esg.shape
    bmu = esg.B @ mu
    dmu = esg.D @ mu
    # rows: t - (Āᵀx)_j <= (Dμ)_j ; Σx = 1
    A = np.zeros((c + 1, r + 1))
    A[:c, :r] = -esg.Abar.T
    A[:c, r] = 1.0
    A[c, :r] = 1.0
    rhs = np.r_[dmu, 1.0]
    lb = np.r_[np.zeros(r), -np.inf]
    lp = LinearProgram(np.r_[bmu, 1.0], A, rhs, ("<=",) * c + ("=",), variable_lower_bounds=lb)
    sol = solve_lp(lp, method=method)
    if not sol.optimal:
        raise NumericalFailure(f"compact security LP ended with status {sol.status}")
    x = np.clip(sol.primal[:r], 0.0, None)
    x /= x.sum()
    y = np.clip(sol.dual[:c], 0.0, None)
    y = y / y.sum() if y.sum() > 0 else _uniform(c)
    return Equilibrium(float(sol.value), x, y)


def _adjacency(graph) -> np.ndarray:
    """Adjacency matrix from a networkx graph, an (n, edges) pair or a matrix."""
    if hasattr(graph, "nodes") and hasattr(graph, "edges"):
        nodes = sorted(graph.nodes)
        index = {v: i for i, v in enumerate(nodes)}
        adj = np.zeros((len(nodes), len(nodes)))
        for u, v in graph.edges:
            if u != v:
                adj[index[u], index[v]] = adj[index[v], index[u]] = 1.0
        return adj
    if isinstance(graph, tuple) and len(graph) == 2:
        n, edges = graph
        adj = np.zeros((n, n))
        for u, v in edges:
            if u == v:
                raise DimensionError("self-loops are not allowed")
            adj[u, v] = adj[v, u] = 1.0
        return adj
    adj = np.asarray(graph, dtype=float)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or not np.array_equal(adj, adj.T):
        raise DimensionError("adjacency matrix must be square and symmetric")
    return adj


def network_security_game(graph, rho: float, prior=None) -> ExtendedSecurityGame:
    """B = adjacency matrix, Ā = Dᵀ = −ρI; the prior defaults to uniform."""
    adj = _adjacency(graph)
    n = adj.shape[0]
    eye = -float(rho) * np.eye(n)
    return ExtendedSecurityGame(eye, adj, eye.T.copy(), prior)


# ---------------------------------------------------------------------------
# balanced complete bipartite subgraph gadget


def bcbs_parameters(n: int, r: int):
    """Exact (ε, η, ρ) = (1/(2n⁸), 1 − (2n+1)ε, 2rnε)."""
    eps = Fraction(1, 2 * n**8)
    eta = 1 - (2 * n + 1) * eps
    rho = 2 * r * n * eps
    return eps, eta, rho


@dataclass(frozen=True, eq=False)
class BcbsGadget:
    game: ExtendedSecurityGame
    eta: float
    eps: float
    rho: float
    n: int
    r: int
    left: tuple
    right: tuple
    exact: tuple  # (ε, η, ρ) as Fractions


def bcbs_gadget(n_left: int, n_right: int, edges, r: int) -> BcbsGadget:
    """Network security game on a bipartite graph with vertices 0..n_left−1
    on the left and n_left..n_left+n_right−1 on the right."""
    n = n_left + n_right
    if n < 2:
        raise DimensionError("need at least two vertices")
    for u, v in edges:
        if (u < n_left) == (v < n_left):
            raise DimensionError(f"edge ({u}, {v}) is not between the two sides")
    eps, eta, rho = bcbs_parameters(n, r)
    game = network_security_game((n, list(edges)), float(rho))
    return BcbsGadget(game, float(eta), float(eps), float(rho), n, r,
                      tuple(range(n_left)), tuple(range(n_left, n)), (eps, eta, rho))


def strategy_payoff(esg: ExtendedSecurityGame, mu, x) -> float:
    """Row payoff guaranteed by x at posterior μ: xᵀBμ + min_j (xᵀĀ + μᵀDᵀ)_j."""
    mu = np.asarray(mu, dtype=float)
    x = np.asarray(x, dtype=float)
    return float(x @ esg.B @ mu + np.min(x @ esg.Abar + esg.D @ mu))


def exact_value(esg: ExtendedSecurityGame, mu, exact_params=None) -> Fraction:
    """val(μ) in rational arithmetic; ``exact_params`` can supply ρ as a Fraction
    for network security games so no float rounding enters."""
    mu = [Fraction(v).limit_denominator(10**12) if not isinstance(v, Fraction) else v for v in mu]
    r, c = esg.shape
    if exact_params is not None:
        rho = exact_params
        Abar = [[-rho if i == j else Fraction(0) for j in range(c)] for i in range(r)]
        D = Abar
        B = [[Fraction(int(v)) for v in row] for row in esg.B]
    else:
        Abar = [[Fraction(v) for v in row] for row in esg.Abar]
        D = [[Fraction(v) for v in row] for row in esg.D]
        B = [[Fraction(v) for v in row] for row in esg.B]
    M = len(mu)
    bmu = [sum(B[i][t] * mu[t] for t in range(M)) for i in range(r)]
    dmu = [sum(D[j][t] * mu[t] for t in range(M)) for j in range(c)]
    A = np.empty((c + 1, r + 1), dtype=object)
    for j in range(c):
        for i in range(r):
            A[j, i] = -Abar[i][j]
        A[j, r] = Fraction(1)
    for i in range(r):
        A[c, i] = Fraction(1)
    A[c, r] = Fraction(0)
    obj = np.array(bmu + [Fraction(1)], dtype=object)
    rhs = np.array(dmu + [Fraction(1)], dtype=object)
    lp = LinearProgram(obj, A, rhs, ("<=",) * c + ("=",),
                       variable_lower_bounds=np.r_[np.zeros(r), -np.inf])
    sol = solve_lp(lp, method="exact")
    if not sol.optimal:
        raise NumericalFailure(f"exact LP ended with status {sol.status}")
    return sol.value


@dataclass(frozen=True)
class BcbsExtraction:
    left: tuple
    right: tuple
    payoff: float
    precondition_met: bool
    is_biclique: bool
    large_enough: bool


def bcbs_extract(gadget: BcbsGadget, mu, x) -> BcbsExtraction:
    """V′ = {v : μ_v ≥ 1/n³}, W′ = {v : x_v ≥ 1/n³}."""
    mu = np.asarray(mu, dtype=float)
    x = np.asarray(x, dtype=float)
    thr = 1.0 / gadget.n**3
    Vp = tuple(int(v) for v in np.nonzero(mu >= thr)[0])
    Wp = tuple(int(v) for v in np.nonzero(x >= thr)[0])
    payoff = strategy_payoff(gadget.game, mu, x)
    adj = gadget.game.B
    biclique = bool(Vp and Wp) and all(adj[u, v] > 0 for u in Vp for v in Wp)
    return BcbsExtraction(
        Vp, Wp, payoff,
        precondition_met=payoff >= gadget.eta - gadget.eps,
        is_biclique=biclique,
        large_enough=len(Vp) >= gadget.r and len(Wp) >= gadget.r,
    )


def grid_threshold_search(esg: ExtendedSecurityGame, threshold: float, delta: float,
                          cap: int = 200_000):
    """Exhaustive search of S_δ for a posterior with val ≥ threshold.

    Returns (μ, val) for the best point found, or (None, best) when no
    point reaches the threshold.
    """
    from .signaling import delta_net
    from .zerosum import val

    net = delta_net(esg.num_states, delta, cap)
    best, best_mu = -np.inf, None
    for mu in net.points:
        v = val(esg, mu)
        if v > best:
            best, best_mu = v, mu
    if best >= threshold:
        return best_mu, best
    return None, best


# ---------------------------------------------------------------------------
# bimatrix game gadget


def bimatrix_gadget(R, C, eps: float, prior=None) -> ExtendedSecurityGame:
    """Security game whose value at μ is (1+1/ε)xᵀ(R+C)μ − (1/ε)(max(Rμ) + max(xᵀC)).

    Columns are pairs (i′, j) flattened as i′·n + j.
    """
    R = np.asarray(R, dtype=float)
    C = np.asarray(C, dtype=float)
    if R.shape != C.shape or R.ndim != 2:
        raise DimensionError("R and C must be matrices of the same shape")
    if np.max(np.abs(R), initial=0) > 1 or np.max(np.abs(C), initial=0) > 1:
        raise DimensionError("bimatrix payoffs must lie in [-1, 1]")
    if not eps > 0:
        raise DimensionError("eps must be positive")
    m, n = R.shape
    B = (1 + 1 / eps) * (R + C)
    # Ā[i, (i', j)] = -C[i, j] / eps
    Abar = np.tile(-C / eps, (1, m))
    # D[(i, j'), j] = -R[i, j] / eps
    D = np.repeat(-R / eps, n, axis=0)
    bound = ExtendedSecurityGame.max_abs_payoff_of(Abar, B, D)
    return ExtendedSecurityGame(Abar, B, D, prior, max(1.0, bound))


def bimatrix_column(i_prime: int, j: int, n: int) -> int:
    return i_prime * n + j


@dataclass(frozen=True, eq=False)
class BimatrixExtraction:
    x: np.ndarray
    mu: np.ndarray
    welfare: float
    nash_residual: float
    value: float


def bimatrix_extract(R, C, eps: float, mu) -> BimatrixExtraction:
    R = np.asarray(R, dtype=float)
    C = np.asarray(C, dtype=float)
    game = bimatrix_gadget(R, C, eps)
    mu = as_posterior(mu, R.shape[1])
    eq = val_compact(game, mu)
    x = eq.row_strategy
    welfare = float(x @ (R + C) @ mu)
    residual = float(np.max(R @ mu) + np.max(x @ C) - welfare)
    return BimatrixExtraction(x, mu, welfare, residual, eq.value)


# ---------------------------------------------------------------------------
# vertex cover gadget with a strategy-dependent principal objective


@dataclass(frozen=True, eq=False)
class ObjectiveTensor:
    entries: np.ndarray  # (M, r, c), values in [-1, 1]

    def __post_init__(self):
        F = np.asarray(self.entries, dtype=float)
        if F.ndim != 3:
            raise DimensionError("objective tensor must be three-dimensional")
        if np.max(np.abs(F), initial=0) > 1:
            raise DimensionError("objective entries must lie in [-1, 1]")
        object.__setattr__(self, "entries", F)


@dataclass(frozen=True, eq=False)
class VertexCoverGadget:
    game: BayesianGame
    objective: ObjectiveTensor
    n: int
    edges: tuple

    @property
    def special_column(self) -> int:
        return self.n + len(self.edges)


def vertex_cover_gadget(n: int, edges) -> VertexCoverGadget:
    """Rows pick a node v₁; columns pick a node, an edge, or the special s.

    Column payoffs: node v earns n/(n−2) unless v ∈ {θ, v₁}; edge e earns
    n/(n−2) unless e touches θ; s earns 1.  Row payoffs are the negatives.
    """
    if n < 3:
        raise DimensionError("the vertex cover gadget needs n >= 3")
    edges = tuple(sorted((min(u, v), max(u, v)) for u, v in edges))
    if len(set(edges)) != len(edges) or any(u == v for u, v in edges):
        raise DimensionError("graph must be simple")
    big = n / (n - 2)
    cols = n + len(edges) + 1
    col_pay = np.zeros((n, n, cols))  # (θ, v1, column)
    for theta in range(n):
        for v1 in range(n):
            for v in range(n):
                if v != theta and v != v1:
                    col_pay[theta, v1, v] = big
            for k, (a, b) in enumerate(edges):
                if theta not in (a, b):
                    col_pay[theta, v1, n + k] = big
            col_pay[theta, v1, cols - 1] = 1.0
    game = BayesianGame(-col_pay, _uniform(n), payoff_bound=big)
    F = np.zeros((n, n, cols))
    F[:, :, cols - 1] = 1.0
    return VertexCoverGadget(game, ObjectiveTensor(F), n, edges)


@dataclass(frozen=True, eq=False)
class PrincipalValue:
    value: int
    witness: np.ndarray | None


def vc_principal_value(gadget: VertexCoverGadget, mu, tol: float = 1e-12) -> PrincipalValue:
    """1 iff some x ∈ Δ_V makes s a column best response (then any x is a row
    best response, so (x, s) is an equilibrium the principal prefers).

    Checked as the feasibility LP
    (n/(n−2))(1−x_v)(1−μ_v) ≤ 1 ∀v, (n/(n−2))(1−μ_u−μ_v) ≤ 1 ∀(u,v) ∈ E, Σx = 1.
    """
    n = gadget.n
    mu = as_posterior(mu, n)
    big = n / (n - 2)
    for u, v in gadget.edges:
        if big * (1 - mu[u] - mu[v]) > 1 + tol:
            return PrincipalValue(0, None)
    # x_v ≥ 1 − 1/(big (1 − μ_v)) whenever μ_v < 1
    lower = np.zeros(n)
    for v in range(n):
        if mu[v] < 1:
            lower[v] = max(0.0, 1 - 1 / (big * (1 - mu[v])))
    A = np.vstack([np.ones((1, n)), np.eye(n)])
    rhs = np.r_[1.0, lower - tol]
    lp = LinearProgram(np.zeros(n), A, rhs, ("=",) + (">=",) * n)
    sol = solve_lp(lp)
    if sol.status == "optimal":
        x = np.clip(sol.primal, 0, None)
        return PrincipalValue(1, x / x.sum())
    if sol.status == "infeasible":
        return PrincipalValue(0, None)
    raise NumericalFailure(f"principal feasibility LP ended with status {sol.status}")


def vc_scheme_value(gadget: VertexCoverGadget, scheme: SignalingScheme) -> float:
    if scheme.residual(gadget.game.prior) > 1e-6:
        from .errors import InvalidSchemeError

        raise InvalidSchemeError("scheme does not decompose the uniform prior")
    return float(sum(w * vc_principal_value(gadget, mu).value for w, mu in scheme))


def vc_cover_scheme(gadget: VertexCoverGadget, cover) -> SignalingScheme:
    """Signal whether θ lies in the cover: two uniform posteriors."""
    n = gadget.n
    cover = sorted(set(int(v) for v in cover))
    rest = [v for v in range(n) if v not in cover]
    if not cover or not rest:
        raise DimensionError("cover must be a proper nonempty subset")
    mu1 = np.zeros(n)
    mu1[cover] = 1.0 / len(cover)
    mu2 = np.zeros(n)
    mu2[rest] = 1.0 / len(rest)
    return SignalingScheme([len(cover) / n, len(rest) / n], [mu1, mu2])


def vc_extract_cover(mu, tol: float = 1e-12) -> tuple:
    """The support of a posterior with positive principal value is a cover."""
    return tuple(int(v) for v in np.nonzero(np.asarray(mu) > tol)[0])


def is_vertex_cover(edges, cover) -> bool:
    cover = set(cover)
    return all(u in cover or v in cover for u, v in edges)


def vc_grid_search(gadget: VertexCoverGadget, delta: float, cap: int = 200_000):
    """All posteriors on S_δ with positive principal value."""
    from .signaling import delta_net

    net = delta_net(gadget.n, delta, cap)
    return [mu for mu in net.points if vc_principal_value(gadget, mu).value > 0]


def brute_force_x_grid(gadget: VertexCoverGadget, mu, steps: int = 16) -> bool:
    """Independent check of the principal value: scan x over the 1/steps grid
    and test that no pure column beats s."""
    n = gadget.n
    mu = np.asarray(mu, dtype=float)
    A = -gadget.game.mix(mu)  # column payoffs
    for comp in itertools.combinations_with_replacement(range(n), steps):
        x = np.bincount(comp, minlength=n) / steps
        pay = x @ A
        if np.all(pay <= pay[-1] + 1e-12):
            return True
    return False

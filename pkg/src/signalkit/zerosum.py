"""Bayesian zero-sum games, minimax values and signaling-scheme evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidSchemeError, NumericalFailure
from .lp import LinearProgram, solve_lp, solve_packing

PRIOR_TOL = 1e-12
# tolerance accepted on incoming probability vectors before renormalizing
INPUT_TOL = 1e-9
WEIGHT_TOL = 1e-9
DECOMPOSITION_TOL = 1e-8
PRUNE_BELOW = 1e-12
SCHEME_VALUE_TOL = 1e-6


def as_posterior(mu, num_states: int | None = None, tol: float = INPUT_TOL) -> np.ndarray:
    """Validate a probability vector and renormalize it to unit sum."""
    mu = np.asarray(mu, dtype=float).reshape(-1)
    if num_states is not None and mu.shape[0] != num_states:
        raise DimensionError(f"posterior has length {mu.shape[0]}, expected {num_states}")
    if not np.all(np.isfinite(mu)):
        raise DimensionError("posterior has non-finite entries")
    if np.any(mu < -tol):
        raise DimensionError("posterior has negative entries")
    total = mu.sum()
    if abs(total - 1.0) > tol:
        raise DimensionError(f"posterior sums to {total!r}, not 1")
    mu = np.clip(mu, 0.0, None)
    return mu / mu.sum()


@dataclass(frozen=True, eq=False)
class BayesianGame:
    """Payoff matrices ``payoffs[θ]`` (row player maximizes) and a prior."""

    payoffs: np.ndarray  # (M, r, c)
    prior: np.ndarray
    payoff_bound: float = 1.0

    def __post_init__(self):
        A = np.asarray(self.payoffs, dtype=float)
        if A.ndim == 2:
            A = A[None]
        if A.ndim != 3 or 0 in A.shape:
            raise DimensionError("payoffs must have shape (M, r, c) with positive sizes")
        if not np.all(np.isfinite(A)):
            raise DimensionError("payoffs have non-finite entries")
        if np.max(np.abs(A)) > self.payoff_bound + 1e-12:
            raise DimensionError(
                f"payoff entries exceed the declared bound {self.payoff_bound}"
            )
        prior = as_posterior(self.prior, A.shape[0])
        A.setflags(write=False)
        prior.setflags(write=False)
        object.__setattr__(self, "payoffs", A)
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "payoff_bound", float(self.payoff_bound))

    @property
    def num_states(self) -> int:
        return self.payoffs.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.payoffs.shape[1], self.payoffs.shape[2]

    def mix(self, mu) -> np.ndarray:
        mu = np.asarray(mu, dtype=float)
        if mu.shape != (self.num_states,):
            raise DimensionError(f"posterior length {mu.shape} does not match {self.num_states} states")
        return np.tensordot(mu, self.payoffs, axes=1)

    def with_prior(self, prior) -> "BayesianGame":
        return BayesianGame(self.payoffs, prior, self.payoff_bound)


@dataclass(frozen=True, eq=False)
class Equilibrium:
    value: float
    row_strategy: np.ndarray
    col_strategy: np.ndarray

    def best_response_gap(self, A) -> float:
        """Largest amount by which either player could gain by deviating."""
        A = np.asarray(A, dtype=float)
        row_gain = np.max(A @ self.col_strategy) - self.value
        col_gain = self.value - np.min(self.row_strategy @ A)
        return float(max(row_gain, col_gain, 0.0))


@dataclass(frozen=True, eq=False)
class SignalingScheme:
    """A convex decomposition: ``weights[σ]`` and ``posteriors[σ]`` (rows)."""

    weights: np.ndarray
    posteriors: np.ndarray
    labels: tuple | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        P = np.asarray(self.posteriors, dtype=float)
        if P.ndim != 2 or P.shape[0] != w.shape[0]:
            raise InvalidSchemeError("posteriors must be a (signals, states) array matching weights")
        if np.any(~np.isfinite(w)) or np.any(w < 0):
            raise InvalidSchemeError("signal weights must be nonnegative and finite")
        keep = w > 0
        labels = self.labels
        if labels is not None:
            if len(labels) != w.shape[0]:
                raise InvalidSchemeError("labels must match the number of signals")
            labels = tuple(l for l, k in zip(labels, keep) if k)
        w, P = w[keep], P[keep]
        if w.size == 0:
            raise InvalidSchemeError("scheme has no signal with positive weight")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise InvalidSchemeError(f"signal weights sum to {w.sum()!r}")
        try:
            P = np.array([as_posterior(p) for p in P])
        except DimensionError as exc:
            raise InvalidSchemeError(str(exc)) from None
        w.setflags(write=False)
        P.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "posteriors", P)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.weights.shape[0]

    def __iter__(self):
        return iter(zip(self.weights, self.posteriors))

    @property
    def num_states(self) -> int:
        return self.posteriors.shape[1]

    def implied_prior(self) -> np.ndarray:
        return self.weights @ self.posteriors

    def residual(self, prior) -> float:
        return float(np.max(np.abs(self.implied_prior() - np.asarray(prior, dtype=float))))

    @classmethod
    def from_weights(cls, alpha, points, prior, labels=None) -> "SignalingScheme":
        """Build a scheme from LP weights over candidate posteriors.

        Weights below 1e-12 are pruned; the rest are renormalized only if
        the decomposition residual stays within 1e-8.
        """
        alpha = np.asarray(alpha, dtype=float)
        points = np.asarray(points, dtype=float)
        alpha = np.where(alpha < PRUNE_BELOW, 0.0, alpha)
        if alpha.sum() <= 0:
            raise InvalidSchemeError("no positive weight left after pruning")
        alpha = alpha / alpha.sum()
        res = float(np.max(np.abs(alpha @ points - np.asarray(prior, dtype=float))))
        if res > DECOMPOSITION_TOL:
            raise InvalidSchemeError(f"decomposition residual {res:.3g} exceeds {DECOMPOSITION_TOL}")
        return cls(alpha, points, labels)


@dataclass(frozen=True)
class SchemeReport:
    max_residual: float
    weight_sum: float
    ok: bool


def mix_payoffs(game, mu) -> np.ndarray:
    """A^μ = Σ_θ μ_θ A^θ."""
    return game.mix(np.asarray(mu, dtype=float))


def game_value(A, method: str = "auto") -> Equilibrium:
    """Minimax value and optimal mixed strategies of the matrix game ``A``.

    The row player maximizes.  The LP is posed in packing form on the
    positively shifted matrix, max 1ᵀy s.t. P y <= 1, so the slack basis is
    feasible from the start; x comes from the row duals.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or 0 in A.shape:
        raise DimensionError("payoff matrix must be a nonempty 2-D array")
    if not np.all(np.isfinite(A)):
        raise DimensionError("payoff matrix has non-finite entries")
    r, c = A.shape
    lo, hi = float(A.min()), float(A.max())
    if hi - lo <= 1e-15 * max(1.0, abs(hi)):
        return Equilibrium(hi, np.full(r, 1.0 / r), np.full(c, 1.0 / c))
    # scale to [1, 2] so the packing LP is well conditioned
    span = hi - lo
    P = (A - lo) / span + 1.0
    y = x = None
    if method in ("auto", "simplex") and r * c <= 10_000:
        status, y, x = solve_packing(P)
        if status == "optimal" and not _packing_certified(P, y, x):
            y = x = None
    if y is None:
        lp = LinearProgram(np.ones(c), P, np.ones(r), ("<=",) * r)
        sol = solve_lp(lp, method="highs" if method == "auto" and r * c > 10_000 else
                       ("simplex" if method == "auto" else method))
        if not sol.optimal:
            raise NumericalFailure(f"matrix game LP ended with status {sol.status}")
        y, x = np.asarray(sol.primal, dtype=float), np.asarray(sol.dual, dtype=float)
    total = float(np.sum(y))
    y = np.clip(y, 0.0, None)
    x = np.clip(x, 0.0, None)
    y /= y.sum()
    x /= x.sum()
    value = (1.0 / total - 1.0) * span + lo
    return Equilibrium(float(value), x, y)


def _packing_certified(P, y, u, tol=1e-9) -> bool:
    """Primal/dual feasibility and equal objectives for the packing LP."""
    if np.min(y) < -tol or np.min(u) < -tol:
        return False
    if np.max(P @ y) > 1 + tol or np.min(u @ P) < 1 - tol:
        return False
    return abs(y.sum() - u.sum()) <= tol * max(1.0, y.sum())


def val(game, mu) -> float:
    """Minimax value of the game mixed at posterior ``mu``."""
    mu = np.asarray(mu, dtype=float)
    fast = getattr(game, "value_at", None)
    if fast is not None:
        return float(fast(mu))
    return game_value(game.mix(mu)).value


def _check_against_prior(game, scheme: SignalingScheme, tol: float):
    if scheme.num_states != game.num_states:
        raise InvalidSchemeError(
            f"scheme has {scheme.num_states} states, game has {game.num_states}"
        )
    res = scheme.residual(game.prior)
    if res > tol:
        raise InvalidSchemeError(f"scheme does not decompose the prior (residual {res:.3g})")


def scheme_value(game, scheme: SignalingScheme, values=None) -> float:
    """Σ_σ α_σ val(μ^σ); ``values`` may supply precomputed per-signal values."""
    _check_against_prior(game, scheme, SCHEME_VALUE_TOL)
    if values is None:
        values = [val(game, mu) for mu in scheme.posteriors]
    return float(np.dot(scheme.weights, values))


def baseline_scheme(game, mode: str) -> SignalingScheme:
    """No revelation ({(1, λ)}) or full revelation ({(λ_θ, e_θ)})."""
    prior = np.asarray(game.prior, dtype=float)
    M = prior.shape[0]
    if mode == "none":
        return SignalingScheme(np.ones(1), prior[None, :].copy())
    if mode == "full":
        support = np.nonzero(prior > 0)[0]
        return SignalingScheme(prior[support], np.eye(M)[support], labels=tuple(int(s) for s in support))
    raise ValueError(f"unknown baseline mode {mode!r}")


def validate_scheme(game, scheme: SignalingScheme, tol: float = DECOMPOSITION_TOL) -> SchemeReport:
    """Diagnostic check of a scheme against a game's prior; never raises."""
    w = np.asarray(scheme.weights, dtype=float)
    weight_sum = float(w.sum())
    if scheme.num_states != game.num_states:
        return SchemeReport(float("inf"), weight_sum, False)
    res = scheme.residual(game.prior)
    ok = bool(np.all(w > 0) and abs(weight_sum - 1.0) <= WEIGHT_TOL and res <= tol)
    return SchemeReport(res, weight_sum, ok)


def game_value_columns(A, initial=None, tol: float = 1e-9, batch: int = 64, max_rounds: int = 500,
                       stop_at: float | None = None) -> Equilibrium:
    """Minimax value of a wide game by column generation.

    Solves the game restricted to a working set of columns, then adds the
    columns the restricted row strategy does worst against, until none beats
    the restricted value by more than ``tol``.  With ``stop_at``, returns
    early once the row strategy guarantees at least that much; the reported
    value is then only that guarantee (a lower bound).
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or 0 in A.shape:
        raise DimensionError("payoff matrix must be a nonempty 2-D array")
    r, c = A.shape
    if initial is None:
        initial = np.argsort(A.mean(axis=0), kind="stable")[:batch]
    cols = sorted(set(int(j) for j in initial))
    for _ in range(max_rounds):
        eq = game_value(A[:, cols])
        payoff = eq.row_strategy @ A
        if stop_at is not None and payoff.min() >= stop_at:
            return Equilibrium(float(payoff.min()), eq.row_strategy, np.zeros(c))
        bad = np.flatnonzero(payoff < eq.value - tol)
        if bad.size == 0:
            y = np.zeros(c)
            y[cols] = eq.col_strategy
            return Equilibrium(eq.value, eq.row_strategy, y)
        worst = bad[np.argsort(payoff[bad], kind="stable")[:batch]]
        cols = sorted(set(cols) | set(int(j) for j in worst))
    raise NumericalFailure("column generation did not converge")

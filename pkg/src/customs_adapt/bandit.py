"""Exponential-weights learner over a grid of exploration ratios (EXP3.S style).

Each round: mix the normalised weights with a uniform floor, draw an arm,
observe a precision, turn it into a reward relative to the discounted mean of
past precisions, and apply an importance-weighted multiplicative update plus
a small uniform share of the total weight (the switching regulariser).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError


@dataclass(frozen=True)
class BanditParams:
    eta: float = 3.0
    epsilon: float = 0.1
    alpha: float = 0.001
    gamma: float = 0.9
    # +1 raises the weight of arms with positive reward; -1 reproduces the
    # printed minus sign of the pseudo-code
    reward_sign: int = 1
    mean_includes_current: bool = True

    def __post_init__(self) -> None:
        if not self.eta > 0:
            raise ConfigError("eta", "must be positive")
        if not 0 <= self.epsilon <= 1:
            raise ConfigError("epsilon", "must lie in [0, 1]")
        if not self.alpha >= 0:
            raise ConfigError("alpha", "must be non-negative")
        if not 0 < self.gamma <= 1:
            raise ConfigError("gamma", "must lie in (0, 1]")
        if self.reward_sign not in (1, -1):
            raise ConfigError("reward_sign", "must be +1 or -1")


def arm_grid(num_arms: int = 21) -> np.ndarray:
    if num_arms < 2:
        raise ConfigError("num_arms", "need at least two arms")
    return np.linspace(0.0, 1.0, num_arms)


@dataclass
class BanditState:
    ratios: np.ndarray
    weights: np.ndarray
    params: BanditParams
    precision_history: list[float] = field(default_factory=list)
    last_probabilities: np.ndarray | None = None
    # running numerator and denominator of the discounted mean of the history
    discounted_sum: float = 0.0
    discounted_count: float = 0.0

    def observe(self, pi_t: float) -> float:
        """Append ``pi_t`` and return the discounted mean the reward uses."""
        g = self.params.gamma
        before = self.discounted_sum / self.discounted_count if self.discounted_count else pi_t
        self.precision_history.append(float(pi_t))
        self.discounted_sum = g * self.discounted_sum + pi_t
        self.discounted_count = g * self.discounted_count + 1.0
        if self.params.mean_includes_current:
            return self.discounted_sum / self.discounted_count
        return before

    @property
    def k(self) -> int:
        return len(self.weights)

    def to_json(self) -> str:
        return json.dumps(
            {
                "ratios": self.ratios.tolist(),
                "weights": self.weights.tolist(),
                "precision_history": list(self.precision_history),
                "last_probabilities": None
                if self.last_probabilities is None
                else self.last_probabilities.tolist(),
                "params": self.params.__dict__,
                "discounted_sum": self.discounted_sum,
                "discounted_count": self.discounted_count,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "BanditState":
        d = json.loads(text)
        return cls(
            ratios=np.asarray(d["ratios"], dtype=float),
            weights=np.asarray(d["weights"], dtype=float),
            params=BanditParams(**d["params"]),
            precision_history=list(d["precision_history"]),
            last_probabilities=None
            if d["last_probabilities"] is None
            else np.asarray(d["last_probabilities"], dtype=float),
            discounted_sum=d["discounted_sum"],
            discounted_count=d["discounted_count"],
        )


def init_state(grid: np.ndarray, params: BanditParams) -> BanditState:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or np.any(np.diff(grid) <= 0) or grid[0] != 0 or grid[-1] != 1:
        raise ConfigError("ratios", "arm grid must increase strictly from 0 to 1")
    state = BanditState(grid, np.ones(len(grid)), params)
    state.last_probabilities = selection_probabilities(state)
    return state


def selection_probabilities(state: BanditState) -> np.ndarray:
    eps, k = state.params.epsilon, state.k
    w = state.weights
    return eps / k + (1.0 - eps) * w / w.sum()


def draw_arm(p: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw over the ordered arm list."""
    cdf = np.cumsum(p, dtype=float)
    total = cdf[-1]
    if not total > 0:
        raise ValueError("degenerate distribution")
    idx = int(np.searchsorted(cdf, rng.random() * total, side="right"))
    if idx >= len(cdf) or p[idx] <= 0:
        # rounding pushed the draw past the last arm with mass
        idx = int(np.flatnonzero(np.asarray(p) > 0)[-1])
    return idx


def discounted_mean(history, gamma: float) -> float:
    h = np.asarray(history, dtype=float)
    if h.size == 0:
        raise ValueError("empty history")
    w = gamma ** np.arange(h.size - 1, -1, -1, dtype=float)
    return float(w @ h / w.sum())


def reward(pi_t: float, pi_bar: float) -> float:
    """Relative improvement over the running mean, clamped to [-1, 1]."""
    if pi_t <= 0:
        return -1.0
    return max(-1.0, min(1.0, (pi_t - pi_bar) / pi_t))


def update(state: BanditState, arm: int, R: float, p_played: float | None = None) -> BanditState:
    """Importance-weighted exponential update of ``state`` (in place, returned).

    ``p_played`` is the probability the arm was actually drawn with; it
    defaults to the unfiltered selection probability.
    """
    if p_played is None:
        p_played = float(selection_probabilities(state)[arm])
    if not p_played > 0:
        raise ValueError("updating unplayable arm")
    prm, k = state.params, state.k
    w = state.weights
    x = max(-700.0, min(700.0, prm.reward_sign * prm.eta * R / p_played))
    # scale every term by exp(-shift) to stay finite; the renormalisation
    # below removes the common factor again
    shift = max(x, 0.0)
    scale = math.exp(-shift)
    new = w * scale
    new[arm] = w[arm] * math.exp(x - shift)
    new += (math.e * prm.alpha / k) * w.sum() * scale
    new *= k / new.sum()
    state.weights = np.maximum(new, np.finfo(float).tiny)
    return state

"""Weekly exploration-ratio decisions for ADAPT, ADA, APT and fixed ratios."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import bandit
from .bandit import BanditState

_GRID_TOL = 1e-9


class Method(str, enum.Enum):
    ADAPT = "ADAPT"
    ADA = "ADA"
    APT = "APT"
    FIXED = "FIXED"


@dataclass(frozen=True)
class RatioDecision:
    week: int
    method: Method
    ratio: float
    arm: int | None = None
    drift: float | None = None
    filtered_probabilities: np.ndarray | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.ratio <= 1.0:
            raise ValueError(f"ratio {self.ratio} outside [0, 1]")


def filter_arms(p: np.ndarray, grid: np.ndarray, s: float, l: float) -> np.ndarray:
    """Zero the arms outside ``[max(0, s-l), min(1, s+l)]`` and renormalise.

    If nothing with positive mass survives, the arm nearest to ``s`` takes
    all the mass.
    """
    p = np.asarray(p, dtype=float)
    grid = np.asarray(grid, dtype=float)
    lo, hi = max(0.0, s - l), min(1.0, s + l)
    inside = (grid >= lo - _GRID_TOL) & (grid <= hi + _GRID_TOL)
    out = np.where(inside, p, 0.0)
    total = out.sum()
    if total > 0:
        return out / total
    out = np.zeros_like(p)
    out[int(np.argmin(np.abs(grid - s)))] = 1.0
    return out


def decide_adapt(
    state: BanditState,
    grid: np.ndarray,
    s: float,
    l: float,
    rng: np.random.Generator,
    week: int = 0,
    method: Method = Method.ADAPT,
) -> RatioDecision:
    p = bandit.selection_probabilities(state)
    state.last_probabilities = p
    q = filter_arms(p, grid, s, l)
    arm = bandit.draw_arm(q, rng)
    return RatioDecision(week, method, float(grid[arm]), arm, float(s), q)


def decide_apt(state: BanditState, grid: np.ndarray, rng: np.random.Generator, week: int = 0) -> RatioDecision:
    d = decide_adapt(state, grid, 0.0, 1.0, rng, week, Method.APT)
    return RatioDecision(week, Method.APT, d.ratio, d.arm, None, d.filtered_probabilities)


def decide_ada(s: float, week: int = 0) -> RatioDecision:
    return RatioDecision(week, Method.ADA, float(s), drift=float(s))


def decide_fixed(k: float, week: int = 0, s: float | None = None) -> RatioDecision:
    return RatioDecision(week, Method.FIXED, float(k), drift=s)


def post_feedback(decision: RatioDecision, norm_precision: float, state: BanditState | None) -> BanditState | None:
    """Feed the realised precision back to the bandit that made ``decision``.

    The importance weight uses the probability the arm was actually drawn
    with, i.e. the filtered one for ADAPT. Decisions not backed by the
    bandit are ignored.
    """
    if decision.arm is None or state is None:
        return state
    pi_bar = state.observe(float(norm_precision))
    R = bandit.reward(float(norm_precision), pi_bar)
    p_played = float(decision.filtered_probabilities[decision.arm])
    return bandit.update(state, decision.arm, R, p_played)

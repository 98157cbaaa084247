"""Feedback access controller.

Each car carries a binary daily access indicator and its running average.
A shared gain integrates the capacity error and scales every car's grant
probability, biased by occupancy, so that long-run access frequencies
converge to the optimum of the underlying shared-resource problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class CostFamilyError(ValueError):
    """Raised when a user-supplied cost family has a vanishing derivative."""


@dataclass
class DriverRecord:
    """Per-car controller state.

    `x_current` is the access indicator for the current day, `x_avg` the
    running mean of all indicators so far. `cost_weight` parameterizes the
    default quadratic cost w*z^2.
    """

    id: str
    x_current: int = 1
    x_avg: float = 1.0
    cost_weight: float = 1.0
    capacity: int = 4
    occupancy_today: int = 0

    def __post_init__(self) -> None:
        if self.cost_weight <= 0:
            raise ValueError(f"cost_weight must be positive, got {self.cost_weight}")
        if self.capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {self.capacity}")
        if not 0.0 <= self.x_avg <= 1.0:
            raise ValueError(f"x_avg must be in [0,1], got {self.x_avg}")
        if self.occupancy_today > self.capacity:
            raise ValueError("occupancy_today exceeds capacity")


@dataclass
class ControllerState:
    """Global feedback state: the shared gain and today's capacity."""

    gamma: float
    alpha: float
    capacity_n: int
    fleet_size: int
    population: int

    def __post_init__(self) -> None:
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not 0 < self.capacity_n <= self.fleet_size < self.population:
            raise ValueError(
                "require 0 < capacity_n <= fleet_size < population, got "
                f"N={self.capacity_n}, N'={self.fleet_size}, n={self.population}"
            )


@dataclass
class OptimalAllocation:
    """Minimizer of the weighted quadratic cost under the capacity constraint."""

    z_star: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.z_star = np.asarray(self.z_star, dtype=float)


def update_average(x_avg: float, x_new: int, k: int) -> float:
    """Fold day k's indicator into the running mean over days 0..k-1.

    Exact batch mean: (k * x_avg + x_new) / (k + 1).
    """
    return (k * x_avg + x_new) / (k + 1)


def quadratic_derivative(weight: float) -> Callable[[float], float]:
    """Derivative of the default cost f(z) = weight * z**2."""
    return lambda z: 2.0 * weight * z


def access_probability(
    rec: DriverRecord,
    gamma: float,
    f_prime: Callable[[float], float] | None = None,
) -> float:
    """Daily grant probability for one car.

    gamma * (x_avg / f'(x_avg)) * (occupancy / capacity), clamped to [0,1].
    With the default quadratic cost the ratio x_avg/f'(x_avg) collapses to
    1/(2*cost_weight), so an all-zero history is not a singularity. An empty
    car always gets probability 0.
    """
    if rec.occupancy_today == 0:
        return 0.0
    if f_prime is None:
        ratio = 1.0 / (2.0 * rec.cost_weight)
    else:
        deriv = f_prime(rec.x_avg)
        if deriv == 0.0:
            raise CostFamilyError(
                f"cost derivative vanishes at x_avg={rec.x_avg}; "
                "probability undefined for this cost family"
            )
        ratio = rec.x_avg / deriv
    p = gamma * ratio * (rec.occupancy_today / rec.capacity)
    return min(max(p, 0.0), 1.0)


def update_gamma(state: ControllerState, granted_count: int) -> float:
    """Integrate the capacity error into the shared gain, floored at 0."""
    raw = state.gamma + state.alpha * (state.capacity_n - granted_count)
    return max(0.0, raw)


def access_probabilities(
    x_avg: np.ndarray,
    cost_weights: np.ndarray,
    occupancy: np.ndarray,
    capacity: np.ndarray,
    gamma: float,
) -> np.ndarray:
    """Vectorized quadratic-cost probability for a whole fleet."""
    p = gamma / (2.0 * cost_weights) * (occupancy / capacity)
    return np.clip(p, 0.0, 1.0)


def draw_daily_access(
    records: Sequence[DriverRecord],
    gamma: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Independent Bernoulli grant draws for each car, in record order."""
    probs = np.array([access_probability(r, gamma) for r in records])
    return (rng.random(len(probs)) < probs).astype(np.int8)


def solve_optimum(cost_weights: Sequence[float], capacity_n: int) -> OptimalAllocation:
    """Closed-form minimizer of sum(w_i z_i^2) s.t. sum(z_i) = N, z_i >= 0.

    Equal marginals give z_i = lam / (2 w_i) with lam set by the sum
    constraint; all entries are strictly positive, so the nonnegativity
    constraints are inactive.
    """
    w = np.asarray(cost_weights, dtype=float)
    if np.any(w <= 0):
        raise ValueError("all cost weights must be positive")
    inv = 1.0 / (2.0 * w)
    lam = capacity_n / inv.sum()
    return OptimalAllocation(z_star=lam * inv)

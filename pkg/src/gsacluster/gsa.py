"""Gravitational Search Algorithm over a D-dimensional box.

Candidate solutions ("agents") attract each other with forces proportional
to fitness-derived masses; the population drifts toward low-fitness
regions. The optimizer is fully deterministic for a fixed seed: randomness
is drawn from one generator in a fixed order per iteration (initial
positions, then per iteration the pairwise force factors followed by the
velocity factors).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np


class FitnessEvaluationError(RuntimeError):
    """A fitness function returned a non-finite value."""

    def __init__(self, position: np.ndarray, value: float):
        self.position = np.array(position)
        self.value = value
        super().__init__(f"non-finite fitness {value!r} at position {self.position}")


@dataclass
class GsaParams:
    lower_bounds: np.ndarray
    upper_bounds: np.ndarray
    n_agents: int = 30
    t_max: int = 100
    g0: float = 100.0
    alpha: float = 20.0
    epsilon: float = 1e-9

    def __post_init__(self) -> None:
        self.lower_bounds = np.asarray(self.lower_bounds, dtype=float)
        self.upper_bounds = np.asarray(self.upper_bounds, dtype=float)
        if self.lower_bounds.shape != self.upper_bounds.shape or self.lower_bounds.ndim != 1:
            raise ValueError("bounds must be 1-D vectors of equal length")
        if self.dims < 1:
            raise ValueError("at least one dimension required")
        if not np.all(self.lower_bounds < self.upper_bounds):
            raise ValueError("lower bound must be < upper bound in every dimension")
        if self.n_agents < 1 or self.t_max < 1:
            raise ValueError("n_agents and t_max must be >= 1")
        if self.g0 <= 0 or self.epsilon <= 0:
            raise ValueError("g0 and epsilon must be positive")

    @property
    def dims(self) -> int:
        return len(self.lower_bounds)


@dataclass
class Agent:
    position: np.ndarray
    velocity: np.ndarray
    fitness: float = math.inf
    mass: float = 0.0


@dataclass
class GsaResult:
    best_position: np.ndarray
    best_fitness: float
    best_trace: np.ndarray   # best-ever fitness per iteration (non-increasing)
    mean_trace: np.ndarray   # population mean fitness per iteration


def gravitational_constant(t: int, params: GsaParams) -> float:
    """Exponentially decaying gravitational constant.

    Equals g0 at t=1 and g0*exp(-alpha) at t=t_max.
    """
    if not 1 <= t <= params.t_max:
        raise ValueError(f"iteration index {t} outside [1, {params.t_max}]")
    if params.t_max == 1:
        return params.g0
    return params.g0 * math.exp(-params.alpha * (t - 1) / (params.t_max - 1))


def compute_masses(fitnesses: np.ndarray, epsilon: float) -> np.ndarray:
    """Normalized masses from fitness values (lower fitness -> larger mass).

    Degenerate populations (all fitnesses equal) get uniform masses.
    """
    fit = np.asarray(fitnesses, dtype=float)
    if fit.size == 0:
        raise ValueError("at least one fitness value required")
    if not np.all(np.isfinite(fit)):
        raise ValueError("fitness values must be finite")
    best, worst = fit.min(), fit.max()
    if best == worst:
        return np.full(fit.shape, 1.0 / fit.size)
    m = (fit - worst) / (best - worst) + epsilon
    return m / m.sum()


def compute_accelerations(
    positions: np.ndarray,
    masses: np.ndarray,
    g: float,
    epsilon: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Per-agent accelerations from the randomly weighted pairwise forces.

    The agent's own mass cancels between force and inertia, so only the
    partners' masses appear. One uniform factor is drawn per (i, j) pair.
    Populations of one agent get zero acceleration.
    """
    pos = np.asarray(positions, dtype=float)
    n = pos.shape[0]
    if n == 0:
        raise ValueError("empty population")
    rand = rng.random((n, n))
    diff = pos[:, None, :] - pos[None, :, :]          # diff[i,j] = x_i - x_j
    r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))  # pairwise distances
    coef = g * rand * masses[None, :] / (r + epsilon)
    np.fill_diagonal(coef, 0.0)
    # a_i = sum_j coef[i,j] * (x_j - x_i)
    return coef @ pos - coef.sum(axis=1, keepdims=True) * pos


def step_population(
    positions: np.ndarray,
    velocities: np.ndarray,
    accels: np.ndarray,
    params: GsaParams,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Velocity/position update with per-dimension box clamping.

    v' = rand * v + a, x' = clamp(x + v'); a velocity component is zeroed
    whenever its position component hits a bound. One uniform factor is
    drawn per (agent, dimension).
    """
    rand = rng.random(positions.shape)
    vel = rand * velocities + accels
    raw = positions + vel
    new = np.clip(raw, params.lower_bounds, params.upper_bounds)
    vel = np.where(raw == new, vel, 0.0)
    return new, vel


def step_kinematics(agent: Agent, accel: np.ndarray, params: GsaParams,
                    rng: np.random.Generator) -> Agent:
    """Single-agent form of the kinematic update."""
    pos, vel = step_population(
        agent.position[None, :], agent.velocity[None, :],
        np.asarray(accel, dtype=float)[None, :], params, rng,
    )
    return Agent(pos[0], vel[0], agent.fitness, agent.mass)


def _evaluate(f, positions: np.ndarray) -> np.ndarray:
    batch = getattr(f, "evaluate_batch", None)
    if batch is not None:
        fits = np.asarray(batch(positions), dtype=float)
    else:
        fits = np.array([float(f(p)) for p in positions])
    if not np.all(np.isfinite(fits)):
        bad = int(np.flatnonzero(~np.isfinite(fits))[0])
        raise FitnessEvaluationError(positions[bad], float(fits[bad]))
    return fits


def optimize(
    f: Callable[[np.ndarray], float],
    params: GsaParams,
    seed: int | np.random.SeedSequence,
) -> GsaResult:
    """Run the full GSA loop and return the best-ever solution.

    `f` maps a position vector to a finite fitness (lower is better); if it
    also provides an `evaluate_batch(positions)` method that is used to
    evaluate the whole population at once. Initial positions are uniform
    within bounds, initial velocities zero.
    """
    rng = np.random.default_rng(seed)
    n, d = params.n_agents, params.dims
    positions = rng.uniform(params.lower_bounds, params.upper_bounds, size=(n, d))
    velocities = np.zeros((n, d))

    best_pos: Optional[np.ndarray] = None
    best_fit = math.inf
    best_trace = np.empty(params.t_max)
    mean_trace = np.empty(params.t_max)

    for t in range(1, params.t_max + 1):
        fits = _evaluate(f, positions)
        i_best = int(np.argmin(fits))
        if fits[i_best] < best_fit:
            best_fit = float(fits[i_best])
            best_pos = positions[i_best].copy()
        best_trace[t - 1] = best_fit
        mean_trace[t - 1] = float(fits.mean())

        masses = compute_masses(fits, params.epsilon)
        g = gravitational_constant(t, params)
        accels = compute_accelerations(positions, masses, g, params.epsilon, rng)
        positions, velocities = step_population(positions, velocities, accels, params, rng)

    assert best_pos is not None
    return GsaResult(best_pos, best_fit, best_trace, mean_trace)


def trace_csv_rows(result: GsaResult) -> list[str]:
    """Per-iteration trace as CSV rows (iteration, best_fitness, mean_fitness)."""
    rows = ["iteration,best_fitness,mean_fitness"]
    for i, (b, m) in enumerate(zip(result.best_trace, result.mean_trace), start=1):
        rows.append(f"{i},{b!r},{m!r}")
    return rows

"""Artificial bee colony search for bounded continuous minimization.

The colony holds ``population`` food sources. Each cycle runs three phases:

* employed: every source i proposes one candidate by perturbing a single
  randomly chosen coordinate j toward/away from a random partner k != i,
  ``v_j = x_j + phi * (x_j - x_kj)`` with phi uniform in [-1, 1], clamped to
  the bounds, and keeps the candidate only if its fitness improves;
* onlooker: ``population`` further proposals, each aimed at a source drawn
  by roulette over the fitness-proportional probabilities;
* scout: every source whose consecutive-failure counter reached ``limit`` is
  re-drawn uniformly inside the bounds and its counter reset.

Fitness maps the objective J to 1/(1+J) for J >= 0 and 1+|J| otherwise.
The best solution ever evaluated is archived outside the population before
scouting, so the reported result never regresses.

Reproducibility: all randomness comes from a single numpy PCG64 generator
seeded with ``AbcConfig.seed``. Draws are consumed in a fixed order -- per
initialized source one uniform vector; per bee operation the partner index,
the coordinate index, then phi; per onlooker additionally the roulette draw
first; per scouted source one uniform vector, sources in index order. Runs
with equal (seed, config, objective) therefore produce bitwise-identical
traces on every platform with the same numpy generator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ObjectiveError(RuntimeError):
    """The objective callback failed or returned a non-finite value."""


@dataclass
class Bounds:
    """Per-dimension box constraints, low < high everywhere."""

    low: np.ndarray
    high: np.ndarray

    def __post_init__(self):
        self.low = np.atleast_1d(np.asarray(self.low, dtype=float))
        self.high = np.atleast_1d(np.asarray(self.high, dtype=float))
        if self.low.shape != self.high.shape or self.low.ndim != 1:
            raise ValueError("low and high must be 1-D arrays of equal length")
        if not np.all(self.low < self.high):
            raise ValueError("every dimension needs low < high")

    @classmethod
    def from_pairs(cls, pairs) -> "Bounds":
        arr = np.asarray(pairs, dtype=float)
        return cls(arr[:, 0], arr[:, 1])

    @property
    def dimension(self) -> int:
        return self.low.size


@dataclass
class FoodSource:
    """Candidate solution with its objective, fitness and failure counter."""

    position: np.ndarray
    objective: float
    fitness: float
    trials: int = 0

    def copy(self) -> "FoodSource":
        return FoodSource(self.position.copy(), self.objective, self.fitness, self.trials)


@dataclass
class AbcConfig:
    """Colony settings.

    ``population`` is the number of food sources; the employed-bee count and
    the onlooker-bee count both equal it. ``dimension`` is optional and, when
    given, must match the bounds passed to :func:`run_abc`.
    """

    population: int = 20
    iterations: int = 200
    limit: int = 100
    seed: int = 0
    dimension: int | None = None

    def __post_init__(self):
        if self.population < 2 or self.population % 2 != 0:
            raise ValueError("population must be an even integer >= 2")
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if self.limit < 1:
            raise ValueError("limit must be positive")
        if self.dimension is not None and self.dimension < 1:
            raise ValueError("dimension must be positive")


@dataclass
class RunTrace:
    """Per-cycle best objective, best position and scout-replacement count."""

    best_j: list[float] = field(default_factory=list)
    best_position: list[np.ndarray] = field(default_factory=list)
    scout_counts: list[int] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["iteration,best_J,scout_count"]
        for it, (bj, sc) in enumerate(zip(self.best_j, self.scout_counts)):
            lines.append(f"{it},{bj!r},{sc}")
        return "\n".join(lines) + "\n"


def fitness_of(j: float) -> float:
    """Map an objective value to the strictly positive fitness scale."""
    return 1.0 / (1.0 + j) if j >= 0 else 1.0 + abs(j)


def selection_probs(fitnesses) -> np.ndarray:
    """Fitness-proportional selection probabilities; they sum to 1."""
    fits = np.asarray(fitnesses, dtype=float)
    if fits.size == 0:
        raise ValueError("cannot build probabilities from an empty population")
    if np.any(fits <= 0):
        raise ValueError("all fitness values must be positive")
    return fits / fits.sum()


def perturb(position_i, position_k, j: int, phi: float, bounds: Bounds) -> np.ndarray:
    """Candidate equal to position_i except coordinate j, clamped to bounds."""
    pos_i = np.asarray(position_i, dtype=float)
    if not 0 <= j < bounds.dimension:
        raise IndexError(f"dimension index {j} out of range for D={bounds.dimension}")
    cand = pos_i.copy()
    moved = cand[j] + phi * (cand[j] - float(position_k[j]))
    cand[j] = min(max(moved, bounds.low[j]), bounds.high[j])
    return cand


def _evaluate(objective, position: np.ndarray, context: str) -> float:
    try:
        value = float(objective(position))
    except Exception as exc:
        raise ObjectiveError(f"objective evaluation failed during {context}") from exc
    if not np.isfinite(value):
        raise ObjectiveError(f"objective returned non-finite value {value} during {context}")
    return value


def init_population(objective, bounds: Bounds, config: AbcConfig, rng) -> list[FoodSource]:
    """Draw ``population`` sources uniformly inside the bounds and score them."""
    span = bounds.high - bounds.low
    sources = []
    for i in range(config.population):
        position = bounds.low + rng.random(bounds.dimension) * span
        j = _evaluate(objective, position, f"initialization of source {i}")
        sources.append(FoodSource(position, j, fitness_of(j)))
    return sources


def _bee_operation(objective, population, i, bounds, rng, phase, iteration, observer):
    """One candidate-and-greedy step on source i; returns True on acceptance."""
    n = len(population)
    k = int(rng.integers(n - 1))
    if k >= i:
        k += 1
    j = int(rng.integers(bounds.dimension))
    phi = float(rng.uniform(-1.0, 1.0))
    candidate = perturb(population[i].position, population[k].position, j, phi, bounds)
    jv = _evaluate(objective, candidate, f"{phase} phase, iteration {iteration}")
    fv = fitness_of(jv)
    source = population[i]
    accepted = fv > source.fitness
    if accepted:
        source.position = candidate
        source.objective = jv
        source.fitness = fv
        source.trials = 0
    else:
        source.trials += 1
    if observer is not None:
        observer("operation", {
            "iteration": iteration, "phase": phase, "index": i,
            "accepted": accepted, "trials": source.trials,
        })
    return accepted


def run_abc(objective, bounds: Bounds, config: AbcConfig, observer=None):
    """Minimize ``objective`` over the box; returns (best FoodSource, RunTrace).

    ``objective`` must be a pure function of the position vector. ``observer``
    is an optional callable ``(event, info)`` fed "operation", "phase_end" and
    "scout" events for tracing and diagnostics; it must not mutate the
    population it is shown.
    """
    if config.dimension is not None and config.dimension != bounds.dimension:
        raise ValueError(
            f"config dimension {config.dimension} does not match bounds D={bounds.dimension}"
        )
    rng = np.random.default_rng(config.seed)
    population = init_population(objective, bounds, config, rng)
    n = config.population
    span = bounds.high - bounds.low
    best = min(population, key=lambda s: s.objective).copy()
    trace = RunTrace()

    def note_phase(iteration, phase):
        if observer is not None:
            observer("phase_end", {"iteration": iteration, "phase": phase,
                                   "population": population})

    def archive_best():
        nonlocal best
        leader = min(population, key=lambda s: s.objective)
        if leader.objective < best.objective:
            best = leader.copy()

    for iteration in range(config.iterations):
        for i in range(n):
            _bee_operation(objective, population, i, bounds, rng, "employed",
                           iteration, observer)
        note_phase(iteration, "employed")

        cumulative = np.cumsum(selection_probs([s.fitness for s in population]))
        for _ in range(n):
            i = min(int(np.searchsorted(cumulative, rng.random(), side="right")), n - 1)
            _bee_operation(objective, population, i, bounds, rng, "onlooker",
                           iteration, observer)
        note_phase(iteration, "onlooker")

        archive_best()  # before scouting, so the result can never be lost
        scouts = 0
        for i, source in enumerate(population):
            if source.trials >= config.limit:
                source.position = bounds.low + rng.random(bounds.dimension) * span
                source.objective = _evaluate(objective, source.position,
                                             f"scout phase, iteration {iteration}")
                source.fitness = fitness_of(source.objective)
                source.trials = 0
                scouts += 1
                if observer is not None:
                    observer("scout", {"iteration": iteration, "index": i})
        note_phase(iteration, "scout")
        archive_best()

        trace.best_j.append(best.objective)
        trace.best_position.append(best.position.copy())
        trace.scout_counts.append(scouts)

    return best, trace

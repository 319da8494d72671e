"""
The non-elitist EA and the elitist (1+1) EA baseline.

Populations are packed uint8 matrices of shape (λ, ⌈n/8⌉). Each generation
draws λ parents i.i.d. from the exact selection distribution and mutates each
once. Runtime counts every evaluation: λ for P₀, then one per offspring up to
and including the first optimal one.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .core import Bitstring, RandomSource
from .defaults import DEFAULTS, default_trajectory_stride
from .fitness import (
    FitnessSpec,
    evaluate,
    evaluate_counts,
    evaluate_population,
    fitness_space_counts,
    optimum_value,
    random_population,
)
from .mutation import MutationSpec, check_for_length, mutate, mutate_population
from .selection import SelectionDistribution, SelectionSpec, cumulative_probability, sample_indices, selection_distribution

OPTIMUM_DETECTION = DEFAULTS.optimum_detection


class EAConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    fitness: FitnessSpec
    selection: SelectionSpec
    mutation: MutationSpec
    lambda_: int = Field(alias="lambda")
    budget: int
    seed: int = 0
    record_trajectory: bool = False
    trajectory_stride: Optional[int] = None
    gamma0: float = DEFAULTS.gamma0

    @field_validator("lambda_")
    @classmethod
    def _check_lambda(cls, v: int) -> int:
        if v < 1:
            raise ValueError("lambda ≥ 1")
        return v

    @field_validator("seed")
    @classmethod
    def _check_seed(cls, v: int) -> int:
        if not 0 <= v < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        return v

    @field_validator("trajectory_stride")
    @classmethod
    def _check_stride(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError("trajectory_stride ≥ 1")
        return v

    @field_validator("gamma0")
    @classmethod
    def _check_gamma0(cls, v: float) -> float:
        if not 0.0 < v <= 1.0:
            raise ValueError("gamma0 in (0, 1]")
        return v

    @model_validator(mode="after")
    def _check(self) -> "EAConfig":
        if self.budget < self.lambda_:
            raise ValueError("budget ≥ lambda")
        if self.selection.kind == "comma" and self.selection.mu > self.lambda_:
            raise ValueError("mu ≤ lambda")
        check_for_length(self.mutation, self.fitness.n)
        return self

    @property
    def n(self) -> int:
        return self.fitness.n

    @property
    def stride(self) -> int:
        return self.trajectory_stride or default_trajectory_stride(self.lambda_)


class OPOConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    fitness: FitnessSpec
    mutation: MutationSpec
    budget: int = Field(ge=1)
    seed: int = 0
    # debug: start from this bit string instead of a uniform point
    initial_point: Optional[str] = None

    @model_validator(mode="after")
    def _check(self) -> "OPOConfig":
        check_for_length(self.mutation, self.fitness.n)
        if self.initial_point is not None and len(self.initial_point) != self.fitness.n:
            raise ValueError("initial_point length must equal n")
        return self


@dataclass(frozen=True)
class TrajectoryRecord:
    generation: int
    best_fitness: int
    sum_ones: int
    plateau_count: int
    max_reproductive_rate: float
    beta_at_gamma0: float


@dataclass(frozen=True)
class RunResult:
    success: bool
    evaluations: int
    generations: int
    best_fitness: int
    seed: int
    trajectory: Optional[List[TrajectoryRecord]] = None

    def as_dict(self) -> dict:
        out = asdict(self)
        out.pop("trajectory")
        return out

    def trajectory_rows(self) -> List[dict]:
        return [asdict(r) for r in (self.trajectory or [])]


def make_record(
    generation: int,
    config: EAConfig,
    counts: np.ndarray,
    fitnesses: np.ndarray,
    d: SelectionDistribution,
) -> TrajectoryRecord:
    lam = int(counts.size)
    return TrajectoryRecord(
        generation=generation,
        best_fitness=int(fitnesses.max()),
        sum_ones=int(counts.sum()),
        plateau_count=int((counts >= config.fitness.plateau_start).sum()),
        max_reproductive_rate=float(lam * d.probabilities.max()),
        beta_at_gamma0=cumulative_probability(config.gamma0, d, fitnesses),
    )


def final_record(
    generation: int,
    config: EAConfig,
    population: np.ndarray,
    fitnesses: np.ndarray,
    hit: Optional[int],
    rng: RandomSource,
) -> TrajectoryRecord:
    """Record of the last population; after a mid-generation hit only the evaluated prefix counts."""
    if hit is not None:
        population, fitnesses = population[: hit + 1], fitnesses[: hit + 1]
    selection = config.selection
    if selection.kind == "comma" and selection.mu > fitnesses.size:
        selection = selection.model_copy(update={"mu": int(fitnesses.size)})
    counts = fitness_space_counts(config.fitness, population)
    d = selection_distribution(selection, fitnesses, rng)
    return make_record(generation, config, counts, fitnesses, d)


def run_generation(
    population: np.ndarray,
    config: EAConfig,
    rng: RandomSource,
    generation: int = 0,
) -> Tuple[np.ndarray, TrajectoryRecord]:
    """λ offspring, each one selection draw plus one mutation; record describes the parents."""
    lam = config.lambda_
    if population.shape[0] != lam:
        raise ValueError(f"population has {population.shape[0]} rows, expected lambda={lam}")
    counts = fitness_space_counts(config.fitness, population)
    fitnesses = np.asarray(evaluate_counts(config.fitness, counts), dtype=np.int64)
    d = selection_distribution(config.selection, fitnesses, rng)
    record = make_record(generation, config, counts, fitnesses, d)
    parents = sample_indices(d, lam, rng)
    offspring = mutate_population(config.mutation, population[parents], config.n, rng)
    return offspring, record


def _first_optimal(fitnesses: np.ndarray, optimum: int) -> Optional[int]:
    hits = np.flatnonzero(fitnesses == optimum)
    return int(hits[0]) if hits.size else None


def run_ea(config: EAConfig) -> RunResult:
    rng = RandomSource(config.seed)
    spec = config.fitness
    lam = config.lambda_
    optimum = optimum_value(spec)
    stride = config.stride
    trajectory: Optional[List[TrajectoryRecord]] = [] if config.record_trajectory else None

    population = random_population(spec, lam, rng)
    fitnesses = evaluate_population(spec, population)
    hit = _first_optimal(fitnesses, optimum)
    evaluations = lam if hit is None else hit + 1
    best = int(fitnesses.max() if hit is None else optimum)
    generation = 0

    while hit is None and evaluations < config.budget:
        offspring, record = run_generation(population, config, rng, generation)
        if trajectory is not None and generation % stride == 0:
            trajectory.append(record)
        generation += 1
        population = offspring
        fitnesses = evaluate_population(spec, population)
        hit = _first_optimal(fitnesses, optimum)
        if hit is None:
            evaluations += lam
            best = max(best, int(fitnesses.max()))
        else:
            evaluations += hit + 1
            best = optimum

    if trajectory is not None and generation % stride == 0:
        trajectory.append(final_record(generation, config, population, fitnesses, hit, rng))

    return RunResult(
        success=hit is not None,
        evaluations=evaluations,
        generations=generation,
        best_fitness=best,
        seed=config.seed,
        trajectory=trajectory,
    )


def run_opo(
    fitness: FitnessSpec,
    mutation,
    budget: int,
    seed: int,
    initial_point: Optional[Bitstring] = None,
) -> RunResult:
    """(1+1) EA: y = mutate(x), keep y iff f(y) ≥ f(x)."""
    check_for_length(mutation, fitness.n)
    rng = RandomSource(seed)
    x = Bitstring.random(fitness.n, rng) if initial_point is None else initial_point
    fx = evaluate(fitness, x)
    optimum = optimum_value(fitness)
    evaluations = 1
    while fx != optimum and evaluations < budget:
        y = mutate(mutation, x, rng)
        fy = fx if y is x else evaluate(fitness, y)
        evaluations += 1
        if fy >= fx:
            x, fx = y, fy
    return RunResult(
        success=fx == optimum,
        evaluations=evaluations,
        generations=evaluations - 1,
        best_fitness=fx,
        seed=seed,
    )


def run_opo_config(config: OPOConfig) -> RunResult:
    start = None if config.initial_point is None else Bitstring.from_string(config.initial_point)
    return run_opo(config.fitness, config.mutation, config.budget, config.seed, start)

"""
Selection mechanisms with exact per-index selection probabilities.

Indices are 0-based. Ties: a tournament returns the first-sampled among the
fittest sampled individuals; comma selection ranks by fitness descending,
ties by ascending index (or by a fresh random order with tie_break="random").
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Annotated, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .core import RandomSource

SUM_TOLERANCE = 1e-12


class FitnessProportionate(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    kind: Literal["fitness_proportionate"] = "fitness_proportionate"

    @property
    def param(self) -> str:
        return ""


class Tournament(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    kind: Literal["tournament"] = "tournament"
    k: int = Field(ge=1)

    @property
    def param(self) -> str:
        return str(self.k)


class Comma(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    kind: Literal["comma"] = "comma"
    mu: int = Field(ge=1)
    tie_break: Literal["index", "random"] = "index"

    @property
    def param(self) -> str:
        return str(self.mu)


SelectionSpec = Annotated[Union[FitnessProportionate, Tournament, Comma], Field(discriminator="kind")]


@dataclass(frozen=True)
class SelectionDistribution:
    probabilities: np.ndarray

    def __post_init__(self) -> None:
        p = np.asarray(self.probabilities, dtype=np.float64)
        if p.ndim != 1 or p.size < 1:
            raise ValueError("selection distribution needs at least one entry")
        if (p < 0).any():
            raise ValueError("selection probabilities must be non-negative")
        if abs(math.fsum(p) - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"selection probabilities sum to {math.fsum(p)!r}, not 1")
        object.__setattr__(self, "probabilities", p)

    @property
    def size(self) -> int:
        return int(self.probabilities.size)


def _as_fitness_vector(fitnesses: Sequence[int]) -> np.ndarray:
    f = np.asarray(fitnesses, dtype=np.int64)
    if f.ndim != 1 or f.size < 1:
        raise ValueError("population must contain at least one individual")
    if (f < 0).any():
        raise ValueError("fitness values must be non-negative")
    return f


def _fitness_proportionate(f: np.ndarray) -> np.ndarray:
    total = int(f.sum())
    if total == 0:
        # all-zero population: uniform
        return np.full(f.size, 1.0 / f.size)
    return f.astype(np.float64) / float(total)


def _tournament(f: np.ndarray, k: int) -> np.ndarray:
    lam = f.size
    _, inverse, counts = np.unique(-f, return_inverse=True, return_counts=True)
    above = np.concatenate(([0], np.cumsum(counts)[:-1]))
    upto = above + counts
    # P(best sampled individual falls in this tie group)
    group_p = ((lam - above) / lam) ** k - ((lam - upto) / lam) ** k
    return group_p[inverse] / counts[inverse]


def comma_ranking(f: np.ndarray, tie_break: str = "index", rng: Optional[RandomSource] = None) -> np.ndarray:
    """Indices ordered best first under the comma tie-break rule."""
    if tie_break == "random":
        if rng is None:
            raise ValueError("random tie-break needs a RandomSource")
        perm = rng.generator.permutation(f.size)
        return perm[np.argsort(-f[perm], kind="stable")]
    return np.argsort(-f, kind="stable")


def _comma(f: np.ndarray, mu: int, tie_break: str, rng: Optional[RandomSource]) -> np.ndarray:
    if mu > f.size:
        raise ValueError(f"comma selection needs mu ≤ lambda (mu={mu}, lambda={f.size})")
    p = np.zeros(f.size)
    p[comma_ranking(f, tie_break, rng)[:mu]] = 1.0 / mu
    return p


def selection_distribution(spec, fitnesses: Sequence[int], rng: Optional[RandomSource] = None) -> SelectionDistribution:
    f = _as_fitness_vector(fitnesses)
    if spec.kind == "fitness_proportionate":
        p = _fitness_proportionate(f)
    elif spec.kind == "tournament":
        p = _tournament(f, spec.k)
    elif spec.kind == "comma":
        p = _comma(f, spec.mu, spec.tie_break, rng)
    else:
        raise ValueError(f"unknown selection kind: {spec.kind}")
    return SelectionDistribution(p)


def sample_index(d: SelectionDistribution, rng: RandomSource) -> int:
    return int(rng.generator.choice(d.size, p=d.probabilities))


def sample_indices(d: SelectionDistribution, size: int, rng: RandomSource) -> np.ndarray:
    """`size` independent draws; same law as calling sample_index `size` times."""
    return rng.generator.choice(d.size, size=size, p=d.probabilities)


def ranked_fitness(fitnesses: Sequence[int], gamma: float) -> int:
    """Fitness of the ⌈γλ⌉-ranked individual (rank 1 = fittest)."""
    f = np.sort(_as_fitness_vector(fitnesses))[::-1]
    rank = max(1, math.ceil(round(gamma * f.size, 9)))
    return int(f[rank - 1])


def beta(gamma: float, spec, fitnesses: Sequence[int], rng: Optional[RandomSource] = None) -> float:
    """Cumulative selection probability of individuals at least as fit as the ⌈γλ⌉-ranked one."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    f = _as_fitness_vector(fitnesses)
    return cumulative_probability(gamma, selection_distribution(spec, f, rng), f)


def cumulative_probability(gamma: float, d: SelectionDistribution, fitnesses: Sequence[int]) -> float:
    """β for an already computed distribution."""
    f = _as_fitness_vector(fitnesses)
    threshold = ranked_fitness(f, gamma)
    return float(math.fsum(d.probabilities[f >= threshold]))


def reproductive_rates(spec, fitnesses: Sequence[int], lam: Optional[int] = None, rng: Optional[RandomSource] = None) -> np.ndarray:
    """α(i) = λ · p_sel(i | P)."""
    d = selection_distribution(spec, fitnesses, rng)
    lam = d.size if lam is None else lam
    return lam * d.probabilities


def is_f_monotone(
    d: SelectionDistribution,
    fitnesses: Sequence[int],
    exempt: Optional[Sequence[int]] = None,
    strict: bool = True,
) -> bool:
    """
    strict: f(i) ≥ f(j) ⇔ p(i) ≥ p(j) for every pair outside `exempt`.
    weak: fitter never less likely, equal fitness equally likely. Truncating
    mechanisms (comma) only satisfy the weak form.
    """
    f = _as_fitness_vector(fitnesses)
    keep = np.ones(f.size, dtype=bool)
    if exempt is not None:
        keep[np.asarray(exempt, dtype=np.int64)] = False
    f = f[keep]
    p = d.probabilities[keep]
    tol = 1e-15
    f_ge = f[:, None] >= f[None, :]
    p_ge = p[:, None] >= p[None, :] - tol
    if strict:
        return bool((f_ge == p_ge).all())
    f_eq = f[:, None] == f[None, :]
    p_eq = np.abs(p[:, None] - p[None, :]) <= tol
    return bool((~f_ge | p_ge).all() and (~f_eq | p_eq).all())

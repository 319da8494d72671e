from __future__ import annotations

from functools import cached_property
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .core import Bitstring, InstanceTransform, apply_transform, count_ones, pack_rows, popcount_rows


class TransformSpec(BaseModel):
    """Bit-value exchange mask and 0-based position permutation."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    mask: Tuple[int, ...]
    permutation: Tuple[int, ...]

    @model_validator(mode="after")
    def _check(self) -> "TransformSpec":
        self.build()
        return self

    def build(self) -> InstanceTransform:
        return InstanceTransform.from_lists(self.mask, self.permutation)

    @classmethod
    def from_transform(cls, t: InstanceTransform) -> "TransformSpec":
        return cls(mask=tuple(int(b) for b in t.mask.bits), permutation=t.permutation)


class FitnessSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    family: Literal["onemax", "plateau"] = "plateau"
    n: int = Field(ge=1)
    r: Optional[int] = None
    transform: Optional[TransformSpec] = None

    @model_validator(mode="after")
    def _check(self) -> "FitnessSpec":
        if self.family == "plateau":
            if self.r is None or not 2 <= self.r < self.n:
                raise ValueError(f"plateau requires 2 ≤ r < n (got r={self.r}, n={self.n})")
        elif self.r is not None:
            raise ValueError("onemax takes no r")
        if self.transform is not None and len(self.transform.mask) != self.n:
            raise ValueError("transform length does not match n")
        return self

    @cached_property
    def instance_transform(self) -> Optional[InstanceTransform]:
        if self.transform is None:
            return None
        t = self.transform.build()
        return None if t.is_identity() else t

    @cached_property
    def count_mask(self) -> Optional[np.ndarray]:
        t = self.instance_transform
        return None if t is None else t.count_mask()

    @property
    def plateau_start(self) -> int:
        """Smallest count of ones that lies on the plateau (or is optimal for OneMax)."""
        return self.n - self.r if self.family == "plateau" else self.n


def plateau_value(ones, n: int, r: int):
    """Piecewise Plateau_r on counts; works on ints and integer arrays."""
    ones = np.asarray(ones)
    out = np.where((ones > n - r) & (ones < n), n - r, ones)
    return out if out.ndim else int(out)


def count_in_fitness_space(spec: FitnessSpec, x: Bitstring) -> int:
    """|T(x)|, the count of ones the fitness formula sees."""
    if x.n != spec.n:
        raise ValueError(f"dimension mismatch: spec n={spec.n}, x n={x.n}")
    t = spec.instance_transform
    return count_ones(x if t is None else apply_transform(t, x))


def fitness_space_counts(spec: FitnessSpec, population: np.ndarray) -> np.ndarray:
    """Counts of ones for each row of a packed population matrix."""
    mask = spec.count_mask
    return popcount_rows(population if mask is None else np.bitwise_xor(population, mask))


def evaluate_counts(spec: FitnessSpec, ones):
    if spec.family == "onemax":
        ones = np.asarray(ones)
        return ones if ones.ndim else int(ones)
    return plateau_value(ones, spec.n, spec.r)


def evaluate(spec: FitnessSpec, x: Bitstring) -> int:
    return int(evaluate_counts(spec, count_in_fitness_space(spec, x)))


def optimum_value(spec: FitnessSpec) -> int:
    return spec.n


def is_optimum(spec: FitnessSpec, x: Bitstring) -> bool:
    return evaluate(spec, x) == optimum_value(spec)


def optimum_point(spec: FitnessSpec) -> Bitstring:
    """The unique optimum: pre-image of all-ones under the transform."""
    ones = Bitstring.ones(spec.n)
    t = spec.instance_transform
    return ones if t is None else apply_transform(t.inverse(), ones)


def evaluate_population(spec: FitnessSpec, population: np.ndarray) -> np.ndarray:
    return np.asarray(evaluate_counts(spec, fitness_space_counts(spec, population)), dtype=np.int64)


def random_population(spec: FitnessSpec, size: int, rng) -> np.ndarray:
    """Uniform packed population of `size` rows."""
    bits = rng.generator.integers(0, 2, size=(size, spec.n), dtype=np.uint8)
    return pack_rows(bits)

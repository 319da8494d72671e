"""
Unbiased mutation operators.

Every operator is "draw a flip count ξ, flip a uniformly random subset of
exactly ξ positions"; the kinds differ only in the law of ξ. Bitwise mutation
draws ξ ~ Binomial(n, χ/n), which gives the same law as independent per-bit
flips with probability χ/n.
"""
from __future__ import annotations

import math
from typing import Annotated, Dict, Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import stats
from scipy.special import gammaln

from .core import Bitstring, RandomSource, hamming, pack_rows
from .defaults import DEFAULTS

PMF_TOLERANCE = 1e-12
MAX_ENUMERATION_N = 16

DEFAULT_FLIP_P0 = DEFAULTS.flip_p0
DEFAULT_FLIP_P1 = DEFAULTS.flip_p1


class Bitwise(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    kind: Literal["bitwise"] = "bitwise"
    chi: float = Field(gt=0.0)

    @property
    def rate_param(self) -> float:
        return self.chi


class Point(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    kind: Literal["point"] = "point"

    @property
    def rate_param(self) -> float:
        return 1.0


class FlipDistribution(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    kind: Literal["flip_distribution"] = "flip_distribution"
    pmf: Tuple[float, ...] = (DEFAULT_FLIP_P0, DEFAULT_FLIP_P1)

    @field_validator("pmf")
    @classmethod
    def _check_pmf(cls, pmf: Tuple[float, ...]) -> Tuple[float, ...]:
        if not pmf:
            raise ValueError("pmf must not be empty")
        if any(p < 0 for p in pmf):
            raise ValueError("pmf entries must be non-negative")
        if abs(math.fsum(pmf) - 1.0) > PMF_TOLERANCE:
            raise ValueError(f"pmf sums to {math.fsum(pmf)!r}, not 1")
        return pmf

    @property
    def rate_param(self) -> float:
        # expected flip count
        return float(math.fsum(i * p for i, p in enumerate(self.pmf)))


MutationSpec = Annotated[Union[Bitwise, Point, FlipDistribution], Field(discriminator="kind")]


def default_flip_distribution(p0: float = DEFAULT_FLIP_P0, p1: float = DEFAULT_FLIP_P1) -> FlipDistribution:
    return FlipDistribution(pmf=(p0, p1))


def check_for_length(spec, n: int) -> None:
    if spec.kind == "bitwise" and not 0.0 < spec.chi < n:
        raise ValueError(f"bitwise mutation needs 0 < chi < n (chi={spec.chi}, n={n})")
    if spec.kind == "flip_distribution" and any(p > 0 for p in spec.pmf[n + 1:]):
        raise ValueError(f"pmf puts mass on flip counts above n={n}")


def flip_count_pmf(spec, n: int) -> np.ndarray:
    """Law of ξ as a vector of length n+1."""
    check_for_length(spec, n)
    if spec.kind == "bitwise":
        return stats.binom.pmf(np.arange(n + 1), n, spec.chi / n)
    if spec.kind == "point":
        out = np.zeros(n + 1)
        out[1] = 1.0
        return out
    out = np.zeros(n + 1)
    m = min(len(spec.pmf), n + 1)
    out[:m] = spec.pmf[:m]
    return out


def log_pattern_probabilities(spec, n: int) -> np.ndarray:
    """ln of the probability of producing one specific point at Hamming distance h, h = 0..n."""
    check_for_length(spec, n)
    h = np.arange(n + 1)
    with np.errstate(divide="ignore"):
        if spec.kind == "bitwise":
            q = spec.chi / n
            return h * math.log(q) + (n - h) * math.log1p(-q)
        log_binom = gammaln(n + 1) - gammaln(h + 1) - gammaln(n - h + 1)
        return np.log(flip_count_pmf(spec, n)) - log_binom


def pattern_probabilities(spec, n: int) -> np.ndarray:
    return np.exp(log_pattern_probabilities(spec, n))


def transition_probability(spec, x: Bitstring, y: Bitstring) -> float:
    h = hamming(x, y)
    return float(pattern_probabilities(spec, x.n)[h])


def draw_flip_counts(spec, n: int, size: int, rng: RandomSource) -> np.ndarray:
    g = rng.generator
    if spec.kind == "bitwise":
        return g.binomial(n, spec.chi / n, size=size)
    if spec.kind == "point":
        return np.ones(size, dtype=np.int64)
    return g.choice(n + 1, size=size, p=flip_count_pmf(spec, n))


def mutate(spec, x: Bitstring, rng: RandomSource) -> Bitstring:
    n = x.n
    xi = int(draw_flip_counts(spec, n, 1, rng)[0])
    if xi == 0:
        return x
    # Generator.choice without replacement is a partial shuffle of positions
    positions = rng.generator.choice(n, size=xi, replace=False)
    bits = x.bits.copy()
    bits[positions] ^= 1
    return Bitstring.from_array(bits)


def mutate_population(spec, population: np.ndarray, n: int, rng: RandomSource) -> np.ndarray:
    """
    Mutate every row of a packed population independently.
    Subsets are the ξ smallest of n uniform keys, hence uniform of size ξ.
    """
    lam = population.shape[0]
    xi = draw_flip_counts(spec, n, lam, rng)
    rows = np.flatnonzero(xi)
    out = population.copy()
    if rows.size == 0:
        return out
    keys = rng.generator.random((rows.size, n))
    ranks = keys.argsort(axis=1).argsort(axis=1)
    flips = ranks < xi[rows, None]
    out[rows] ^= pack_rows(flips.astype(np.uint8))
    return out


def sample_offspring_zero_counts(spec, zeros: np.ndarray, n: int, rng: RandomSource) -> np.ndarray:
    """
    Zero count of mutate(x) given the zero count of x, without materialising bits:
    ξ from the flip-count law, zeros hit by the uniform subset ~ Hypergeometric.
    """
    zeros = np.asarray(zeros, dtype=np.int64)
    xi = draw_flip_counts(spec, n, zeros.size, rng).reshape(zeros.shape)
    hit = np.where(
        xi > 0,
        rng.generator.hypergeometric(zeros, n - zeros, np.maximum(xi, 1)),
        0,
    )
    return zeros - hit + (xi - hit)


def exact_offspring_distribution(spec, x: Bitstring) -> Dict[Bitstring, float]:
    """Full law of mutate(x) over {0,1}^n (zero-probability points omitted)."""
    n = x.n
    if n > MAX_ENUMERATION_N:
        raise ValueError(f"enumeration limited to n ≤ {MAX_ENUMERATION_N}, got n={n}")
    q = pattern_probabilities(spec, n)
    codes = np.arange(2**n, dtype=np.int64)
    space = ((codes[:, None] >> np.arange(n)) & 1).astype(np.uint8)
    packed = pack_rows(space)
    dist = np.bitwise_count(np.bitwise_xor(packed, x.packed)).sum(axis=1)
    probs = q[dist]
    return {
        Bitstring.from_words(packed[i], n): float(probs[i])
        for i in np.flatnonzero(probs > 0)
    }


def count_transition_matrix(spec, n: int) -> np.ndarray:
    """
    T[k, j] = Pr(|mutate(x)| = j | |x| = k), from flipping a of the k ones and
    b of the n-k zeros: C(k,a) C(n-k,b) q(a+b). Terms are combined in log space
    and each cell is summed with math.fsum.
    """
    log_q = log_pattern_probabilities(spec, n)
    out = np.zeros((n + 1, n + 1))
    for k in range(n + 1):
        a = np.arange(k + 1)[:, None]
        b = np.arange(n - k + 1)[None, :]
        log_w = (
            gammaln(k + 1) - gammaln(a + 1) - gammaln(k - a + 1)
            + gammaln(n - k + 1) - gammaln(b + 1) - gammaln(n - k - b + 1)
            + log_q[a + b]
        )
        w = np.exp(log_w).ravel()
        j = (k - a + b).ravel()
        order = np.argsort(j, kind="stable")
        j_sorted, w_sorted = j[order], w[order]
        cuts = np.flatnonzero(np.diff(j_sorted)) + 1
        for jj, group in zip(j_sorted[np.concatenate(([0], cuts))], np.split(w_sorted, cuts)):
            out[k, jj] = math.fsum(group)
    return out


def upgrade_probabilities(spec, n: int, thresholds: np.ndarray) -> np.ndarray:
    """
    For each count k: Pr(|mutate(x)| ≥ thresholds[k] | |x| = k). Used for the
    level conditions (M1)/(M2) on count-based partitions.
    """
    t = count_transition_matrix(spec, n)
    cols = np.arange(n + 1)[None, :]
    return np.array([math.fsum(row) for row in np.where(cols >= np.asarray(thresholds)[:, None], t, 0.0)])


def level_upgrade_probability(spec, n: int, k: int, threshold: int) -> float:
    """Pr(|mutate(x)| ≥ threshold) for any x with |x| = k."""
    if not 0 <= k <= n:
        raise ValueError(f"count k must lie in [0, n], got k={k}")
    row = count_transition_matrix(spec, n)[k]
    return float(math.fsum(row[max(threshold, 0):]))


def no_degradation_probability(spec, n: int) -> float:
    """p₀ = Pr(ξ = 0): the offspring is a copy of its parent."""
    return float(flip_count_pmf(spec, n)[0])

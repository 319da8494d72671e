"""
Bound calculators, condition verifiers and the exact (1+1) EA chain oracle.

Every calculator is a pure function of its numeric inputs. Level-based and
up-drift expressions come back as a BoundReport so their side conditions
travel with the number.

Log conventions: the up-drift expression and the (M4') population floor use
base-2 logs; the level-based runtime bound and its (M4) floor use natural logs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Literal, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_validator, model_validator
from scipy import linalg, stats

from .defaults import DEFAULTS
from .fitness import plateau_value
from .mutation import (
    Bitwise,
    MutationSpec,
    Point,
    check_for_length,
    count_transition_matrix,
    flip_count_pmf,
    upgrade_probabilities,
)
from .selection import beta

MAX_CHAIN_N = 200
ROW_SUM_TOLERANCE = 1e-10
DUAL_FORM_TOLERANCE = 1e-10


# --------- Reports ---------

class Condition(BaseModel):
    """A named inequality; margin ≥ 0 when it holds, margin ≤ 0 when it fails."""

    model_config = ConfigDict(frozen=True)

    name: str
    holds: bool
    margin: float

    @model_validator(mode="after")
    def _check(self) -> "Condition":
        if self.holds and self.margin < 0:
            raise ValueError(f"{self.name}: holds with negative margin {self.margin}")
        if not self.holds and self.margin > 0:
            raise ValueError(f"{self.name}: fails with positive margin {self.margin}")
        return self

    @classmethod
    def at_least(cls, name: str, lhs: float, rhs: float) -> "Condition":
        return cls(name=name, holds=bool(lhs >= rhs), margin=float(lhs - rhs))

    @classmethod
    def less_than(cls, name: str, lhs: float, rhs: float) -> "Condition":
        return cls(name=name, holds=bool(lhs < rhs), margin=float(rhs - lhs))


class BoundReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    value: float
    label: str = "bound"
    conditions: List[Condition] = Field(default_factory=list)
    extras: Dict[str, float] = Field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.conditions)


# --------- Level partitions ---------

@dataclass(frozen=True)
class LevelPartition:
    """
    Count-of-ones levels, 1-based. plateau: A_i = {|x| = i-1} for i < m and
    A_m = {|x| ≥ n-r}, m = n-r+1. onemax: A_i = {|x| = i-1}, m = n+1.
    """

    n: int
    kind: Literal["plateau", "onemax"]
    r: Optional[int] = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.kind == "plateau":
            if self.r is None or not 2 <= self.r < self.n:
                raise ValueError(f"plateau levels need 2 ≤ r < n (got r={self.r}, n={self.n})")
        elif self.kind != "onemax":
            raise ValueError(f"unknown level kind: {self.kind}")

    @property
    def m(self) -> int:
        return self.n - self.r + 1 if self.kind == "plateau" else self.n + 1

    def level_of(self, ones: int) -> int:
        if not 0 <= ones <= self.n:
            raise ValueError(f"count of ones must lie in [0, n], got {ones}")
        return min(ones + 1, self.m)

    def counts(self, level: int) -> Tuple[int, int]:
        """Inclusive (min, max) count of ones in level `level`."""
        if not 1 <= level <= self.m:
            raise ValueError(f"level must lie in [1, {self.m}], got {level}")
        if level < self.m:
            return level - 1, level - 1
        return level - 1, self.n

    def thresholds(self) -> np.ndarray:
        """For each count k, the smallest count of the next level up (n+1 at the top)."""
        k = np.arange(self.n + 1)
        lv = np.minimum(k + 1, self.m)
        return np.where(lv < self.m, lv, self.n + 1)


def level_upgrade_probabilities(partition: LevelPartition, mutation) -> Tuple[float, ...]:
    """Exact s_j = Pr(mutate(x) ∈ A_{≥j+1} | x ∈ A_j) for j = 1..m-1 (levels below the top hold one count each)."""
    up = upgrade_probabilities(mutation, partition.n, partition.thresholds())
    return tuple(float(up[j - 1]) for j in range(1, partition.m))


def plateau_levels(n: int, r: Optional[int] = None, kind: Literal["plateau", "onemax"] = "plateau") -> LevelPartition:
    if kind == "onemax":
        return LevelPartition(n=n, kind="onemax")
    return LevelPartition(n=n, kind="plateau", r=r)


class LevelParams(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    s: Tuple[float, ...]
    p0: float = 1.0
    gamma0: float
    delta: float
    lambda_: int = Field(alias="lambda", ge=1)
    C: float = Field(default=DEFAULTS.m4prime_C, gt=0.0)

    @field_validator("s")
    @classmethod
    def _check_s(cls, s: Tuple[float, ...]) -> Tuple[float, ...]:
        if any(not 0.0 < v <= 1.0 for v in s):
            raise ValueError("upgrade probabilities s_j must lie in (0, 1]")
        return s

    @field_validator("p0")
    @classmethod
    def _check_p0(cls, v: float) -> float:
        if not 0.0 < v <= 1.0:
            raise ValueError("p0 must lie in (0, 1]")
        return v

    @field_validator("gamma0")
    @classmethod
    def _check_gamma0(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError("gamma0 must lie in (0, 1)")
        return v

    @field_validator("delta")
    @classmethod
    def _check_delta(cls, v: float) -> float:
        if not 0.0 < v <= 1.0:
            raise ValueError("delta must lie in (0, 1]")
        return v

    @property
    def s_star(self) -> float:
        return min(self.s) if self.s else 1.0

    def levels(self, m: Optional[int] = None) -> int:
        if m is None:
            return len(self.s) + 1
        if m < 1 or m != len(self.s) + 1:
            raise ValueError(f"m={m} needs exactly m-1={m - 1} upgrade probabilities, got {len(self.s)}")
        return m


# --------- Level-based bounds ---------

def m4_lambda_floor(p: LevelParams, m: int) -> float:
    """(4/(γ₀δ²)) ln(128m/(γ₀ s_* δ²))"""
    g, d = p.gamma0, p.delta
    return 4.0 / (g * d * d) * math.log(128.0 * m / (g * p.s_star * d * d))


def level_based_bound(p: LevelParams, m: Optional[int] = None) -> BoundReport:
    """
    Expected generations until γ₀λ individuals sit in the top level:
    (8/δ²) Σ_j [ ln(6δλ/(4 + γ₀ s_j δλ)) + 1/(γ₀ s_j λ) ].
    """
    m = p.levels(m)
    g, d, lam = p.gamma0, p.delta, p.lambda_
    terms = [
        math.log(6.0 * d * lam / (4.0 + g * s * d * lam)) + 1.0 / (g * s * lam)
        for s in p.s
    ]
    value = 8.0 / (d * d) * math.fsum(terms)
    floor = m4_lambda_floor(p, m)
    return BoundReport(
        name="level-based",
        value=value,
        label="expected generations",
        conditions=[Condition.at_least("M4: lambda >= (4/(gamma0 delta^2)) ln(128m/(gamma0 s_* delta^2))", lam, floor)],
        extras={"m": m, "s_star": p.s_star, "lambda_floor_m4": floor},
    )


def m4prime_rhs(p: LevelParams, m: int, lam: float) -> float:
    """(8/(γ₀δ²)) log₂((Cm/δ)(log₂ λ + 1/(γ₀ s_* λ)))"""
    g, d = p.gamma0, p.delta
    inner = (p.C * m / d) * (math.log2(lam) + 1.0 / (g * p.s_star * lam))
    return 8.0 / (g * d * d) * math.log2(inner)


def lambda_floor_M4prime(p: LevelParams, m: Optional[int] = None) -> int:
    """Fixed point of λ ← ⌈rhs(λ)⌉ started at 16."""
    m = p.levels(m)
    lam = DEFAULTS.fixed_point_start
    for _ in range(DEFAULTS.fixed_point_max_iter):
        nxt = max(1, math.ceil(m4prime_rhs(p, m, lam)))
        if nxt == lam:
            return lam
        lam = nxt
    raise RuntimeError(f"(M4') iteration did not settle within {DEFAULTS.fixed_point_max_iter} steps")


def updrift_bound(p: LevelParams, m: Optional[int] = None) -> BoundReport:
    """λ m log₂(γ₀λ)/δ + (1/δ) Σ 1/(γ₀ s_j), constant factor 1."""
    m = p.levels(m)
    g, d, lam = p.gamma0, p.delta, p.lambda_
    if g * lam <= 1.0:
        raise ValueError(f"up-drift expression needs gamma0*lambda > 1, got {g * lam}")
    value = lam * m * math.log2(g * lam) / d + math.fsum(1.0 / (g * s) for s in p.s) / d
    return BoundReport(
        name="updrift",
        value=value,
        label="order expression",
        conditions=[Condition.at_least("M4': lambda >= rhs(lambda)", lam, m4prime_rhs(p, m, lam))],
        extras={"m": m, "s_star": p.s_star},
    )


class SelectionFloors(NamedTuple):
    k_min: int
    ratio_min: float


class HighPressureParams(NamedTuple):
    k_min: int
    ratio_min: float
    expected_generations: float


def high_pressure_params(m: int, s_star: float) -> HighPressureParams:
    """Tournament size and λ/μ floors under high selective pressure, and the e·m generation bound."""
    if not 0.0 < s_star <= 1.0:
        raise ValueError(f"s_star must lie in (0, 1], got {s_star}")
    if m < 1:
        raise ValueError(f"m must be positive, got {m}")
    ratio = (1.0 + math.log(m)) / s_star
    return HighPressureParams(
        k_min=math.ceil(ratio * math.e),
        ratio_min=ratio,
        expected_generations=math.e * m,
    )


def theorem3_params(n: int, p_xi1: float) -> SelectionFloors:
    """k ≥ n(1+ln n)e/Pr(ξ=1), λ/μ ≥ n(1+ln n)/Pr(ξ=1)."""
    if not 0.0 < p_xi1 <= 1.0:
        raise ValueError(f"Pr(xi=1) must lie in (0, 1], got {p_xi1}")
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    ratio = n * (1.0 + math.log(n)) / p_xi1
    return SelectionFloors(k_min=math.ceil(ratio * math.e), ratio_min=ratio)


def bitwise_selection_floors(chi: float, delta: float) -> SelectionFloors:
    """k ≥ (1+δ)e^χ and λ/μ ≥ (1+δ)e^χ for bitwise mutation at rate χ/n."""
    if chi <= 0 or delta <= 0:
        raise ValueError("chi and delta must be positive")
    ratio = (1.0 + delta) * math.exp(chi)
    return SelectionFloors(k_min=math.ceil(ratio), ratio_min=ratio)


def copy_selection_floors(p0: float, delta: float) -> SelectionFloors:
    """k ≥ (1+δ)/p₀ and λ/μ ≥ (1+δ)/p₀ for an operator with Pr(ξ=0) ≥ p₀."""
    if not 0.0 < p0 <= 1.0:
        raise ValueError(f"p0 must lie in (0, 1], got {p0}")
    if delta <= 0:
        raise ValueError("delta must be positive")
    ratio = (1.0 + delta) / p0
    return SelectionFloors(k_min=math.ceil(ratio), ratio_min=ratio)


def fprop_low_rate_level_params(n: int, c: float, r: int = 2, lam: Optional[int] = None) -> LevelParams:
    """
    OneMax-count levels (m = n+1) for fitness-proportionate selection with
    bitwise rate χ/n, χ = (1-c)/n: s_j = (1-c)/(e n²), the last level needs an
    r-bit jump s_* = (χ/n)^r (1-χ/n)^(n-r); p₀ = (1-χ/n)^n; γ₀ = c/4; δ = c/(4n).
    Default λ = ⌈n² ln n⌉.
    """
    if not 0.0 < c < 1.0:
        raise ValueError(f"c must lie in (0, 1), got {c}")
    if not 2 <= r < n:
        raise ValueError(f"need 2 ≤ r < n (got r={r}, n={n})")
    q = (1.0 - c) / n / n
    s_j = (1.0 - c) / (math.e * n * n)
    s_last = q**r * (1.0 - q) ** (n - r)
    return LevelParams(
        s=tuple([s_j] * (n - 1) + [s_last]),
        p0=(1.0 - q) ** n,
        gamma0=c / 4.0,
        delta=c / (4.0 * n),
        lambda_=lam if lam is not None else math.ceil(n * n * math.log(n)),
    )


def check_m3(
    spec,
    fitnesses: Sequence[int],
    gamma0: float,
    delta: float,
    p0: float,
) -> BoundReport:
    """
    β(γ, P)·p₀ ≥ (1+δ)γ on γ ∈ (0, γ₀]. β is constant between attainable
    ranks, so checking γ = i/λ (and γ₀ itself) covers the interval.
    """
    lam = len(fitnesses)
    if not 0.0 < gamma0 <= 1.0:
        raise ValueError(f"gamma0 must lie in (0, 1], got {gamma0}")
    top = math.ceil(round(gamma0 * lam, 9))
    gammas = sorted({min(i / lam, gamma0) for i in range(1, top + 1)})
    conditions = [
        Condition.at_least(f"M3 at gamma={g:.6g}", beta(g, spec, fitnesses) * p0, (1.0 + delta) * g)
        for g in gammas
    ]
    return BoundReport(
        name="m3",
        value=min(c.margin for c in conditions),
        label="worst margin",
        conditions=conditions,
        extras={"gamma0": gamma0, "delta": delta, "p0": p0},
    )


# --------- Negative drift and approximation thresholds ---------

def negative_drift_report(alpha: float, chi: float, delta: float, n: Optional[int] = None) -> BoundReport:
    """ψ = ln(α)/χ + δ must be < 1; b(n)/n < min{1/5, 1/2 - sqrt(ψ(2-ψ)/4)}."""
    if alpha <= 1.0:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    if chi <= 0 or delta <= 0:
        raise ValueError("chi and delta must be positive")
    psi = math.log(alpha) / chi + delta
    threshold = min(0.2, 0.5 - math.sqrt(psi * (2.0 - psi) / 4.0)) if psi < 1.0 else 0.0
    return BoundReport(
        name="negative-drift",
        value=threshold,
        label="b(n)/n threshold",
        conditions=[Condition.less_than("psi < 1", psi, 1.0)],
        extras={"psi": psi} if n is None else {"psi": psi, "b_max": threshold * n, "b_cap": n / chi},
    )


def pk10_holds(alpha: float, chi: float, delta: float) -> bool:
    """α < e^χ - δ."""
    if alpha <= 0 or chi <= 0 or delta <= 0:
        raise ValueError("alpha, chi and delta must be positive")
    return alpha < math.exp(chi) - delta


def pk10_report(alpha: float, chi: float, delta: float) -> BoundReport:
    holds = pk10_holds(alpha, chi, delta)
    ceiling = math.exp(chi) - delta
    return BoundReport(
        name="pk10",
        value=ceiling,
        label="reproductive rate ceiling",
        conditions=[Condition(name="alpha < e^chi - delta", holds=holds, margin=ceiling - alpha)],
        extras={"alpha": alpha},
    )


class ApproximationLimits(NamedTuple):
    rho: float
    M: float
    z: float
    w_max: float


def approximation_limits(chi: float, epsilon: float, n: int) -> ApproximationLimits:
    """
    ρ = ln2/χ, M = (1 - sqrt(ψ(2-ψ)))/2 with ψ = ρ/2 + 1/2, z = (n(1-ε)/2)(1 - sqrt(ρ/2 - (ρ/2)² + 3/4)),
    w_max = (1 - ρ)²/2.
    """
    ln2 = math.log(2.0)
    if chi <= ln2:
        raise ValueError(f"chi must exceed ln 2, got {chi}")
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    rho = ln2 / chi
    psi = ln2 / (2.0 * chi) + 0.5
    m_psi = (1.0 - math.sqrt(psi * (2.0 - psi))) / 2.0
    root = math.sqrt(rho / 2.0 - (rho / 2.0) ** 2 + 0.75)
    m_rho = (1.0 - root) / 2.0
    if abs(m_psi - m_rho) > DUAL_FORM_TOLERANCE:
        raise RuntimeError(f"M(chi) forms disagree: {m_psi!r} vs {m_rho!r}")
    return ApproximationLimits(
        rho=rho,
        M=m_psi,
        z=n * (1.0 - epsilon) / 2.0 * (1.0 - root),
        w_max=(1.0 - rho) ** 2 / 2.0,
    )


def fprop_alpha_bound(n: int, r: int, eps_prime: float) -> float:
    """2n/((1-ε′)(n-r)): reproductive-rate bound once Σ|P(j)| ≥ (1-ε′)λ(n-r)/2."""
    if not 0.0 <= eps_prime < 1.0:
        raise ValueError(f"eps_prime must lie in [0, 1), got {eps_prime}")
    if not 0 <= r < n:
        raise ValueError(f"need 0 ≤ r < n (got r={r}, n={n})")
    return 2.0 * n / ((1.0 - eps_prime) * (n - r))


# --------- (1+1) EA ---------

def _count_fitness(n: int, r: Optional[int]) -> np.ndarray:
    k = np.arange(n + 1)
    return k if r is None else plateau_value(k, n, r)


def opo_count_chain(n: int, r: Optional[int], mutation) -> np.ndarray:
    """
    Transition matrix of the elitist (1+1) EA on k = count of ones.
    r=None means OneMax. Equal fitness is accepted.
    """
    if n > MAX_CHAIN_N:
        raise ValueError(f"chain oracle limited to n ≤ {MAX_CHAIN_N}, got n={n}")
    if r is not None and not 2 <= r < n:
        raise ValueError(f"plateau needs 2 ≤ r < n (got r={r}, n={n})")
    check_for_length(mutation, n)
    t = count_transition_matrix(mutation, n)
    g = _count_fitness(n, r)
    accept = g[None, :] >= g[:, None]
    chain = np.where(accept, t, 0.0)
    np.fill_diagonal(chain, 0.0)
    for k in range(n + 1):
        rejected = [t[k, k]] + list(t[k][~accept[k]])
        chain[k, k] = math.fsum(rejected)
    # optimum absorbs
    chain[n] = 0.0
    chain[n, n] = 1.0
    worst = float(np.abs(chain.sum(axis=1) - 1.0).max())
    if worst > ROW_SUM_TOLERANCE:
        raise RuntimeError(f"chain rows deviate from 1 by {worst:.3g}")
    return chain


def opo_exact_expected_runtime(n: int, r: Optional[int], mutation) -> float:
    """
    Expected evaluations of the (1+1) EA from a uniform start: 1 for the initial
    point plus the binomially averaged expected hitting time of k = n.
    """
    chain = opo_count_chain(n, r, mutation)
    q = chain[:n, :n]
    try:
        h = linalg.solve(np.eye(n) - q, np.ones(n))
    except linalg.LinAlgError as exc:
        raise ValueError("optimum is unreachable under this mutation operator") from exc
    start = stats.binom.pmf(np.arange(n + 1), n, 0.5)
    return 1.0 + math.fsum(start[:n] * h)


def opo_asymptotic_runtime(n: int, r: int, mutation) -> float:
    """n^r / (r! Pr(1 ≤ ξ ≤ r))"""
    pmf = flip_count_pmf(mutation, n)
    mass = math.fsum(pmf[1:r + 1])
    if mass <= 0:
        raise ValueError("Pr(1 ≤ xi ≤ r) is zero")
    return float(n) ** r / (math.factorial(r) * mass)


# --------- Named calculators ---------

def _mutation_from(params: Dict[str, object]):
    if "mutation" in params:
        return TypeAdapter(MutationSpec).validate_python(params.pop("mutation"))
    if "chi" in params:
        return Bitwise(chi=params.pop("chi"))
    return Point()


def _level_args(params: Dict[str, object]) -> Tuple[LevelParams, Optional[int]]:
    m = params.pop("m", None)
    return LevelParams.model_validate(params), m


def _m4prime(params: Dict[str, object]) -> BoundReport:
    p, m = _level_args(params)
    m = p.levels(m)
    floor = lambda_floor_M4prime(p, m)
    return BoundReport(name="m4prime", value=floor, label="population floor", extras={"m": m, "rhs_at_floor": m4prime_rhs(p, m, floor)})


def _tuple_report(name: str, values: NamedTuple, value_field: str) -> BoundReport:
    extras = {k: float(v) for k, v in values._asdict().items() if v is not None}
    return BoundReport(name=name, value=extras[value_field], label=value_field, extras=extras)


def _opo(name: str, params: Dict[str, object], fn) -> BoundReport:
    mutation = _mutation_from(params)
    n, r = params.pop("n"), params.pop("r", None)
    if params:
        raise TypeError(f"unexpected parameters: {sorted(params)}")
    return BoundReport(name=name, value=fn(n, r, mutation), label="expected evaluations", extras={"n": n})


def _fprop_levels(params: Dict[str, object]) -> BoundReport:
    p = fprop_low_rate_level_params(**params)
    report = level_based_bound(p)
    extras = dict(report.extras)
    extras.update({"p0": p.p0, "gamma0": p.gamma0, "delta": p.delta, "lambda": p.lambda_})
    return report.model_copy(update={"name": "fprop-levels", "extras": extras})


BOUND_CALCULATORS = {
    "level-based": lambda ps: level_based_bound(*_level_args(ps)),
    "updrift": lambda ps: updrift_bound(*_level_args(ps)),
    "m4prime": _m4prime,
    "high-pressure": lambda ps: _tuple_report("high-pressure", high_pressure_params(**ps), "k_min"),
    "bitwise-floors": lambda ps: _tuple_report("bitwise-floors", bitwise_selection_floors(**ps), "k_min"),
    "copy-floors": lambda ps: _tuple_report("copy-floors", copy_selection_floors(**ps), "k_min"),
    "theorem3": lambda ps: _tuple_report("theorem3", theorem3_params(**ps), "k_min"),
    "negative-drift": lambda ps: negative_drift_report(**ps),
    "pk10": lambda ps: pk10_report(**ps),
    "approximation": lambda ps: _tuple_report("approximation", approximation_limits(**ps), "M"),
    "fprop-alpha": lambda ps: BoundReport(name="fprop-alpha", value=fprop_alpha_bound(**ps), label="reproductive rate bound"),
    "opo-exact": lambda ps: _opo("opo-exact", ps, opo_exact_expected_runtime),
    "opo-asymptote": lambda ps: _opo("opo-asymptote", ps, opo_asymptotic_runtime),
    "fprop-levels": _fprop_levels,
}


def evaluate_bound(name: str, params: Dict[str, object]) -> BoundReport:
    if name not in BOUND_CALCULATORS:
        raise ValueError(f"unknown calculator {name!r}; choose from {', '.join(BOUND_CALCULATORS)}")
    try:
        return BOUND_CALCULATORS[name](dict(params))
    except (TypeError, KeyError) as exc:
        raise ValueError(f"{name}: bad parameters ({exc})") from exc

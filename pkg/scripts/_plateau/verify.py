"""
Fast self-checks behind `plateau_cli verify`. Each check returns a
CheckResult; the command fails when any check fails.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Sequence

import numpy as np
from scipy import stats
from tqdm import tqdm

from .core import Bitstring, InstanceTransform, RandomSource, apply_transform, hamming, pack_rows, popcount_rows
from .defaults import DEFAULTS
from .engine import EAConfig, run_ea, run_generation
from .experiments import chi_square_p_value, chi_square_selection_test, drift_trial
from .fitness import FitnessSpec, evaluate, evaluate_population
from .mutation import Bitwise, FlipDistribution, Point, exact_offspring_distribution, flip_count_pmf, mutate_population
from .selection import Comma, FitnessProportionate, Tournament, beta, is_f_monotone, selection_distribution
from .theory import (
    LevelParams,
    approximation_limits,
    fprop_alpha_bound,
    high_pressure_params,
    lambda_floor_M4prime,
    level_based_bound,
    negative_drift_report,
    opo_exact_expected_runtime,
    updrift_bound,
)

FIXTURE = (7, 5, 5, 1)
REL_TOL = 1e-9


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def tournament_by_enumeration(fitnesses: Sequence[int], k: int) -> np.ndarray:
    """All λ^k ordered samples; the first sampled among the fittest wins."""
    lam = len(fitnesses)
    p = np.zeros(lam)
    for sample in itertools.product(range(lam), repeat=k):
        best = max(fitnesses[i] for i in sample)
        winner = next(i for i in sample if fitnesses[i] == best)
        p[winner] += 1.0
    return p / lam**k


def transform_image(t: InstanceTransform, dist: Dict[Bitstring, float]) -> Dict[Bitstring, float]:
    return {apply_transform(t, y): p for y, p in dist.items()}


def max_deviation(a: Dict[Bitstring, float], b: Dict[Bitstring, float]) -> float:
    keys = set(a) | set(b)
    return max(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)


def check_selection_examples() -> CheckResult:
    fp = selection_distribution(FitnessProportionate(), (3, 1)).probabilities
    tour = selection_distribution(Tournament(k=2), (5, 3)).probabilities
    comma = selection_distribution(Comma(mu=2), FIXTURE).probabilities
    ok = (
        np.allclose(fp, (0.75, 0.25), rtol=0, atol=1e-12)
        and np.allclose(tour, (0.75, 0.25), rtol=0, atol=1e-12)
        and np.allclose(comma, (0.5, 0.5, 0, 0), rtol=0, atol=1e-12)
        and math.isclose(beta(0.5, FitnessProportionate(), FIXTURE), 17 / 18, rel_tol=REL_TOL)
    )
    return CheckResult("selection examples", ok)


def check_tournament_closed_form() -> CheckResult:
    rng = RandomSource(11)
    worst = 0.0
    for lam in range(1, 6):
        for k in range(1, 4):
            f = tuple(int(v) for v in rng.integers(0, 4, size=lam))
            closed = selection_distribution(Tournament(k=k), f).probabilities
            worst = max(worst, float(np.abs(closed - tournament_by_enumeration(f, k)).max()))
    return CheckResult("tournament closed form vs enumeration", worst < 1e-12, f"max deviation {worst:.3g}")


def check_unbiasedness(n: int = 6, transforms: int = 20) -> CheckResult:
    rng = RandomSource(23)
    worst = 0.0
    for spec in (Bitwise(chi=1.0), Point(), FlipDistribution(pmf=(0.2, 0.3, 0.1, 0.4))):
        for _ in range(transforms):
            t = InstanceTransform.random(n, rng)
            x = Bitstring.random(n, rng)
            lhs = exact_offspring_distribution(spec, apply_transform(t, x))
            rhs = transform_image(t, exact_offspring_distribution(spec, x))
            worst = max(worst, max_deviation(lhs, rhs))
    return CheckResult("mutation unbiasedness", worst < 1e-12, f"max deviation {worst:.3g}")


def check_plateau_exhaustive(n_max: int = 10) -> CheckResult:
    for n in range(3, n_max + 1):
        for r in range(2, n):
            spec = FitnessSpec(family="plateau", n=n, r=r)
            for code in range(2**n):
                x = Bitstring.from_bits((code >> i) & 1 for i in range(n))
                ones = bin(code).count("1")
                want = n if ones == n else (n - r if ones > n - r else ones)
                if evaluate(spec, x) != want:
                    return CheckResult("plateau definition", False, f"n={n} r={r} x={x}")
    return CheckResult("plateau definition", True)


def check_bound_examples() -> CheckResult:
    lb = level_based_bound(LevelParams(s=(0.1,), gamma0=0.1, delta=1.0, lambda_=100)).value
    ud = updrift_bound(LevelParams(s=(0.1,), gamma0=0.1, delta=0.5, lambda_=100)).value
    hp = high_pressure_params(10, 0.01)
    nd = negative_drift_report(2.0, 1.0, 0.01, 100)
    psi = math.log(2.0) + 0.01
    lim = approximation_limits(1.0, 0.1, 100)
    rho = math.log(2.0)
    root = math.sqrt(rho / 2.0 - (rho / 2.0) ** 2 + 0.75)
    m4p = LevelParams(s=(0.01,) * 10, gamma0=0.25, delta=0.1, lambda_=1, C=1.0)
    closed = [
        math.isclose(lb, 8.0 * (math.log(120.0) + 1.0), rel_tol=REL_TOL),
        math.isclose(ud, 400.0 * math.log2(10.0) + 200.0, rel_tol=REL_TOL),
        hp.k_min == 898,
        math.isclose(hp.ratio_min, (1.0 + math.log(10.0)) / 0.01, rel_tol=REL_TOL),
        math.isclose(hp.expected_generations, 10.0 * math.e, rel_tol=REL_TOL),
        math.isclose(nd.extras["psi"], psi, rel_tol=REL_TOL),
        math.isclose(nd.value, 0.5 - math.sqrt(psi * (2.0 - psi) / 4.0), rel_tol=REL_TOL),
        math.isclose(lim.M, (1.0 - root) / 2.0, rel_tol=REL_TOL),
        math.isclose(lim.z, 45.0 * (1.0 - root), rel_tol=REL_TOL),
        math.isclose(lim.w_max, (1.0 - rho) ** 2 / 2.0, rel_tol=REL_TOL),
        math.isclose(fprop_alpha_bound(100, 2, 0.1), 200.0 / (0.9 * 98.0), rel_tol=REL_TOL),
        lambda_floor_M4prime(m4p) == 34226,
        level_based_bound(LevelParams(s=(), gamma0=0.1, delta=0.5, lambda_=10)).value == 0.0,
    ]
    # printed example values, four to five significant digits
    printed = [
        abs(hp.ratio_min - 330.26) <= 5e-3,
        abs(hp.expected_generations - 27.18) <= 5e-3,
        abs(nd.value - 0.02255) <= 1e-4,
        abs(lim.M - 0.0059198) <= 1e-6,
        abs(lim.z - 0.53283) <= 1e-4,
        abs(lim.w_max - 0.047084) <= 1e-4,
    ]
    failed = [i for i, ok in enumerate(closed + printed) if not ok]
    return CheckResult("bound calculator examples", not failed, f"failed items {failed}" if failed else "")


def check_bound_monotonicity() -> CheckResult:
    base = LevelParams(s=(0.01,) * 10, gamma0=0.25, delta=0.1, lambda_=200)
    doubled_s = base.model_copy(update={"s": tuple(2 * v for v in base.s)})
    doubled_delta = base.model_copy(update={"delta": 2 * base.delta})
    floor = lambda_floor_M4prime(base)
    ok = (
        level_based_bound(doubled_s).value <= level_based_bound(base).value
        and lambda_floor_M4prime(doubled_s) <= floor
        and 3 * lambda_floor_M4prime(doubled_delta) < floor
    )
    return CheckResult("bound monotonicity in s and delta", ok, f"floor {floor}")


def comma_boundary(fitnesses: Sequence[int], mu: int) -> List[int]:
    """Indices tied with the μ-th fittest; the truncation splits this group by index."""
    f = np.asarray(fitnesses)
    cut = np.sort(f)[::-1][mu - 1]
    return [int(i) for i in np.flatnonzero(f == cut)]


def check_f_monotone(populations: int = 200) -> CheckResult:
    rng = RandomSource(31)
    for _ in range(populations):
        lam = int(rng.integers(2, 13))
        f = tuple(int(v) for v in rng.integers(0, 8, size=lam))
        for spec in (FitnessProportionate(), Tournament(k=int(rng.integers(2, 6)))):
            if not is_f_monotone(selection_distribution(spec, f), f):
                return CheckResult("f-monotone selection", False, f"{spec.kind} on {f}")
        mu = int(rng.integers(1, lam + 1))
        d = selection_distribution(Comma(mu=mu), f)
        boundary = comma_boundary(f, mu)
        tied = d.probabilities[boundary]
        if not is_f_monotone(d, f, exempt=boundary, strict=False) or (np.diff(tied) > 0).any():
            return CheckResult("f-monotone selection", False, f"comma mu={mu} on {f}")
    return CheckResult("f-monotone selection", True)


def check_transform_isometry(pairs: int = 500) -> CheckResult:
    rng = RandomSource(37)
    for _ in range(pairs):
        n = int(rng.integers(1, 65))
        t = InstanceTransform.random(n, rng)
        x, y = Bitstring.random(n, rng), Bitstring.random(n, rng)
        if hamming(apply_transform(t, x), apply_transform(t, y)) != hamming(x, y):
            return CheckResult("transform isometry", False, f"n={n}")
    return CheckResult("transform isometry", True)


def mutation_histogram_p_value(spec, n: int, samples: int, rng: RandomSource) -> float:
    """Chi-square p-value of H(x, mutate(x)) counts against flip_count_pmf."""
    x = Bitstring.random(n, rng)
    parents = np.repeat(x.packed[None, :], samples, axis=0)
    children = mutate_population(spec, parents, n, rng)
    distances = popcount_rows(np.bitwise_xor(children, parents))
    return chi_square_p_value(np.bincount(distances, minlength=n + 1), flip_count_pmf(spec, n))


def check_mutation_histogram(samples: int = 100_000) -> CheckResult:
    rng = RandomSource(41)
    ps = [
        mutation_histogram_p_value(spec, 20, samples, rng)
        for spec in (Bitwise(chi=1.0), Bitwise(chi=3.0), Point(), FlipDistribution(pmf=(0.2, 0.3, 0.1, 0.4)))
    ]
    return CheckResult("mutation Hamming histogram", min(ps) > DEFAULTS.chi_square_alpha, f"min p {min(ps):.3g}")


def offspring_position_p_value(generations: int, rng: RandomSource) -> float:
    """Contingency test of offspring fitness at the first and last position of a generation."""
    spec = FitnessSpec(family="onemax", n=6)
    config = EAConfig(fitness=spec, selection=FitnessProportionate(), mutation=Bitwise(chi=1.0), lambda_=4, budget=4)
    bits = np.array([[1, 1, 1, 1, 0, 0], [1, 0, 0, 0, 0, 0], [1, 1, 1, 1, 1, 0], [0, 0, 0, 0, 0, 0]], dtype=np.uint8)
    population = pack_rows(bits)
    table = np.zeros((2, spec.n + 1), dtype=np.int64)
    for _ in range(generations):
        offspring, _ = run_generation(population, config, rng)
        fit = evaluate_population(spec, offspring)
        table[0, fit[0]] += 1
        table[1, fit[-1]] += 1
    table = table[:, table.sum(axis=0) >= 10]
    return float(stats.chi2_contingency(table).pvalue)


def check_exchangeability(generations: int = 4000) -> CheckResult:
    p = offspring_position_p_value(generations, RandomSource(43))
    return CheckResult("offspring exchangeability", p > DEFAULTS.chi_square_alpha, f"p {p:.3g}")


def check_dual_forms() -> CheckResult:
    # approximation_limits raises when the two forms disagree
    values = [approximation_limits(chi, 0.1, 100).M for chi in (0.8, 1.0, 2.0, 4.0)]
    return CheckResult("M(chi) dual forms and monotonicity", all(a < b for a, b in zip(values, values[1:])))


def check_opo_chain() -> CheckResult:
    value = opo_exact_expected_runtime(1, None, Bitwise(chi=0.5))
    return CheckResult("(1+1) chain two-state example", math.isclose(value, 2.0, rel_tol=REL_TOL), f"{value!r}")


def check_selection_chi_square(draws: int = 100_000) -> CheckResult:
    rng = RandomSource(5)
    ps = [chi_square_selection_test(spec, FIXTURE, draws, rng) for spec in (FitnessProportionate(), Tournament(k=2), Comma(mu=2))]
    return CheckResult("selection chi-square", min(ps) > DEFAULTS.chi_square_alpha, f"min p {min(ps):.3g}")


def check_drift_equality() -> CheckResult:
    trial = drift_trial(np.zeros(10, dtype=np.int64), 100, 1.0, 10_000, RandomSource(3))
    ok = math.isclose(trial.bound, 10.0) and abs(trial.estimate - trial.bound) <= DEFAULTS.drift_equality_margin * trial.stderr
    return CheckResult("drift equality case", ok, f"estimate {trial.estimate:.4f} bound {trial.bound:.4f}")


def check_determinism() -> CheckResult:
    config = EAConfig(
        fitness=FitnessSpec(family="plateau", n=12, r=2),
        selection=Tournament(k=3),
        mutation=Bitwise(chi=1.0),
        lambda_=20,
        budget=20_000,
        seed=99,
        record_trajectory=True,
    )
    return CheckResult("run determinism", run_ea(config) == run_ea(config))


CHECKS: List[Callable[[], CheckResult]] = [
    check_selection_examples,
    check_tournament_closed_form,
    check_f_monotone,
    check_unbiasedness,
    check_mutation_histogram,
    check_transform_isometry,
    check_plateau_exhaustive,
    check_bound_examples,
    check_bound_monotonicity,
    check_dual_forms,
    check_opo_chain,
    check_selection_chi_square,
    check_drift_equality,
    check_exchangeability,
    check_determinism,
]


def run_checks(progress: bool = False) -> List[CheckResult]:
    out = []
    for check in tqdm(CHECKS, desc="verify", disable=not progress):
        try:
            out.append(check())
        except Exception as exc:  # a crashing check is a failed check
            out.append(CheckResult(check.__name__, False, f"{type(exc).__name__}: {exc}"))
    return out


def report(results: Sequence[CheckResult]) -> dict:
    return {
        "passed": all(r.passed for r in results),
        "failures": sum(not r.passed for r in results),
        "checks": [asdict(r) for r in results],
    }

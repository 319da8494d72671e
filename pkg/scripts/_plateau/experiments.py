"""
Replication harness and statistical probes.

A plan expands into |n_grid| × replications seeded runs. Replication i of the
whole plan (ordered by n, then replication index) gets the seed
replication_seed(base_seed, i), so results do not depend on worker count or
completion order. Runs that exhaust their budget are censored: they count in
`censored` and stay out of the runtime statistics.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Annotated, Any, Dict, Iterable, List, Literal, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import stats
from tqdm import tqdm

from scripts.utils import default_workers, ensure_dir, write_csv, write_json

from .core import RandomSource, replication_seed
from .defaults import DEFAULTS
from .engine import EAConfig, OPOConfig, RunResult, run_ea, run_opo_config
from .fitness import FitnessSpec, evaluate_counts
from .mutation import Bitwise, MutationSpec, sample_offspring_zero_counts
from .selection import FitnessProportionate, SelectionSpec, sample_indices, selection_distribution
from .theory import opo_asymptotic_runtime, opo_exact_expected_runtime

RUN_COLUMNS = [
    "function", "n", "r", "selection_kind", "selection_param", "mutation_kind",
    "chi", "lambda", "seed", "generations", "evaluations", "success", "best_fitness",
]
SUMMARY_COLUMNS = ["n", "reps", "successes", "mean_evals", "median_evals", "stderr_evals", "censored"]

CHI_SQUARE_MIN_DRAWS = 1000


# --------- Plan policies ---------

class _Policy(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class LambdaFixed(_Policy):
    kind: Literal["fixed"] = "fixed"
    value: int = Field(ge=1)

    def resolve(self, n: int) -> int:
        return self.value


class LambdaLog(_Policy):
    """λ = ⌈c ln n⌉"""

    kind: Literal["log"] = "log"
    coefficient: float = Field(default=DEFAULTS.scaling_lambda_coefficient, gt=0.0)

    def resolve(self, n: int) -> int:
        return max(1, math.ceil(self.coefficient * math.log(n)))


class LambdaN2LogN(_Policy):
    """λ = ⌈c n² ln n⌉"""

    kind: Literal["n2logn"] = "n2logn"
    coefficient: float = Field(default=1.0, gt=0.0)

    def resolve(self, n: int) -> int:
        return max(1, math.ceil(self.coefficient * n * n * math.log(n)))


LambdaPolicy = Annotated[Union[LambdaFixed, LambdaLog, LambdaN2LogN], Field(discriminator="kind")]


class BudgetFixed(_Policy):
    kind: Literal["fixed"] = "fixed"
    evaluations: int = Field(ge=1)

    def resolve(self, n: int, lam: int) -> int:
        return self.evaluations


class BudgetPolynomial(_Policy):
    """⌈c n^e⌉ evaluations"""

    kind: Literal["polynomial"] = "polynomial"
    coefficient: float = Field(gt=0.0)
    exponent: float

    def resolve(self, n: int, lam: int) -> int:
        return max(lam, math.ceil(self.coefficient * float(n) ** self.exponent))


class BudgetGenerations(_Policy):
    """λ for P₀ plus `count` full generations."""

    kind: Literal["generations"] = "generations"
    count: int = Field(ge=0)

    def resolve(self, n: int, lam: int) -> int:
        return lam * (self.count + 1)


BudgetPolicy = Annotated[Union[BudgetFixed, BudgetPolynomial, BudgetGenerations], Field(discriminator="kind")]


class RateConstant(_Policy):
    kind: Literal["constant"] = "constant"

    def apply(self, mutation, n: int):
        return mutation


class RateLow(_Policy):
    """Bitwise rate χ/n with χ = (1-c)/n."""

    kind: Literal["low"] = "low"
    c: float

    @field_validator("c")
    @classmethod
    def _check_c(cls, v: float) -> float:
        if not 0.0 < v < 1.0:
            raise ValueError("c must lie in (0, 1)")
        return v

    def apply(self, mutation, n: int):
        if mutation.kind != "bitwise":
            raise ValueError("low mutation-rate policy needs bitwise mutation")
        return Bitwise(chi=(1.0 - self.c) / n)


RatePolicy = Annotated[Union[RateConstant, RateLow], Field(discriminator="kind")]


class ExperimentPlan(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = "experiment"
    algorithm: Literal["ea", "opo"] = "ea"
    family: Literal["onemax", "plateau"] = "plateau"
    r: Optional[int] = None
    selection: Optional[SelectionSpec] = None
    mutation: MutationSpec
    lambda_policy: LambdaPolicy = Field(default_factory=LambdaLog)
    budget_policy: BudgetPolicy
    mutation_rate_policy: RatePolicy = Field(default_factory=RateConstant)
    n_grid: Tuple[int, ...]
    replications: int = Field(ge=1)
    base_seed: int = Field(default=0, ge=0, lt=2**64)
    output: Optional[str] = None
    workers: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check(self) -> "ExperimentPlan":
        if not self.n_grid:
            raise ValueError("n_grid must not be empty")
        if self.family == "onemax" and self.r is not None:
            raise ValueError("onemax takes no r")
        if self.algorithm == "ea" and self.selection is None:
            raise ValueError("ea experiments need a selection mechanism")
        for n in self.n_grid:
            self.config_for(n, 0)
        return self

    def fitness_for(self, n: int) -> FitnessSpec:
        return FitnessSpec(family=self.family, n=n, r=self.r)

    def lambda_for(self, n: int) -> int:
        return 1 if self.algorithm == "opo" else self.lambda_policy.resolve(n)

    def config_for(self, n: int, seed: int) -> Union[EAConfig, OPOConfig]:
        lam = self.lambda_for(n)
        mutation = self.mutation_rate_policy.apply(self.mutation, n)
        budget = self.budget_policy.resolve(n, lam)
        if self.algorithm == "opo":
            return OPOConfig(fitness=self.fitness_for(n), mutation=mutation, budget=budget, seed=seed)
        return EAConfig(
            fitness=self.fitness_for(n),
            selection=self.selection,
            mutation=mutation,
            lambda_=lam,
            budget=budget,
            seed=seed,
        )

    def tasks(self) -> List[Union[EAConfig, OPOConfig]]:
        """Every run of the plan, ordered by (n, replication index)."""
        sizes = [n for n in self.n_grid for _ in range(self.replications)]
        return [self.config_for(n, replication_seed(self.base_seed, i)) for i, n in enumerate(sizes)]


class SummaryRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    n: int
    reps: int
    successes: int
    mean_evals: Optional[float]
    median_evals: Optional[float]
    stderr_evals: Optional[float]
    censored: int
    params: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check(self) -> "SummaryRow":
        if self.successes > self.reps:
            raise ValueError("success count exceeds replications")
        return self

    def csv_row(self) -> dict:
        return {c: getattr(self, c) for c in SUMMARY_COLUMNS}


# --------- Running ---------

def run_row(config: Union[EAConfig, OPOConfig]) -> dict:
    """One run as a per-run CSV row."""
    if isinstance(config, OPOConfig):
        result = run_opo_config(config)
        selection_kind, selection_param, lam = "none", "", 1
    else:
        result = run_ea(config)
        selection_kind, selection_param, lam = config.selection.kind, config.selection.param, config.lambda_
    return result_row(config.fitness, config.mutation, selection_kind, selection_param, lam, result)


def result_row(fitness: FitnessSpec, mutation, selection_kind: str, selection_param: str, lam: int, result: RunResult) -> dict:
    return {
        "function": fitness.family,
        "n": fitness.n,
        "r": fitness.r if fitness.r is not None else "",
        "selection_kind": selection_kind,
        "selection_param": selection_param,
        "mutation_kind": mutation.kind,
        "chi": mutation.rate_param,
        "lambda": lam,
        "seed": result.seed,
        "generations": result.generations,
        "evaluations": result.evaluations,
        "success": result.success,
        "best_fitness": result.best_fitness,
    }


def execute(tasks: Sequence, workers: int = 1, progress: bool = True, desc: str = "runs") -> List[dict]:
    """Rows in task order whatever the worker count."""
    if workers <= 1:
        return [run_row(t) for t in tqdm(tasks, desc=desc, disable=not progress)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(tqdm(pool.map(run_row, tasks, chunksize=1), total=len(tasks), desc=desc, disable=not progress))


def summarise_runs(runs: pd.DataFrame, params: Optional[Dict[str, Any]] = None) -> List[SummaryRow]:
    rows: List[SummaryRow] = []
    for n, group in runs.groupby("n", sort=True):
        ok = group.loc[group["success"].astype(bool), "evaluations"].astype(float)
        count = int(ok.size)
        rows.append(
            SummaryRow(
                n=int(n),
                reps=int(len(group)),
                successes=count,
                mean_evals=float(ok.mean()) if count else None,
                median_evals=float(ok.median()) if count else None,
                stderr_evals=float(ok.std(ddof=1) / math.sqrt(count)) if count > 1 else None,
                censored=int(len(group) - count),
                params=dict(params or {}),
            )
        )
    return rows


def summary_frame(rows: Iterable[SummaryRow]) -> pd.DataFrame:
    return pd.DataFrame([r.csv_row() for r in rows], columns=SUMMARY_COLUMNS)


def run_experiment(
    plan: ExperimentPlan,
    output_dir: Optional[Path] = None,
    workers: Optional[int] = None,
    progress: bool = True,
) -> List[SummaryRow]:
    """Runs the plan; writes runs.csv, summary.csv and plan.json when an output directory is known."""
    workers = workers or plan.workers or default_workers()
    rows = execute(plan.tasks(), workers=workers, progress=progress, desc=plan.name)
    runs = pd.DataFrame(rows, columns=RUN_COLUMNS)
    params = {"algorithm": plan.algorithm, "family": plan.family, "r": plan.r, "base_seed": plan.base_seed}
    summary = summarise_runs(runs, params)

    out = output_dir if output_dir is not None else (Path(plan.output) if plan.output else None)
    if out is not None:
        ensure_dir(out)
        write_csv(runs, out / "runs.csv")
        write_csv(summary_frame(summary), out / "summary.csv")
        write_json(out / "plan.json", plan.model_dump(mode="json"))
    return summary


# --------- Scaling ---------

class ScalingFit(NamedTuple):
    slope: float
    stderr: float
    intercept: float


def fit_scaling_exponent(points: Sequence[Tuple[float, float]]) -> ScalingFit:
    """OLS of ln(runtime) on ln(n)."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be (n, runtime) pairs")
    if np.unique(pts[:, 0]).size < 3:
        raise ValueError("scaling fit needs at least 3 distinct n")
    if (pts <= 0).any():
        raise ValueError("n and runtime must be positive")
    fit = stats.linregress(np.log(pts[:, 0]), np.log(pts[:, 1]))
    return ScalingFit(slope=float(fit.slope), stderr=float(fit.stderr), intercept=float(fit.intercept))


def scaling_points(rows: Iterable[SummaryRow], statistic: str = "median") -> List[Tuple[float, float]]:
    """(n, median runtime) by default; sizes without any success are skipped."""
    key = {"median": "median_evals", "mean": "mean_evals"}[statistic]
    return [(float(r.n), float(getattr(r, key))) for r in rows if getattr(r, key) is not None]


# --------- Chi-square ---------

def merge_small_cells(observed: Sequence[float], expected: Sequence[float], min_expected: float = DEFAULTS.min_expected_count) -> Tuple[np.ndarray, np.ndarray]:
    """Merge adjacent cells until every expected count reaches `min_expected`."""
    obs_out: List[float] = []
    exp_out: List[float] = []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += float(o)
        acc_e += float(e)
        if acc_e >= min_expected:
            obs_out.append(acc_o)
            exp_out.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if exp_out:
            obs_out[-1] += acc_o
            exp_out[-1] += acc_e
        else:
            obs_out.append(acc_o)
            exp_out.append(acc_e)
    return np.asarray(obs_out), np.asarray(exp_out)


def chi_square_p_value(counts: Sequence[int], probabilities: Sequence[float]) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    probs = np.asarray(probabilities, dtype=np.float64)
    if counts.shape != probs.shape:
        raise ValueError("counts and probabilities differ in length")
    obs, exp = merge_small_cells(counts, probs * counts.sum())
    if obs.size < 2:
        return 1.0
    return float(stats.chisquare(obs, exp).pvalue)


def chi_square_selection_test(spec, fitnesses: Sequence[int], draws: int, rng: RandomSource) -> float:
    """p-value of `draws` sampled indices against the exact selection distribution."""
    if draws < CHI_SQUARE_MIN_DRAWS:
        raise ValueError(f"need at least {CHI_SQUARE_MIN_DRAWS} draws, got {draws}")
    d = selection_distribution(spec, fitnesses, rng)
    counts = np.bincount(sample_indices(d, draws, rng), minlength=d.size)
    return chi_square_p_value(counts, d.probabilities)


# --------- Drift probe ---------

@dataclass(frozen=True)
class DriftTrial:
    zeros_total: int
    estimate: float
    stderr: float
    bound: float
    exact: float
    flagged: bool


@dataclass(frozen=True)
class DriftReport:
    n: int
    lam: int
    chi: float
    samples: int
    function: str
    r: Optional[int]
    trials: List[DriftTrial] = field(default_factory=list)
    equality: Optional[DriftTrial] = None

    @property
    def flagged(self) -> int:
        return sum(t.flagged for t in self.trials)

    @property
    def equality_within(self) -> bool:
        """All-ones case: estimate within drift_equality_margin SEs of the bound."""
        e = self.equality
        return e is not None and abs(e.estimate - e.bound) <= DEFAULTS.drift_equality_margin * e.stderr

    def as_dict(self) -> dict:
        out = asdict(self)
        out["flagged"] = self.flagged
        out["equality_within"] = self.equality_within
        return out


def drift_fitness(n: int, fitness: Optional[FitnessSpec] = None) -> FitnessSpec:
    """Plateau_r with r = drift_plateau_r unless a fitness is given (OneMax when n is too small)."""
    if fitness is not None:
        if fitness.n != n:
            raise ValueError(f"fitness has n={fitness.n}, probe has n={n}")
        return fitness
    r = DEFAULTS.drift_plateau_r
    if n <= r:
        return FitnessSpec(family="onemax", n=n)
    return FitnessSpec(family="plateau", n=n, r=r)


def drift_trial(zeros: np.ndarray, n: int, chi: float, samples: int, rng: RandomSource, fitness: Optional[FitnessSpec] = None) -> DriftTrial:
    """
    Monte Carlo estimate of E[Z_{t+1} | P] (total zeros of the next population)
    against λχ + Z(P)(1 - 2χ/n) under fitness-proportionate selection.
    """
    zeros = np.asarray(zeros, dtype=np.int64)
    lam = zeros.size
    spec = drift_fitness(n, fitness)
    fitnesses = np.asarray(evaluate_counts(spec, n - zeros), dtype=np.int64)
    d = selection_distribution(FitnessProportionate(), fitnesses)
    parents = sample_indices(d, samples, rng)
    child = sample_offspring_zero_counts(Bitwise(chi=chi), zeros[parents], n, rng).astype(np.float64)
    z_total = int(zeros.sum())
    estimate = lam * float(child.mean())
    stderr = lam * float(child.std(ddof=1)) / math.sqrt(samples)
    bound = lam * chi + z_total * (1.0 - 2.0 * chi / n)
    exact = lam * (chi + (1.0 - 2.0 * chi / n) * math.fsum(d.probabilities * zeros))
    return DriftTrial(
        zeros_total=z_total,
        estimate=estimate,
        stderr=stderr,
        bound=bound,
        exact=exact,
        flagged=bool(estimate > bound + DEFAULTS.drift_se_margin * stderr),
    )


def drift_probe(
    n: int,
    lam: int,
    chi: float,
    trials: int,
    rng: RandomSource,
    samples: int = 10_000,
    progress: bool = False,
    fitness: Optional[FitnessSpec] = None,
) -> DriftReport:
    """
    `trials` random populations: each draws a ones-density u ~ U(0,1) and
    zero counts z_k ~ Bin(n, 1-u), so both sparse and dense populations occur.
    The all-ones population is probed separately as the equality case.
    Selection acts on Plateau_r fitness unless `fitness` says otherwise.
    """
    if samples < 2:
        raise ValueError("need at least 2 offspring samples per population")
    spec = drift_fitness(n, fitness)
    rows = []
    for _ in tqdm(range(trials), desc="drift", disable=not progress):
        u = float(rng.random())
        zeros = rng.generator.binomial(n, 1.0 - u, size=lam)
        rows.append(drift_trial(zeros, n, chi, samples, rng, spec))
    equality = drift_trial(np.zeros(lam, dtype=np.int64), n, chi, samples, rng, spec)
    return DriftReport(
        n=n,
        lam=lam,
        chi=chi,
        samples=samples,
        function=spec.family,
        r=spec.r,
        trials=rows,
        equality=equality,
    )


# --------- Stagnation probe ---------

class StagnationReport(NamedTuple):
    min_sum_ones: int
    threshold: float
    fell_below: bool
    optimum_found: bool
    generations: int
    evaluations: int
    records: int


def stagnation_probe(config: EAConfig, eps: float) -> StagnationReport:
    """Runs to budget and watches Σ_j |P_t(j)| against λ(n/2)(1-ε)."""
    if config.selection.kind != "fitness_proportionate":
        raise ValueError("stagnation probe needs fitness-proportionate selection")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    result = run_ea(config.model_copy(update={"record_trajectory": True, "trajectory_stride": 1}))
    trajectory = result.trajectory or []
    min_sum = min(rec.sum_ones for rec in trajectory)
    threshold = config.lambda_ * (config.n / 2.0) * (1.0 - eps)
    return StagnationReport(
        min_sum_ones=min_sum,
        threshold=threshold,
        fell_below=bool(min_sum < threshold),
        optimum_found=result.success,
        generations=result.generations,
        evaluations=result.evaluations,
        records=len(trajectory),
    )


# --------- (1+1) validation ---------

class OPOValidation(NamedTuple):
    n: int
    r: Optional[int]
    seeds: int
    successes: int
    mean: float
    stderr: float
    exact: float
    asymptote: Optional[float]
    z_score: float


def opo_validation(
    n: int,
    r: Optional[int],
    mutation,
    seeds: int,
    base_seed: int = 0,
    budget: int = 10**7,
    workers: int = 1,
    progress: bool = True,
) -> OPOValidation:
    """Simulated (1+1) runtimes against the exact chain value."""
    family = "onemax" if r is None else "plateau"
    fitness = FitnessSpec(family=family, n=n, r=r)
    tasks = [
        OPOConfig(fitness=fitness, mutation=mutation, budget=budget, seed=replication_seed(base_seed, i))
        for i in range(seeds)
    ]
    rows = execute(tasks, workers=workers, progress=progress, desc=f"opo n={n}")
    evals = np.asarray([row["evaluations"] for row in rows if row["success"]], dtype=np.float64)
    mean = float(evals.mean()) if evals.size else float("nan")
    stderr = float(evals.std(ddof=1) / math.sqrt(evals.size)) if evals.size > 1 else float("nan")
    exact = opo_exact_expected_runtime(n, r, mutation)
    return OPOValidation(
        n=n,
        r=r,
        seeds=seeds,
        successes=int(evals.size),
        mean=mean,
        stderr=stderr,
        exact=exact,
        asymptote=None if r is None else opo_asymptotic_runtime(n, r, mutation),
        z_score=(mean - exact) / stderr if stderr and not math.isnan(stderr) else float("nan"),
    )

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError

import numpy as np
from scipy import stats

from scripts._plateau.core import Bitstring, RandomSource, pack_rows
from scripts._plateau.engine import EAConfig, OPOConfig, final_record, run_ea, run_generation, run_opo, run_opo_config
from scripts._plateau.experiments import chi_square_p_value
from scripts._plateau.fitness import FitnessSpec, evaluate_population, random_population
from scripts._plateau.mutation import Bitwise, FlipDistribution, Point, exact_offspring_distribution
from scripts._plateau.selection import Comma, FitnessProportionate, Tournament


def ea_config(**overrides) -> EAConfig:
    base = dict(
        fitness=FitnessSpec(family="onemax", n=10),
        selection=Tournament(k=4),
        mutation=Bitwise(chi=1.0),
        lambda_=20,
        budget=100_000,
        seed=3,
    )
    base.update(overrides)
    return EAConfig(**base)


def test_config_accepts_lambda_alias():
    config = EAConfig.model_validate(
        {
            "fitness": {"family": "plateau", "n": 12, "r": 2},
            "selection": {"kind": "tournament", "k": 3},
            "mutation": {"kind": "bitwise", "chi": 1.0},
            "lambda": 30,
            "budget": 1000,
        }
    )
    assert config.lambda_ == 30
    assert config.gamma0 == 0.25
    assert config.stride == 1


@pytest.mark.parametrize(
    "overrides, message",
    [
        (dict(lambda_=0), "lambda ≥ 1"),
        (dict(budget=5), "budget ≥ lambda"),
        (dict(selection=Comma(mu=21)), "mu ≤ lambda"),
        (dict(seed=-1), "64-bit"),
        (dict(mutation=Bitwise(chi=10.0)), "chi < n"),
        (dict(gamma0=0.0), "gamma0"),
        (dict(trajectory_stride=0), "trajectory_stride"),
    ],
)
def test_config_validation(overrides, message):
    with pytest.raises(ValidationError, match=message):
        ea_config(**overrides)


def test_large_populations_use_a_stride():
    assert ea_config(lambda_=4096, budget=10**6).stride == 10
    assert ea_config(lambda_=4096, budget=10**6, trajectory_stride=2).stride == 2


def test_run_is_deterministic():
    config = ea_config(fitness=FitnessSpec(family="plateau", n=12, r=2), record_trajectory=True)
    assert run_ea(config) == run_ea(config)
    assert run_ea(config) != run_ea(config.model_copy(update={"seed": 4}))


def test_onemax_is_solved():
    result = run_ea(ea_config())
    assert result.success
    assert result.best_fitness == 10
    assert result.seed == 3


@settings(max_examples=15)
@given(st.integers(0, 2**32), st.integers(2, 30), st.integers(1, 10))
def test_evaluation_accounting(seed, lam, gens):
    config = ea_config(
        fitness=FitnessSpec(family="plateau", n=9, r=2),
        selection=Tournament(k=3),
        lambda_=lam,
        budget=lam * gens,
        seed=seed,
    )
    result = run_ea(config)
    assert result.evaluations <= config.budget + lam - 1
    assert (result.evaluations - 1) // lam == result.generations
    if not result.success:
        assert result.evaluations == lam * (result.generations + 1)
        assert result.evaluations >= config.budget


def test_budget_of_one_generation_evaluates_only_initial_population():
    config = ea_config(fitness=FitnessSpec(family="plateau", n=40, r=2), budget=20)
    result = run_ea(config)
    assert not result.success
    assert result.evaluations == 20
    assert result.generations == 0


def test_trajectory_records():
    config = ea_config(
        fitness=FitnessSpec(family="plateau", n=12, r=2),
        selection=FitnessProportionate(),
        budget=20 * 40,
        record_trajectory=True,
    )
    result = run_ea(config)
    rows = result.trajectory_rows()
    assert [r["generation"] for r in rows] == list(range(result.generations + 1))
    for row in rows:
        assert 0 <= row["best_fitness"] <= 12
        assert 0 <= row["plateau_count"] <= 20
        assert 0 <= row["sum_ones"] <= 20 * 12
        assert 0 < row["beta_at_gamma0"] <= 1.0 + 1e-12
        assert row["max_reproductive_rate"] >= 1.0 - 1e-12


def test_trajectory_stride():
    config = ea_config(
        fitness=FitnessSpec(family="plateau", n=30, r=2),
        budget=20 * 10,
        record_trajectory=True,
        trajectory_stride=3,
    )
    result = run_ea(config)
    assert all(rec.generation % 3 == 0 for rec in result.trajectory)
    assert result.as_dict().keys() == {"success", "evaluations", "generations", "best_fitness", "seed"}


def test_run_generation_shapes(rng):
    config = ea_config()
    pop = random_population(config.fitness, 20, rng)
    offspring, record = run_generation(pop, config, rng)
    assert offspring.shape == pop.shape
    assert record.generation == 0
    with pytest.raises(ValueError):
        run_generation(pop[:5], config, rng)


def test_comma_with_random_ties_runs():
    config = ea_config(selection=Comma(mu=5, tie_break="random"))
    assert run_ea(config) == run_ea(config)


def test_opo_solves_onemax():
    result = run_opo(FitnessSpec(family="onemax", n=10), Bitwise(chi=1.0), 100_000, 5)
    assert result.success
    assert result.evaluations == result.generations + 1


def test_opo_starting_at_optimum():
    spec = FitnessSpec(family="plateau", n=8, r=2)
    result = run_opo(spec, Point(), 100, 1, Bitstring.ones(8))
    assert result.success
    assert result.evaluations == 1
    assert result.generations == 0


def test_opo_budget_cut():
    spec = FitnessSpec(family="plateau", n=30, r=2)
    result = run_opo(spec, Bitwise(chi=1.0), 5, 11, Bitstring.zeros(30))
    assert not result.success
    assert result.evaluations == 5


def test_opo_config():
    config = OPOConfig(
        fitness=FitnessSpec(family="plateau", n=6, r=2),
        mutation=Point(),
        budget=10_000,
        seed=2,
        initial_point="110000",
    )
    assert run_opo_config(config) == run_opo_config(config)
    with pytest.raises(ValidationError):
        OPOConfig(fitness=config.fitness, mutation=Point(), budget=10, initial_point="1")
    with pytest.raises(ValidationError):
        OPOConfig(fitness=config.fitness, mutation=Point(), budget=0)


def test_opo_never_accepts_worse():
    spec = FitnessSpec(family="onemax", n=20)
    start = Bitstring.from_bits([1] * 15 + [0] * 5)
    result = run_opo(spec, Bitwise(chi=1.0), 50, 9, start)
    assert result.best_fitness >= 15


def test_identity_mutation_keeps_uniform_population(rng):
    config = ea_config(fitness=FitnessSpec(family="onemax", n=8), mutation=FlipDistribution(pmf=(1.0,)), lambda_=10)
    pop = pack_rows(np.tile(np.array([1, 0, 1, 1, 0, 0, 1, 0], dtype=np.uint8), (10, 1)))
    offspring, _ = run_generation(pop, config, rng)
    assert np.array_equal(offspring, pop)


def test_record_sum_ones_for_all_ones_population(rng):
    config = ea_config(fitness=FitnessSpec(family="onemax", n=8), selection=FitnessProportionate(), lambda_=10)
    pop = pack_rows(np.ones((10, 8), dtype=np.uint8))
    offspring, record = run_generation(pop, config, rng)
    assert offspring.shape[0] == 10
    assert record.sum_ones == 80
    assert record.plateau_count == 10
    assert record.max_reproductive_rate == pytest.approx(1.0)


def test_offspring_positions_are_exchangeable():
    spec = FitnessSpec(family="onemax", n=6)
    config = ea_config(fitness=spec, selection=FitnessProportionate(), lambda_=4)
    bits = np.array(
        [[1, 1, 1, 1, 0, 0], [1, 0, 0, 0, 0, 0], [1, 1, 1, 1, 1, 0], [0, 0, 0, 0, 0, 0]],
        dtype=np.uint8,
    )
    pop = pack_rows(bits)
    rng = RandomSource(77)
    first, last = [], []
    for _ in range(4000):
        offspring, _ = run_generation(pop, config, rng)
        fit = evaluate_population(spec, offspring)
        first.append(int(fit[0]))
        last.append(int(fit[-1]))
    table = np.array([np.bincount(first, minlength=7), np.bincount(last, minlength=7)])
    table = table[:, table.sum(axis=0) >= 10]
    _, p_value, _, _ = stats.chi2_contingency(table)
    assert p_value > 1e-3


def test_tournament_solves_small_onemax_almost_always():
    config = ea_config(fitness=FitnessSpec(family="onemax", n=4), selection=Tournament(k=2), lambda_=8, budget=10_000)
    results = [run_ea(config.model_copy(update={"seed": seed})) for seed in range(100)]
    assert sum(r.success for r in results) >= 99


def test_single_offspring_follows_exact_mutation_law():
    n = 4
    config = ea_config(fitness=FitnessSpec(family="onemax", n=n), selection=FitnessProportionate(), lambda_=1)
    parent = Bitstring.from_string("1010")
    law = exact_offspring_distribution(Bitwise(chi=1.0), parent)
    cells = sorted(law, key=str)
    index = {x: i for i, x in enumerate(cells)}
    counts = np.zeros(len(cells), dtype=np.int64)
    rng = RandomSource(59)
    for _ in range(5000):
        offspring, _ = run_generation(parent.packed[None, :], config, rng)
        counts[index[Bitstring.from_words(offspring[0], n)]] += 1
    assert chi_square_p_value(counts, [law[x] for x in cells]) > 1e-3


def test_final_record_covers_only_evaluated_prefix():
    # with λ=50 at n=2 the optimum is in the initial population
    config = ea_config(fitness=FitnessSpec(family="onemax", n=2), lambda_=50, record_trajectory=True, seed=8)
    result = run_ea(config)
    assert result.success and result.generations == 0
    last = result.trajectory[-1]
    assert last.plateau_count == 1
    assert last.best_fitness == 2
    assert last.sum_ones <= 2 * result.evaluations


def test_final_record_caps_comma_mu(rng):
    config = ea_config(fitness=FitnessSpec(family="onemax", n=4), selection=Comma(mu=4), lambda_=8)
    pop = pack_rows(np.array([[0, 0, 0, 1], [1, 1, 1, 1]] + [[0, 0, 0, 0]] * 6, dtype=np.uint8))
    fit = evaluate_population(config.fitness, pop)
    record = final_record(3, config, pop, fit, 1, rng)
    assert record.generation == 3
    assert record.sum_ones == 5
    assert record.plateau_count == 1

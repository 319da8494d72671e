import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st
from pydantic import ValidationError

from scripts._plateau.mutation import Bitwise, FlipDistribution, Point
from scripts._plateau.selection import Comma, FitnessProportionate, Tournament
from scripts._plateau.theory import (
    BoundReport,
    Condition,
    LevelParams,
    LevelPartition,
    approximation_limits,
    bitwise_selection_floors,
    check_m3,
    copy_selection_floors,
    evaluate_bound,
    fprop_alpha_bound,
    fprop_low_rate_level_params,
    high_pressure_params,
    lambda_floor_M4prime,
    level_based_bound,
    level_upgrade_probabilities,
    m4prime_rhs,
    negative_drift_report,
    opo_asymptotic_runtime,
    opo_count_chain,
    opo_exact_expected_runtime,
    pk10_holds,
    pk10_report,
    plateau_levels,
    theorem3_params,
    updrift_bound,
)

REL = 1e-9


def test_plateau_partition():
    levels = plateau_levels(5, 2)
    assert levels.m == 4
    assert levels.counts(4) == (3, 5)
    assert levels.counts(2) == (1, 1)
    assert [levels.level_of(k) for k in range(6)] == [1, 2, 3, 4, 4, 4]
    assert levels.thresholds().tolist() == [1, 2, 3, 6, 6, 6]


def test_onemax_partition():
    levels = plateau_levels(3, kind="onemax")
    assert levels.m == 4
    assert levels.counts(4) == (3, 3)
    with pytest.raises(ValueError):
        levels.counts(5)
    with pytest.raises(ValueError):
        LevelPartition(n=5, kind="plateau", r=1)


def test_level_upgrade_probabilities_point_onemax():
    s = level_upgrade_probabilities(plateau_levels(4, kind="onemax"), Point())
    assert np.allclose(s, [1.0, 0.75, 0.5, 0.25])


def test_level_upgrade_probabilities_plateau():
    # from n-r-1 ones a point mutation reaches the plateau level directly
    s = level_upgrade_probabilities(plateau_levels(6, 2), Point())
    assert len(s) == 4
    assert math.isclose(s[-1], 3 / 6)


def test_level_based_example():
    report = level_based_bound(LevelParams(s=(0.1,), gamma0=0.1, delta=1.0, lambda_=100))
    assert math.isclose(report.value, 8.0 * (math.log(120.0) + 1.0), rel_tol=REL)
    assert report.value == pytest.approx(46.30, abs=5e-3)
    assert report.label == "expected generations"
    # (M4) wants λ ≥ 40 ln 25600 ≈ 406
    assert not report.conditions[0].holds
    assert report.conditions[0].margin < 0
    assert not report.all_hold


def test_updrift_example():
    report = updrift_bound(LevelParams(s=(0.1,), gamma0=0.1, delta=0.5, lambda_=100))
    assert math.isclose(report.value, 400.0 * math.log2(10.0) + 200.0, rel_tol=REL)
    assert report.value == pytest.approx(1528.8, abs=0.05)
    assert report.label == "order expression"
    with pytest.raises(ValueError):
        updrift_bound(LevelParams(s=(0.1,), gamma0=0.01, delta=0.5, lambda_=100))


def test_m4prime_fixed_point():
    p = LevelParams(s=(0.01,) * 10, gamma0=0.25, delta=0.1, lambda_=1, C=1.0)
    floor = lambda_floor_M4prime(p)
    assert floor == 34226
    assert floor >= m4prime_rhs(p, 11, floor)


def test_level_params_validation():
    with pytest.raises(ValidationError):
        LevelParams(s=(0.0,), gamma0=0.1, delta=0.5, lambda_=10)
    with pytest.raises(ValidationError):
        LevelParams(s=(0.1,), gamma0=1.0, delta=0.5, lambda_=10)
    with pytest.raises(ValidationError):
        LevelParams(s=(0.1,), gamma0=0.1, delta=0.0, lambda_=10)
    p = LevelParams(s=(0.1, 0.2), gamma0=0.1, delta=0.5, lambda_=10)
    assert p.s_star == 0.1
    with pytest.raises(ValueError):
        p.levels(5)


def test_selection_floors():
    hp = high_pressure_params(10, 0.01)
    assert hp.k_min == 898
    assert hp.ratio_min == pytest.approx(330.26, abs=5e-3)
    assert hp.expected_generations == pytest.approx(27.18, abs=5e-3)
    assert theorem3_params(10, 0.5).k_min == 180
    assert bitwise_selection_floors(1.0, 0.1).k_min == 3
    assert math.isclose(bitwise_selection_floors(1.0, 0.1).ratio_min, 1.1 * math.e, rel_tol=REL)
    assert copy_selection_floors(0.5, 0.1).k_min == 3
    with pytest.raises(ValueError):
        theorem3_params(10, 0.0)


def test_negative_drift_example():
    report = negative_drift_report(2.0, 1.0, 0.01, n=100)
    psi = math.log(2.0) + 0.01
    assert math.isclose(report.extras["psi"], psi, rel_tol=REL)
    assert report.extras["psi"] == pytest.approx(0.70315, abs=1e-5)
    assert math.isclose(report.value, 0.5 - math.sqrt(psi * (2 - psi) / 4), rel_tol=REL)
    assert report.value == pytest.approx(0.02255, abs=1e-4)
    assert report.all_hold
    assert report.extras["b_max"] == pytest.approx(100 * report.value)


def test_negative_drift_fails_when_psi_reaches_one():
    report = negative_drift_report(3.0, 1.0, 0.1)
    assert not report.all_hold
    assert report.value == 0.0
    with pytest.raises(ValueError):
        negative_drift_report(1.0, 1.0, 0.1)


def test_pk10():
    assert pk10_holds(2.0, 1.0, 0.01)
    assert not pk10_holds(3.0, 1.0, 0.01)
    report = pk10_report(3.0, 1.0, 0.01)
    assert not report.all_hold and report.conditions[0].margin < 0


def test_approximation_example():
    lim = approximation_limits(1.0, 0.1, 100)
    rho = math.log(2.0)
    root = math.sqrt(rho / 2 - (rho / 2) ** 2 + 0.75)
    assert math.isclose(lim.rho, rho, rel_tol=REL)
    assert math.isclose(lim.M, (1 - root) / 2, rel_tol=REL)
    assert math.isclose(lim.w_max, (1 - rho) ** 2 / 2, rel_tol=REL)
    assert math.isclose(lim.z, 45.0 * (1 - root), rel_tol=REL)
    assert lim.M == pytest.approx(0.0059198, abs=1e-6)
    assert lim.z == pytest.approx(0.53283, abs=1e-4)
    assert lim.w_max == pytest.approx(0.047084, abs=1e-4)
    with pytest.raises(ValueError):
        approximation_limits(0.5, 0.1, 100)


@given(st.floats(0.7, 50.0))
def test_approximation_dual_forms_agree(chi):
    # raises RuntimeError when the two M(χ) forms drift apart
    lim = approximation_limits(chi, 0.5, 10)
    assert 0.0 <= lim.M < 0.5


def test_fprop_alpha_bound():
    assert math.isclose(fprop_alpha_bound(100, 2, 0.1), 200.0 / (0.9 * 98.0), rel_tol=REL)
    assert fprop_alpha_bound(100, 2, 0.1) == pytest.approx(2.2676, abs=1e-4)
    with pytest.raises(ValueError):
        fprop_alpha_bound(100, 2, 1.0)


def test_fprop_low_rate_level_params():
    p = fprop_low_rate_level_params(12, 0.5)
    assert p.lambda_ == 358
    assert len(p.s) == 12
    assert p.gamma0 == 0.125
    assert math.isclose(p.delta, 0.5 / 48)
    assert math.isclose(p.p0, (1 - 0.5 / 144) ** 12)
    assert p.s_star == p.s[-1]


def test_check_m3():
    f = (11,) + (10,) * 9
    report = check_m3(FitnessProportionate(), f, gamma0=0.1, delta=0.1, p0=1.0)
    assert not report.all_hold
    strong = check_m3(Comma(mu=1), tuple(range(10)), gamma0=0.5, delta=0.1, p0=0.9)
    assert strong.all_hold
    assert len(strong.conditions) == 5
    tour = check_m3(Tournament(k=8), tuple(range(20)), gamma0=0.25, delta=0.1, p0=0.5)
    assert tour.all_hold


def test_condition_sign_rule():
    assert Condition.at_least("x", 2.0, 1.0).holds
    assert not Condition.less_than("y", 2.0, 1.0).holds
    with pytest.raises(ValidationError):
        Condition(name="bad", holds=True, margin=-1.0)


def test_opo_chain_rows_and_absorption():
    chain = opo_count_chain(10, 2, Bitwise(chi=1.0))
    assert np.allclose(chain.sum(axis=1), 1.0, atol=1e-12)
    assert chain[10, 10] == 1.0
    # the plateau is never left downwards
    assert chain[9, :8].sum() == 0.0


def test_opo_exact_small_cases():
    assert math.isclose(opo_exact_expected_runtime(1, None, Bitwise(chi=0.5)), 2.0, rel_tol=REL)
    # OneMax n=2 with one flip per step: h(1)=2, h(0)=3
    assert math.isclose(opo_exact_expected_runtime(2, None, Point()), 2.75, rel_tol=REL)


def test_opo_unreachable_optimum():
    with pytest.raises(ValueError):
        opo_exact_expected_runtime(6, 2, FlipDistribution(pmf=(1.0,)))


def test_opo_exact_against_asymptote():
    mutation = Bitwise(chi=1.0)
    asym = opo_asymptotic_runtime(30, 2, mutation)
    assert asym == pytest.approx(802, abs=1.0)
    ratios = [opo_exact_expected_runtime(n, 2, mutation) / opo_asymptotic_runtime(n, 2, mutation) for n in (20, 30, 40)]
    assert 0.7 <= ratios[1] <= 1.3
    assert ratios[0] > ratios[1] > ratios[2]


def test_evaluate_bound_registry():
    report = evaluate_bound("negative-drift", {"alpha": 2, "chi": 1, "delta": 0.01})
    assert isinstance(report, BoundReport)
    assert report.extras["psi"] == pytest.approx(0.70315, abs=1e-5)
    lb = evaluate_bound("level-based", {"s": [0.1], "gamma0": 0.1, "delta": 1.0, "lambda": 100})
    assert math.isclose(lb.value, 8.0 * (math.log(120.0) + 1.0), rel_tol=REL)
    assert evaluate_bound("opo-exact", {"n": 2, "mutation": {"kind": "point"}}).value == pytest.approx(2.75)
    assert evaluate_bound("theorem3", {"n": 10, "p_xi1": 0.5}).value == 180
    with pytest.raises(ValueError):
        evaluate_bound("no-such-bound", {})
    with pytest.raises(ValueError):
        evaluate_bound("pk10", {"alpha": 2})


@pytest.mark.parametrize("m", [None, 1])
def test_single_level_bound_is_zero(m):
    p = LevelParams(s=(), gamma0=0.25, delta=0.1, lambda_=200)
    assert level_based_bound(p, m).value == 0.0


def test_bounds_improve_with_easier_parameters():
    base = LevelParams(s=(0.01,) * 10, gamma0=0.25, delta=0.1, lambda_=200, C=1.0)
    easier = base.model_copy(update={"s": (0.02,) * 10})
    assert level_based_bound(easier).value <= level_based_bound(base).value
    assert lambda_floor_M4prime(easier) <= lambda_floor_M4prime(base)
    wider = base.model_copy(update={"delta": 0.2})
    assert 3 * lambda_floor_M4prime(wider) < lambda_floor_M4prime(base) == 34226


def brute_force_opo_runtime(n: int, chi: float) -> float:
    p = chi / n
    codes = np.arange(2**n)
    ones = np.array([bin(c).count("1") for c in codes])
    dist = np.array([[bin(x ^ y).count("1") for y in codes] for x in codes])
    move = p**dist * (1.0 - p) ** (n - dist)
    move[ones[None, :] < ones[:, None]] = 0.0
    np.fill_diagonal(move, 0.0)
    np.fill_diagonal(move, 1.0 - move.sum(axis=1))
    transient = codes[ones < n]
    q = move[np.ix_(transient, transient)]
    h = scipy.linalg.solve(np.eye(transient.size) - q, np.ones(transient.size))
    return 1.0 + h.sum() / 2**n


@pytest.mark.parametrize("n", [2, 5, 8])
def test_onemax_count_chain_matches_full_cube(n):
    exact = opo_exact_expected_runtime(n, None, Bitwise(chi=1.0))
    assert math.isclose(exact, brute_force_opo_runtime(n, 1.0), rel_tol=REL)

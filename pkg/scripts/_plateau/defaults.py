"""
Defaults table. Every tunable default of the lab lives here.

    gamma0                      γ₀ for the β(γ₀, P_t) trajectory column
    scaling_lambda_coefficient  λ = ⌈c ln n⌉ for tournament/comma scaling runs
    m4prime_C                   constant C of the (M4') population floor
    flip_p0, flip_p1            Pr(ξ=0), Pr(ξ=1) of the default flip-count operator
    large_lambda                populations above this size record every
    trajectory_stride_large     `trajectory_stride_large`-th generation
    optimum_detection           "per_evaluation": a run stops at the first
                                optimal evaluation, mid-generation included
    fixed_point_start           start of the (M4') fixed-point iteration
    fixed_point_max_iter        iteration cap of the same
    chi_square_alpha            statistical acceptance level of chi-square checks
    drift_se_margin             drift probe flags estimate > bound + margin·SE
    drift_equality_margin       all-ones equality case tolerance in SEs
    drift_plateau_r             r of the Plateau_r fitness the drift probe selects on
    min_expected_count          chi-square cells below this are merged
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Defaults:
    gamma0: float = 0.25
    scaling_lambda_coefficient: float = 20.0
    m4prime_C: float = 1.0
    flip_p0: float = 0.5
    flip_p1: float = 0.5
    large_lambda: int = 2048
    trajectory_stride_large: int = 10
    optimum_detection: str = "per_evaluation"
    fixed_point_start: int = 16
    fixed_point_max_iter: int = 200
    chi_square_alpha: float = 1e-3
    drift_se_margin: float = 4.0
    drift_equality_margin: float = 3.0
    drift_plateau_r: int = 2
    min_expected_count: float = 5.0


DEFAULTS = Defaults()


def default_trajectory_stride(lam: int) -> int:
    return 1 if lam <= DEFAULTS.large_lambda else DEFAULTS.trajectory_stride_large

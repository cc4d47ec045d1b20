"""Regret, cost, and pull statistics over simulation traces.

Regret is expected (mean-based): the benchmark accrues the optimal arm's
mean (or each agent's local optimal mean in heterogeneous mode) per round
while the policy accrues the means of the arms actually pulled.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .env import BanditInstance, local_optimal, means_array
from .errors import AgentOutOfRangeError, ModeMismatchError


def regret(instance: BanditInstance, pull_history: np.ndarray, mode: str) -> np.ndarray:
    """Cumulative expected regret series over a (T, M) pull history.

    mode is "homogeneous" (benchmark M * mu(1) per round) or "heterogeneous"
    (benchmark sum of local optimal means per round).
    """
    if mode not in ("homogeneous", "heterogeneous"):
        raise ModeMismatchError(f"unknown regret mode {mode!r}")
    if mode == "homogeneous" and not instance.is_homogeneous:
        raise ModeMismatchError("homogeneous benchmark on a heterogeneous instance")
    pull_history = np.asarray(pull_history)
    if mode == "homogeneous":
        benchmark = instance.M * instance.means[0]
    else:
        benchmark = sum(instance.mean(local_optimal(instance, m))
                        for m in range(1, instance.M + 1))
    got = means_array(instance)[pull_history - 1].sum(axis=1)
    return np.cumsum(benchmark - got)


def per_agent_optimal_fraction(instance: BanditInstance, pull_history: np.ndarray,
                               agent: int) -> float:
    """Fraction of rounds in which the agent pulled its local optimal arm."""
    if not 1 <= agent <= instance.M:
        raise AgentOutOfRangeError(f"agent {agent} outside 1..{instance.M}")
    pulls = np.asarray(pull_history)[:, agent - 1]
    return float(np.mean(pulls == local_optimal(instance, agent)))


def cumulative_cost(gammas) -> np.ndarray:
    """Running total attack cost: sum of |gamma| over agents, cumulated over
    rounds. Accepts an AttackLedger or a (T, M) array of attack values."""
    values = getattr(gammas, "gammas", gammas)
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    return np.cumsum(np.abs(values).sum(axis=1))


def sample_grid(T: int, stride: int) -> np.ndarray:
    """Strictly increasing round grid: 1, stride, 2*stride, ..., T."""
    points = [1] + list(range(stride, T + 1, stride))
    if points[-1] != T:
        points.append(T)
    return np.unique(np.array(points, dtype=np.int64))


@dataclass
class RunResult:
    """Outcome of one seeded simulation run, sampled on a time grid."""

    run_id: int
    seed: int
    grid: np.ndarray
    regret: np.ndarray
    cost: np.ndarray
    target_pulls: np.ndarray
    per_arm_pulls: np.ndarray
    per_arm_cost: np.ndarray
    per_agent_optimal_pulls: np.ndarray
    per_agent_target_pulls: np.ndarray
    per_agent_optimal_fraction_grid: np.ndarray  # (grid, M)
    final_regret: float
    final_cost: float
    target_fraction: float
    affected_agent_count: int
    bound_regret_lb: np.ndarray
    bound_cost_ub: np.ndarray
    details: dict = field(default_factory=dict)


def build_run_result(instance: BanditInstance, run_id: int, seed: int,
                     pull_history: np.ndarray, gammas: np.ndarray, mode: str,
                     target_arm: int, stride: int, affected_agent_count: int,
                     bounds_fn=None, details: Optional[dict] = None) -> RunResult:
    """Assemble a RunResult from full (T, M) pull and attack-value arrays."""
    T, M = pull_history.shape
    grid = sample_grid(T, stride)
    gi = grid - 1
    regret_series = regret(instance, pull_history, mode)
    cost_series = cumulative_cost(gammas)
    target_hits = np.cumsum((pull_history == target_arm).sum(axis=1))
    optima = np.array([local_optimal(instance, m) for m in range(1, M + 1)])
    opt_hits = np.cumsum(pull_history == optima[None, :], axis=0)
    per_arm_pulls = np.bincount(pull_history.ravel() - 1, minlength=instance.K)
    per_arm_cost = np.bincount(pull_history.ravel() - 1,
                               weights=np.abs(gammas).ravel(), minlength=instance.K)
    if bounds_fn is not None:
        bound_pairs = np.array([bounds_fn(int(t)) for t in grid], dtype=np.float64)
        bound_regret, bound_cost = bound_pairs[:, 0], bound_pairs[:, 1]
    else:
        bound_regret = np.full(len(grid), np.nan)
        bound_cost = np.full(len(grid), np.nan)
    return RunResult(
        run_id=run_id,
        seed=seed,
        grid=grid,
        regret=regret_series[gi],
        cost=cost_series[gi],
        target_pulls=target_hits[gi],
        per_arm_pulls=per_arm_pulls,
        per_arm_cost=per_arm_cost,
        per_agent_optimal_pulls=opt_hits[-1],
        per_agent_target_pulls=(pull_history == target_arm).sum(axis=0),
        per_agent_optimal_fraction_grid=opt_hits[gi] / grid[:, None],
        final_regret=float(regret_series[-1]),
        final_cost=float(cost_series[-1]),
        target_fraction=float(target_hits[-1]) / (T * M),
        affected_agent_count=affected_agent_count,
        bound_regret_lb=bound_regret,
        bound_cost_ub=bound_cost,
        details=details or {},
    )

"""Victim bandit algorithms stepped one round at a time.

Each engine exposes a *_round function that advances the state by one round
and returns a RoundRecord. An attacker hook intercepts observations between
sampling and the statistics update; passing None runs the clean algorithm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .env import BanditInstance, RngStream, arm_set_matrix, means_array
from .errors import HeterogeneousNotSupportedError, ZeroCountError


def confidence_radius(N: int, K: int, delta: float) -> float:
    """Concentration width beta(N) = sqrt(log(pi^2 K N^2 / (3 delta)) / (2N))."""
    if N < 1:
        raise ZeroCountError(f"confidence radius needs N >= 1, got {N}")
    return math.sqrt(math.log(math.pi**2 * K * N * N / (3.0 * delta)) / (2.0 * N))


def ucb_index(mean: float, count: int, t: int, alpha: float, b: float) -> float:
    """UCB index clamped to [0, b]; count 0 yields the optimistic value b."""
    if count == 0:
        return b
    value = mean + math.sqrt(alpha * math.log(t) / (2.0 * count))
    return min(max(value, 0.0), b)


@dataclass
class SharedStats:
    """Post-attack global pull counts and reward sums driving every victim."""

    counts: np.ndarray
    sums: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, K: int) -> "SharedStats":
        return cls(np.zeros(K, dtype=np.int64), np.zeros(K, dtype=np.float64))

    @property
    def K(self) -> int:
        return len(self.counts)

    def count(self, arm: int) -> int:
        return int(self.counts[arm - 1])

    def mean(self, arm: int) -> float:
        n = self.counts[arm - 1]
        if n == 0:
            raise ZeroCountError(f"arm {arm} has no samples")
        return float(self.sums[arm - 1] / n)

    def copy(self) -> "SharedStats":
        return SharedStats(self.counts.copy(), self.sums.copy(), self.t)

    def merge_round(self, arm_counts: np.ndarray, arm_sums: np.ndarray) -> None:
        """Fold one round's per-arm pull counts and post-attack sums in."""
        self.counts += arm_counts
        self.sums += arm_sums
        self.t += 1


@dataclass
class RoundRecord:
    """One round of play: chosen arms, pre/post-attack rewards, attack values.

    post = pre - gamma elementwise; gamma is 0 for unattacked observations.
    """

    t: int
    arms: np.ndarray
    pre: np.ndarray
    post: np.ndarray
    gamma: np.ndarray


@dataclass
class CoucbRoundView:
    """Context handed to a CO-UCB attacker hook before the stats update.

    stats is the shared state from the end of the previous round; arm_counts
    and arm_sums aggregate this round's pre-attack observations per arm.
    """

    t: int
    arms: np.ndarray
    rewards: np.ndarray
    arm_counts: np.ndarray
    arm_sums: np.ndarray
    stats: SharedStats
    instance: BanditInstance


CoucbHook = Callable[[CoucbRoundView], Optional[np.ndarray]]


def _coucb_indices(stats: SharedStats, alpha: float, b: float, log_prev: float) -> np.ndarray:
    counts = stats.counts
    if counts.min() > 0:
        idx = stats.sums / counts + np.sqrt((alpha * log_prev / 2.0) / counts)
        return np.clip(idx, 0.0, b)
    idx = np.full(len(counts), float(b))
    nz = counts > 0
    if nz.any():
        vals = stats.sums[nz] / counts[nz] + np.sqrt((alpha * log_prev / 2.0) / counts[nz])
        idx[nz] = np.clip(vals, 0.0, b)
    return idx


def coucb_round(stats: SharedStats, instance: BanditInstance, alpha: float,
                attacker: Optional[CoucbHook], rng: RngStream) -> RoundRecord:
    """One CO-UCB round: every agent pulls its highest-index arm (ties to the
    lowest arm id), observations pass through the attacker hook, and all
    post-attack observations merge into the shared stats at the end."""
    t = stats.t + 1
    log_prev = math.log(t - 1) if t > 1 else 0.0
    idx = _coucb_indices(stats, alpha, instance.b, log_prev)
    K, M = instance.K, instance.M
    if instance.is_homogeneous:
        arm = int(np.argmax(idx)) + 1
        arms = np.full(M, arm, dtype=np.int64)
        rewards = rng.normal(instance.means[arm - 1], instance.sigma, M)
        arm_counts = np.zeros(K, dtype=np.int64)
        arm_counts[arm - 1] = M
        arm_sums = np.zeros(K, dtype=np.float64)
        arm_sums[arm - 1] = rewards.sum()
    else:
        mat = arm_set_matrix(instance)
        per_agent = idx[mat]
        arms = mat[np.arange(M), np.argmax(per_agent, axis=1)] + 1
        rewards = rng.normal(means_array(instance)[arms - 1], instance.sigma)
        arm_counts = np.bincount(arms - 1, minlength=K)
        arm_sums = np.bincount(arms - 1, weights=rewards, minlength=K)
    if attacker is not None:
        view = CoucbRoundView(t, arms, rewards, arm_counts, arm_sums, stats, instance)
        gamma = attacker(view)
        if gamma is None:
            gamma = np.zeros(M, dtype=np.float64)
    else:
        gamma = np.zeros(M, dtype=np.float64)
    post = rewards - gamma
    if gamma.any():
        post_sums = np.bincount(arms - 1, weights=post, minlength=K)
    else:
        post_sums = arm_sums
    stats.merge_round(arm_counts, post_sums)
    return RoundRecord(t, arms, rewards, post, gamma)


# --- UCB-TCOM: phase-based play with delayed statistics ---

@dataclass
class TcomState:
    """Delayed agent-visible stats plus the live stats the attacker sees.

    The agent-visible snapshot only changes at phase ends; a phase of arm k
    that starts at live count n_start ends once the live count reaches
    ceil(beta_phase * n_start) (and lasts at least one round).
    """

    visible_counts: np.ndarray
    visible_sums: np.ndarray
    live_counts: np.ndarray
    live_sums: np.ndarray
    beta_phase: float
    t: int = 0
    phase_arm: Optional[int] = None
    phase_start_count: int = 0
    phase_threshold: int = 0
    phase_pulls: int = 0
    phase_reward_sum: float = 0.0
    phase_gamma_sum: float = 0.0
    phase_index: int = 0

    @classmethod
    def fresh(cls, K: int, beta_phase: float = 2.0) -> "TcomState":
        if beta_phase <= 1.0:
            raise ValueError(f"beta_phase must exceed 1, got {beta_phase}")
        return cls(
            visible_counts=np.zeros(K, dtype=np.int64),
            visible_sums=np.zeros(K, dtype=np.float64),
            live_counts=np.zeros(K, dtype=np.int64),
            live_sums=np.zeros(K, dtype=np.float64),
            beta_phase=beta_phase,
        )

    def visible_mean(self, arm: int) -> float:
        n = self.visible_counts[arm - 1]
        if n == 0:
            raise ZeroCountError(f"arm {arm} has no visible samples")
        return float(self.visible_sums[arm - 1] / n)

    def visible_count(self, arm: int) -> int:
        return int(self.visible_counts[arm - 1])


TcomHook = Callable[["TcomState", BanditInstance, float], float]


def _tcom_pick_phase_arm(state: TcomState, s: int) -> int:
    zero = np.flatnonzero(state.visible_counts == 0)
    if len(zero):
        return int(zero[0]) + 1
    idx = state.visible_sums / state.visible_counts
    if s > 1:
        idx = idx + np.sqrt(2.0 * math.log(s) / state.visible_counts)
    return int(np.argmax(idx)) + 1


def tcom_round(state: TcomState, instance: BanditInstance,
               attacker: Optional[TcomHook], rng: RngStream) -> RoundRecord:
    """One UCB-TCOM round: all agents pull the current phase arm; the
    agent-visible snapshot refreshes only when the phase ends."""
    if not instance.is_homogeneous:
        raise HeterogeneousNotSupportedError("UCB-TCOM runs on homogeneous instances")
    t = state.t + 1
    M = instance.M
    if state.phase_arm is None:
        arm = _tcom_pick_phase_arm(state, t - 1)
        state.phase_arm = arm
        state.phase_start_count = int(state.live_counts[arm - 1])
        state.phase_threshold = math.ceil(state.beta_phase * state.phase_start_count)
        state.phase_pulls = 0
        state.phase_reward_sum = 0.0
        state.phase_gamma_sum = 0.0
        state.phase_index += 1
    arm = state.phase_arm
    rewards = rng.normal(instance.means[arm - 1], instance.sigma, M)
    round_sum = float(rewards.sum())
    state.phase_pulls += M
    state.phase_reward_sum += round_sum
    gamma_1 = attacker(state, instance, round_sum) if attacker is not None else 0.0
    gamma = np.zeros(M, dtype=np.float64)
    gamma[0] = gamma_1
    post = rewards - gamma
    state.live_counts[arm - 1] += M
    state.live_sums[arm - 1] += round_sum - gamma_1
    state.phase_gamma_sum += gamma_1
    state.t = t
    if state.live_counts[arm - 1] >= state.phase_threshold:
        state.visible_counts[:] = state.live_counts
        state.visible_sums[:] = state.live_sums
        state.phase_arm = None
    arms = np.full(M, arm, dtype=np.int64)
    return RoundRecord(t, arms, rewards, post, gamma)


# --- DPE2: leader-follower play with an exploration list ---

@dataclass
class Dpe2State:
    """Leader-side state for DPE2 with UCB1 indices.

    The leader keeps its own per-arm counts and post-attack means; they are
    merged from pending observations only at phase boundaries (whenever the
    exploration queue has emptied). Followers always pull believed_best.
    """

    snap_counts: np.ndarray
    snap_sums: np.ndarray
    pending_counts: np.ndarray
    pending_sums: np.ndarray
    phase_gamma: np.ndarray
    alpha: float
    believed_best: int = 1
    explore_queue: list[int] = field(default_factory=list)
    t: int = 0

    @classmethod
    def fresh(cls, K: int, alpha: float) -> "Dpe2State":
        return cls(
            snap_counts=np.zeros(K, dtype=np.int64),
            snap_sums=np.zeros(K, dtype=np.float64),
            pending_counts=np.zeros(K, dtype=np.int64),
            pending_sums=np.zeros(K, dtype=np.float64),
            phase_gamma=np.zeros(K, dtype=np.float64),
            alpha=alpha,
        )

    def snap_mean(self, arm: int) -> float:
        n = self.snap_counts[arm - 1]
        if n == 0:
            raise ZeroCountError(f"arm {arm} has no merged samples")
        return float(self.snap_sums[arm - 1] / n)

    def snap_count(self, arm: int) -> int:
        return int(self.snap_counts[arm - 1])

    def leader_index(self, arm: int, t: int) -> float:
        """UCB1 index V + sqrt(alpha log t / (2 N)) on the merged stats."""
        n = self.snap_count(arm)
        if n == 0:
            raise ZeroCountError(f"arm {arm} has no merged samples")
        return self.snap_mean(arm) + math.sqrt(self.alpha * math.log(t) / (2.0 * n))


Dpe2Hook = Callable[["Dpe2State", int, float], float]


def _dpe2_boundary(state: Dpe2State, t: int) -> None:
    state.snap_counts += state.pending_counts
    state.snap_sums += state.pending_sums
    state.pending_counts[:] = 0
    state.pending_sums[:] = 0.0
    state.phase_gamma[:] = 0.0
    means = state.snap_sums / state.snap_counts
    best = int(np.argmax(means)) + 1
    state.believed_best = best
    bonus = np.sqrt(state.alpha * math.log(t) / (2.0 * state.snap_counts))
    over = np.flatnonzero(means + bonus > means[best - 1])
    state.explore_queue = [int(k) + 1 for k in over if k + 1 != best]


def dpe2_round(state: Dpe2State, instance: BanditInstance,
               attacker: Optional[Dpe2Hook], rng: RngStream) -> RoundRecord:
    """One DPE2 round. The leader (agent 1) sweeps every arm once during the
    first K rounds, then explores the queue round-robin when it is nonempty
    and exploits believed_best otherwise; only its observation is
    interceptable. Followers always pull believed_best."""
    if not instance.is_homogeneous:
        raise HeterogeneousNotSupportedError("DPE2 runs on homogeneous instances")
    t = state.t + 1
    K, M = instance.K, instance.M
    if t <= K:
        leader_arm = t
    else:
        if not state.explore_queue:
            _dpe2_boundary(state, t)
        if state.explore_queue:
            leader_arm = state.explore_queue.pop(0)
        else:
            leader_arm = state.believed_best
    arms = np.full(M, state.believed_best, dtype=np.int64)
    arms[0] = leader_arm
    rewards = rng.normal(means_array(instance)[arms - 1], instance.sigma)
    gamma_1 = attacker(state, leader_arm, float(rewards[0])) if attacker is not None else 0.0
    gamma = np.zeros(M, dtype=np.float64)
    gamma[0] = gamma_1
    post = rewards - gamma
    state.pending_counts[leader_arm - 1] += 1
    state.pending_sums[leader_arm - 1] += post[0]
    state.phase_gamma[leader_arm - 1] += gamma_1
    state.t = t
    return RoundRecord(t, arms, rewards, post, gamma)

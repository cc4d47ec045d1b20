"""Attacker strategies and planning.

Attack-value computations for each victim algorithm, agent-conflict
analysis, greedy affected/target agent selection, the learn-then-attack
state machine, and the closed-form cost/pull bound calculators.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .algo import (
    CoucbRoundView,
    Dpe2State,
    SharedStats,
    TcomState,
    confidence_radius,
    ucb_index,
)
from .env import BanditInstance, local_optimal
from .errors import (
    AgentOutOfRangeError,
    ArmNotAttackedError,
    ConfigError,
    DegenerateGapError,
    EmptyResidualArmSetError,
    InvariantViolationError,
    MissingParamError,
    NotAtThresholdError,
    NotTargetAgentError,
    TargetArmPulledError,
    TooLargeError,
    WrongStageError,
    ZeroCountError,
    ZeroGapError,
)

STRATEGIES = ("none", "homo_coucb", "homo_tcom", "homo_dpe2", "oracle_attack", "lta")


@dataclass(frozen=True)
class AttackConfig:
    """Attack strategy selection and its parameters.

    target_arm applies to the homogeneous (target arm) strategies; delta_min
    and margin apply to the learn-then-attack strategy. attack_all switches
    the homogeneous strategy from a single attacked agent (agent 1) to
    attacking every agent; use_aas toggles greedy affected-agent selection
    versus the single-largest-group baseline.
    """

    strategy: str = "none"
    target_arm: Optional[int] = None
    delta0: float = 0.1
    delta: float = 0.1
    delta_min: Optional[float] = None
    margin: Optional[float] = None
    attack_all: bool = False
    use_aas: bool = True

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        if self.strategy != "none":
            if not self.delta0 > 0:
                raise ConfigError(f"delta0 must be positive, got {self.delta0}")
            if not 0 < self.delta < 0.5:
                raise ConfigError(f"delta must lie in (0, 1/2), got {self.delta}")
        if self.delta_min is not None and not self.delta_min > 0:
            raise ConfigError(f"delta_min must be positive, got {self.delta_min}")
        if self.margin is not None and not self.margin > 0:
            raise ConfigError(f"margin must be positive, got {self.margin}")

    @property
    def incentive_margin(self) -> float:
        """Strict slack used by the learning-stage incentive attack."""
        return self.margin if self.margin is not None else self.delta0


@dataclass
class AttackLedger:
    """Per-round, per-agent attack values and the induced cumulative cost."""

    gammas: np.ndarray  # (T, M)
    arms: np.ndarray    # (T, M) arm pulled when each value was applied

    def cost_series(self) -> np.ndarray:
        return np.cumsum(np.abs(self.gammas).sum(axis=1))

    def total_cost(self) -> float:
        return float(np.abs(self.gammas).sum())

    def per_arm_cost(self, K: int) -> np.ndarray:
        flat_arms = self.arms.ravel() - 1
        flat_cost = np.abs(self.gammas).ravel()
        return np.bincount(flat_arms, weights=flat_cost, minlength=K)

    def attacked_agents(self) -> tuple[int, ...]:
        hit = np.flatnonzero(np.abs(self.gammas).sum(axis=0) > 0)
        return tuple(int(m) + 1 for m in hit)


# --- attack values -------------------------------------------------------

def homo_coucb_gamma(stats: SharedStats, pulled: int, round_reward_sum_on_pulled: float,
                     pulls_this_round: int, cfg: AttackConfig, K: int) -> float:
    """Attack value that pins the pulled arm's post-attack mean at
    mean(target) - 2 beta(n(target)) - delta0, clamped at zero.

    stats must carry the pulled arm at its pre-round state and the target
    arm at its current state; under homogeneous co-selection the two
    coincide because the target is never pulled in an attacked round.
    """
    target = cfg.target_arm
    if pulled == target:
        raise TargetArmPulledError("the target arm is never attacked")
    n_target = stats.count(target)
    if n_target < 1:
        raise ZeroCountError("attack undefined before the target arm has a sample")
    bound = stats.mean(target) - 2.0 * confidence_radius(n_target, K, cfg.delta) - cfg.delta0
    n_new = stats.count(pulled) + pulls_this_round
    gamma = float(stats.sums[pulled - 1]) + round_reward_sum_on_pulled - n_new * bound
    return max(0.0, gamma)


def tcom_gamma(state: TcomState, pulled: int, within_phase_reward_sum: float,
               within_phase_gamma_sum: float, cfg: AttackConfig, K: int) -> float:
    """Phase-aware attack value against UCB-TCOM.

    Separates the aggregate from the arm's last completed phase (held in the
    agent-visible snapshot) from the running within-phase raw reward and
    attack sums, and targets the delayed target-arm snapshot.
    """
    target = cfg.target_arm
    if pulled == target:
        raise TargetArmPulledError("the target arm is never attacked")
    n_target = state.visible_count(target)
    if n_target < 1:
        raise ZeroCountError("attack undefined before the target arm is visible")
    bound = (state.visible_mean(target)
             - 2.0 * confidence_radius(n_target, K, cfg.delta) - cfg.delta0)
    n_end = state.visible_count(pulled) + state.phase_pulls
    gamma = (float(state.visible_sums[pulled - 1]) + within_phase_reward_sum
             - within_phase_gamma_sum - n_end * bound)
    return max(0.0, gamma)


def dpe2_gamma(state: Dpe2State, pulled: int, leader_reward: float,
               cfg: AttackConfig, K: int) -> float:
    """Attack value on the DPE2 leader's observation.

    Uses the leader's phase-start snapshot for both arms; pending
    observations from earlier rounds of the current phase enter as their
    post-attack values, which already net out prior within-phase attacks.
    """
    target = cfg.target_arm
    if pulled == target:
        raise TargetArmPulledError("the target arm is never attacked")
    n_target = state.snap_count(target)
    if n_target < 1:
        raise ZeroCountError("attack undefined before the target arm is merged")
    bound = (state.snap_mean(target)
             - 2.0 * confidence_radius(n_target, K, cfg.delta) - cfg.delta0)
    n_end = state.snap_count(pulled) + int(state.pending_counts[pulled - 1]) + 1
    gamma = (float(state.snap_sums[pulled - 1]) + float(state.pending_sums[pulled - 1])
             + leader_reward - n_end * bound)
    return max(0.0, gamma)


# --- conflict analysis and attack planning -------------------------------

def _optima(arm_sets: Sequence[Sequence[int]], means: Sequence[float]) -> list[int]:
    return [max(s, key=lambda k: (means[k - 1], -k)) for s in arm_sets]


def is_conflict(instance: BanditInstance, m: int, m2: int) -> bool:
    """True iff the two agents cannot both be driven to linear regret with
    sublinear cost: one of their arm sets is exhausted by the pair of local
    optimal arms."""
    if m == m2:
        raise AgentOutOfRangeError("conflict check needs two distinct agents")
    opts = {local_optimal(instance, m), local_optimal(instance, m2)}
    left = set(instance.arm_set(m)) - opts
    right = set(instance.arm_set(m2)) - opts
    return len(left) == 0 or len(right) == 0


def _group_order(arm_sets, means):
    """Nonempty local-optimum groups sorted by size descending, ties to the
    lower arm id. Returns [(arm, member agents ascending), ...]."""
    opts = _optima(arm_sets, means)
    groups: dict[int, list[int]] = {}
    for agent, k in enumerate(opts, start=1):
        groups.setdefault(k, []).append(agent)
    return sorted(groups.items(), key=lambda kv: (-len(kv[1]), kv[0]))


def aas_core(arm_sets, means) -> tuple[tuple[int, ...], tuple[int, ...]]:
    ordered = _group_order(arm_sets, means)
    affected: list[int] = []
    attacked: set[int] = set()
    for arm, members in ordered:
        widened = attacked | {arm}
        if all(set(arm_sets[m - 1]) - widened for m in affected + members):
            affected.extend(members)
            attacked.add(arm)
    return tuple(sorted(affected)), tuple(sorted(attacked))


def aas(instance: BanditInstance) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Greedy affected-agents selection over local-optimum groups in
    decreasing size order; a group is admitted only if every agent involved
    keeps at least one arm outside the widened attacked-arm set."""
    return aas_core(instance.arm_sets, instance.means)


def brute_force_max_group(instance: BanditInstance) -> int:
    """Exhaustive oracle: size of the largest agent set expressible as a
    union of local-optimum groups that jointly pass the admission test."""
    groups = _group_order(instance.arm_sets, instance.means)
    if len(groups) > 20:
        raise TooLargeError(f"{len(groups)} groups exceed the enumeration limit")
    best = 0
    for r in range(1, len(groups) + 1):
        for combo in itertools.combinations(groups, r):
            arms = {arm for arm, _ in combo}
            agents = [m for _, members in combo for m in members]
            if all(set(instance.arm_set(m)) - arms for m in agents):
                best = max(best, len(agents))
    return best


def tas_core(arm_sets, means, affected, attacked):
    opts = _optima(arm_sets, means)
    attacked_set = set(attacked)
    best_outside: dict[int, int] = {}
    for m in affected:
        residual = set(arm_sets[m - 1]) - attacked_set
        if not residual:
            raise EmptyResidualArmSetError(f"agent {m} has no arm outside the attacked set")
        best_outside[m] = max(residual, key=lambda k: (means[k - 1], -k))
    responsible: dict[int, int] = {}
    for k in sorted(attacked):
        members = [m for m in affected if opts[m - 1] == k]
        responsible[k] = min(members, key=lambda m: (means[best_outside[m] - 1], m))
    targets = tuple(sorted(set(responsible.values())))
    return targets, responsible, best_outside


def tas(instance: BanditInstance, affected, attacked):
    """Target-agents selection: per attacked arm, the affected agent whose
    best remaining alternative is least attractive carries the attack."""
    return tas_core(instance.arm_sets, instance.means, tuple(affected), tuple(attacked))


@dataclass(frozen=True)
class AttackPlan:
    """Output of the selection stage: who is affected, which arms are
    attacked, and which agents carry the manipulations."""

    affected_agents: tuple[int, ...]
    attacked_arms: tuple[int, ...]
    target_agents: tuple[int, ...]
    responsible: dict[int, int]        # attacked arm -> carrying agent
    best_outside: dict[int, int]       # affected agent -> best arm outside the attacked set
    local_optima: dict[int, int]       # affected agent -> its local optimal arm
    groups: dict[int, tuple[int, ...]]  # attacked arm -> affected agents sharing it

    def __post_init__(self):
        if not set(self.target_agents) <= set(self.affected_agents):
            raise InvariantViolationError("target agents must be affected agents")
        if len(self.target_agents) > len(self.attacked_arms):
            raise InvariantViolationError("more target agents than attacked arms")
        for k, agent in self.responsible.items():
            if self.local_optima.get(agent) != k:
                raise InvariantViolationError(
                    f"agent {agent} is responsible for arm {k} but it is not its optimum")

    def group_size(self, arm: int) -> int:
        return len(self.groups[arm])


def _build_plan(arm_sets, means, use_aas: bool) -> AttackPlan:
    if use_aas:
        affected, attacked = aas_core(arm_sets, means)
    else:
        # Baseline without greedy accumulation: the single largest
        # local-optimum group (always admissible on its own).
        arm, members = _group_order(arm_sets, means)[0]
        affected, attacked = tuple(members), (arm,)
    targets, responsible, best_outside = tas_core(arm_sets, means, affected, attacked)
    opts = _optima(arm_sets, means)
    local = {m: opts[m - 1] for m in affected}
    groups = {k: tuple(m for m in affected if opts[m - 1] == k) for k in attacked}
    return AttackPlan(affected, attacked, targets, responsible, best_outside, local, groups)


def plan_attack(instance: BanditInstance, use_aas: bool = True) -> AttackPlan:
    return _build_plan(instance.arm_sets, instance.means, use_aas)


def accessibility_rate(instance: BanditInstance, agents) -> float:
    """Minimum over arms of the fraction of agents (relative to M) in the
    given set that can access the arm."""
    agents = tuple(agents)
    if not agents:
        raise ConfigError("accessibility rate needs a nonempty agent set")
    worst = min(
        sum(1 for m in agents if k in instance.arm_set(m))
        for k in range(1, instance.K + 1)
    )
    return worst / instance.M


def oa_gamma(stats: SharedStats, pulled: int, round_reward_sum_on_pulled: float,
             plan: AttackPlan, cfg: AttackConfig, instance: BanditInstance,
             pulls_this_round: int = 1, agent: Optional[int] = None) -> float:
    """Attack value that pins an attacked arm's post-attack mean below every
    non-attacked arm's pessimistic value (its previous-round mean minus twice
    its radius minus delta0). Arms with no samples are excluded from the min;
    if none qualify the attack defers and the value is zero."""
    if agent is not None and agent not in plan.target_agents:
        raise NotTargetAgentError(f"agent {agent} is not a target agent")
    if pulled not in plan.attacked_arms:
        raise ArmNotAttackedError(f"arm {pulled} is outside the attacked set")
    attacked = set(plan.attacked_arms)
    bound = None
    for k in range(1, instance.K + 1):
        if k in attacked:
            continue
        n = stats.count(k)
        if n < 1:
            continue
        val = stats.mean(k) - 2.0 * confidence_radius(n, instance.K, cfg.delta) - cfg.delta0
        if bound is None or val < bound:
            bound = val
    if bound is None:
        return 0.0
    n_new = stats.count(pulled) + pulls_this_round
    gamma = float(stats.sums[pulled - 1]) + round_reward_sum_on_pulled - n_new * bound
    return max(0.0, gamma)


# --- learn-then-attack ----------------------------------------------------

def lta_threshold_L(K: int, delta: float, delta_min: float) -> int:
    """Learning-stage sample threshold ceil(2 log(2K/delta) / delta_min^2)."""
    if delta_min <= 0:
        raise ZeroGapError("delta_min must be positive")
    return math.ceil(2.0 * math.log(2.0 * K / delta) / delta_min ** 2)


@dataclass
class LtaState:
    """Two-stage attack bookkeeping: learning then attacking.

    inflation_totals tracks, per arm, how much reward inflation is currently
    injected so it can be removed in one recovery correction; pre_counts and
    pre_sums mirror the unmanipulated observations so the true ranking can
    be read off at the end of the learning stage.
    """

    threshold: int
    inflation_totals: np.ndarray
    pre_counts: np.ndarray
    pre_sums: np.ndarray
    stage: str = "learning"
    learning_rounds: int = 0
    learned_order: Optional[tuple[int, ...]] = None

    @classmethod
    def fresh(cls, K: int, threshold: int) -> "LtaState":
        return cls(
            threshold=threshold,
            inflation_totals=np.zeros(K, dtype=np.float64),
            pre_counts=np.zeros(K, dtype=np.int64),
            pre_sums=np.zeros(K, dtype=np.float64),
        )

    def unbiased_means(self) -> np.ndarray:
        return self.pre_sums / np.maximum(self.pre_counts, 1)


def lta_learning_gamma(stats: SharedStats, pulled: int, observation: float,
                       state: LtaState, cfg: AttackConfig, alpha: float,
                       b: float) -> float:
    """Inflation (gamma <= 0) that lifts the pulled arm's index to the
    maximum other index plus the incentive margin; zero when the arm is
    already strictly on top.

    stats must contain everything observed so far this round except the
    carried observation itself, with stats.t set to the current round; the
    injected inflation is recorded in the state for later recovery.
    """
    if state.stage != "learning":
        raise WrongStageError("learning-stage attack after the stage ended")
    t = stats.t
    n_new = stats.count(pulled) + 1
    mean_new = (float(stats.sums[pulled - 1]) + observation) / n_new
    raw = mean_new + math.sqrt(alpha * math.log(t) / (2.0 * n_new)) if t > 1 else mean_new
    best_other = -math.inf
    for k in range(1, stats.K + 1):
        if k == pulled:
            continue
        idx = ucb_index(
            float(stats.sums[k - 1] / stats.counts[k - 1]) if stats.counts[k - 1] else 0.0,
            int(stats.counts[k - 1]), max(t, 1), alpha, b)
        best_other = max(best_other, idx)
    lift = best_other + cfg.incentive_margin - raw
    if lift <= 0:
        return 0.0
    gamma = -n_new * lift
    state.inflation_totals[pulled - 1] += n_new * lift
    return gamma


def lta_recovery_gamma(state: LtaState, arm: int) -> float:
    """Single positive correction returning the arm's post-attack mean to
    its unbiased value once the arm's sample count reaches the threshold."""
    if state.pre_counts[arm - 1] < state.threshold:
        raise NotAtThresholdError(
            f"arm {arm} has {int(state.pre_counts[arm - 1])} samples, "
            f"threshold is {state.threshold}")
    total = float(state.inflation_totals[arm - 1])
    state.inflation_totals[arm - 1] = 0.0
    return total


# --- engine hooks ---------------------------------------------------------

class HomoCoucbAttack:
    """Target-arm attack on CO-UCB.

    Attacks a single agent (agent 1) by default; with attack_all every
    non-target arm pulled in a round is corrected once and the value is
    split evenly over that arm's pullers. Defers until the target arm has
    at least one global sample.
    """

    def __init__(self, cfg: AttackConfig, instance: BanditInstance, debug: bool = False):
        if cfg.target_arm is None:
            raise ConfigError("homo_coucb needs a target arm")
        self.cfg = cfg
        self.target = cfg.target_arm
        self.K = instance.K
        self.debug = debug

    def __call__(self, view: CoucbRoundView) -> Optional[np.ndarray]:
        target = self.target
        round_target = int(view.arm_counts[target - 1])
        if view.stats.count(target) + round_target < 1:
            return None
        if round_target:
            stats_v = view.stats.copy()
            stats_v.counts[target - 1] += round_target
            stats_v.sums[target - 1] += view.arm_sums[target - 1]
        else:
            stats_v = view.stats
        gammas = np.zeros(len(view.arms), dtype=np.float64)
        if self.cfg.attack_all:
            for arm in np.unique(view.arms):
                arm = int(arm)
                if arm == target:
                    continue
                g = homo_coucb_gamma(stats_v, arm, float(view.arm_sums[arm - 1]),
                                     int(view.arm_counts[arm - 1]), self.cfg, self.K)
                if g > 0:
                    pullers = np.flatnonzero(view.arms == arm)
                    gammas[pullers] = g / len(pullers)
                if self.debug:
                    self._check(stats_v, arm, view, g)
        else:
            arm = int(view.arms[0])
            if arm != target:
                g = homo_coucb_gamma(stats_v, arm, float(view.arm_sums[arm - 1]),
                                     int(view.arm_counts[arm - 1]), self.cfg, self.K)
                gammas[0] = g
                if self.debug:
                    self._check(stats_v, arm, view, g)
        return gammas

    def _check(self, stats_v: SharedStats, arm: int, view: CoucbRoundView, g: float) -> None:
        n_new = stats_v.count(arm) + int(view.arm_counts[arm - 1])
        post_mean = (float(stats_v.sums[arm - 1]) + float(view.arm_sums[arm - 1]) - g) / n_new
        n_t = stats_v.count(self.target)
        bound = (stats_v.mean(self.target)
                 - 2.0 * confidence_radius(n_t, self.K, self.cfg.delta) - self.cfg.delta0)
        if post_mean > bound + 1e-7:
            raise InvariantViolationError(
                f"round {view.t}: post-attack mean {post_mean} above bound {bound}")


class OracleAttack:
    """Oracle attack: target agents correct attacked arms they pull.

    One attack value per attacked arm per round, carried by the lowest-id
    target agent that pulled it; the value accounts for every pull of that
    arm in the round.
    """

    def __init__(self, plan: AttackPlan, cfg: AttackConfig, instance: BanditInstance,
                 debug: bool = False):
        self.plan = plan
        self.cfg = cfg
        self.instance = instance
        self.targets = frozenset(plan.target_agents)
        self.debug = debug

    def __call__(self, view: CoucbRoundView) -> Optional[np.ndarray]:
        gammas = None
        for arm in self.plan.attacked_arms:
            pulls = int(view.arm_counts[arm - 1])
            if pulls == 0:
                continue
            pullers = np.flatnonzero(view.arms == arm) + 1
            carrier = next((int(m) for m in pullers if int(m) in self.targets), None)
            if carrier is None:
                continue
            g = oa_gamma(view.stats, arm, float(view.arm_sums[arm - 1]), self.plan,
                         self.cfg, self.instance, pulls_this_round=pulls, agent=carrier)
            if g > 0:
                if gammas is None:
                    gammas = np.zeros(len(view.arms), dtype=np.float64)
                gammas[carrier - 1] = g
            if self.debug:
                self._check(view, arm, pulls, g)
        return gammas

    def _check(self, view: CoucbRoundView, arm: int, pulls: int, g: float) -> None:
        stats = view.stats
        bound = None
        for k in range(1, self.instance.K + 1):
            if k in self.plan.attacked_arms or stats.count(k) < 1:
                continue
            val = (stats.mean(k)
                   - 2.0 * confidence_radius(stats.count(k), self.instance.K, self.cfg.delta)
                   - self.cfg.delta0)
            bound = val if bound is None else min(bound, val)
        if bound is None:
            return
        post_mean = (float(stats.sums[arm - 1]) + float(view.arm_sums[arm - 1]) - g) / (
            stats.count(arm) + pulls)
        if post_mean > bound + 1e-7:
            raise InvariantViolationError(
                f"round {view.t}: post-attack mean {post_mean} above bound {bound}")


class LtaAttack:
    """Learning-then-attack: incentivize exploration until every arm has
    threshold samples, recover the unbiased means, then run the oracle
    attack on the plan derived from the learned ranking."""

    def __init__(self, cfg: AttackConfig, instance: BanditInstance, alpha: float,
                 debug: bool = False):
        if cfg.delta_min is None:
            raise ConfigError("lta needs delta_min")
        self.cfg = cfg
        self.instance = instance
        self.alpha = alpha
        self.debug = debug
        self.state = LtaState.fresh(instance.K, lta_threshold_L(instance.K, cfg.delta,
                                                                cfg.delta_min))
        self.plan: Optional[AttackPlan] = None
        self._oracle: Optional[OracleAttack] = None

    def __call__(self, view: CoucbRoundView) -> Optional[np.ndarray]:
        if self.state.stage == "attacking":
            return self._oracle(view)
        return self._learning_round(view)

    def _learning_round(self, view: CoucbRoundView) -> np.ndarray:
        state = self.state
        L = state.threshold
        gammas = np.zeros(len(view.arms), dtype=np.float64)
        preview = view.stats.copy()
        preview.t = view.t
        before = view.stats.counts
        for arm in np.unique(view.arms):
            arm = int(arm)
            sel = np.flatnonzero(view.arms == arm)
            obs = view.rewards[sel]
            state.pre_counts[arm - 1] += len(obs)
            state.pre_sums[arm - 1] += obs.sum()
            new_count = int(before[arm - 1]) + len(obs)
            if new_count < L:
                if len(obs) > 1:
                    preview.counts[arm - 1] += len(obs) - 1
                    preview.sums[arm - 1] += float(obs[1:].sum())
                g = lta_learning_gamma(preview, arm, float(obs[0]), state, self.cfg,
                                       self.alpha, self.instance.b)
                gammas[sel[0]] = g
                preview.counts[arm - 1] += 1
                preview.sums[arm - 1] += float(obs[0]) - g
            elif int(before[arm - 1]) < L:
                g = lta_recovery_gamma(state, arm)
                gammas[sel[0]] = g
                preview.counts[arm - 1] += len(obs)
                preview.sums[arm - 1] += float(obs.sum()) - g
            else:
                preview.counts[arm - 1] += len(obs)
                preview.sums[arm - 1] += float(obs.sum())
        state.learning_rounds += 1
        if int((before + view.arm_counts).min()) >= L:
            self._finish_learning()
        return gammas

    def _finish_learning(self) -> None:
        state = self.state
        means = state.unbiased_means()
        state.learned_order = tuple(int(k) + 1 for k in np.argsort(-means, kind="stable"))
        state.stage = "attacking"
        self.plan = _build_plan(self.instance.arm_sets, tuple(float(x) for x in means),
                                self.cfg.use_aas)
        self._oracle = OracleAttack(self.plan, self.cfg, self.instance, debug=self.debug)


class TcomTargetAttack:
    """Target-arm attack on UCB-TCOM through agent 1's observations."""

    def __init__(self, cfg: AttackConfig, instance: BanditInstance, debug: bool = False):
        if cfg.target_arm is None:
            raise ConfigError("homo_tcom needs a target arm")
        self.cfg = cfg
        self.K = instance.K
        self.debug = debug

    def __call__(self, state: TcomState, instance: BanditInstance, round_sum: float) -> float:
        arm = state.phase_arm
        if arm == self.cfg.target_arm:
            return 0.0
        if state.visible_count(self.cfg.target_arm) < 1:
            return 0.0
        g = tcom_gamma(state, arm, state.phase_reward_sum, state.phase_gamma_sum,
                       self.cfg, self.K)
        if self.debug and g > 0:
            n_end = state.visible_count(arm) + state.phase_pulls
            post = (float(state.visible_sums[arm - 1]) + state.phase_reward_sum
                    - state.phase_gamma_sum - g) / n_end
            n_t = state.visible_count(self.cfg.target_arm)
            bound = (state.visible_mean(self.cfg.target_arm)
                     - 2.0 * confidence_radius(n_t, self.K, self.cfg.delta)
                     - self.cfg.delta0)
            if post > bound + 1e-7:
                raise InvariantViolationError(
                    f"phase mean {post} above bound {bound} after attack")
        return g


class Dpe2TargetAttack:
    """Target-arm attack on DPE2 through the leader's observations."""

    def __init__(self, cfg: AttackConfig, instance: BanditInstance, debug: bool = False):
        if cfg.target_arm is None:
            raise ConfigError("homo_dpe2 needs a target arm")
        self.cfg = cfg
        self.K = instance.K
        self.debug = debug

    def __call__(self, state: Dpe2State, leader_arm: int, reward: float) -> float:
        if leader_arm == self.cfg.target_arm:
            return 0.0
        if state.snap_count(self.cfg.target_arm) < 1:
            return 0.0
        g = dpe2_gamma(state, leader_arm, reward, self.cfg, self.K)
        if self.debug and g > 0:
            n_end = (state.snap_count(leader_arm)
                     + int(state.pending_counts[leader_arm - 1]) + 1)
            post = (float(state.snap_sums[leader_arm - 1])
                    + float(state.pending_sums[leader_arm - 1]) + reward - g) / n_end
            n_t = state.snap_count(self.cfg.target_arm)
            bound = (state.snap_mean(self.cfg.target_arm)
                     - 2.0 * confidence_radius(n_t, self.K, self.cfg.delta)
                     - self.cfg.delta0)
            if post > bound + 1e-7:
                raise InvariantViolationError(
                    f"leader mean {post} above bound {bound} after attack")
        return g


# --- closed-form thresholds and bounds ------------------------------------

@lru_cache(maxsize=1024)
def _scan_t_over_log(target: float) -> int:
    """Smallest integer t >= 3 with t / log t >= target (t/log t increases
    on t >= 3, so an upward scan terminates)."""
    t = 3
    while t / math.log(t) < target:
        t += 1
    return t


def compute_T0(instance: BanditInstance, plan: AttackPlan, alpha: float,
               delta0: float) -> int:
    """Round after which target agents are guaranteed first access to every
    attacked arm: the smallest t >= 3 with t/log t >= max_k of the per-arm
    constants c_k."""
    if alpha <= 2:
        raise ConfigError(f"the threshold calculation needs alpha > 2, got {alpha}")
    worst = 0.0
    for k in plan.attacked_arms:
        g = plan.responsible[k]
        outside = set(instance.arm_set(g)) - set(plan.attacked_arms)
        anchor = plan.best_outside[g]
        c1 = 0.0
        for kp in outside - {anchor}:
            gap = instance.gap(anchor, kp)
            if gap == 0:
                raise DegenerateGapError(f"zero gap between arms {anchor} and {kp}")
            c1 += alpha / (2.0 * gap * gap)
        rivals = [m for m in plan.groups[k] if plan.best_outside[m] != anchor]
        if rivals:
            smallest = min(abs(instance.gap(plan.best_outside[m], anchor)) for m in rivals)
            if smallest == 0:
                raise DegenerateGapError(f"zero gap among alternatives for arm {k}")
            c2 = alpha / (2.0 * smallest * smallest)
        else:
            c2 = 0.0
        c3 = len(set(instance.arm_set(g)) & set(plan.attacked_arms)) * alpha / delta0 ** 2
        worst = max(worst, c1 + c2 + c3)
    return _scan_t_over_log(worst)


@dataclass(frozen=True)
class BoundValues:
    """Closed-form bound evaluations: a regret lower bound, a cumulative
    cost upper bound, and a pull bound."""

    regret_lb: float
    cost_ub: float
    pulls_bound: float
    t0: Optional[int] = None


def _require(params: dict, *names):
    missing = [n for n in names if params.get(n) is None]
    if missing:
        raise MissingParamError(f"missing parameters: {', '.join(missing)}")
    return [params[n] for n in names]


def _homo_style_cost(scale: float, gaps_to_target, delta0: float, tail: float) -> float:
    return scale * sum(g + delta0 for g in gaps_to_target) + tail


def theoretical_cost_bound(kind: str, **params) -> BoundValues:
    """Evaluate one family of closed-form pull/cost/regret bounds.

    kinds and their required parameters:
      thm1: T K M alpha delta0 delta sigma gaps_to_target
      thm3: T K alpha delta0 delta sigma delta_min t0 group_sizes gaps_to_target
      thm4: thm3 parameters plus c b
      thm5: T K M beta_phase delta0 delta sigma gaps_to_target
      thm6: T K M alpha delta0 delta sigma gaps_to_target

    gaps_to_target lists the mean gap to the worst arm for every bounded arm
    (all k < K for the homogeneous kinds, the attacked arms for thm3/thm4).
    Where a family gives only a pull bound, the regret lower bound is its
    immediate consequence: pulls of the target arm times the gap to the
    optimal arm.
    """
    if kind == "thm1":
        T, K, M, alpha, delta0, delta, sigma, gaps = _require(
            params, "T", "K", "M", "alpha", "delta0", "delta", "sigma", "gaps_to_target")
        logT = math.log(T)
        scale = alpha * logT / (2.0 * delta0 ** 2)
        tail = (4.0 * (K - 1) * sigma / delta0) * math.sqrt(
            alpha * logT * math.log(K * math.pi ** 2 * alpha ** 2 * logT ** 2
                                    / (12.0 * delta * delta0 ** 4)))
        cost = _homo_style_cost(scale, gaps, delta0, tail)
        pulls = M * T - (K - 1) * scale
        return BoundValues(pulls * max(gaps), cost, pulls)

    if kind in ("thm3", "thm4"):
        T, K, alpha, delta0, delta, sigma, delta_min, t0, group_sizes, gaps = _require(
            params, "T", "K", "alpha", "delta0", "delta", "sigma", "delta_min",
            "t0", "group_sizes", "gaps_to_target")
        logT = math.log(T)
        regret = delta_min * sum(
            gs * T - 2.0 * alpha * logT / delta0 ** 2 for gs in group_sizes)
        tail = (4.0 * sigma / delta0) * math.sqrt(
            alpha * logT * math.log(K * math.pi ** 2 * alpha ** 2 * logT ** 2
                                    / (12.0 * delta * delta0 ** 4)))
        cost = sum(alpha * logT / (2.0 * delta0 ** 2) * (g + delta0) + t0 + tail
                   for g in gaps)
        pulls = 2.0 * alpha * logT / delta0 ** 2
        if kind == "thm4":
            c, b = _require(params, "c", "b")
            beta1 = confidence_radius(1, K, delta)
            gap_1K = params.get("gap_1K")
            if gap_1K is None:
                raise MissingParamError("missing parameters: gap_1K")
            cost += (4.0 * K * logT / (c * delta_min ** 2)) * (gap_1K + beta1 + b)
        return BoundValues(regret, cost, pulls, t0=t0)

    if kind == "thm5":
        T, K, M, beta_phase, delta0, delta, sigma, gaps = _require(
            params, "T", "K", "M", "beta_phase", "delta0", "delta", "sigma",
            "gaps_to_target")
        logT = math.log(T)
        scale = 2.0 * beta_phase * logT / delta0 ** 2
        tail = (8.0 * (K - 1) * sigma ** 2 / delta0 ** 2) * math.sqrt(
            beta_phase * logT * math.log(4.0 * K * beta_phase ** 2 * math.pi ** 2
                                         * logT ** 2 / (3.0 * delta * delta0 ** 4)))
        cost = _homo_style_cost(scale, gaps, delta0, tail)
        pulls = M * T - (K - 1) * scale
        return BoundValues(pulls * max(gaps), cost, pulls)

    if kind == "thm6":
        T, K, M, alpha, delta0, delta, sigma, gaps = _require(
            params, "T", "K", "M", "alpha", "delta0", "delta", "sigma", "gaps_to_target")
        logT = math.log(T)
        inner = alpha * logT / (2.0 * delta0 ** 2) + 1.0
        tail = 4.0 * (K - 1) * sigma * math.sqrt(
            2.0 * inner * math.log(K * math.pi ** 2 / (3.0 * delta) * inner ** 2))
        cost = inner * sum(g + delta0 for g in gaps) + tail
        pulls = M * (T - K) - (K - 1) * inner
        t0 = _scan_t_over_log(K * math.ceil(alpha / (2.0 * delta0 ** 2) + 1.0))
        return BoundValues(pulls * max(gaps), cost, pulls, t0=t0)

    raise MissingParamError(f"unknown bound kind {kind!r}")

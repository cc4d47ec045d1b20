"""Bandit environments: instances, reward sampling, seeded randomness, fixtures.

Arm and agent ids are 1-based throughout the public API; numpy arrays are
indexed positionally (arm k lives at index k - 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    AgentOutOfRangeError,
    ArmOutOfRangeError,
    EmptyArmSetError,
    InfeasibleGapBudgetError,
    MeanOutOfRangeError,
    NonDecreasingMeansError,
    SingletonArmSetError,
    UnknownFixtureError,
)

# Seed used to generate the homo20/hetero20 fixtures. Chosen so that in
# hetero20 every arm is reachable by at least two agents and the top mean
# stays clearly below the cap b; documented so the fixtures are reproducible.
FIXTURE_SEED = 11


class RngStream:
    """Counter-based random stream.

    Distinct (seed, run_id) pairs yield independent streams, and a stream is
    a pure function of its key, independent of scheduling. Single-owner per
    simulation run; never share one stream across threads.
    """

    def __init__(self, seed: int, run_id: int = 0):
        self.seed = int(seed) % 2**64
        self.run_id = int(run_id) % 2**64
        key = np.array([self.seed, self.run_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def normal(self, loc, scale, size=None):
        return self._gen.normal(loc, scale, size)

    def uniform(self, low, high, size=None):
        return self._gen.uniform(low, high, size)

    def subset(self, n: int, size: int) -> tuple[int, ...]:
        """Uniform random size-subset of {1..n}, sorted ascending."""
        picks = self._gen.choice(n, size=size, replace=False)
        return tuple(sorted(int(p) + 1 for p in picks))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, run_id={self.run_id})"


@dataclass(frozen=True)
class BanditInstance:
    """Ground-truth environment: arm means, noise scale, per-agent arm sets.

    means must be strictly decreasing and lie in [0, b]; every arm set is
    nonempty, and in heterogeneous instances every agent has more than one
    arm. An instance is homogeneous iff every arm set equals {1..K}.
    """

    means: tuple[float, ...]
    sigma: float
    b: float
    arm_sets: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        K = len(self.means)
        if K == 0:
            raise NonDecreasingMeansError("need at least one arm")
        if self.b <= 0:
            raise MeanOutOfRangeError(f"b must be positive, got {self.b}")
        if self.sigma < 0:
            raise MeanOutOfRangeError(f"sigma must be nonnegative, got {self.sigma}")
        for mu in self.means:
            if not math.isfinite(mu) or mu < 0 or mu > self.b:
                raise MeanOutOfRangeError(f"mean {mu} outside [0, {self.b}]")
        for a, c in zip(self.means, self.means[1:]):
            if not a > c:
                raise NonDecreasingMeansError(
                    f"means must be strictly decreasing, got {a} before {c}")
        if not self.arm_sets:
            raise EmptyArmSetError("need at least one agent")
        full = tuple(range(1, K + 1))
        homogeneous = all(s == full for s in self.arm_sets)
        for m, s in enumerate(self.arm_sets, start=1):
            if len(s) == 0:
                raise EmptyArmSetError(f"agent {m} has an empty arm set")
            if any(k < 1 or k > K for k in s):
                raise ArmOutOfRangeError(f"agent {m} references arms outside 1..{K}")
            if len(set(s)) != len(s):
                raise ArmOutOfRangeError(f"agent {m} lists duplicate arms")
            if not homogeneous and len(s) <= 1:
                raise SingletonArmSetError(
                    f"agent {m} has a singleton arm set in a heterogeneous instance")
        object.__setattr__(self, "_homogeneous", homogeneous)

    @property
    def K(self) -> int:
        return len(self.means)

    @property
    def M(self) -> int:
        return len(self.arm_sets)

    @property
    def is_homogeneous(self) -> bool:
        return self._homogeneous

    def mean(self, arm: int) -> float:
        if not 1 <= arm <= self.K:
            raise ArmOutOfRangeError(f"arm {arm} outside 1..{self.K}")
        return self.means[arm - 1]

    def arm_set(self, agent: int) -> tuple[int, ...]:
        if not 1 <= agent <= self.M:
            raise AgentOutOfRangeError(f"agent {agent} outside 1..{self.M}")
        return self.arm_sets[agent - 1]

    def gap(self, k: int, kp: int) -> float:
        """Mean reward gap between arms k and kp."""
        return self.mean(k) - self.mean(kp)

    @property
    def delta_min(self) -> float:
        return min(a - c for a, c in zip(self.means, self.means[1:]))


@lru_cache(maxsize=256)
def means_array(instance: BanditInstance) -> np.ndarray:
    a = np.array(instance.means, dtype=np.float64)
    a.setflags(write=False)
    return a


@lru_cache(maxsize=256)
def arm_set_matrix(instance: BanditInstance) -> np.ndarray:
    """(M, width) matrix of 0-based arm indices, rows padded with the row's
    first arm so a row-wise argmax still resolves ties to the lowest arm id."""
    width = max(len(s) for s in instance.arm_sets)
    mat = np.empty((instance.M, width), dtype=np.int64)
    for i, s in enumerate(instance.arm_sets):
        row = [k - 1 for k in s] + [s[0] - 1] * (width - len(s))
        mat[i] = row
    mat.setflags(write=False)
    return mat


def build_instance(means, sigma, b, arm_sets) -> BanditInstance:
    """Validated constructor; rejects any violation of the instance invariants."""
    means_t = tuple(float(m) for m in means)
    sets_t = tuple(tuple(sorted(int(k) for k in s)) for s in arm_sets)
    return BanditInstance(means=means_t, sigma=float(sigma), b=float(b), arm_sets=sets_t)


def random_instance(K, M, set_size, mean_low, mean_high, min_gap, b, sigma,
                    rng: RngStream) -> BanditInstance:
    """Instance with K means in (mean_low, mean_high), adjacent gaps >= min_gap,
    and a uniformly random set_size-subset of arms per agent.
    """
    span = mean_high - mean_low
    if K * min_gap >= span:
        raise InfeasibleGapBudgetError(
            f"{K} means with gaps >= {min_gap} cannot fit in ({mean_low}, {mean_high})")
    if not 1 < set_size <= K:
        raise SingletonArmSetError(f"set_size must be in (1, {K}], got {set_size}")
    slack = span - (K - 1) * min_gap
    u = np.sort(rng.uniform(0.0, slack, K))
    ascending = mean_low + u + min_gap * np.arange(K)
    means = tuple(float(x) for x in ascending[::-1])
    if set_size == K:
        arm_sets = tuple(tuple(range(1, K + 1)) for _ in range(M))
    else:
        arm_sets = tuple(rng.subset(K, set_size) for _ in range(M))
    return build_instance(means, sigma, b, arm_sets)


def sample_reward(instance: BanditInstance, arm: int, rng: RngStream) -> float:
    """One Gaussian draw with mean mu(arm) and standard deviation sigma."""
    if not 1 <= arm <= instance.K:
        raise ArmOutOfRangeError(f"arm {arm} outside 1..{instance.K}")
    return float(rng.normal(instance.mean(arm), instance.sigma))


def local_optimal(instance: BanditInstance, agent: int) -> int:
    """Agent's highest-mean arm within its arm set (unique by strict ordering)."""
    return min(instance.arm_set(agent), key=lambda k: (instance.mean(k) * -1, k))


FIXTURE_NAMES = ("fig1a", "fig1b", "homo20", "hetero20")


def fixture(name: str) -> BanditInstance:
    """Canonical instances used by the demonstrations and presets.

    fig1a/fig1b are the two 3-arm, 2-agent conflict examples with means
    (9, 8, 3), sigma 0.5, b 10. homo20/hetero20 are the 20-arm, 20-agent
    configurations (means in (0, 5), adjacent gaps >= 0.1, sigma 0.1, b 5)
    generated from FIXTURE_SEED; hetero20 gives each agent 5 arms.
    """
    if name == "fig1a":
        return build_instance((9.0, 8.0, 3.0), 0.5, 10.0, ((1, 2, 3), (1, 2)))
    if name == "fig1b":
        return build_instance((9.0, 8.0, 3.0), 0.5, 10.0, ((1, 2), (2, 3)))
    if name == "homo20":
        return random_instance(20, 20, 20, 0.0, 5.0, 0.1, 5.0, 0.1,
                               RngStream(FIXTURE_SEED))
    if name == "hetero20":
        return random_instance(20, 20, 5, 0.0, 5.0, 0.1, 5.0, 0.1,
                               RngStream(FIXTURE_SEED))
    raise UnknownFixtureError(name)

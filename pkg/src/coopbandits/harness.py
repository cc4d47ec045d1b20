"""Experiment orchestration: configuration, presets, seeded repetitions,
CSV export.

Every run is a pure function of (config, repetition index); repetitions may
execute in parallel and results are always ordered by repetition index, so
output is schedule independent.
"""
from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
import yaml

from . import attack as atk
from .algo import Dpe2State, SharedStats, TcomState, coucb_round, dpe2_round, tcom_round
from .attack import AttackConfig, AttackLedger, AttackPlan
from .env import BanditInstance, RngStream, build_instance, fixture, random_instance
from .errors import ConfigError
from .metrics import RunResult, build_run_result

CSV_COLUMNS = (
    "run_id", "seed", "t", "regret", "cost", "target_pulls",
    "affected_agent_count", "per_agent_optimal_fraction",
    "bound_regret_lb", "bound_cost_ub",
)

RANDOM_INSTANCE_KEYS = ("K", "M", "set_size", "mean_low", "mean_high",
                        "min_gap", "b", "sigma")
EXPLICIT_INSTANCE_KEYS = ("means", "sigma", "b", "arm_sets")


@dataclass(frozen=True)
class InstanceSpec:
    """Where the environment comes from: a named fixture, random-instance
    parameters (freshly drawn per repetition), or an explicit description."""

    fixture: Optional[str] = None
    random: Optional[dict] = None
    explicit: Optional[dict] = None

    def __post_init__(self):
        given = [f for f in ("fixture", "random", "explicit")
                 if getattr(self, f) is not None]
        if len(given) != 1:
            raise ConfigError(f"instance needs exactly one source, got {given or 'none'}")
        if self.random is not None:
            unknown = set(self.random) - set(RANDOM_INSTANCE_KEYS)
            if unknown:
                raise ConfigError(f"unknown random-instance fields: {sorted(unknown)}")
            missing = set(RANDOM_INSTANCE_KEYS) - set(self.random)
            if missing:
                raise ConfigError(f"missing random-instance fields: {sorted(missing)}")
        if self.explicit is not None:
            unknown = set(self.explicit) - set(EXPLICIT_INSTANCE_KEYS)
            if unknown:
                raise ConfigError(f"unknown explicit-instance fields: {sorted(unknown)}")

    def resolve(self, seed: int) -> BanditInstance:
        if self.fixture is not None:
            return fixture(self.fixture)
        if self.explicit is not None:
            return build_instance(**self.explicit)
        p = self.random
        return random_instance(p["K"], p["M"], p["set_size"], p["mean_low"],
                               p["mean_high"], p["min_gap"], p["b"], p["sigma"],
                               RngStream(seed, run_id=1))


@dataclass(frozen=True)
class AlgoSpec:
    name: str = "coucb"
    alpha: float = 4.0
    beta_phase: float = 2.0

    def __post_init__(self):
        if self.name not in ("coucb", "tcom", "dpe2"):
            raise ConfigError(f"unknown algorithm {self.name!r}")
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if self.beta_phase <= 1:
            raise ConfigError(f"beta_phase must exceed 1, got {self.beta_phase}")


@dataclass(frozen=True)
class RunSpec:
    horizon: int = 100000
    repetitions: int = 10
    base_seed: int = 1009
    stride: int = 100
    workers: int = 1
    out: Optional[str] = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError(f"horizon must be at least 1, got {self.horizon}")
        if self.repetitions < 1:
            raise ConfigError(f"repetitions must be at least 1, got {self.repetitions}")
        if self.stride < 1 or self.workers < 1:
            raise ConfigError("stride and workers must be at least 1")


_STRATEGY_ALGO = {
    "homo_coucb": "coucb",
    "oracle_attack": "coucb",
    "lta": "coucb",
    "homo_tcom": "tcom",
    "homo_dpe2": "dpe2",
}


@dataclass(frozen=True)
class ExperimentConfig:
    instance: InstanceSpec
    algo: AlgoSpec = AlgoSpec()
    attack: AttackConfig = AttackConfig()
    run: RunSpec = RunSpec()

    def __post_init__(self):
        strategy = self.attack.strategy
        needed = _STRATEGY_ALGO.get(strategy)
        if needed is not None and self.algo.name != needed:
            raise ConfigError(f"strategy {strategy!r} requires the {needed!r} algorithm")
        if strategy == "lta" and self.attack.delta_min is None:
            raise ConfigError("lta needs attack.delta_min")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        unknown = set(raw) - {"instance", "algo", "attack", "run"}
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        if "instance" not in raw:
            raise ConfigError("config needs an instance section")
        sections = {}
        for name, klass in (("instance", InstanceSpec), ("algo", AlgoSpec),
                            ("attack", AttackConfig), ("run", RunSpec)):
            data = raw.get(name, {})
            if not isinstance(data, dict):
                raise ConfigError(f"section {name!r} must be a mapping")
            fields = {f.name for f in dataclasses.fields(klass)}
            bad = set(data) - fields
            if bad:
                raise ConfigError(f"unknown fields in {name!r}: {sorted(bad)}")
            try:
                sections[name] = klass(**data)
            except ConfigError:
                raise
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid {name!r} section: {exc}") from exc
        return cls(**sections)


def load_config(path: str, overrides: Optional[list[str]] = None) -> ExperimentConfig:
    """Read a YAML config file; overrides are dotted key=value pairs that
    replace fields before validation (values parsed as YAML scalars)."""
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigError("config file must contain a mapping")
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form section.field=value")
        dotted, value = item.split("=", 1)
        parts = dotted.split(".")
        node = raw
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot override through scalar field {p!r}")
        node[parts[-1]] = yaml.safe_load(value)
    return ExperimentConfig.from_dict(raw)


# --- presets ---------------------------------------------------------------

def _preset_table() -> dict[str, ExperimentConfig]:
    homo = InstanceSpec(fixture="homo20")
    hetero = InstanceSpec(fixture="hetero20")
    run = RunSpec()
    return {
        # Heterogeneous experiment setup: T=100000, K=20, M=20, |arm set|=5,
        # alpha=10, delta0=0.05, delta=0.1, sigma=0.1, 10 repetitions.
        "paper-s5-hetero": ExperimentConfig(
            instance=hetero, algo=AlgoSpec(name="coucb", alpha=10.0),
            attack=AttackConfig(strategy="oracle_attack", delta0=0.05, delta=0.1),
            run=run),
        "paper-s5-hetero-lta": ExperimentConfig(
            instance=hetero, algo=AlgoSpec(name="coucb", alpha=10.0),
            attack=AttackConfig(strategy="lta", delta0=0.05, delta=0.1,
                                delta_min=0.1),
            run=run),
        "paper-s5-hetero-noattack": ExperimentConfig(
            instance=hetero, algo=AlgoSpec(name="coucb", alpha=10.0),
            attack=AttackConfig(strategy="none"), run=run),
        # Homogeneous experiment setup: alpha=4, delta0=0.1, delta=0.1,
        # target arm = worst arm.
        "paper-appendix-homo": ExperimentConfig(
            instance=homo, algo=AlgoSpec(name="coucb", alpha=4.0),
            attack=AttackConfig(strategy="homo_coucb", delta0=0.1, delta=0.1),
            run=run),
        "paper-appendix-homo-noattack": ExperimentConfig(
            instance=homo, algo=AlgoSpec(name="coucb", alpha=4.0),
            attack=AttackConfig(strategy="none"), run=run),
        "paper-appendix-tcom": ExperimentConfig(
            instance=homo, algo=AlgoSpec(name="tcom", beta_phase=2.0),
            attack=AttackConfig(strategy="homo_tcom", delta0=0.1, delta=0.1),
            run=run),
        "paper-appendix-dpe2": ExperimentConfig(
            instance=homo, algo=AlgoSpec(name="dpe2", alpha=4.0),
            attack=AttackConfig(strategy="homo_dpe2", delta0=0.1, delta=0.1),
            run=run),
    }


def preset_names() -> tuple[str, ...]:
    return tuple(sorted(_preset_table()))


def preset_config(name: str) -> ExperimentConfig:
    table = _preset_table()
    if name not in table:
        raise ConfigError(f"unknown preset {name!r}; known: {', '.join(sorted(table))}")
    return table[name]


# --- simulation ------------------------------------------------------------

def _resolve_target(cfg: ExperimentConfig, instance: BanditInstance) -> AttackConfig:
    ac = cfg.attack
    if ac.strategy in ("homo_coucb", "homo_tcom", "homo_dpe2") and ac.target_arm is None:
        ac = dataclasses.replace(ac, target_arm=instance.K)
    if ac.target_arm is not None and not 1 <= ac.target_arm <= instance.K:
        raise ConfigError(f"target arm {ac.target_arm} outside 1..{instance.K}")
    return ac


def _check_compat(cfg: ExperimentConfig, instance: BanditInstance) -> None:
    if cfg.algo.name in ("tcom", "dpe2") and not instance.is_homogeneous:
        raise ConfigError(f"{cfg.algo.name} requires a homogeneous instance")
    if cfg.attack.strategy in ("oracle_attack", "lta") and instance.is_homogeneous:
        raise ConfigError(f"{cfg.attack.strategy} requires a heterogeneous instance")
    if cfg.attack.strategy == "lta":
        c = atk.accessibility_rate(instance, range(1, instance.M + 1))
        if c <= 0:
            raise ConfigError("lta cannot finish learning: some arm is unreachable")


BOUND_KINDS = {"homo_coucb": "thm1", "oracle_attack": "thm3", "lta": "thm4",
               "homo_tcom": "thm5", "homo_dpe2": "thm6"}


def _bound_params(cfg: ExperimentConfig, instance: BanditInstance,
                  attack_cfg: AttackConfig, plan: Optional[AttackPlan],
                  t0: Optional[int]) -> Optional[tuple[str, dict]]:
    """Bound kind and its horizon-independent parameters for a configured
    strategy, or None when no bound applies."""
    strategy = attack_cfg.strategy
    if strategy == "none":
        return None
    kind = BOUND_KINDS[strategy]
    K, M = instance.K, instance.M
    if strategy in ("homo_coucb", "homo_tcom", "homo_dpe2"):
        target = attack_cfg.target_arm
        gaps = [instance.mean(k) - instance.mean(target)
                for k in range(1, K + 1) if k != target]
        params = dict(K=K, M=M, delta0=attack_cfg.delta0, delta=attack_cfg.delta,
                      sigma=instance.sigma, gaps_to_target=gaps)
        if strategy == "homo_tcom":
            params["beta_phase"] = cfg.algo.beta_phase
        else:
            params["alpha"] = cfg.algo.alpha
        return kind, params
    # oracle_attack / lta: quantities come from the true-instance plan
    worst = instance.K
    params = dict(
        K=K, alpha=cfg.algo.alpha, delta0=attack_cfg.delta0, delta=attack_cfg.delta,
        sigma=instance.sigma, delta_min=instance.delta_min, t0=t0,
        group_sizes=[plan.group_size(k) for k in plan.attacked_arms],
        gaps_to_target=[instance.mean(k) - instance.mean(worst)
                        for k in plan.attacked_arms])
    if strategy == "lta":
        params["c"] = atk.accessibility_rate(instance, range(1, M + 1))
        params["b"] = instance.b
        params["gap_1K"] = instance.mean(1) - instance.mean(worst)
    return kind, params


def _make_bounds_fn(cfg: ExperimentConfig, instance: BanditInstance,
                    attack_cfg: AttackConfig, plan: Optional[AttackPlan],
                    t0: Optional[int]):
    spec = _bound_params(cfg, instance, attack_cfg, plan, t0)
    if spec is None:
        return None
    kind, params = spec

    def fn(t: int):
        if t < 2:  # the formulas need log T > 0
            return math.nan, math.nan
        v = atk.theoretical_cost_bound(kind, T=t, **params)
        return v.regret_lb, v.cost_ub

    return fn


def simulate_bounds(cfg: ExperimentConfig) -> dict:
    """Theoretical bound values at the configured horizon, without running
    any simulation."""
    instance = cfg.instance.resolve(cfg.run.base_seed)
    _check_compat(cfg, instance)
    attack_cfg = _resolve_target(cfg, instance)
    if attack_cfg.strategy == "none":
        return {"strategy": "none"}
    plan = t0 = None
    if attack_cfg.strategy in ("oracle_attack", "lta"):
        plan = atk.plan_attack(instance, use_aas=attack_cfg.use_aas)
        t0 = atk.compute_T0(instance, plan, cfg.algo.alpha, attack_cfg.delta0)
    kind, params = _bound_params(cfg, instance, attack_cfg, plan, t0)
    values = atk.theoretical_cost_bound(kind, T=cfg.run.horizon, **params)
    out = {
        "strategy": attack_cfg.strategy,
        "kind": kind,
        "T": cfg.run.horizon,
        "regret_lb": values.regret_lb,
        "cost_ub": values.cost_ub,
        "pulls_bound": values.pulls_bound,
    }
    if values.t0 is not None or t0 is not None:
        out["t0"] = values.t0 if values.t0 is not None else t0
    if plan is not None:
        out["affected_agents"] = plan.affected_agents
        out["attacked_arms"] = plan.attacked_arms
        out["target_agents"] = plan.target_agents
    return out


def simulate_run(cfg: ExperimentConfig, rep: int, debug: bool = False) -> RunResult:
    """Run one repetition; the stream is keyed by base_seed XOR rep."""
    seed = cfg.run.base_seed ^ rep
    instance = cfg.instance.resolve(seed)
    _check_compat(cfg, instance)
    attack_cfg = _resolve_target(cfg, instance)
    T, M, K = cfg.run.horizon, instance.M, instance.K
    rng = RngStream(seed, run_id=0)
    arms_hist = np.empty((T, M), dtype=np.int16)
    gamma_hist = np.zeros((T, M), dtype=np.float64)
    details: dict = {}
    plan: Optional[AttackPlan] = None
    t0: Optional[int] = None

    strategy = attack_cfg.strategy
    if strategy in ("oracle_attack", "lta"):
        plan = atk.plan_attack(instance, use_aas=attack_cfg.use_aas)
        t0 = atk.compute_T0(instance, plan, cfg.algo.alpha, attack_cfg.delta0)
        details["plan"] = plan
        details["t0"] = t0

    if cfg.algo.name == "coucb":
        stats = SharedStats.zeros(K)
        if strategy == "none":
            hook = None
        elif strategy == "homo_coucb":
            hook = atk.HomoCoucbAttack(attack_cfg, instance, debug=debug)
        elif strategy == "oracle_attack":
            hook = atk.OracleAttack(plan, attack_cfg, instance, debug=debug)
        else:
            hook = atk.LtaAttack(attack_cfg, instance, cfg.algo.alpha, debug=debug)
        for i in range(T):
            rec = coucb_round(stats, instance, cfg.algo.alpha, hook, rng)
            arms_hist[i] = rec.arms
            gamma_hist[i] = rec.gamma
        if strategy == "lta":
            st = hook.state
            details["lta_stage1_rounds"] = st.learning_rounds
            details["lta_learned_order"] = st.learned_order
            details["lta_learned_plan"] = hook.plan
            true_order = tuple(range(1, K + 1))
            details["lta_ranking_correct"] = st.learned_order == true_order
            details["lta_threshold"] = st.threshold
            details["accessibility"] = atk.accessibility_rate(instance,
                                                              range(1, M + 1))
    elif cfg.algo.name == "tcom":
        state = TcomState.fresh(K, cfg.algo.beta_phase)
        hook = (atk.TcomTargetAttack(attack_cfg, instance, debug=debug)
                if strategy == "homo_tcom" else None)
        for i in range(T):
            rec = tcom_round(state, instance, hook, rng)
            arms_hist[i] = rec.arms
            gamma_hist[i] = rec.gamma
    else:
        state = Dpe2State.fresh(K, cfg.algo.alpha)
        hook = (atk.Dpe2TargetAttack(attack_cfg, instance, debug=debug)
                if strategy == "homo_dpe2" else None)
        for i in range(T):
            rec = dpe2_round(state, instance, hook, rng)
            arms_hist[i] = rec.arms
            gamma_hist[i] = rec.gamma

    if strategy == "none":
        affected = 0
    elif strategy in ("oracle_attack", "lta"):
        affected = len(plan.affected_agents)
    elif attack_cfg.attack_all:
        affected = M
    else:
        affected = 1
    mode = "homogeneous" if instance.is_homogeneous else "heterogeneous"
    target = attack_cfg.target_arm if attack_cfg.target_arm is not None else K
    bounds_fn = _make_bounds_fn(cfg, instance, attack_cfg, plan, t0)
    ledger = AttackLedger(gamma_hist, arms_hist.astype(np.int64))
    details["attacked_agents"] = ledger.attacked_agents()
    details["per_agent_cost"] = np.abs(gamma_hist).sum(axis=0)
    details["instance"] = instance
    return build_run_result(instance, rep, seed, arms_hist, gamma_hist, mode,
                            target, cfg.run.stride, affected, bounds_fn, details)


def _run_one(args) -> RunResult:
    cfg, rep, debug = args
    return simulate_run(cfg, rep, debug)


def run_experiment(cfg: ExperimentConfig, debug: bool = False) -> list[RunResult]:
    """One RunResult per repetition, ordered by repetition index regardless
    of execution order."""
    reps = range(cfg.run.repetitions)
    if cfg.run.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.run.workers) as pool:
            results = list(pool.map(_run_one, [(cfg, r, debug) for r in reps]))
    else:
        results = [simulate_run(cfg, r, debug) for r in reps]
    return sorted(results, key=lambda r: r.run_id)


def _replace_field(cfg: ExperimentConfig, dotted: str, value) -> ExperimentConfig:
    section, _, name = dotted.partition(".")
    if not name:
        raise ConfigError(f"axis must be section.field, got {dotted!r}")
    try:
        part = getattr(cfg, section)
    except AttributeError:
        raise ConfigError(f"unknown config section {section!r}") from None
    if not any(f.name == name for f in dataclasses.fields(part)):
        raise ConfigError(f"unknown field {name!r} in section {section!r}")
    return dataclasses.replace(cfg, **{section: dataclasses.replace(part, **{name: value})})


def sweep(cfg: ExperimentConfig, axis: str, values, debug: bool = False) -> list[dict]:
    """Run the experiment once per axis value; one summary row per
    (value, repetition)."""
    rows = []
    for value in values:
        if not isinstance(value, (int, float)):
            raise ConfigError(f"sweep values must be numeric, got {value!r}")
        sub = _replace_field(cfg, axis, value)
        for res in run_experiment(sub, debug=debug):
            rows.append({
                "axis": axis,
                "value": value,
                "run_id": res.run_id,
                "seed": res.seed,
                "regret": res.final_regret,
                "cost": res.final_cost,
                "target_pulls": int(res.target_pulls[-1]),
            })
    return rows


def export_csv(results: list[RunResult], path: str) -> None:
    """Write the stable grid-point schema: one row per (repetition, grid
    point), full-precision floats, fixed column order."""
    lines = [",".join(CSV_COLUMNS)]
    for res in results:
        for i, t in enumerate(res.grid):
            fractions = ";".join(repr(float(v))
                                 for v in res.per_agent_optimal_fraction_grid[i])
            lines.append(",".join((
                str(res.run_id),
                str(res.seed),
                str(int(t)),
                repr(float(res.regret[i])),
                repr(float(res.cost[i])),
                str(int(res.target_pulls[i])),
                str(res.affected_agent_count),
                fractions,
                repr(float(res.bound_regret_lb[i])),
                repr(float(res.bound_cost_ub[i])),
            )))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def export_sweep_csv(rows: list[dict], path: str) -> None:
    columns = ("axis", "value", "run_id", "seed", "regret", "cost", "target_pulls")
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(
            repr(float(row[c])) if isinstance(row[c], float) else str(row[c])
            for c in columns))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")

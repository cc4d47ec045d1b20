"""Simulator and analysis toolkit for reward-manipulation attacks on
cooperative multi-agent multi-armed bandits."""

from .algo import (
    Dpe2State,
    RoundRecord,
    SharedStats,
    TcomState,
    confidence_radius,
    coucb_round,
    dpe2_round,
    tcom_round,
    ucb_index,
)
from .attack import (
    AttackConfig,
    AttackLedger,
    AttackPlan,
    BoundValues,
    LtaState,
    aas,
    accessibility_rate,
    brute_force_max_group,
    compute_T0,
    dpe2_gamma,
    homo_coucb_gamma,
    is_conflict,
    lta_learning_gamma,
    lta_recovery_gamma,
    lta_threshold_L,
    oa_gamma,
    plan_attack,
    tas,
    tcom_gamma,
    theoretical_cost_bound,
)
from .env import (
    BanditInstance,
    RngStream,
    build_instance,
    fixture,
    local_optimal,
    random_instance,
    sample_reward,
)
from .harness import (
    ExperimentConfig,
    export_csv,
    load_config,
    preset_config,
    preset_names,
    run_experiment,
    simulate_run,
    sweep,
)
from .metrics import RunResult, cumulative_cost, per_agent_optimal_fraction, regret

__version__ = "0.1.0"

"""Information-state filters, plausibility and illusion checks, and producer planning."""

from .agents import AgentModel, Correspondence, ExtrinsicWorld, preimage
from .errors import (
    BudgetExceeded,
    ConfigError,
    DisturbanceUnresolved,
    Infeasible,
    InconsistentSensing,
    InvalidParams,
    MetricMissing,
    OutsideWindow,
    PercengError,
    PolicyUndefined,
    SpaceNotEnumerable,
    SupportMismatch,
    ZeroEvidence,
)
from .filters import (
    HistoryIState,
    NdetIState,
    ProbIState,
    check_sufficiency,
    filter_history,
    initial_istate,
    ndet_predict,
    ndet_step,
    ndet_update,
    prob_predict,
    prob_step,
    prob_update,
    update_istate,
)
from .metrics import MarginResult, margin_field, margins_u, margins_y, plausible_observation_set
from .plausibility import classify_trace, is_illusion, is_plausible, kl_divergence, kl_plausible
from .producer import (
    CostModel,
    Goal,
    StationarySetting,
    evaluate_policy_probabilistic,
    evaluate_policy_worst_case,
    plan_action_sequence,
    select_stationary_action,
)
from .relations import RelationSet
from .scenarios import SCENARIOS, Scenario, instantiate_scenario
from .simulation import Resolver, System, simulate, step_coupled_system
from .spaces import Space, canonical_key

__version__ = "0.1.0"

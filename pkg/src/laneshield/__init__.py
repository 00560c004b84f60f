"""Single-lane car-following safety toolkit.

A verified braking envelope and its runtime monitors, sandbox/shield
wrappers for discrete-action neural controllers, a kinematic simulator
with exact and forward-Euler integration, and an interval branch-and-bound
verifier that enumerates and confirms counterexample regions.
"""
from .constants import DEFAULTS, Constants, ctx_valid, in_context, load_constants
from .envelope import (
    corr,
    invariant_ahead,
    invariant_behind,
    safe_back,
    safe_front,
    stop_dist_ego,
    stop_dist_other,
)
from .harness import (
    CampaignConfig,
    CampaignSummary,
    EpisodeResult,
    EulerGapScenario,
    FallbackOnly,
    JscPolicy,
    RawPolicy,
    SamplingError,
    VeriPhyPolicy,
    campaign,
    euler_gap_search,
    falsify,
    run_episode,
    sample_initial,
)
from .monitor import (
    DenialReason,
    ShieldDecision,
    Verdict,
    allow_behind,
    ctrl_nn_allows,
    jsc_filter,
    model_monitor,
    veriphy_step,
)
from .network import (
    Action,
    ActionScores,
    Mlp,
    action_to_accel,
    constant_mlp,
    forward,
    load_mlp,
    mlp,
    observe,
    save_mlp,
    select_action,
)
from .plant import (
    Integrator,
    acc_correction,
    collision,
    euler_substep,
    exact_step,
    integrate,
)
from .policies import (
    EnvPolicy,
    IdmParams,
    emergency_brake_accel,
    envelope_check,
    fallback_accel,
    idm_accel,
    meta_action_accel,
)
from .state import CarState, DuoState, WorldState
from .verifier import (
    Box,
    Interval,
    Pred,
    RegionReport,
    Tri,
    VerifyResult,
    confirm,
    ibp_bounds,
    possible_actions,
    predicate_tri,
    verify,
)

__version__ = "0.1.0"

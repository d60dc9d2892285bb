"""Haptic shared-autonomy teleoperation: safety-filtered control with
gain-limited force feedback, plus a scenario harness and live service."""

from .barriers import BarrierEval, Disc, HalfPlane, SuperEllipse, cbf_row, evaluate
from .dynamics import RobotState, step
from .energy import (
    EnergyTank,
    L2Ledger,
    LedgerAudit,
    StabilityParams,
    fallback_beta_increment,
    l2_feasibility_row,
    l2_force_bound,
    ledger_check,
    passivity_row,
    storage,
    storage_rate,
    tank_update,
)
from .errors import CbfInfeasibleError, ContractError, ScenarioError, SingularityError
from .harness import (
    CompareReport,
    SimEngine,
    TraceRow,
    TraceSummary,
    compare,
    force_envelope,
    run,
    sweep,
    trace_from_csv,
    trace_summary,
    trace_to_csv,
)
from .human import (
    LiveCommand,
    ModelCommand,
    ReplayCommand,
    SpringDamperOperator,
    TrapezoidCommand,
    load_replay_csv,
)
from .jcf import JcfWeights, jcf_cubic_coeffs, jcf_quintic_coeffs, jcf_step
from .optkernel import (
    AffineRow,
    OrthComplement,
    PolyRealRoots,
    orth_complement,
    project_to_ball,
    qp_closest,
    real_roots,
)
from .scenario import (
    BUILTIN_SCENARIOS,
    Scenario,
    builtin_scenario,
    field_2d,
    free_1d,
    instability,
    load_scenario,
    wall_1d,
)
from .scf import (
    ActiveCase,
    ControlDecision,
    reference_control,
    scf_no_l2_step,
    scf_passivity_step,
    scf_step,
)

__version__ = "0.1.0"

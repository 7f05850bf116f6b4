"""gridfreq: desk-scale frequency-response laboratory for high-PV grids.

Build penetration scenarios from aggregated interconnection models, run
generation-loss contingencies through a multi-area swing/governor model
with UFLS and FFR relays, compute NERC-style frequency-response metrics,
calibrate against measured traces, and solve PV capacity-expansion plans.
"""

from .calibration import (
    CalibrationBounds,
    CalibrationKnobs,
    CalibrationResult,
    apply_knobs,
    calibrate,
    objective,
)
from .engine import (
    Contingency,
    EngineDivergenceError,
    SimConfig,
    SimulationResult,
    apply_deadband,
    initial_rocof,
    simulate,
    steady_state_frequency,
    synthetic_inertia_power,
)
from .expansion import (
    Certificate,
    ConstraintViolation,
    CostBreakdown,
    ExistingUnit,
    ExpansionPlan,
    ExpansionProblem,
    ExpansionSolution,
    InfeasibleProblemError,
    Interface,
    Region,
    check_feasibility,
    evaluate_cost,
)
from .expansion import solve as solve_expansion
from .metrics import (
    ComplianceResult,
    FrequencyTrace,
    MetricsReport,
    MismatchReport,
    compliance_check,
    mismatch_report,
    nadir,
    nerc_frequency_response,
    read_trace,
    rocof,
    settling_and_values,
)
from .model import (
    Area,
    ConverterControl,
    GeneratorFleet,
    Governor,
    GridModel,
    TieLine,
    Violation,
    system_inertia,
    validate,
)
from .protection import (
    FfrResource,
    ProtectionScheme,
    RelayEvent,
    RelayState,
    ShedLedger,
    UflsBlock,
    UflsScheme,
    ffr_step,
    preset_names,
    preset_scheme,
    shed_ledger,
    ufls_step,
)
from .scenario import (
    FlatRunReport,
    PenetrationTargets,
    RegionalWeights,
    ScenarioError,
    build_scenario,
    flat_run_check,
    penetration_of,
)
from .config_io import (
    ConfigError,
    load_contingency,
    load_expansion_problem,
    load_protection,
    load_scenario,
    load_system,
    serialize,
)

__version__ = "0.1.0"

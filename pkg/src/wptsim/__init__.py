"""Multi-transmitter wireless power transfer simulator.

Field and interference modeling for energy transmitters on a line, an
RF/DC rectifier model, a duty-cycled battery-less node simulation, and
activation-coverage analysis with a scenario-driven CLI.
"""

from .coverage import (
    CoverageReport,
    Scenario,
    Scheme,
    SweepSpec,
    activation,
    compute_coverage,
    coverage_curve,
    coverage_phase_sensitivity,
    max_spacing,
    rectified_input,
    required_power,
)
from .node import (
    ActivationVerdict,
    Mode,
    NODE_PRESETS,
    NodeConfig,
    NodeState,
    average_consumed_power,
    consumed_power_at,
    constant_input,
    min_capacitance,
    simulate,
    sleep_charge_trace,
    step_state_machine,
)
from .propagation import (
    AveragingBiasWarning,
    ComplexGain,
    Geometry,
    LinkBudget,
    SingularDistanceError,
    SPEED_OF_LIGHT_M_S,
    Transmitter,
    beat_period_s,
    channel_gain,
    instantaneous_power,
    mean_power_mpcsd,
    received_power_mp,
    received_power_single,
    time_averaged_power,
)
from .rectifier import (
    ConvexityResult,
    EfficiencyTrace,
    RectifierModel,
    check_convex_output,
    convex_region_w,
    dc_output,
    default_model,
    efficiency,
    recover_efficiency,
)

__version__ = "0.1.0"

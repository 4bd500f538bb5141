"""Robust adaptive time-varying control-barrier-function (RaTVCBF) safety filtering.

A small control library plus CLI simulator: an uncertain spring-damper contact
plant, a time-varying force-box barrier with robustness margins, a safety-
oriented parameter estimator, set-membership identification of the stiffness
and damping bounds, and a minimally-invasive QP filter that keeps the contact
force inside a moving corridor derived from a material-removal-rate band.
"""

from ratvcbf.plant import SysState, TruePlant, DisturbanceSpec
from ratvcbf.barrier import BoundSchedule, BarrierEval, ParamEstimate
from ratvcbf.smid import ParamBox, RegressionDatum
from ratvcbf.safety_filter import FilterConfig, FilterResult, QPInfeasibleError
from ratvcbf.scenario import ScenarioConfig
from ratvcbf.harness import RunConfig, SimLog, RunSummary, run, compare, emit_outputs

__all__ = [
    "SysState",
    "TruePlant",
    "DisturbanceSpec",
    "BoundSchedule",
    "BarrierEval",
    "ParamEstimate",
    "ParamBox",
    "RegressionDatum",
    "FilterConfig",
    "FilterResult",
    "QPInfeasibleError",
    "ScenarioConfig",
    "RunConfig",
    "SimLog",
    "RunSummary",
    "run",
    "compare",
    "emit_outputs",
]

__version__ = "0.1.0"

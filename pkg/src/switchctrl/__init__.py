"""Controllability of linear systems driven by a Markov switch with jumps.

Subspace (V-ladder) tests for approximate null-controllability, a reduced
Riccati family whose ε → 0 limit decides exact null-controllability, and a
Monte-Carlo simulator for the primal and dual systems.
"""
from .errors import (BlowUpError, ConfigError, DimensionError, NumericalError,
                     PSDViolation, SingularGramianError, SwitchCtrlError)
from .fixtures import FIXTURES, load_fixture
from .invariance import (approx_ctrl_sufficient, approx_null_verdict, invariance_report,
                         v_ladder)
from .metric import EpsilonSchedule, K0Diagnostics, k0_estimate, metric, verdict
from .model import ModeTrajectory, SwitchSystem, parse_system, to_document
from .riccati import K0, RiccatiParams, RiccatiSolution, solve

__version__ = "0.1.0"

__all__ = [
    "BlowUpError", "ConfigError", "DimensionError", "NumericalError", "PSDViolation",
    "SingularGramianError", "SwitchCtrlError", "FIXTURES", "load_fixture",
    "approx_ctrl_sufficient", "approx_null_verdict", "invariance_report", "v_ladder",
    "EpsilonSchedule", "K0Diagnostics", "k0_estimate", "metric", "verdict",
    "ModeTrajectory", "SwitchSystem", "parse_system", "to_document", "K0",
    "RiccatiParams", "RiccatiSolution", "solve", "__version__",
]

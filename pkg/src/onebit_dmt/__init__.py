"""Diversity-multiplexing-delay tradeoffs for block-Rayleigh MIMO with one-bit causal CSI.

Closed-form bounds live in :mod:`onebit_dmt.analytic`; the deferral protocol
simulator in :mod:`onebit_dmt.protocol` cross-checks them by Monte Carlo.
"""

from onebit_dmt.channel import (
    AntennaConfig,
    SnrPoint,
    mutual_info,
    random_coding_error_bound,
    sample_channel,
)
from onebit_dmt.errors import (
    DomainError,
    EstimationError,
    FormulaDomainError,
    InvalidInputError,
    StageCapExceeded,
)

__all__ = [
    "AntennaConfig",
    "SnrPoint",
    "mutual_info",
    "random_coding_error_bound",
    "sample_channel",
    "DomainError",
    "EstimationError",
    "FormulaDomainError",
    "InvalidInputError",
    "StageCapExceeded",
]

__version__ = "0.1.0"

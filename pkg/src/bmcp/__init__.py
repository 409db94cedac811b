"""Simulator and analysis toolkit for the 1-d boundary-modified contact process."""

from .params import LAMBDA_C_ESTIMATE, InitialCondition, Params, Variant
from .kernel import BACKEND

__version__ = "0.1.0"

__all__ = [
    "LAMBDA_C_ESTIMATE",
    "InitialCondition",
    "Params",
    "Variant",
    "BACKEND",
    "__version__",
]

"""Generalized inverse gamma volatility models: distributions, product
laws for returns, maximum-likelihood fitting, SDE simulation and
empirical diagnostics."""

from .dist import DistModel, Kind
from .errors import (
    DataError,
    DegenerateDataError,
    DomainError,
    GigavolError,
    HorizonExceededError,
    NoRootError,
    NumericalError,
    QuadratureError,
)
from .fit import FitResult
from .product import ProductModel
from .sde import SdeKind, SdeSpec, SimConfig

__version__ = "0.1.0"

__all__ = [
    "DistModel",
    "Kind",
    "ProductModel",
    "FitResult",
    "SdeKind",
    "SdeSpec",
    "SimConfig",
    "GigavolError",
    "DomainError",
    "DataError",
    "DegenerateDataError",
    "NumericalError",
    "NoRootError",
    "QuadratureError",
    "HorizonExceededError",
]

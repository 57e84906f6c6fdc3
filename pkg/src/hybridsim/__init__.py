"""Desk-scale simulator of ferromagnetic-film / NV-centre hybrid spin systems."""

from .core import (
    DeviceGeometry,
    DriveConfig,
    FieldConfig,
    HybridSimError,
    HybridSystem,
    MaterialParams,
    ValidationError,
    default_params,
)

__version__ = "0.1.0"

__all__ = [
    "DeviceGeometry",
    "DriveConfig",
    "FieldConfig",
    "HybridSimError",
    "HybridSystem",
    "MaterialParams",
    "ValidationError",
    "default_params",
    "__version__",
]

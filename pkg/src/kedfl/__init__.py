"""Knife-edge diffraction models of body-induced attenuation on radio links."""

from .calibration import CalibrationResult, LandmarkMeasurement, SizeBounds, calibrate, residuals
from .diffraction_full import (
    FieldRatio,
    QuadratureSpec,
    attenuation_db,
    field_ratio_multi,
    field_ratio_single,
)
from .diffraction_paraxial import field_ratio_multi_paraxial, field_ratio_single_paraxial
from .exceptions import (
    CalibrationError,
    CapabilityError,
    KedflError,
    QuadratureError,
    ScenarioError,
    SchemaError,
)
from .oracle import oracle_field_ratio
from .scenario import Body, KnifeEdge, ScenarioGeometry, knife_edge, sized_edge, validate
from .special import fresnel
from .statistical import StatParams, additive_attenuation, attenuation_stats, predict_rss

__version__ = "0.1.0"

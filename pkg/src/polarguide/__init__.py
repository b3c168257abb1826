"""Polarization-guided refinement of monocular surface-normal maps.

Single-shot linear-polarization measurements constrain surface orientation
through Fresnel reflection; this package refines the output of any frozen
normal-estimation backbone by optimizing per-pixel offsets and a specular
radiance map against a polarization-consistency loss at test time.
"""

__version__ = "0.1.0"

from .backbones import (
    BackboneSession,
    BridgeBackbone,
    CorruptedOracleBackbone,
    LinearSmootherBackbone,
    ToyBackboneSpec,
)
from .camera import CameraModel, ViewField, view_field
from .fresnel import (
    MaterialParams,
    RadianceSplit,
    SphericalField,
    component_stokes,
    dolp_diffuse,
    dolp_specular,
    render_stokes,
    render_stokes_vjp,
    to_spherical,
)
from .guidance import (
    GuidanceConfig,
    GuidanceState,
    GuidanceTrace,
    PolarizationRefiner,
    RefineResult,
    adam_step,
    polarization_loss,
    refine,
)
from .metrics import NormalMetrics, angular_error_map, mean_angular_error, summarize
from .polarimetry import (
    IntensityCapture,
    PolarizationMap,
    StokesMap,
    ValidityMask,
    capture_from_stokes,
    dolp_aolp,
    stokes_from_capture,
    validity_mask,
)
from .synth import (
    BumpySphereGeometry,
    CorruptionSpec,
    PlaneGeometry,
    Scene,
    SceneSpec,
    Shading,
    SpecularBand,
    SpecularLobe,
    SphereGeometry,
    add_noise,
    corrupt,
    generate,
)

__all__ = [
    "BackboneSession",
    "BridgeBackbone",
    "BumpySphereGeometry",
    "CameraModel",
    "CorruptedOracleBackbone",
    "CorruptionSpec",
    "GuidanceConfig",
    "GuidanceState",
    "GuidanceTrace",
    "IntensityCapture",
    "LinearSmootherBackbone",
    "MaterialParams",
    "NormalMetrics",
    "PlaneGeometry",
    "PolarizationMap",
    "PolarizationRefiner",
    "RadianceSplit",
    "RefineResult",
    "Scene",
    "SceneSpec",
    "Shading",
    "SpecularBand",
    "SpecularLobe",
    "SphereGeometry",
    "SphericalField",
    "StokesMap",
    "ToyBackboneSpec",
    "ValidityMask",
    "ViewField",
    "adam_step",
    "add_noise",
    "angular_error_map",
    "capture_from_stokes",
    "component_stokes",
    "corrupt",
    "dolp_aolp",
    "dolp_diffuse",
    "dolp_specular",
    "generate",
    "mean_angular_error",
    "polarization_loss",
    "refine",
    "render_stokes",
    "render_stokes_vjp",
    "stokes_from_capture",
    "summarize",
    "to_spherical",
    "validity_mask",
    "view_field",
]

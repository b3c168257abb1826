"""Differentiable forward model from surface normals to linear Stokes maps.

Geometry enters through the elevation angle between normal and viewing ray
and the image-plane azimuth of the normal. Fresnel theory gives the degree
of linear polarization of the diffuse and specular reflection components as
closed-form rational functions of the elevation; their angles of
polarization are the azimuth and the azimuth rotated a quarter turn. Mixing
the two components with a per-pixel specular radiance yields the predicted
Stokes vector, and reverse-mode gradients of that prediction are available
in closed form for test-time optimization.

Implementation notes: everything is expressed algebraically in
c = cos(elevation) and in the double-angle terms cos(2 psi), sin(2 psi) of
the azimuth, computed directly from the normal components without trig
calls. The double-angle form makes the half-turn azimuth ambiguity an exact
bitwise identity instead of an approximate one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .camera import ViewField
from .exceptions import ShapeMismatchError
from .polarimetry import StokesMap
from .validation import as_normal_grid, as_radiance_grid, check_same_shape

# Below this squared image-plane magnitude of (n_x, n_y) the azimuth is
# treated as undefined: double angle falls back to (1, 0) and the azimuth
# gradient is zeroed. Both polarization degrees vanish there, so the loss
# is insensitive to the choice.
AZIMUTH_SINGULAR_SQ = 1e-24


@dataclass(frozen=True)
class MaterialParams:
    """Dielectric surface material, a single global refractive index."""

    eta: float = 1.5

    def __post_init__(self):
        if not self.eta > 1.0:
            raise ValueError(f"refractive index must exceed 1, got {self.eta}")


@dataclass(frozen=True)
class SphericalField:
    """Per-pixel elevation (radians, [0, pi]) and azimuth ((-pi, pi])."""

    theta: np.ndarray
    psi: np.ndarray


@dataclass(frozen=True)
class RadianceSplit:
    """Diffuse and specular radiance grids whose sum is the total s0."""

    l_d: np.ndarray
    l_s: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "l_d", as_radiance_grid(self.l_d, "l_d"))
        object.__setattr__(self, "l_s", as_radiance_grid(self.l_s, "l_s"))
        check_same_shape(self.l_d, "l_d", l_s=self.l_s)

    @property
    def s0(self) -> np.ndarray:
        return self.l_d + self.l_s


def to_spherical(n: np.ndarray, v: ViewField) -> SphericalField:
    """Convert unit normals to elevation/azimuth relative to the view rays.

    theta = arccos(n . v) with the dot product clamped to [-1, 1];
    psi = atan2(n_y, n_x), defined as 0 where n_x = n_y = 0.
    """
    n = as_normal_grid(n, "n")
    dot = np.clip(np.sum(n * v.v, axis=-1), -1.0, 1.0)
    theta = np.arccos(dot)
    psi = np.arctan2(n[:, :, 1], n[:, :, 0])
    return SphericalField(theta=theta, psi=psi)


def _curves_from_cos(c: np.ndarray, eta: float):
    """Fresnel polarization degrees and their c-derivatives.

    ``c`` is cos(elevation) already clamped to [0, 1]. Returns
    (rho_d, rho_s, drho_d/dc, drho_s/dc); the specular degree is clamped
    to [0, 1] with zero derivative where the raw rational form overshoots.
    """
    c = np.asarray(c, dtype=np.float64)
    k = eta * eta - 1.0
    g = np.sqrt(k + c * c)
    s2 = 1.0 - c * c  # sin^2(theta)

    a_coef = (eta - 1.0 / eta) ** 2
    num_d = a_coef * s2
    den_d = 2.0 + 2.0 * eta * eta - (eta + 1.0 / eta) ** 2 * s2 + 4.0 * c * g
    rho_d = num_d / den_d
    dnum_d = -2.0 * a_coef * c
    dden_d = 2.0 * (eta + 1.0 / eta) ** 2 * c + 4.0 * (g + c * c / g)
    drho_d = (dnum_d * den_d - num_d * dden_d) / (den_d * den_d)

    num_s = 2.0 * s2 * c * g
    den_s = k + c * c - eta * eta * s2 + 2.0 * s2 * s2
    raw_s = num_s / den_s
    dnum_s = 2.0 * ((1.0 - 3.0 * c * c) * g + c * c * s2 / g)
    dden_s = 2.0 * c * (1.0 + eta * eta) - 8.0 * c * s2
    draw_s = (dnum_s * den_s - num_s * dden_s) / (den_s * den_s)
    inside = (raw_s > 0.0) & (raw_s < 1.0)
    rho_s = np.clip(raw_s, 0.0, 1.0)
    drho_s = np.where(inside, draw_s, 0.0)

    return rho_d, rho_s, drho_d, drho_s


def _clamped_cos(theta) -> np.ndarray:
    """cos(theta) with theta clamped into the front-facing range [0, pi/2]."""
    return np.cos(np.clip(np.asarray(theta, dtype=np.float64), 0.0, np.pi / 2.0))


def dolp_diffuse(theta, mat: MaterialParams) -> np.ndarray:
    """Diffuse degree of linear polarization at elevation ``theta`` (radians)."""
    rho_d, _, _, _ = _curves_from_cos(_clamped_cos(theta), mat.eta)
    return rho_d


def dolp_specular(theta, mat: MaterialParams) -> np.ndarray:
    """Specular degree of linear polarization, clamped into [0, 1]."""
    _, rho_s, _, _ = _curves_from_cos(_clamped_cos(theta), mat.eta)
    return rho_s


def _geometry_terms(n: np.ndarray, v: np.ndarray):
    """Per-pixel c = clamped cos(elevation) and azimuth double-angle terms.

    Returns (c, grad-gate for c, cos 2psi, sin 2psi, r^2, azimuth-singular
    mask). The c gate is 1 where the raw dot product lies strictly inside
    (0, 1): outside, elevation is clamped (back-facing or numerically
    degenerate) and its gradient is defined as zero.
    """
    dot = np.sum(n * v, axis=-1)
    c = np.clip(dot, 0.0, 1.0)
    c_gate = ((dot > 0.0) & (dot < 1.0)).astype(np.float64)

    nx = n[:, :, 0]
    ny = n[:, :, 1]
    r2 = nx * nx + ny * ny
    singular = r2 <= AZIMUTH_SINGULAR_SQ
    r2_safe = np.where(singular, 1.0, r2)
    cos2 = np.where(singular, 1.0, (nx * nx - ny * ny) / r2_safe)
    sin2 = np.where(singular, 0.0, 2.0 * nx * ny / r2_safe)
    return c, c_gate, cos2, sin2, r2_safe, singular


def render_stokes(
    n: np.ndarray,
    l_s: np.ndarray,
    s0_obs: np.ndarray,
    v: ViewField,
    mat: MaterialParams,
) -> StokesMap:
    """Predict the Stokes map for normals ``n`` and specular radiance ``l_s``.

    The diffuse radiance is derived as s0_obs - l_s, so the predicted s0
    equals the observed s0 identically; s1 and s2 carry the polarization
    signal. Diffuse and specular components polarize along orthogonal
    orientations, hence the sign flip on the specular term.
    """
    n = as_normal_grid(n, "n")
    l_s = as_radiance_grid(l_s, "l_s")
    s0_obs = as_radiance_grid(s0_obs, "s0_obs")
    check_same_shape(s0_obs, "s0_obs", l_s=l_s)
    if n.shape[:2] != s0_obs.shape[:2]:
        raise ShapeMismatchError("n", s0_obs.shape[:2] + (3,), n.shape)

    c, _, cos2, sin2, _, _ = _geometry_terms(n, v.v)
    rho_d, rho_s, _, _ = _curves_from_cos(c, mat.eta)

    l_d = s0_obs - l_s
    diff_mag = l_d * rho_d[:, :, np.newaxis]
    spec_mag = l_s * rho_s[:, :, np.newaxis]
    # Written as the sum of the two component terms so that
    # component_stokes() sums to this output bit-exactly.
    s1 = diff_mag * cos2[:, :, np.newaxis] - spec_mag * cos2[:, :, np.newaxis]
    s2 = diff_mag * sin2[:, :, np.newaxis] - spec_mag * sin2[:, :, np.newaxis]
    return StokesMap(s0=s0_obs.copy(), s1=s1, s2=s2)


def render_stokes_vjp(
    n: np.ndarray,
    l_s: np.ndarray,
    s0_obs: np.ndarray,
    v: ViewField,
    mat: MaterialParams,
    cotangent: StokesMap,
) -> tuple[np.ndarray, np.ndarray]:
    """Reverse-mode gradients of sum(cotangent * render_stokes(...)).

    Returns (grad_n, grad_ls). The predicted s0 does not depend on either
    parameter, so the s0 cotangent contributes nothing. Gradients are exact
    for the rendered function as implemented, including its clamps: zero
    elevation gradient where the view dot product is clamped, zero azimuth
    gradient at azimuth-singular pixels, zero through the specular clamp.
    """
    n = as_normal_grid(n, "n")
    l_s = as_radiance_grid(l_s, "l_s")
    s0_obs = as_radiance_grid(s0_obs, "s0_obs")

    c, c_gate, cos2, sin2, r2_safe, singular = _geometry_terms(n, v.v)
    rho_d, rho_s, drho_d, drho_s = _curves_from_cos(c, mat.eta)

    w1 = cotangent.s1
    w2 = cotangent.s2
    cos2e = cos2[:, :, np.newaxis]
    sin2e = sin2[:, :, np.newaxis]
    l_d = s0_obs - l_s

    # Projection of the cotangent onto the polarization direction and onto
    # its quarter-turn rotation; m is the signed mixture magnitude.
    q = w1 * cos2e + w2 * sin2e
    r = -w1 * sin2e + w2 * cos2e
    m = l_d * rho_d[:, :, np.newaxis] - l_s * rho_s[:, :, np.newaxis]

    grad_ls = -q * (rho_d + rho_s)[:, :, np.newaxis]

    dl_dc = np.sum(
        q * (l_d * drho_d[:, :, np.newaxis] - l_s * drho_s[:, :, np.newaxis]), axis=2
    )
    dl_dpsi = np.sum(2.0 * m * r, axis=2)

    grad_n = dl_dc[:, :, np.newaxis] * c_gate[:, :, np.newaxis] * v.v
    psi_scale = np.where(singular, 0.0, dl_dpsi / r2_safe)
    grad_n[:, :, 0] += psi_scale * (-n[:, :, 1])
    grad_n[:, :, 1] += psi_scale * n[:, :, 0]
    return grad_n, grad_ls


def component_stokes(
    n: np.ndarray,
    l_d: np.ndarray,
    l_s: np.ndarray,
    v: ViewField,
    mat: MaterialParams,
) -> tuple[StokesMap, StokesMap]:
    """The diffuse and specular Stokes addends, separately.

    Their componentwise sum equals render_stokes(n, l_s, l_d + l_s, ...)
    exactly.
    """
    n = as_normal_grid(n, "n")
    l_d = as_radiance_grid(l_d, "l_d")
    l_s = as_radiance_grid(l_s, "l_s")
    check_same_shape(l_d, "l_d", l_s=l_s)

    c, _, cos2, sin2, _, _ = _geometry_terms(n, v.v)
    rho_d, rho_s, _, _ = _curves_from_cos(c, mat.eta)
    cos2e = cos2[:, :, np.newaxis]
    sin2e = sin2[:, :, np.newaxis]
    diff_mag = l_d * rho_d[:, :, np.newaxis]
    spec_mag = l_s * rho_s[:, :, np.newaxis]
    diffuse = StokesMap(s0=l_d.copy(), s1=diff_mag * cos2e, s2=diff_mag * sin2e)
    specular = StokesMap(s0=l_s.copy(), s1=-spec_mag * cos2e, s2=-spec_mag * sin2e)
    return diffuse, specular

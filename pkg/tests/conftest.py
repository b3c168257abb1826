import numpy as np
import pytest

from polarguide.backbones import CorruptedOracleBackbone
from polarguide.camera import CameraModel, view_field
from polarguide.fresnel import MaterialParams
from polarguide.synth import (
    CorruptionSpec,
    SceneSpec,
    SpecularLobe,
    SphereGeometry,
    generate,
)


@pytest.fixture(scope="session")
def small_scene():
    """64x64 centered sphere with a specular lobe, orthographic camera."""
    spec = SceneSpec(
        geometry=SphereGeometry(radius=24.0),
        height=64,
        width=64,
        specular=SpecularLobe(center=(24.0, 28.0), width=8.0, peak=0.2),
    )
    return generate(spec)


@pytest.fixture(scope="session")
def patch_scene():
    """Full-frame sphere patch: silhouette outside the image, no grazing rim."""
    spec = SceneSpec(
        geometry=SphereGeometry(radius=100.0, center=(90.0, 32.0)),
        height=64,
        width=64,
        specular=None,
    )
    return generate(spec)


# The closed-loop acceptance configuration: 128x128 sphere, diffuse plus a
# specular lobe, oracle backbone blurred enough for a 12..18 degree initial
# error, with a one-coupling-per-output scrambling gain of 50.
ACCEPT_BLUR_SIGMA = 12.0
ACCEPT_GAIN = 50.0


def acceptance_scene_spec():
    return SceneSpec(
        geometry=SphereGeometry(radius=56.0),
        height=128,
        width=128,
        specular=SpecularLobe(center=(48.0, 56.0), width=16.0, peak=0.25),
    )


@pytest.fixture(scope="session")
def accept_scene():
    return generate(acceptance_scene_spec())


@pytest.fixture(scope="session")
def accept_backbone(accept_scene):
    n_in = 128 * 128 * 3
    return CorruptedOracleBackbone(
        accept_scene.gt_normals,
        corruption=CorruptionSpec("gaussian_blur", sigma=ACCEPT_BLUR_SIGMA),
        gain=ACCEPT_GAIN,
        seed=0,
        density=1.0 / n_in,
        reference=accept_scene.stokes.s0,
    )


@pytest.fixture(scope="session")
def accept_backbone_anchored(accept_scene):
    """Input-independent variant (gain 0) for noise and eta robustness runs."""
    return CorruptedOracleBackbone(
        accept_scene.gt_normals,
        corruption=CorruptionSpec("gaussian_blur", sigma=ACCEPT_BLUR_SIGMA),
        gain=0.0,
    )


def random_render_inputs(rng, h, w, c, eta=1.5, perspective=False):
    """Random scene tensors safe for finite differencing: elevations away
    from the clamp bounds and azimuths away from the singular axis."""
    n = rng.normal(size=(h, w, 3))
    n[:, :, 2] = np.abs(n[:, :, 2]) + 0.4
    n[:, :, 0] = np.sign(n[:, :, 0]) * (np.abs(n[:, :, 0]) + 0.15)
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    s0 = rng.uniform(0.1, 0.9, size=(h, w, c))
    l_s = s0 * rng.uniform(0.0, 1.0, size=(h, w, c))
    cam = (
        CameraModel.perspective(60.0, w, h)
        if perspective
        else CameraModel.orthographic()
    )
    return n, l_s, s0, view_field(cam, h, w), MaterialParams(eta)

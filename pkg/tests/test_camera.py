import numpy as np
import pytest

from polarguide.camera import CameraModel, view_field
from polarguide.exceptions import ConfigError


def test_orthographic_constant_rays():
    vf = view_field(CameraModel.orthographic(), 5, 7)
    assert vf.v.shape == (5, 7, 3)
    np.testing.assert_array_equal(vf.v[:, :, 2], 1.0)
    np.testing.assert_array_equal(vf.v[:, :, :2], 0.0)


def test_focal_from_fov():
    cam = CameraModel.perspective(90.0, 768, 768)
    assert cam.focal == pytest.approx(384.0, rel=1e-12)


def test_principal_point_ray_is_axial():
    cam = CameraModel.perspective(60.0, 9, 9)
    vf = view_field(cam, 9, 9)
    np.testing.assert_allclose(vf.v[4, 4], [0.0, 0.0, 1.0], atol=1e-12)


def test_rays_unit_norm():
    cam = CameraModel.perspective(100.0, 17, 13)
    vf = view_field(cam, 13, 17)
    np.testing.assert_allclose(np.linalg.norm(vf.v, axis=-1), 1.0, atol=1e-12)


def test_ray_direction_signs():
    # pixels right of and below the principal point tilt back toward the axis
    cam = CameraModel.perspective(60.0, 11, 11)
    vf = view_field(cam, 11, 11)
    assert vf.v[5, 10, 0] < 0.0  # u > c_x
    assert vf.v[10, 5, 1] < 0.0  # v-axis points up, row below center
    assert vf.v[0, 5, 1] > 0.0


def test_fov_bounds_validated():
    with pytest.raises(ConfigError):
        CameraModel.perspective(200.0, 64, 64)
    with pytest.raises(ConfigError):
        CameraModel.perspective(0.0, 64, 64)


def test_shape_mismatch_rejected():
    cam = CameraModel.perspective(60.0, 32, 32)
    with pytest.raises(ConfigError):
        view_field(cam, 64, 64)

import numpy as np
import pytest
from scipy.optimize import brentq

from polarguide.camera import CameraModel, view_field
from polarguide.fresnel import (
    MaterialParams,
    component_stokes,
    dolp_diffuse,
    dolp_specular,
    render_stokes,
    to_spherical,
)
from polarguide.polarimetry import dolp_aolp

from conftest import random_render_inputs

ETA15 = MaterialParams(1.5)

# Frozen from a 50-digit mpmath evaluation of the closed-form expressions.
RHO_D_45DEG_15 = 0.043983162187631828
RHO_D_MAX_15 = 0.38461538461538461538  # (eta^2-1)/(eta^2+1)
BREWSTER_15 = 0.98279372324732906799  # arctan(1.5)


class TestMaterialParams:
    def test_rejects_nonphysical_index(self):
        with pytest.raises(ValueError):
            MaterialParams(1.0)
        with pytest.raises(ValueError):
            MaterialParams(0.8)


class TestToSpherical:
    def test_aligned(self):
        n = np.zeros((1, 1, 3))
        n[0, 0] = (0, 0, 1)
        sf = to_spherical(n, view_field(CameraModel.orthographic(), 1, 1))
        assert sf.theta[0, 0] == pytest.approx(0.0)
        assert sf.psi[0, 0] == pytest.approx(0.0)

    def test_grazing_along_x(self):
        n = np.zeros((1, 1, 3))
        n[0, 0] = (1, 0, 0)
        sf = to_spherical(n, view_field(CameraModel.orthographic(), 1, 1))
        assert sf.theta[0, 0] == pytest.approx(np.pi / 2)
        assert sf.psi[0, 0] == pytest.approx(0.0)

    def test_tilt_toward_y(self):
        n = np.zeros((1, 1, 3))
        n[0, 0] = (0.0, np.sqrt(0.5), np.sqrt(0.5))
        sf = to_spherical(n, view_field(CameraModel.orthographic(), 1, 1))
        assert sf.theta[0, 0] == pytest.approx(np.pi / 4)
        assert sf.psi[0, 0] == pytest.approx(np.pi / 2)


class TestDolpCurves:
    def test_diffuse_normal_incidence(self):
        assert dolp_diffuse(0.0, ETA15) == 0.0

    def test_diffuse_45deg_matches_oracle(self):
        assert dolp_diffuse(np.pi / 4, ETA15) == pytest.approx(RHO_D_45DEG_15, rel=1e-12)

    def test_diffuse_grazing_is_maximum(self):
        # dense grid scan: rho_d increases monotonically up to pi/2
        thetas = np.linspace(0.0, np.pi / 2, 2001)
        vals = dolp_diffuse(thetas, ETA15)
        assert np.all(np.diff(vals) >= -1e-15)
        assert vals[-1] == pytest.approx(RHO_D_MAX_15, rel=1e-12)

    def test_specular_endpoints_vanish(self):
        assert dolp_specular(0.0, ETA15) == 0.0
        assert dolp_specular(np.pi / 2, ETA15) == pytest.approx(0.0, abs=1e-15)

    def test_specular_brewster_fully_polarized(self):
        assert dolp_specular(BREWSTER_15, ETA15) == pytest.approx(1.0, abs=1e-12)
        # grid scan: single interior maximum at the Brewster angle
        thetas = np.linspace(0.0, np.pi / 2, 4001)
        vals = dolp_specular(thetas, ETA15)
        peak = int(np.argmax(vals))
        assert 0 < peak < 4000
        assert thetas[peak] == pytest.approx(BREWSTER_15, abs=1e-3)
        assert np.all(np.diff(vals[: peak + 1]) >= -1e-12)
        assert np.all(np.diff(vals[peak:]) <= 1e-12)

    def test_specular_clamped_to_unit(self):
        thetas = np.linspace(0.0, np.pi / 2, 20001)
        for eta in (1.3, 1.5, 3.2):
            assert np.max(dolp_specular(thetas, MaterialParams(eta))) <= 1.0

    def test_backfacing_clamps_to_grazing(self):
        assert dolp_diffuse(2.5, ETA15) == dolp_diffuse(np.pi / 2, ETA15)


def _ortho_setup(n):
    h, w, _ = n.shape
    return view_field(CameraModel.orthographic(), h, w)


class TestRenderStokes:
    def test_normal_incidence_unpolarized(self):
        n = np.zeros((2, 2, 3))
        n[:, :, 2] = 1.0
        s0 = np.full((2, 2, 3), 0.6)
        l_s = np.full((2, 2, 3), 0.2)
        s = render_stokes(n, l_s, s0, _ortho_setup(n), ETA15)
        np.testing.assert_array_equal(s.s0, s0)
        np.testing.assert_allclose(s.s1, 0.0, atol=1e-15)
        np.testing.assert_allclose(s.s2, 0.0, atol=1e-15)

    def test_diffuse_only_45deg_composes_curve_oracle(self):
        n = np.zeros((1, 1, 3))
        n[0, 0] = (np.sin(np.pi / 4), 0.0, np.cos(np.pi / 4))
        s0 = np.ones((1, 1, 1))
        l_s = np.zeros((1, 1, 1))
        s = render_stokes(n, l_s, s0, _ortho_setup(n), ETA15)
        assert s.s1[0, 0, 0] == pytest.approx(RHO_D_45DEG_15, rel=1e-12)
        assert s.s2[0, 0, 0] == pytest.approx(0.0, abs=1e-15)

    def test_component_cancellation(self):
        # pick elevation and split so diffuse and specular magnitudes match
        theta = 0.6
        rho_d = float(dolp_diffuse(theta, ETA15))
        rho_s = float(dolp_specular(theta, ETA15))
        s0 = 0.8
        l_s = s0 * rho_d / (rho_d + rho_s)
        n = np.zeros((1, 1, 3))
        n[0, 0] = (np.sin(theta), 0.0, np.cos(theta))
        s = render_stokes(
            n, np.full((1, 1, 1), l_s), np.full((1, 1, 1), s0), _ortho_setup(n), ETA15
        )
        assert s.s1[0, 0, 0] == pytest.approx(0.0, abs=1e-15)
        assert s.s2[0, 0, 0] == pytest.approx(0.0, abs=1e-15)

    def test_physicality_randomized(self):
        rng = np.random.default_rng(42)
        n, l_s, s0, vf, mat = random_render_inputs(rng, 32, 32, 3)
        s = render_stokes(n, l_s, s0, vf, mat)
        assert np.all(s.s1**2 + s.s2**2 <= s.s0**2 * (1 + 1e-9))


class TestComponentStokes:
    def test_zero_specular_component(self, small_scene):
        n = small_scene.gt_normals
        vf = _ortho_setup(n)
        l_d = small_scene.stokes.s0
        zero = np.zeros_like(l_d)
        _, spec = component_stokes(n, l_d, zero, vf, ETA15)
        assert np.all(spec.s0 == 0) and np.all(spec.s1 == 0) and np.all(spec.s2 == 0)

    def test_sum_matches_render_bitwise(self):
        rng = np.random.default_rng(9)
        n, l_s, s0, vf, mat = random_render_inputs(rng, 8, 8, 3)
        l_d = s0 - l_s
        diff, spec = component_stokes(n, l_d, l_s, vf, mat)
        s = render_stokes(n, l_s, l_d + l_s, vf, mat)
        np.testing.assert_array_equal(diff.s1 + spec.s1, s.s1)
        np.testing.assert_array_equal(diff.s2 + spec.s2, s.s2)
        np.testing.assert_array_equal(diff.s0 + spec.s0, s.s0)

    def test_component_aolps_orthogonal(self):
        rng = np.random.default_rng(10)
        n, l_s, s0, vf, mat = random_render_inputs(rng, 8, 8, 3)
        l_d = s0 - l_s
        diff, spec = component_stokes(n, l_d, l_s, vf, mat)
        pd = dolp_aolp(diff)
        ps = dolp_aolp(spec)
        both = (pd.dolp > 1e-6) & (ps.dolp > 1e-6)
        gap = np.abs(pd.aolp - ps.aolp)[both]
        np.testing.assert_allclose(np.minimum(gap, np.pi - gap), np.pi / 2, atol=1e-9)


class TestAmbiguityFixtures:
    def test_pi_azimuth_flip_renders_identically(self):
        """Rotating every azimuth by half a turn leaves the rendered Stokes
        map bit-identical: the linear polarization double angle hides the
        sign of the in-plane normal direction."""
        rng = np.random.default_rng(77)
        n, l_s, s0, vf, mat = random_render_inputs(rng, 16, 16, 3)
        flipped = n.copy()
        flipped[:, :, 0] = -n[:, :, 0]
        flipped[:, :, 1] = -n[:, :, 1]
        a = render_stokes(n, l_s, s0, vf, mat)
        b = render_stokes(flipped, l_s, s0, vf, mat)
        np.testing.assert_array_equal(a.s1, b.s1)
        np.testing.assert_array_equal(a.s2, b.s2)

    def test_pi_half_diffuse_specular_construction(self):
        """A purely diffuse pixel and a purely specular pixel with matched
        radiance-weighted polarization and a quarter-turn azimuth offset
        produce the same linear Stokes components."""
        theta_d = np.pi / 4
        target = float(dolp_diffuse(theta_d, ETA15))
        # independent root find on the specular curve
        theta_s = brentq(
            lambda t: float(dolp_specular(t, ETA15)) - target, 1e-4, BREWSTER_15,
            xtol=1e-14,
        )
        psi = 0.7
        radiance = 0.6

        n_d = np.array(
            [[[np.sin(theta_d) * np.cos(psi), np.sin(theta_d) * np.sin(psi), np.cos(theta_d)]]]
        )
        psi_s = psi + np.pi / 2
        n_s = np.array(
            [[[np.sin(theta_s) * np.cos(psi_s), np.sin(theta_s) * np.sin(psi_s), np.cos(theta_s)]]]
        )
        vf = view_field(CameraModel.orthographic(), 1, 1)
        r = np.full((1, 1, 1), radiance)
        diffuse_px = render_stokes(n_d, np.zeros((1, 1, 1)), r, vf, ETA15)
        specular_px = render_stokes(n_s, r, r, vf, ETA15)
        assert specular_px.s1[0, 0, 0] == pytest.approx(diffuse_px.s1[0, 0, 0], abs=1e-6)
        assert specular_px.s2[0, 0, 0] == pytest.approx(diffuse_px.s2[0, 0, 0], abs=1e-6)

"""Finite-difference verification of the closed-form renderer gradients."""

import numpy as np
import pytest

from polarguide.camera import CameraModel, view_field
from polarguide.fresnel import MaterialParams, render_stokes, render_stokes_vjp
from polarguide.polarimetry import StokesMap

from conftest import random_render_inputs

FD_STEP = 1e-5
REL_TOL = 1e-4


def scalar_objective(cot, n, l_s, s0, vf, mat):
    s = render_stokes(n, l_s, s0, vf, mat)
    return float(np.sum(cot.s0 * s.s0 + cot.s1 * s.s1 + cot.s2 * s.s2))


def fd_gradients(cot, n, l_s, s0, vf, mat):
    g_n = np.zeros_like(n)
    for idx in np.ndindex(n.shape):
        e = np.zeros_like(n)
        e[idx] = FD_STEP
        g_n[idx] = (
            scalar_objective(cot, n + e, l_s, s0, vf, mat)
            - scalar_objective(cot, n - e, l_s, s0, vf, mat)
        ) / (2 * FD_STEP)
    g_l = np.zeros_like(l_s)
    for idx in np.ndindex(l_s.shape):
        e = np.zeros_like(l_s)
        e[idx] = FD_STEP
        g_l[idx] = (
            scalar_objective(cot, n, l_s + e, s0, vf, mat)
            - scalar_objective(cot, n, l_s - e, s0, vf, mat)
        ) / (2 * FD_STEP)
    return g_n, g_l


def max_rel_err(analytic, numeric):
    scale = max(np.max(np.abs(numeric)), 1e-12)
    return np.max(np.abs(analytic - numeric)) / scale


@pytest.mark.parametrize("perspective", [False, True])
@pytest.mark.parametrize("eta", [1.3, 1.5, 3.2])
def test_vjp_matches_finite_differences(perspective, eta):
    rng = np.random.default_rng(101 + int(eta * 10) + perspective)
    n, l_s, s0, vf, mat = random_render_inputs(rng, 4, 4, 3, eta=eta, perspective=perspective)
    cot = StokesMap(
        s0=rng.normal(size=s0.shape),
        s1=rng.normal(size=s0.shape),
        s2=rng.normal(size=s0.shape),
    )
    g_n, g_l = render_stokes_vjp(n, l_s, s0, vf, mat, cot)
    fd_n, fd_l = fd_gradients(cot, n, l_s, s0, vf, mat)
    assert max_rel_err(g_n, fd_n) < REL_TOL
    assert max_rel_err(g_l, fd_l) < REL_TOL


def test_zero_cotangent_gives_zero_gradients():
    rng = np.random.default_rng(7)
    n, l_s, s0, vf, mat = random_render_inputs(rng, 4, 4, 3)
    zero = StokesMap(s0=np.zeros_like(s0), s1=np.zeros_like(s0), s2=np.zeros_like(s0))
    g_n, g_l = render_stokes_vjp(n, l_s, s0, vf, mat, zero)
    assert np.all(g_n == 0.0) and np.all(g_l == 0.0)


def test_normal_incidence_ls_gradient_vanishes():
    # both polarization degrees vanish at zero elevation, so the specular
    # radiance has no effect on s1/s2 there
    n = np.zeros((1, 1, 3))
    n[0, 0, 2] = 1.0
    s0 = np.full((1, 1, 3), 0.5)
    l_s = np.full((1, 1, 3), 0.1)
    vf = view_field(CameraModel.orthographic(), 1, 1)
    ones = np.ones_like(s0)
    cot = StokesMap(s0=np.zeros_like(s0), s1=ones, s2=ones)
    g_n, g_l = render_stokes_vjp(n, l_s, s0, vf, MaterialParams(1.5), cot)
    assert np.all(g_l == 0.0)
    # azimuth is singular there as well: its gradient contribution is zero
    assert np.all(np.isfinite(g_n))
    assert g_n[0, 0, 0] == 0.0 and g_n[0, 0, 1] == 0.0


def test_s0_cotangent_contributes_nothing():
    rng = np.random.default_rng(31)
    n, l_s, s0, vf, mat = random_render_inputs(rng, 3, 3, 3)
    cot_s0 = StokesMap(
        s0=rng.normal(size=s0.shape), s1=np.zeros_like(s0), s2=np.zeros_like(s0)
    )
    g_n, g_l = render_stokes_vjp(n, l_s, s0, vf, mat, cot_s0)
    assert np.all(g_n == 0.0) and np.all(g_l == 0.0)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from gfock.errors import ParameterError, ResolutionError
from gfock.moll import (
    Damper,
    Mollifier,
    make_plateau_profile,
    mollifier_weight,
    position_kernel,
    support_radius,
)


@pytest.fixture(scope="module")
def m1():
    return Mollifier(make_plateau_profile(1.0, 2.0))


class TestPlateauProfile:
    def test_plateau_value(self):
        assert make_plateau_profile(1, 2)(0.5) == 1.0

    def test_outside_support(self):
        assert make_plateau_profile(1, 2)(3.0) == 0.0

    def test_transition_is_strict(self):
        p = make_plateau_profile(1, 2)
        assert p(1.6) < p(1.5) < p(1.4)
        assert 0 < p(1.5) < 1

    def test_midpoint_symmetry(self):
        # B(b - r) / (B(r - a) + B(b - r)) is 1/2 at the midpoint
        assert make_plateau_profile(1, 2)(1.5) == pytest.approx(0.5, abs=1e-15)

    @pytest.mark.parametrize("ri, ro", [(0.0, 1.0), (-1.0, 1.0), (2.0, 2.0), (2.0, 1.0)])
    def test_rejects_bad_radii(self, ri, ro):
        with pytest.raises(ParameterError):
            make_plateau_profile(ri, ro)

    def test_array_evaluation(self):
        p = make_plateau_profile(1, 2)
        r = np.array([0.0, 1.0, 1.5, 2.0, 5.0])
        out = p(r)
        assert out.shape == r.shape
        assert out[0] == out[1] == 1.0 and out[3] == out[4] == 0.0

    def test_even(self):
        p = make_plateau_profile(1, 2)
        r = np.linspace(0, 3, 31)
        assert np.array_equal(p(r), p(-r))

    def test_flat_at_junctions(self):
        # all derivatives vanish: finite differences at the junctions are tiny
        p = make_plateau_profile(1, 2)
        h = 1e-3
        assert abs(p(1 + h) - 1) < 1e-100
        assert p(2 - h) < 1e-100

    @given(
        st.floats(0.1, 5.0),
        st.floats(0.05, 5.0),
        st.lists(st.floats(0.0, 20.0), min_size=2, max_size=20),
    )
    def test_invariants(self, ri, width, rs):
        p = make_plateau_profile(ri, ri + width)
        r = np.sort(np.array(rs))
        v = p(r)
        assert np.all((v >= 0) & (v <= 1))
        assert np.all(np.diff(v) <= 0)
        assert np.all(v[r <= ri] == 1.0)
        assert np.all(v[r >= ri + width] == 0.0)


class TestMollifierWeight:
    @pytest.mark.parametrize(
        "eps, expected", [(0.1, 1.0), (1.0, 0.0)],
    )
    def test_reference_values(self, m1, eps, expected):
        assert mollifier_weight(m1, eps, 3.0) == expected

    def test_transition_band(self, m1):
        assert 0 < mollifier_weight(m1, 0.5, 3.0) < 1

    @pytest.mark.parametrize("eps", [0.0, -0.1])
    def test_rejects_nonpositive_eps(self, m1, eps):
        with pytest.raises(ParameterError):
            mollifier_weight(m1, eps, 1.0)

    def test_isotropic_in_3d(self):
        m = Mollifier(make_plateau_profile(1, 2), dim=3)
        k = np.array([[1.2, 0.0, 0.0], [0.0, 1.2, 0.0], [0.0, 0.0, -1.2], [0.6, 0.6, 0.6 * math.sqrt(2)]])
        w = mollifier_weight(m, 1.0, k)
        assert np.allclose(w, w[0], atol=1e-15)

    @given(st.floats(0.0, 50.0), st.floats(1e-3, 1.0))
    def test_plateau_regime_is_exact(self, k, eps):
        m = Mollifier(make_plateau_profile(1.0, 2.0))
        if eps * k <= 1.0:
            assert mollifier_weight(m, eps, k) == 1.0


class TestPositionKernel:
    @pytest.mark.parametrize("eps", [0.05, 0.1, 0.2])
    def test_unit_integral(self, m1, eps):
        # the grid covers 200 unit widths either side
        x = np.linspace(-200 * eps, 200 * eps, 40001)
        k = position_kernel(m1, eps, x)
        assert integrate.trapezoid(k, x) == pytest.approx(1.0, abs=1e-6)

    def test_even_and_real(self, m1):
        x = np.linspace(0.0, 3.0, 301)
        k_pos = position_kernel(m1, 0.1, x)
        k_neg = position_kernel(m1, 0.1, -x)
        assert np.max(np.abs(k_pos - k_neg)) < 1e-12
        assert not np.iscomplexobj(k_pos)

    def test_value_at_origin(self, m1):
        # K(0) = (1/pi) \int_0^inf F(k) dk, by an independent quadrature of the profile
        ref = integrate.quad(m1.profile.eval, 0.0, 2.0, points=[1.0], epsabs=1e-13)[0] / math.pi
        assert position_kernel(m1, 1.0, np.array([0.0]))[0] == pytest.approx(ref, rel=1e-10)

    @pytest.mark.parametrize("dim", [1, 2, 3])
    def test_scaling_law(self, dim):
        m = Mollifier(make_plateau_profile(1.0, 2.0), dim=dim)
        x = np.linspace(0.0, 1.0, 41)
        fine = position_kernel(m, 0.05, x / 2)
        coarse = position_kernel(m, 0.1, x)
        assert np.max(np.abs(fine - 2**dim * coarse)) <= 1e-8 * np.max(np.abs(fine))

    def test_three_dimensional_mass(self):
        m = Mollifier(make_plateau_profile(1.0, 2.0), dim=3)
        r = np.linspace(0.0, 200.0, 20001)
        k = position_kernel(m, 1.0, r)
        assert integrate.trapezoid(4 * math.pi * r**2 * k, r) == pytest.approx(1.0, abs=1e-6)

    def test_resolution_error(self, m1):
        with pytest.raises(ResolutionError):
            position_kernel(m1, 0.01, np.linspace(-1, 1, 11))

    def test_support_radius_bounds_tail(self, m1):
        R = support_radius(m1)
        assert 10 < R < 1000
        r = np.linspace(R, R + 50, 501)
        assert np.max(np.abs(position_kernel(m1, 1.0, r))) < 1e-10


class TestDamper:
    def test_disabled_is_one(self):
        y = np.linspace(-50, 50, 11)[:, None]
        assert np.all(Damper().value(0.3, y) == 1.0)

    def test_enabled_plateau_and_support(self):
        d = Damper(make_plateau_profile(1.0, 2.0), enabled=True)
        y = np.array([[0.0], [5.0], [7.5], [10.0], [-10.0]])
        v = d.value(0.2, y)
        assert v[0] == 1.0 and v[1] == 1.0
        assert 0 < v[2] < 1
        assert v[3] == v[4] == 0.0

    def test_smooth_and_bounded(self):
        d = Damper(make_plateau_profile(0.5, 1.5), enabled=True)
        y = np.linspace(-10, 10, 2001)[:, None]
        v = d.value(0.1, y)
        assert np.all((0 <= v) & (v <= 1))
        assert np.max(np.abs(np.diff(v))) < 0.01


@settings(max_examples=8, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.5, 3.0))
def test_kernel_integral_any_profile(ri, width):
    # narrow transitions decay slowly; widths >= 0.5 fit inside |x| <= 400
    m = Mollifier(make_plateau_profile(ri, ri + width))
    x = np.linspace(-400.0, 400.0, 8001)
    k = position_kernel(m, 1.0, x)
    assert integrate.trapezoid(k, x) == pytest.approx(1.0, abs=1e-4)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gfock.errors import DomainError, LadderError, ParameterError, ShapeError
from gfock.genfunc import (
    EpsilonLadder,
    SampleGrid,
    Representative,
    associate,
    bump_test_function,
    constant_rep,
    default_setup,
    dirac_rep,
    gf_derivative,
    gf_power,
    gf_product,
    grid_derivative,
    heaviside_rep,
    integral,
    pair,
    transition_width,
    window_test_function,
)
from gfock.moll import Mollifier, make_plateau_profile, position_kernel, support_radius


@pytest.fixture(scope="module")
def setup():
    return default_setup()


@pytest.fixture(scope="module")
def H(setup):
    m, grid, _ = setup
    return heaviside_rep(m, grid)


@pytest.fixture(scope="module")
def dH(H):
    return gf_derivative(H)


@pytest.fixture(scope="module")
def ladder(setup):
    return setup[2]


@pytest.fixture(scope="module")
def tests():
    return {"bump": bump_test_function(0.0, 0.5), "window": window_test_function()}


class TestGridAndLadder:
    def test_grid_spacing(self):
        g = SampleGrid(-1.0, 1.0, 21)
        assert g.h == pytest.approx(0.1)
        assert g.x[0] == -1.0 and g.x[-1] == 1.0

    @pytest.mark.parametrize("lo, hi, n, rule", [(1, 0, 20, "spectral"), (0, 1, 15, "spectral"), (0, 1, 20, "cubic")])
    def test_grid_rejects(self, lo, hi, n, rule):
        with pytest.raises(ParameterError):
            SampleGrid(lo, hi, n, rule)

    def test_geometric_ladder(self):
        lad = EpsilonLadder.geometric(0.1, 3)
        assert lad.eps == (0.1, 0.05, 0.025, 0.0125)

    @pytest.mark.parametrize("eps", [(), (0.1, 0.2), (0.1, 0.1), (0.1, -0.1)])
    def test_ladder_rejects(self, eps):
        with pytest.raises(LadderError):
            EpsilonLadder(eps)

    def test_sub_ladder(self):
        lad = EpsilonLadder.geometric(0.1, 4)
        assert lad.sub([3, 0]).eps == (0.1, 0.1 / 8)

    def test_jump_resolution(self, setup):
        # at the finest rung the jump, ripples included, spans at least 32 cells
        m, grid, ladder = setup
        assert transition_width(m) * ladder.eps[-1] / grid.h >= 32


class TestHeaviside:
    def test_far_right_and_left(self, setup, H):
        m, grid, ladder = setup
        # tail-free limit: eps <= hi / support_radius
        R = support_radius(m)
        for eps in ladder:
            assert eps <= grid.hi / R
            v = H(eps)
            assert abs(v[-1] - 1.0) < 1e-10
            assert abs(v[0]) < 1e-10

    def test_odd_about_the_jump(self, setup, H, ladder):
        # H(-x) = 1 - H(x); the grid is symmetric about 0
        for eps in ladder:
            v = H(eps)
            assert np.max(np.abs(v[::-1] - (1.0 - v))) < 1e-12

    def test_bounded_ripple(self, H, ladder):
        # the kernel has a flat Fourier profile, so it changes sign and H overshoots
        for eps in ladder:
            v = H(eps)
            assert -0.1 < v.min() < 0 and 1 < v.max() < 1.1
            assert v.min() == pytest.approx(1.0 - v.max(), abs=1e-12)

    def test_minus_one_sixth(self, H, dH, ladder):
        g = (H * H - H) * dH
        for eps in ladder:
            assert integral(g, eps).real == pytest.approx(-1 / 6, abs=1e-6)

    def test_domain_error(self):
        m = Mollifier(make_plateau_profile(1, 2))
        with pytest.raises(DomainError):
            heaviside_rep(m, SampleGrid(0.0, 1.0, 64))

    def test_fd4_rule_agrees(self, setup):
        m, grid, ladder = setup
        fd = SampleGrid(grid.lo, grid.hi, grid.n, "fd4")
        Hs = heaviside_rep(m, grid)
        Hf = heaviside_rep(m, fd)
        eps = ladder.eps[0]
        a = gf_derivative(Hs)(eps)
        b = gf_derivative(Hf)(eps)
        assert np.max(np.abs(a - b)) < 1e-6 * np.max(np.abs(a))


class TestDirac:
    def test_unit_mass(self, setup, ladder):
        m, grid, _ = setup
        d = dirac_rep(m, grid)
        for eps in ladder:
            assert integral(d, eps).real == pytest.approx(1.0, abs=1e-6)

    def test_localized(self, setup, dH, ladder):
        # band-limited kernel: the tail bound of the unit-scale kernel scales as 1/eps
        m, grid, _ = setup
        R = support_radius(m, tol=1e-10)
        for eps in ladder:
            far = np.abs(grid.x) > eps * R
            assert np.max(np.abs(dH(eps)[far])) < 1e-10 / eps

    def test_peak_scaling(self, dH, ladder):
        peaks = [dH(eps).max() for eps in ladder]
        for a, b in zip(peaks, peaks[1:]):
            assert a / b == pytest.approx(0.5, rel=0.1)

    def test_matches_position_kernel(self, setup, dH, ladder):
        m, grid, _ = setup
        eps = ladder.eps[0]
        ref = position_kernel(m, eps, grid.x[::10])
        assert np.max(np.abs(dH(eps)[::10] - ref)) < 1e-8 * ref.max()


class TestAlgebra:
    def test_power_at_far_right(self, H, ladder):
        assert gf_power(H, 2)(ladder.eps[0])[-1] == pytest.approx(1.0, abs=1e-12)

    def test_chain_rule(self, H, dH, ladder):
        lhs = gf_derivative(gf_power(H, 2))
        rhs = 2 * H * dH
        for eps in ladder:
            assert np.max(np.abs(lhs(eps) - rhs(eps))) < 1e-8

    def test_product_with_zero(self, setup, H, ladder):
        zero = constant_rep(setup[1], 0.0)
        for eps in ladder:
            assert not np.any(gf_product(H, zero)(eps))

    def test_grid_mismatch(self, H):
        other = constant_rep(SampleGrid(-1.0, 1.0, 33), 1.0)
        with pytest.raises(ShapeError):
            gf_product(H, other)

    @pytest.mark.parametrize("p", [0, -1, 1.5])
    def test_bad_power(self, H, p):
        with pytest.raises(ParameterError):
            gf_power(H, p)

    def test_scalar_operations(self, H, ladder):
        eps = ladder.eps[1]
        assert np.array_equal((H - 1.0)(eps), H(eps) - 1.0)
        assert np.array_equal((1.0 - H)(eps), 1.0 - H(eps))
        assert np.array_equal((-H)(eps), -H(eps))
        assert np.array_equal((H**3)(eps), H(eps) ** 3)

    def test_restriction_commutes(self, H, dH, ladder):
        sub = ladder.sub([1, 3])
        prod = H * dH
        for eps in sub:
            assert np.array_equal(prod(eps), H(eps) * dH(eps))

    def test_deterministic(self, H, ladder):
        eps = ladder.eps[2]
        assert np.array_equal(H(eps), H(eps))

    def test_rejects_nonpositive_eps(self, H):
        with pytest.raises(ParameterError):
            H(0.0)


class TestDerivativeRules:
    @pytest.mark.parametrize("rule, tol", [("spectral", 1e-10), ("fd4", 1e-6)])
    def test_smooth_function(self, rule, tol):
        g = SampleGrid(-1.0, 1.0, 401, rule)
        f = np.tanh(10 * g.x) + 0.3 * g.x
        exact = 10 / np.cosh(10 * g.x) ** 2 + 0.3
        assert np.max(np.abs(grid_derivative(f, g) - exact)) < tol * np.max(np.abs(exact)) * 100

    @settings(max_examples=20, deadline=None)
    @given(st.floats(-3, 3), st.floats(-3, 3), st.integers(1, 6))
    def test_linear_plus_periodic(self, a, b, n):
        g = SampleGrid(0.0, 2 * math.pi, 129)
        f = a + b * g.x + np.sin(n * g.x)
        exact = b + n * np.cos(n * g.x)
        assert np.max(np.abs(grid_derivative(f, g) - exact)) < 1e-10 * (1 + abs(b) + n)


class TestPair:
    def test_zero(self, setup, ladder):
        zero = constant_rep(setup[1], 0.0)
        assert pair(zero, bump_test_function(), ladder.eps[0]) == 0

    def test_linear_decay(self, H, ladder):
        psi = bump_test_function(0.1, 0.5)
        vals = np.array([abs(pair(H * H - H, psi, e)) for e in ladder])
        eps = np.array(ladder.eps)
        ratio = vals / eps
        assert ratio.max() / ratio.min() < 1.2

    def test_boundary_support(self, H, ladder):
        with pytest.raises(DomainError):
            pair(H, lambda x: np.ones_like(x), ladder.eps[0])

    def test_shape(self, H, ladder):
        with pytest.raises(ShapeError):
            pair(H, np.zeros(5), ladder.eps[0])

    def test_against_direct_quadrature(self, setup, H, ladder):
        from scipy.integrate import simpson

        grid = setup[1]
        psi = bump_test_function(-0.2, 0.6)
        eps = ladder.eps[0]
        ref = simpson(H(eps) * psi(grid.x), x=grid.x)
        assert pair(H, psi, eps).real == pytest.approx(ref, abs=1e-10)


class TestAssociate:
    @pytest.mark.parametrize(
        "case",
        ["H2_H", "H3_H", "2HdH_dH", "3H2dH_dH"],
    )
    def test_associated(self, H, dH, ladder, tests, case):
        a, b = {
            "H2_H": (H * H, H),
            "H3_H": (H**3, H),
            "2HdH_dH": (2 * H * dH, dH),
            "3H2dH_dH": (3 * H * H * dH, dH),
        }[case]
        rep = associate(a, b, ladder, tests)
        assert rep.verdict == "associated"
        assert all(s >= 0.5 for s in rep.slopes.values())

    def test_not_associated(self, H, dH, ladder, tests):
        rep = associate(H * H * dH, H * dH, ladder, tests)
        assert rep.verdict == "not-associated"
        # window test function equals 1 across the jump
        assert rep.limits["window"].real == pytest.approx(-1 / 6, abs=1e-3)

    def test_not_multiplicative(self, H, dH, ladder, tests):
        assert associate(H * H, H, ladder, tests).verdict == "associated"
        assert associate(H * H * dH, H * dH, ladder, tests).verdict == "not-associated"

    @pytest.mark.parametrize("power", [2, 3])
    def test_derivative_respects_association(self, H, dH, ladder, tests, power):
        assert associate(H**power, H, ladder, tests).verdict == "associated"
        rep = associate(gf_derivative(H**power), dH, ladder, tests)
        assert rep.verdict == "associated"

    def test_identical_is_associated(self, H, ladder, tests):
        assert associate(H, H, ladder, tests).verdict == "associated"

    def test_constant_offset_not_associated(self, H, ladder, tests):
        assert associate(H + 0.1, H, ladder, tests).verdict == "not-associated"

    def test_needs_three_rungs(self, H, ladder, tests):
        with pytest.raises(LadderError):
            associate(H * H, H, ladder.sub([0, 1]), tests)

    def test_needs_tests(self, H, ladder):
        with pytest.raises(ParameterError):
            associate(H * H, H, ladder, {})

    def test_report_dict(self, H, ladder, tests):
        d = associate(H * H, H, ladder, list(tests.values())).as_dict()
        assert d["verdict"] == "associated"
        assert set(d["verdicts"]) == {"test0", "test1"}

    def test_representative_rejects_wrong_shape(self, setup):
        grid = setup[1]
        bad = Representative(lambda e: np.zeros(3), grid)
        with pytest.raises(ShapeError):
            bad(0.1)

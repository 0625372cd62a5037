import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from chemns.errors import ConfigurationError, DomainError
from chemns.spectral import (
    DegenerateInterpolation,
    InfeasibleInterpolation,
    SpectralGrid,
    dealias,
    divergence,
    fft_forward,
    fft_inverse,
    frac_laplacian,
    gn_theta,
    gradient,
    hs_inhom,
    hs_norm,
    inner,
    laplacian,
    leray_project,
    lp_norm,
)

from conftest import bandlimited

TWO_PI = 2 * np.pi
SCALARS = st.floats(-50, 50).filter(lambda v: v == 0 or abs(v) > 1e-100)


def rel(a, b):
    return np.abs(a - b).max() / max(np.abs(b).max(), 1e-300)


class TestGrid:
    def test_zero_wavenumber_exact(self):
        g = SpectralGrid((8, 10, 12), (1.0, 2.0, 3.0))
        for k in g.k:
            assert k.ravel()[0] == 0.0

    def test_spacing_and_cell_volume(self):
        g = SpectralGrid((8, 16), (2.0, 4.0))
        assert g.spacing == (0.25, 0.25)
        assert g.cell_volume == pytest.approx(0.0625)
        assert g.volume == pytest.approx(8.0)

    def test_mask_symmetric_under_negation(self):
        g = SpectralGrid((12, 12, 12))
        m0, m1 = g.mode_indices[0], g.mode_indices[1]
        mask = g.dealias_mask
        for i, a in enumerate(m0):
            for j, b in enumerate(m1):
                ii = list(m0).index(-a) if -a in m0 else None
                jj = list(m1).index(-b) if -b in m1 else None
                if ii is not None and jj is not None:
                    assert mask[i, j, 0] == mask[ii, jj, 0]

    def test_mask_keeps_two_thirds(self):
        g = SpectralGrid((16, 16))
        kept = sorted(set(np.abs(g.mode_indices[0][g.dealias_mask[:, 0]]).tolist()))
        assert kept == [0, 1, 2, 3, 4, 5]

    @pytest.mark.parametrize(
        "sizes",
        [(8,), (8, 8, 8, 8), (7, 8), (6, 8)],
    )
    def test_rejects_bad_sizes(self, sizes):
        with pytest.raises(ConfigurationError):
            SpectralGrid(sizes)

    def test_rejects_bad_length(self):
        with pytest.raises(ConfigurationError):
            SpectralGrid((8, 8), (1.0, -1.0))

    def test_immutable_arrays(self):
        g = SpectralGrid((8, 8))
        with pytest.raises(ValueError):
            g.k2[0, 0] = 1.0

    def test_equality(self):
        assert SpectralGrid((8, 8)) == SpectralGrid((8, 8))
        assert SpectralGrid((8, 8)) != SpectralGrid((8, 8), 1.0)


class TestTransforms:
    def test_constant_has_only_zero_mode(self):
        g = SpectralGrid((8, 8, 8))
        fh = fft_forward(g, np.ones(g.shape))
        assert fh[0, 0, 0] == pytest.approx(1.0)
        fh[0, 0, 0] = 0
        assert np.abs(fh).max() < 1e-15

    def test_single_harmonic(self):
        g = SpectralGrid((16, 16), (3.0, 3.0))
        x, _ = g.coords()
        fh = fft_forward(g, np.sin(TWO_PI * x / 3.0))
        big = np.argwhere(np.abs(fh) > 1e-12)
        assert sorted(g.mode_indices[0][i] for i, _ in big) == [-1, 1]
        assert np.allclose(np.abs(fh[np.abs(fh) > 1e-12]), 0.5)

    @pytest.mark.parametrize("n", [8, 16, 32])
    def test_round_trip_100_fields(self, n, rng):
        g = SpectralGrid((n, n, n)) if n < 32 else SpectralGrid((n, n))
        for _ in range(100):
            f = rng.standard_normal(g.shape)
            back = fft_inverse(g, fft_forward(g, f))
            assert np.abs(back - f).max() <= 1e-12 * np.abs(f).max()

    def test_parseval(self, grid3, rng):
        f = rng.standard_normal(grid3.shape)
        fh = grid3.forward(f)
        spectral = grid3.volume * np.sum(grid3.weights * np.abs(fh) ** 2)
        assert spectral == pytest.approx(lp_norm(grid3, f, 2) ** 2, rel=1e-12)

    def test_size_mismatch(self):
        g = SpectralGrid((8, 8))
        with pytest.raises(ConfigurationError):
            fft_forward(g, np.zeros((8, 10)))
        with pytest.raises(ConfigurationError):
            fft_inverse(g, np.zeros((8, 8), complex))


class TestFracLaplacian:
    def test_unit_mode(self):
        g = SpectralGrid((8, 8, 8))
        x = g.coords()[0]
        for s in (0.3, 1.0, 2.7):
            assert rel(frac_laplacian(g, np.cos(x), s), np.cos(x)) < 1e-13

    def test_constant_annihilated(self):
        g = SpectralGrid((8, 8, 8))
        assert np.abs(frac_laplacian(g, np.full(g.shape, 7.0), 0.75)).max() < 1e-13

    def test_cos2x(self):
        g = SpectralGrid((16, 16, 16))
        x = g.coords()[0]
        out = frac_laplacian(g, np.cos(2 * x), 0.75)
        assert rel(out, 2**1.5 * np.cos(2 * x)) < 1e-13
        assert 2**1.5 == pytest.approx(2.8284271, abs=1e-7)

    def test_zero_mode_exactly_zero(self, grid3, rng):
        out = frac_laplacian(grid3, 3 + rng.standard_normal(grid3.shape), 0.6)
        assert grid3.forward(out)[0, 0, 0] == pytest.approx(0.0, abs=1e-15)

    def test_negative_order_rejected(self, grid3):
        with pytest.raises(DomainError):
            frac_laplacian(grid3, grid3.zeros(), -0.5)

    def test_multiplier_diagonal_on_retained_modes(self):
        g = SpectralGrid((8, 8), (2.0, 3.0))
        x, y = g.coords()
        for m1 in range(-2, 3):
            for m2 in range(-2, 3):
                kx, ky = TWO_PI * m1 / 2.0, TWO_PI * m2 / 3.0
                e = np.cos(kx * x + ky * y)
                lam = (kx * kx + ky * ky) ** 0.8
                assert np.abs(frac_laplacian(g, e, 0.8) - lam * e).max() < 1e-12 * max(lam, 1)

    @given(st.floats(0, 2), st.floats(0, 2))
    def test_semigroup(self, s1, s2):
        g = SpectralGrid((16, 16))
        f = bandlimited(g, np.random.default_rng(3))
        a = frac_laplacian(g, frac_laplacian(g, f, s1), s2)
        b = frac_laplacian(g, f, s1 + s2)
        assert np.abs(a - b).max() <= 1e-10 * np.abs(b).max()


class TestDerivatives:
    def test_gradient_of_sine(self, grid3):
        x = grid3.coords()[0]
        gr = gradient(grid3, np.sin(x))
        assert np.abs(gr[0] - np.cos(x)).max() < 1e-13
        assert np.abs(gr[1:]).max() < 1e-13

    def test_shear_is_divergence_free(self, grid3):
        y = grid3.coords()[1]
        v = grid3.vector_zeros()
        v[0] = np.sin(y)
        assert np.abs(divergence(grid3, v)).max() < 1e-13

    def test_div_grad_is_laplacian(self, grid3, rng):
        for _ in range(10):
            f = bandlimited(grid3, rng)
            lap = laplacian(grid3, f)
            err = lp_norm(grid3, divergence(grid3, gradient(grid3, f)) - lap, 2)
            assert err <= 1e-11 * lp_norm(grid3, lap, 2)


class TestLeray:
    def test_pure_gradient_removed(self, grid3):
        x = grid3.coords()[0]
        v = grid3.vector_zeros()
        v[0] = np.cos(x)
        assert np.abs(leray_project(grid3, v)).max() < 1e-13

    def test_solenoidal_unchanged(self, grid3):
        y = grid3.coords()[1]
        v = grid3.vector_zeros()
        v[0] = np.sin(y)
        assert np.abs(leray_project(grid3, v) - v).max() < 1e-13

    def test_helmholtz_split(self, grid3):
        x, y, _ = grid3.coords()
        v = grid3.vector_zeros()
        v[0] = np.sin(y) + np.cos(x)
        expected = grid3.vector_zeros()
        expected[0] = np.sin(y)
        assert np.abs(leray_project(grid3, v) - expected).max() < 1e-13

    def test_mean_passes_through(self, grid3):
        v = np.ones((3,) + grid3.shape)
        assert np.allclose(leray_project(grid3, v), 1.0)

    def test_divergence_free_and_idempotent(self, grid3, rng):
        for _ in range(5):
            v = rng.standard_normal((3,) + grid3.shape)
            pv = leray_project(grid3, v)
            assert lp_norm(grid3, divergence(grid3, pv), 2) <= 1e-11 * hs_norm(grid3, v, 1)
            assert np.abs(leray_project(grid3, pv) - pv).max() <= 1e-12 * np.abs(pv).max()

    def test_self_adjoint(self, grid3, rng):
        v = rng.standard_normal((3,) + grid3.shape)
        w = rng.standard_normal((3,) + grid3.shape)
        a = inner(grid3, leray_project(grid3, v), w)
        b = inner(grid3, v, leray_project(grid3, w))
        assert a == pytest.approx(b, rel=1e-10)

    def test_two_dimensional(self, grid2, rng):
        v = rng.standard_normal((2,) + grid2.shape)
        pv = leray_project(grid2, v)
        assert lp_norm(grid2, divergence(grid2, pv), 2) <= 1e-11 * hs_norm(grid2, v, 1)


class TestDealias:
    def test_retained_support_unchanged(self, grid3, rng):
        c = (rng.standard_normal(grid3.spectral_shape) + 0j) * grid3.dealias_mask
        assert np.array_equal(dealias(grid3, c), c)

    def test_single_masked_mode_removed(self):
        g = SpectralGrid((12, 12))
        c = np.zeros(g.spectral_shape, complex)
        c[5, 0] = c[-5, 0] = 0.5  # cos(5x), 3 * 5 >= 12
        assert not g.dealias_mask[5, 0]
        assert np.all(g.inverse(dealias(g, c)) == 0)

    def test_idempotent_and_energy_nonincreasing(self, grid3, rng):
        for _ in range(20):
            f = rng.standard_normal(grid3.shape)
            c = grid3.forward(f)
            d = dealias(grid3, c)
            assert np.array_equal(dealias(grid3, d), d)
            e = lambda a: np.sum(grid3.weights * np.abs(a) ** 2)  # noqa: E731
            assert e(d) <= e(c)


class TestNorms:
    def test_constant_l2(self):
        g = SpectralGrid((8, 8, 8))
        assert lp_norm(g, np.ones(g.shape), 2) == pytest.approx(TWO_PI**1.5, rel=1e-13)
        assert TWO_PI**1.5 == pytest.approx(15.7496, abs=1e-4)

    def test_sine_l2_and_linf(self):
        g = SpectralGrid((16, 16, 16))
        x = g.coords()[0]
        assert lp_norm(g, np.sin(x), 2) == pytest.approx(np.sqrt(TWO_PI**3 / 2), rel=1e-13)
        assert np.sqrt(TWO_PI**3 / 2) == pytest.approx(11.1366, abs=1e-4)
        assert lp_norm(g, np.sin(x), np.inf) == pytest.approx(1.0, abs=1e-15)

    def test_p_below_one_rejected(self, grid3):
        with pytest.raises(DomainError):
            lp_norm(grid3, grid3.zeros(), 0.5)

    def test_lp_matches_closed_form_for_quartic(self):
        # int sin^4 over a period is 3/8 of the period
        g = SpectralGrid((16, 16))
        x = g.coords()[0]
        expected = (3 / 8 * TWO_PI**2) ** 0.25
        assert lp_norm(g, np.sin(x), 4) == pytest.approx(expected, rel=1e-13)

    def test_vector_norm_uses_pointwise_magnitude(self, grid2):
        x, y = grid2.coords()
        v = np.stack([np.cos(x), np.sin(x)])
        assert lp_norm(grid2, v, 3) == pytest.approx(TWO_PI ** (2 / 3), rel=1e-13)

    def test_hs_examples(self):
        g = SpectralGrid((16, 16, 16))
        x = g.coords()[0]
        assert hs_norm(g, np.sin(x), 1) == pytest.approx(lp_norm(g, np.cos(x), 2), rel=1e-13)
        assert hs_norm(g, np.sin(2 * x), 2) == pytest.approx(4 * lp_norm(g, np.sin(2 * x), 2), rel=1e-13)
        assert hs_norm(g, np.full(g.shape, 5.0), 1.5) == 0.0

    def test_hs_zero_is_mean_free_l2(self, grid3, rng):
        f = 2 + rng.standard_normal(grid3.shape)
        assert hs_norm(grid3, f, 0) == pytest.approx(lp_norm(grid3, f - f.mean(), 2), rel=1e-10)

    def test_hs_negative_order_finite(self, grid3, rng):
        assert np.isfinite(hs_norm(grid3, rng.standard_normal(grid3.shape), -1.5))

    def test_hs_inhom(self, grid3, rng):
        f = rng.standard_normal(grid3.shape)
        expected = np.hypot(lp_norm(grid3, f, 2), hs_norm(grid3, f, 1))
        assert hs_inhom(grid3, f, 1) == pytest.approx(expected, rel=1e-14)

    @given(SCALARS, st.sampled_from([1, 1.5, 2, 3, 7.5, np.inf]))
    def test_lp_homogeneity(self, lam, p):
        g = SpectralGrid((8, 8))
        f = np.random.default_rng(1).standard_normal(g.shape)
        assert lp_norm(g, lam * f, p) == pytest.approx(abs(lam) * lp_norm(g, f, p), rel=1e-12, abs=1e-300)

    @given(SCALARS, st.floats(-1, 2))
    def test_hs_homogeneity(self, lam, s):
        g = SpectralGrid((8, 8))
        f = np.random.default_rng(2).standard_normal(g.shape)
        assert hs_norm(g, lam * f, s) == pytest.approx(abs(lam) * hs_norm(g, f, s), rel=1e-12, abs=1e-300)


class TestGagliardoNirenberg:
    def test_second_derivative_example(self):
        assert gn_theta(2, 4, 2, 2, 3, 2, dim=3) == pytest.approx(0.25, abs=0)

    def test_degenerate(self):
        with pytest.raises(DegenerateInterpolation):
            gn_theta(1, 2, 1, 2, 1, 2)

    def test_midpoint(self):
        assert gn_theta(1, 2, 0, 2, 2, 2, dim=3) == 0.5

    def test_infeasible(self):
        with pytest.raises(InfeasibleInterpolation) as info:
            gn_theta(1, np.inf, 0, 2, 2, 2, dim=3)
        assert info.value.theta == -0.25

    def test_sigma_must_be_below_s(self):
        with pytest.raises(DomainError):
            gn_theta(2, 2, 0, 2, 1, 2)

    @given(
        st.floats(-1, 0.9),
        st.floats(0.05, 1.0),
        st.floats(1.0, 2.5),
        st.integers(0, 2**31 - 1),
    )
    def test_l2_interpolation_holds_with_constant_one(self, a, frac, s, seed):
        sigma = a + frac * (s - a)
        if not sigma < s:
            return
        theta = gn_theta(sigma, 2, a, 2, s, 2, dim=3)
        g = SpectralGrid((8, 8, 8))
        f = np.random.default_rng(seed).standard_normal(g.shape)
        f -= f.mean()
        lhs = hs_norm(g, f, sigma)
        rhs = hs_norm(g, f, a) ** theta * hs_norm(g, f, s) ** (1 - theta)
        assert lhs <= rhs * (1 + 1e-10)

import numpy as np
import pytest

from vortexlab import field_calculus as fc


def analytic_scalar(grid, coeffs):
    """Explicit trig polynomial, sampled; for convergence studies the same
    continuum function must be sampled at every resolution."""
    x = grid.coordinates()
    arr = np.zeros(grid.shape, dtype=complex)
    for amp, k in coeffs:
        phase = 2.0 * np.pi * sum(k[a] * x[a] for a in range(4))
        arr = arr + amp * np.exp(1j * phase)
    return arr


class TestGridSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            fc.GridSpec(7)
        with pytest.raises(ValueError):
            fc.GridSpec(6)
        with pytest.raises(ValueError):
            fc.GridSpec(8, backend="spectral", bidegree=(1, 0))
        with pytest.raises(ValueError):
            fc.GridSpec(8, backend="link", bidegree=(1, 0), rank=2)

    def test_volume(self):
        grid = fc.GridSpec(8, (2.0, 3.0), "link")
        assert grid.volume == 6.0
        assert abs(grid.lengths[0] - np.sqrt(2.0)) < 1e-15


class TestDerivatives:
    def test_constant_derivative_vanishes(self, grid8):
        f = fc.Field.constant(grid8, 2.3 + 0.7j, "00", "section")
        conn = fc.Connection.trivial(grid8)
        assert fc.norm_sup(fc.dbar(conn, f)) == 0.0
        assert fc.norm_sup(fc.partial(conn, f)) == 0.0

    def test_mode_derivative_exact(self, grid8):
        conn = fc.Connection.trivial(grid8)
        f = fc.mode_field(grid8, "00", "section", 0, (0, 0, 1, 0))
        out = fc.dbar(conn, f)
        # dbar_2 exp(2 pi i x2) in orthonormal components: sqrt2 * (pi i)
        expected = np.sqrt(2.0) * np.pi * 1j * f.values[0]
        assert np.abs(out.values[1] - expected).max() < 1e-13
        assert np.abs(out.values[0]).max() < 1e-13

    def test_areas_scale_derivatives(self):
        grid = fc.GridSpec(8, (4.0, 1.0), "spectral")
        conn = fc.Connection.trivial(grid)
        f = fc.mode_field(grid, "00", "section", 0, (1, 0, 0, 0))
        out = fc.dbar(conn, f)
        expected = np.sqrt(2.0) * 0.5 * 2j * np.pi / 2.0  # 1/L1 with L1 = 2
        assert np.abs(out.values[0] - expected * f.values[0]).max() < 1e-13

    def test_leibniz_spectral_exact(self, grid16):
        conn = fc.Connection.trivial(grid16)
        f = fc.random_band_limited(grid16, 1, 4, "00", "scalar")
        g = fc.random_band_limited(grid16, 2, 4, "00", "scalar")
        prod = fc.Field(grid16, "00", "scalar", f.values * g.values)
        lhs = fc.dbar(conn, prod)
        rhs_vals = fc.dbar(conn, f).values * g.values[0] + f.values[0] * fc.dbar(conn, g).values
        assert np.abs(lhs.values - rhs_vals).max() < 1e-12

    def test_dbar_squared_vanishes_abelian(self, grid16):
        conn = fc.Connection.trivial(grid16)
        f = fc.random_band_limited(grid16, 3, 4, "00", "section")
        ddf = fc.dbar(conn, fc.dbar(conn, f))
        assert fc.norm_sup(ddf) < 1e-12

    def test_gauge_covariance_of_dbar(self, grid16):
        conn = fc.random_connection(grid16, 4, 3, amplitude=0.4)
        f = fc.random_band_limited(grid16, 5, 3, "00", "section")
        g = fc.random_gauge(grid16, 6)
        lhs = fc.dbar(fc.gauge_transform(g, conn), fc.gauge_transform(g, f))
        rhs = fc.gauge_transform(g, fc.dbar(conn, f))
        assert np.abs(lhs.values - rhs.values).max() < 1e-10

    def test_kind_mismatch(self, grid8):
        conn = fc.Connection.trivial(grid8)
        F = fc.Field.zeros(grid8, "2r", "endo")
        with pytest.raises(fc.KindError):
            fc.dbar(conn, F)


class TestCurvature:
    def test_trivial(self, grid8):
        assert fc.norm_sup(fc.curvature(fc.Connection.trivial(grid8))) == 0.0

    def test_background_constant_curvature(self):
        grid = fc.GridSpec(16, (1.0, 1.0), "link", (1, 0))
        F = fc.curvature(fc.Connection.trivial(grid))
        lam = fc.lambda_contract(F)
        expected = -2j * np.pi  # i Lambda F = 2 pi deg / vol on factor one
        assert np.abs(lam.values[0] - expected).max() < 1e-10
        assert abs(fc.chern_weil_degree(fc.Connection.trivial(grid)) - 1.0) < 1e-12

    def test_bianchi_spectral(self, grid16):
        conn = fc.random_connection(grid16, 7, 3, amplitude=0.5)
        F = fc.curvature(conn)
        dF = fc.exterior_d(conn, F)
        assert fc.norm_sup(dF) < 1e-10

    def test_bianchi_nonabelian(self):
        grid = fc.GridSpec(16, (1.0, 1.0), "spectral", rank=2)
        conn = fc.random_connection(grid, 8, 3, amplitude=0.5)
        dF = fc.exterior_d(conn, fc.curvature(conn))
        assert fc.norm_sup(dF) < 1e-10

    def test_gauge_conjugation(self, grid16):
        conn = fc.random_connection(grid16, 9, 3, amplitude=0.4)
        g = fc.random_gauge(grid16, 10)
        F = fc.curvature(conn)
        Fg = fc.curvature(fc.gauge_transform(g, conn))
        Fconj = fc.gauge_transform(g, F)
        assert np.abs(Fg.values - Fconj.values).max() < 1e-10

    def test_plaquette_branch_failure(self):
        grid = fc.GridSpec(8, (1.0, 1.0), "link")
        pot = np.zeros((4, 1, 1) + grid.shape, dtype=complex)
        x = grid.coordinates()
        # rough enough that a plaquette angle reaches the principal branch cut
        pot[1] += 90j * np.cos(2 * np.pi * x[0])
        conn = fc.Connection(grid, pot)
        with pytest.raises(ValueError, match="refine"):
            fc.curvature(conn)


class TestChernWeil:
    def test_trivial_bundle_any_potential(self, grid16):
        conn = fc.random_connection(grid16, 11, 4, amplitude=0.6)
        assert abs(fc.chern_weil_degree(conn)) < 1e-10

    def test_bidegrees_with_areas(self):
        grid = fc.GridSpec(16, (2.0, 1.0), "link", (1, 1))
        # degree = d1 a2 + d2 a1
        assert abs(fc.chern_weil_degree(fc.Connection.trivial(grid)) - 3.0) < 1e-10

    def test_deformation_invariance(self):
        grid = fc.GridSpec(16, (1.0, 1.0), "link", (1, 0))
        for seed in range(10):
            conn = fc.random_connection(grid, 100 + seed, 3, amplitude=0.3)
            assert abs(fc.chern_weil_degree(conn) - 1.0) < 1e-8

    def test_gauge_invariance_link(self):
        grid = fc.GridSpec(16, (1.0, 1.0), "link", (1, 0))
        conn = fc.random_connection(grid, 12, 3, amplitude=0.3)
        g = fc.random_gauge(grid, 13)
        assert abs(fc.chern_weil_degree(conn) - fc.chern_weil_degree(fc.gauge_transform(g, conn))) < 1e-10


class TestContractionsAndStar:
    def test_lambda_of_omega(self, grid8):
        om = fc.Field.zeros(grid8, "2r", "scalar")
        om.values[0] = 1.0
        om.values[5] = 1.0
        assert np.abs(fc.lambda_contract(om).values[0] - 2.0).max() == 0.0

    def test_lambda_adjointness(self, grid16):
        # <Lambda F, h> = <F, h w> with the wedge against the Kahler form
        F = fc.random_band_limited(grid16, 14, 4, "2r", "endo")
        h = fc.random_band_limited(grid16, 15, 4, "00", "endo")
        lhs = fc.inner_product(fc.lambda_contract(F), h)
        h_omega = fc.Field.zeros(grid16, "2r", "endo")
        h_omega.values[0] = h.values[0]
        h_omega.values[5] = h.values[0]
        rhs = fc.inner_product(F, h_omega)
        assert abs(lhs - rhs) < 1e-10 * (1 + abs(lhs))

    def test_selfdual_plus_kills_antiselfdual(self, grid8):
        F = fc.random_band_limited(grid8, 16, 3, "2r", "endo")
        asd = fc.antiselfdual(F)
        assert fc.norm_sup(fc.selfdual_plus(asd)) < 1e-13

    def test_star_squares_to_identity(self, grid8):
        F = fc.random_band_limited(grid8, 17, 3, "2r", "endo")
        twice = fc.hodge_star(fc.hodge_star(F))
        assert np.abs(twice.values - F.values).max() == 0.0
        sd = fc.selfdual_plus(F)
        assert np.abs(fc.hodge_star(sd).values - sd.values).max() < 1e-13

    def test_complex_split_matches_real_projection(self, grid8):
        F = fc.random_band_limited(grid8, 18, 3, "2r", "endo")
        sd = fc.selfdual_plus(F)
        f20 = fc.f20_component(F)
        f02 = fc.f02_component(F)
        lam = fc.lambda_contract(F)
        norm_complex = (
            fc.norm_l2(f20) ** 2 + fc.norm_l2(f02) ** 2 + 0.5 * fc.norm_l2(lam) ** 2
        )
        assert abs(fc.norm_l2(sd) ** 2 - norm_complex) < 1e-10

    def test_skew_hermitian_reality_of_components(self, grid8):
        conn = fc.random_connection(grid8, 19, 3, amplitude=0.5)
        F = fc.curvature(conn)
        f20 = fc.f20_component(F).values[0]
        f02 = fc.f02_component(F).values[0]
        assert np.abs(f02 + np.conj(np.swapaxes(f20, 0, 1))).max() < 1e-12


class TestRandomAndGauge:
    def test_determinism(self, grid8):
        a = fc.random_band_limited(grid8, 20, 3, "01", "section")
        b = fc.random_band_limited(grid8, 20, 3, "01", "section")
        assert np.array_equal(a.values, b.values)

    def test_band_limit_strict(self, grid8):
        f = fc.random_band_limited(grid8, 21, 3, "00", "scalar")
        spec = np.fft.fftn(f.values[0])
        spec[np.ix_(*(4 * [list(range(-2, 3))]))] = 0.0
        assert np.abs(spec).max() < 1e-10 * grid8.n ** 4

    def test_gauge_preserves_pointwise_norm(self, grid16):
        f = fc.random_band_limited(grid16, 22, 3, "00", "section")
        g = fc.random_gauge(grid16, 23)
        fg = fc.gauge_transform(g, f)
        assert np.abs(np.abs(fg.values) - np.abs(f.values)).max() < 1e-12

    def test_real_fields_are_real(self, grid8):
        f = fc.random_band_limited(grid8, 24, 3, "00", "scalar", real=True)
        assert np.abs(f.values.imag).max() == 0.0

    def test_skew_hermitian_potentials(self, grid8):
        conn = fc.random_connection(grid8, 25, 3)
        pot = conn.potential
        assert np.abs(pot + np.conj(np.swapaxes(pot, 1, 2))).max() < 1e-14


class TestLinkConvergence:
    """Refinement study N in {8, 16, 32}: every first-order identity gap
    shrinks at second order; the measured order is read off the finest grid
    pair (the standard observed-order estimate), with the coarse pair only
    required to be plausibly pre-asymptotic."""

    COEFFS_F = [(0.7, (1, 0, 0, 0)), (0.4, (0, 1, 1, 0))]
    COEFFS_G = [(0.5, (0, 0, 1, 0)), (0.3, (1, 0, 0, 1))]

    @staticmethod
    def measured_order(gaps):
        return float(np.log2(gaps[-2] / gaps[-1]))

    def _leibniz_gap(self, n):
        grid = fc.GridSpec(n, (1.0, 1.0), "link")
        conn = fc.Connection.trivial(grid)
        f = fc.Field(grid, "00", "scalar", analytic_scalar(grid, self.COEFFS_F)[None])
        g = fc.Field(grid, "00", "scalar", analytic_scalar(grid, self.COEFFS_G)[None])
        prod = fc.Field(grid, "00", "scalar", f.values * g.values)
        lhs = fc.covariant_axis(conn, prod, 0)
        rhs = fc.covariant_axis(conn, f, 0) * g.values + f.values * fc.covariant_axis(conn, g, 0)
        return float(np.abs(lhs - rhs).max())

    def _derivative_gap(self, n):
        grid = fc.GridSpec(n, (1.0, 1.0), "link")
        conn = fc.Connection.trivial(grid)
        f = fc.Field(grid, "00", "scalar", analytic_scalar(grid, self.COEFFS_F)[None])
        x = grid.coordinates()
        exact = 0.7 * 2j * np.pi * np.exp(2j * np.pi * x[0]) * np.ones(grid.shape)
        return float(np.abs(fc.covariant_axis(conn, f, 0)[0] - exact).max())

    def _curvature_gap(self, n):
        grid = fc.GridSpec(n, (1.0, 1.0), "link")
        x = grid.coordinates()
        s = 0.4 * np.cos(2 * np.pi * x[0]) * np.cos(2 * np.pi * x[1])
        pot = np.zeros((4, 1, 1) + grid.shape, dtype=complex)
        pot[1] = 1j * s
        conn = fc.Connection(grid, pot)
        F = fc.curvature(conn)
        # analytic F_01 = d_0 a_1 = -0.8 pi i sin cos
        expected = -0.8j * np.pi * np.sin(2 * np.pi * x[0]) * np.cos(2 * np.pi * x[1])
        return float(np.abs(F.values[0][0, 0] - expected).max())

    def _gauge_covariance_gap(self, n):
        grid = fc.GridSpec(n, (1.0, 1.0), "link")
        x = grid.coordinates()
        s = 0.5 * np.cos(2 * np.pi * x[0]) + 0.3 * np.sin(2 * np.pi * x[2])
        ds0 = -np.pi * np.sin(2 * np.pi * x[0])
        ds2 = 0.6 * np.pi * np.cos(2 * np.pi * x[2])
        phase = np.exp(1j * s)
        a_raw = 0.4 * np.cos(2 * np.pi * x[1])
        pot = np.zeros((4, 1, 1) + grid.shape, dtype=complex)
        pot[0] = 1j * a_raw
        pot_g = pot.copy()
        pot_g[0] = 1j * (a_raw + ds0)
        pot_g[2] = 1j * ds2
        conn = fc.Connection(grid, pot)
        conn_g = fc.Connection(grid, pot_g)
        f = fc.Field(grid, "00", "section", analytic_scalar(grid, self.COEFFS_F)[None, None])
        f_g = fc.Field(grid, "00", "section", np.conj(phase)[None, None] * f.values)
        lhs = fc.dbar(conn_g, f_g).values
        rhs = np.conj(phase)[None, None] * fc.dbar(conn, f).values
        return float(np.abs(lhs - rhs).max())

    def test_second_order_rates(self):
        checks = (self._derivative_gap, self._leibniz_gap,
                  self._curvature_gap, self._gauge_covariance_gap)
        for gap_fn in checks:
            gaps = [gap_fn(n) for n in (8, 16, 32)]
            coarse = float(np.log2(gaps[0] / gaps[1]))
            assert self.measured_order(gaps) >= 1.9, (gap_fn.__name__, gaps)
            assert coarse >= 1.5, (gap_fn.__name__, gaps)


class TestIntegration:
    def test_integrate_constant(self):
        grid = fc.GridSpec(8, (2.0, 3.0), "spectral")
        vals = np.full(grid.shape, 1.5)
        assert abs(fc.integrate(grid, vals) - 9.0) < 1e-12

    def test_inner_product_conjugate_symmetry(self, grid8):
        f = fc.random_band_limited(grid8, 26, 3, "01", "section")
        g = fc.random_band_limited(grid8, 27, 3, "01", "section")
        assert abs(fc.inner_product(f, g) - np.conj(fc.inner_product(g, f))) < 1e-12

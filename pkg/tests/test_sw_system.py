import numpy as np
import pytest

from vortexlab import field_calculus as fc
from vortexlab import spin_algebra as sa
from vortexlab import sw_system as sw


def random_psi(grid, seed, cutoff=4):
    phi = fc.random_band_limited(grid, seed, cutoff, "00", "section")
    alpha = fc.random_band_limited(grid, seed + 1000, cutoff, "02", "section")
    return sw.SpinorField(phi, alpha)


class TestDirac:
    def test_zero(self, grid16):
        conn = fc.Connection.trivial(grid16)
        assert fc.norm_sup(sw.dirac(conn, sw.SpinorField.zero(grid16))) == 0.0

    def test_holomorphic_kernel(self, grid16):
        conn = fc.Connection.trivial(grid16)
        psi = sw.SpinorField(
            fc.Field.constant(grid16, 1.7 - 0.3j, "00", "section"),
            fc.Field.zeros(grid16, "02", "section"),
        )
        assert fc.norm_sup(sw.dirac(conn, psi)) == 0.0

    def test_single_mode_value(self, grid8):
        conn = fc.Connection.trivial(grid8)
        phi = fc.mode_field(grid8, "00", "section", 0, (1, 0, 0, 0))
        psi = sw.SpinorField(phi, fc.Field.zeros(grid8, "02", "section"))
        out = sw.dirac(conn, psi)
        expected = 2.0 * 0.5 * 2j * np.pi  # 2 dbar_1 of the mode
        assert np.abs(out.values[0] - expected * phi.values[0]).max() < 1e-12
        assert np.abs(out.values[1]).max() < 1e-12

    def test_formally_self_adjoint(self, grid16):
        conn = fc.random_connection(grid16, 30, 4, amplitude=0.4)
        psi = random_psi(grid16, 31)
        theta = fc.random_band_limited(grid16, 32, 4, "01", "section")
        lhs = fc.inner_product(sw.dirac(conn, psi), theta)
        neg = sw.dirac_negative(conn, theta)
        rhs = fc.inner_product(psi.phi, neg.phi) + fc.inner_product(psi.alpha, neg.alpha)
        assert abs(lhs - rhs) < 1e-10 * (1 + abs(lhs))

    def test_grid_mismatch(self, grid8, grid16):
        conn = fc.Connection.trivial(grid8)
        psi = sw.SpinorField.zero(grid16)
        with pytest.raises(ValueError):
            sw.dirac(conn, psi)


class TestWeitzenbock:
    def test_flat_constant(self, grid8):
        conn = fc.Connection.trivial(grid8)
        psi = sw.SpinorField(
            fc.Field.constant(grid8, 1.0, "00", "section"),
            fc.Field.constant(grid8, 0.5j, "02", "section"),
        )
        assert sw.weitzenbock_gap(conn, psi) < 1e-14

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_random_gap(self, grid16, seed):
        conn = fc.random_connection(grid16, 40 + seed, 4, amplitude=0.4)
        psi = random_psi(grid16, 50 + seed)
        assert sw.weitzenbock_gap(conn, psi) < 1e-8

    def test_rank_two(self):
        grid = fc.GridSpec(16, (1.0, 1.0), "spectral", rank=2)
        conn = fc.random_connection(grid, 60, 4, amplitude=0.4)
        psi = random_psi(grid, 61)
        assert sw.weitzenbock_gap(conn, psi) < 1e-8

    def test_inner_product_form(self, grid16):
        conn = fc.random_connection(grid16, 62, 4, amplitude=0.4)
        psi = random_psi(grid16, 63)
        assert sw.cor23_gap(conn, psi) < 1e-10


class TestEnergyIdentity:
    def test_zero_spinor_balances_curvature_terms(self, grid16):
        conn = fc.random_connection(grid16, 70, 4, amplitude=0.5)
        lhs, rhs, gap = sw.energy_identity_gap(conn, sw.SpinorField.zero(grid16))
        assert gap < 1e-13
        assert lhs > 0  # half the Clifford-weighted self-dual energy

    @pytest.mark.parametrize("seed", [3, 4, 5])
    def test_random_gap(self, grid16, seed):
        conn = fc.random_connection(grid16, 80 + seed, 4, amplitude=0.4)
        psi = random_psi(grid16, 90 + seed)
        _, _, gap = sw.energy_identity_gap(conn, psi)
        assert gap < 1e-8

    def test_scaling_bookkeeping(self, grid16):
        # quadratic and quartic pieces must scale by 4 and 16 under psi -> 2 psi
        conn = fc.random_connection(grid16, 100, 4, amplitude=0.4)
        psi = random_psi(grid16, 101)
        two_psi = sw.SpinorField(2.0 * psi.phi, 2.0 * psi.alpha)
        d1 = fc.norm_l2(sw.dirac(conn, psi)) ** 2
        d2 = fc.norm_l2(sw.dirac(conn, two_psi)) ** 2
        assert abs(d2 - 4.0 * d1) < 1e-9 * (1 + d2)
        q1 = sw.spinor_quadratic_field(psi)
        q2 = sw.spinor_quadratic_field(two_psi)
        n1 = np.sum(np.abs(q1) ** 2) * grid16.cell_volume
        n2 = np.sum(np.abs(q2) ** 2) * grid16.cell_volume
        assert abs(n2 - 16.0 * n1) < 1e-9 * (1 + n2)
        for scaled in (psi, two_psi):
            _, _, gap = sw.energy_identity_gap(conn, scaled)
            assert gap < 1e-8

    def test_sign_flip_symmetry(self, grid16):
        # the right-hand side is even in the (0,2) block
        conn = fc.random_connection(grid16, 102, 4, amplitude=0.4)
        psi = random_psi(grid16, 103)
        flipped = sw.SpinorField(psi.phi, -1.0 * psi.alpha)
        _, rhs1, _ = sw.energy_identity_gap(conn, psi)
        _, rhs2, _ = sw.energy_identity_gap(conn, flipped)
        assert abs(rhs1 - rhs2) < 1e-10 * (1 + abs(rhs1))


class TestSpectralRate:
    @staticmethod
    def _analytic_config(n):
        grid = fc.GridSpec(n, (1.0, 1.0), "spectral")
        x = grid.coordinates()
        w = 0.6 * np.cos(2 * np.pi * x[0]) + 0.4 * np.cos(2 * np.pi * (x[1] + x[3]))
        s = 0.5 * np.sin(2 * np.pi * x[2]) + 0.3 * np.cos(2 * np.pi * x[0])
        phi = np.exp(w + 0.3j * s) * np.ones(grid.shape)
        alpha = 0.7 * np.exp(0.5 * w - 0.2j * s) * np.ones(grid.shape)
        pot = np.zeros((4, 1, 1) + grid.shape, dtype=complex)
        pot[0] = 0.4j * np.sin(2 * np.pi * x[1])
        pot[2] = 0.3j * np.cos(2 * np.pi * x[3])
        conn = fc.Connection(grid, pot)
        psi = sw.SpinorField(
            fc.Field(grid, "00", "section", phi[None, None]),
            fc.Field(grid, "02", "section", alpha[None, None]),
        )
        return conn, psi

    def test_weitzenbock_gap_decays_spectrally_on_analytic_data(self):
        gaps = []
        for n in (8, 12, 16):
            conn, psi = self._analytic_config(n)
            gaps.append(sw.weitzenbock_gap(conn, psi))
        assert gaps[1] < gaps[0] / 50.0
        assert gaps[2] < gaps[1] / 50.0

    def test_energy_identity_exact_beyond_band_limits(self):
        # the integrated identity closes discretely for arbitrary smooth data
        for n in (8, 16):
            conn, psi = self._analytic_config(n)
            _, _, gap = sw.energy_identity_gap(conn, psi)
            assert gap < 1e-12


class TestSWResiduals:
    def test_zero_data(self, grid16):
        conn = fc.Connection.trivial(grid16)
        res = sw.sw_star_residual(conn, sw.SpinorField.zero(grid16), t=None)
        assert res.max_norm() == 0.0 and res.gamma_gap == 0.0

    @pytest.mark.parametrize("seed", [6, 7])
    def test_formulation_equivalence(self, grid16, seed):
        conn = fc.random_connection(grid16, 110 + seed, 4, amplitude=0.4)
        psi = random_psi(grid16, 120 + seed)
        res = sw.sw_star_residual(conn, psi, t=0.7)
        assert res.max_norm() > 0.01  # random data is far from a solution
        assert sw.formulation_gap(res) < 1e-10

    def test_formulation_equivalence_dense_sample(self, grid8):
        # the two formulations vanish together: exact norm relation on a
        # dense random sample, far from and near the solution locus
        for seed in range(100):
            conn = fc.random_connection(grid8, 5000 + seed, 3, amplitude=0.5)
            psi = random_psi(grid8, 6000 + seed, cutoff=3)
            res = sw.sw_star_residual(conn, psi, t=0.1 * (seed % 7))
            assert sw.formulation_gap(res) < 1e-10
        near = sw.SpinorField(
            fc.Field.constant(grid8, 1e-6, "00", "section"),
            fc.Field.zeros(grid8, "02", "section"),
        )
        res = sw.sw_star_residual(fc.Connection.trivial(grid8), near, t=None)
        assert res.max_norm() < 1e-11 and res.gamma_gap < 1e-11

    def test_gauge_invariance_of_residual_norms(self, grid16):
        conn = fc.random_connection(grid16, 130, 3, amplitude=0.4)
        psi = random_psi(grid16, 131, cutoff=3)
        g = fc.random_gauge(grid16, 132)
        res = sw.sw_star_residual(conn, psi, t=0.3)
        res_g = sw.sw_star_residual(
            fc.gauge_transform(g, conn),
            sw.SpinorField(fc.gauge_transform(g, psi.phi), fc.gauge_transform(g, psi.alpha)),
            t=0.3,
        )
        for name in ("dirac_norm", "eq20_norm", "eq02_norm", "eqLambda_norm", "eq4_norm", "gamma_gap"):
            assert abs(getattr(res, name) - getattr(res_g, name)) < 1e-10 * (1 + getattr(res, name))

    def test_quadratic_field_matches_fiber_algebra(self, grid8):
        # dual route: the field-level quadratic map equals the fiber one pointwise
        psi = random_psi(grid8, 140, cutoff=3)
        blocks = sw.spinor_quadratic_field(psi)
        point = (3, 1, 4, 1)
        fiber = sa.SpinorFiber(
            psi.phi.values[0][(Ellipsis,) + point].reshape(1),
            psi.alpha.values[0][(Ellipsis,) + point].reshape(1),
        )
        q = sa.spinor_quadratic(fiber)
        assert np.abs(blocks[(Ellipsis, 0, 0) + point].reshape(2, 2) - q[:, :, 0, 0]).max() < 1e-13


class TestDichotomy:
    def _manufactured(self, bidegree, use_alpha):
        grid = fc.GridSpec(16, (1.0, 1.0), "link", bidegree)
        conn = fc.Connection.trivial(grid)
        # a definite threshold separation needs an O(1) section density
        section = fc.random_band_limited(grid, 150, 3, "00", "section", amplitude=3.0)
        zero = fc.Field.zeros(grid, "02", "section")
        ilf = np.real(1j * fc.lambda_contract(fc.curvature(conn)).values[0][0, 0])
        density = np.sum(np.abs(section.values[0]) ** 2, axis=0)
        if use_alpha:
            alpha = fc.Field(grid, "02", "section", section.values)
            psi = sw.SpinorField(fc.Field.zeros(grid, "00", "section"), alpha)
            t = 2.0 * ilf - density
        else:
            psi = sw.SpinorField(section, zero)
            t = 2.0 * ilf + density
        return conn, psi, fc.Field(grid, "00", "scalar", t.astype(complex)[None])

    def test_branch_a_on_negative_degree(self):
        conn, psi, t = self._manufactured((-1, 0), use_alpha=False)
        report = sw.dichotomy_analyze(conn, psi, t)
        assert report.branch == "A"
        assert report.small_component_ok
        assert report.residuals["eqLambda"] < 5.0 / 16 ** 2

    def test_branch_b_on_positive_degree(self):
        conn, psi, t = self._manufactured((1, 0), use_alpha=True)
        report = sw.dichotomy_analyze(conn, psi, t)
        assert report.branch == "B"
        assert report.small_component_ok

    def test_reducible_at_zero_degree_zero_parameter(self, grid16):
        conn = fc.Connection.trivial(grid16)
        tiny = sw.SpinorField(
            fc.random_band_limited(grid16, 160, 3, "00", "section", amplitude=1e-10),
            fc.Field.zeros(grid16, "02", "section"),
        )
        report = sw.dichotomy_analyze(conn, tiny, t=None)
        assert report.branch == "reducible"
        assert "reducible" in report.note

    def test_inconsistent_input_diagnosed(self, grid16):
        conn = fc.Connection.trivial(grid16)
        psi = random_psi(grid16, 170, cutoff=3)  # both blocks large
        report = sw.dichotomy_analyze(conn, psi, t=0.9)
        assert report.branch == "A"  # lambda > 0 = degree
        assert not report.small_component_ok
        assert "inconsistent" in report.note

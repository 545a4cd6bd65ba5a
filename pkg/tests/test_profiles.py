import numpy as np
import pytest

from qkpsim.errors import InvalidParam, NonZeroMean
from qkpsim.norms import h1_error
from qkpsim.profiles import ProfileSet1, build_profiles, build_wellprepared, lab_horizon
from qkpsim.qep import QepParams, constraint_residual
from qkpsim.spectral import Grid2D, RealField2D, deriv, x1_line_means
from conftest import mean_free_random


class TestBuildProfiles:
    def test_zero_input(self, grid):
        ps = build_profiles(RealField2D.zeros(grid), V=1.0)
        for f in (ps.n1, ps.ne1, ps.ui1_1, ps.ui2_1):
            assert f.max_abs() == 0.0

    def test_single_mode_transverse_profile(self):
        # n1 = A sin(k1 x1) cos(k2 x2):
        #   d/dx2 n1 = -A k2 sin(k1 x1) sin(k2 x2)
        #   u_i2^(1) = V * antideriv_x1 = +V A (k2/k1) cos(k1 x1) sin(k2 x2)
        grid = Grid2D(32, 32, 8.0, 4.0)
        A, m1, m2, V = 0.7, 2, 3, 1.0
        k1 = 2 * np.pi * m1 / grid.l1
        k2 = 2 * np.pi * m2 / grid.l2
        n1 = RealField2D.from_function(
            grid, lambda x1, x2: A * np.sin(k1 * x1) * np.cos(k2 * x2)
        )
        ps = build_profiles(n1, V)
        expected = RealField2D.from_function(
            grid,
            lambda x1, x2: V * A * (k2 / k1) * np.cos(k1 * x1) * np.sin(k2 * x2),
        )
        assert (ps.ui2_1 - expected).max_abs() < 1e-12

    def test_longitudinal_profile_scaling(self, grid):
        n1 = mean_free_random(grid, seed=31)
        ps = build_profiles(n1, V=-1.0)
        assert np.array_equal(ps.ui1_1.values, -n1.values)
        assert np.array_equal(ps.ne1.values, n1.values)

    def test_profileset_invariants(self, grid):
        # ne1 = n1 and ui1_1 = V n1 exactly; the transverse relation
        # d/dx1 ui2_1 = V d/dx2 n1 holds to spectral roundoff
        V = 1.0
        n1 = mean_free_random(grid, seed=32)
        ps = build_profiles(n1, V)
        assert np.array_equal(ps.ne1.values, ps.n1.values)
        residual = deriv(ps.ui2_1, 1, 0) - deriv(ps.n1, 0, 1) * V
        assert residual.max_abs() < 1e-12

    def test_requires_mean_free_input(self, grid):
        with pytest.raises(NonZeroMean):
            build_profiles(RealField2D.full(grid, 1.0), V=1.0)


class TestWellPrepared:
    def test_zero_profile_gives_equilibrium(self, grid):
        p = QepParams(eps=0.1, V=1.0, H=2.0)
        s = build_wellprepared(RealField2D.zeros(grid), p)
        assert (s.n_i - 1.0).max_abs() == 0.0
        assert (s.n_e - 1.0).max_abs() < 1e-12
        assert s.u_i1.max_abs() == 0.0
        assert s.u_i2.max_abs() == 0.0

    def test_construction_identity(self, grid):
        # the normalized ion perturbation reproduces n1 exactly in H1
        p = QepParams(eps=0.2, V=1.0, H=1.0)
        n1 = mean_free_random(grid, seed=33, amplitude=0.3)
        s = build_wellprepared(n1, p)
        recovered = (s.n_i - 1.0) * (1.0 / p.eps)
        assert h1_error(recovered, n1) < 1e-13

    def test_electron_density_first_order_consistency(self):
        # n_e - (1 + eps n1) must shrink like eps^2 across eps
        grid = Grid2D(48, 16, 24.0, 12.0)
        n1 = mean_free_random(grid, seed=34, amplitude=0.4)
        devs = {}
        for eps in (0.2, 0.1, 0.05):
            p = QepParams(eps=eps, V=1.0, H=2.0)
            s = build_wellprepared(n1, p)
            truncation = n1 * eps + 1.0
            devs[eps] = (s.n_e - truncation).l2()
        assert devs[0.2] / devs[0.1] == pytest.approx(4.0, rel=0.35)
        assert devs[0.1] / devs[0.05] == pytest.approx(4.0, rel=0.35)

    def test_velocity_amplitude_scaling(self, grid):
        p = QepParams(eps=0.16, V=1.0, H=1.0)
        n1 = mean_free_random(grid, seed=35, amplitude=0.5)
        s = build_wellprepared(n1, p)
        profiles = build_profiles(n1, p.V)
        ratio = s.u_i2.max_abs() / s.u_i1.max_abs()
        profile_ratio = profiles.ui2_1.max_abs() / profiles.ui1_1.max_abs()
        assert ratio == pytest.approx(np.sqrt(p.eps) * profile_ratio, rel=1e-12)

    def test_constraint_satisfied(self, grid):
        p = QepParams(eps=0.1, V=1.0, H=3.0)
        n1 = mean_free_random(grid, seed=36, amplitude=0.3)
        s = build_wellprepared(n1, p)
        r = constraint_residual(s.n_e, s.n_i, p)
        assert np.linalg.norm(r.values.ravel()) <= p.elliptic_tol(grid)


class TestLabHorizon:
    @pytest.mark.parametrize(
        "tau,eps,expected",
        [(1.0, 0.25, 8.0), (0.0, 0.37, 0.0), (2.0, 0.01, 2000.0)],
    )
    def test_values(self, tau, eps, expected):
        assert lab_horizon(tau, eps) == pytest.approx(expected, rel=1e-12)

    def test_validation(self):
        with pytest.raises(InvalidParam):
            lab_horizon(1.0, 1.5)
        with pytest.raises(InvalidParam):
            lab_horizon(-1.0, 0.5)

import numpy as np
import pytest

from qkpsim.errors import DegenerateFit, InvalidParam
from qkpsim.harness import (
    CSV_HEADER,
    ConvergenceRow,
    InitSpec,
    StudyConfig,
    extract_remainder,
    fit_order,
    run_pair,
    run_study,
    study_csv,
)
from qkpsim.profiles import build_profiles, build_wellprepared
from qkpsim.qep import QepParams, QepState
from qkpsim.qkp import QkpParams
from qkpsim.spectral import Grid2D, RealField2D
from conftest import mean_free_random


def small_cfg(**overrides):
    defaults = dict(
        eps_list=(0.2, 0.1),
        tau=0.1,
        n1=32,
        n2=8,
        l1=40.0,
        l2=20.0,
        H=1.0,
        snapshots=2,
        init=InitSpec(kind="dipole", amplitude=0.1, kappa=0.3, mu=0.3),
    )
    defaults.update(overrides)
    return StudyConfig(**defaults)


class TestInitSpec:
    def test_dipole_is_mean_free_and_normalized(self):
        grid = Grid2D(64, 16, 40.0, 20.0)
        spec = InitSpec(kind="dipole", amplitude=0.25, kappa=0.3, mu=0.4)
        n1 = spec.build(grid)
        assert np.max(np.abs(n1.values.mean(axis=0))) < 1e-14
        assert n1.max_abs() == pytest.approx(0.25, rel=0.02)

    def test_dipole_band_limited(self):
        grid = Grid2D(32, 8, 40.0, 20.0)
        n1 = InitSpec(kind="dipole", amplitude=0.2).build(grid)
        spec = np.fft.rfft2(n1.values)
        assert np.max(np.abs(spec[~grid.dealias_mask])) < 1e-12

    def test_modes(self):
        grid = Grid2D(32, 8, 40.0, 20.0)
        spec = InitSpec(kind="modes", modes=((2, 1, 0.1),))
        n1 = spec.build(grid)
        xx1, xx2 = grid.meshgrid()
        expected = 0.1 * np.cos(2 * np.pi * 2 * xx1 / grid.l1 + 2 * np.pi * xx2 / grid.l2)
        assert np.max(np.abs(n1.values - expected)) < 1e-12

    def test_modes_require_m1(self):
        grid = Grid2D(32, 8, 40.0, 20.0)
        with pytest.raises(InvalidParam):
            InitSpec(kind="modes", modes=((0, 1, 0.1),)).build(grid)

    def test_file_roundtrip(self, tmp_path):
        from qkpsim.qkpf import write_field

        grid = Grid2D(32, 8, 40.0, 20.0)
        n1 = InitSpec(kind="dipole", amplitude=0.1).build(grid)
        path = tmp_path / "n1.qkpf"
        write_field(path, n1)
        loaded = InitSpec(kind="file", path=str(path)).build(grid)
        assert np.max(np.abs(loaded.values - n1.values)) < 1e-12

    def test_unknown_kind(self):
        grid = Grid2D(32, 8, 40.0, 20.0)
        with pytest.raises(InvalidParam):
            InitSpec(kind="sphere").build(grid)


class TestStudyConfig:
    def test_eps_must_decrease(self):
        with pytest.raises(InvalidParam):
            small_cfg(eps_list=(0.1, 0.2))

    def test_eps_domain(self):
        with pytest.raises(InvalidParam):
            small_cfg(eps_list=(1.2, 0.1))


class TestExtractRemainder:
    def test_wellprepared_state_has_zero_ion_remainders(self, grid):
        p = QepParams(eps=0.2, V=1.0, H=1.0)
        n1 = mean_free_random(grid, seed=61, amplitude=0.3)
        s = build_wellprepared(n1, p)
        profiles = build_profiles(n1, p.V)
        N_i, N_e, U1, U2 = extract_remainder(s, profiles, p.eps)
        assert N_i.max_abs() < 1e-12
        assert U1.max_abs() < 1e-12
        assert U2.max_abs() < 1e-12
        # electron remainder is the elliptic second-order correction: O(1)
        assert 1e-4 < N_e.max_abs() < 10.0

    def test_equilibrium_zero_profile(self, grid):
        p = QepParams(eps=0.1, V=1.0, H=2.0)
        s = build_wellprepared(RealField2D.zeros(grid), p)
        profiles = build_profiles(RealField2D.zeros(grid), p.V)
        for f in extract_remainder(s, profiles, p.eps):
            assert f.max_abs() < 1e-10

    def test_manufactured_remainder_roundtrip(self, grid):
        # state = expansion + eps^2 g recovers g to roundoff
        eps, V = 0.15, 1.0
        n1 = mean_free_random(grid, seed=62, amplitude=0.4)
        profiles = build_profiles(n1, V)
        g_n = mean_free_random(grid, seed=63, amplitude=0.7)
        g_e = mean_free_random(grid, seed=64, amplitude=0.5)
        g_u1 = mean_free_random(grid, seed=65, amplitude=0.3)
        g_u2 = mean_free_random(grid, seed=66, amplitude=0.2)
        s = QepState(
            t=0.0,
            n_i=profiles.n1 * eps + 1.0 + g_n * eps**2,
            n_e=profiles.ne1 * eps + 1.0 + g_e * eps**2,
            u_i1=profiles.ui1_1 * eps + g_u1 * eps**2,
            u_i2=profiles.ui2_1 * eps**1.5 + g_u2 * eps**2,
            phi=RealField2D.zeros(grid),
        )
        N_i, N_e, U1, U2 = extract_remainder(s, profiles, eps)
        for got, injected in ((N_i, g_n), (N_e, g_e), (U1, g_u1), (U2, g_u2)):
            assert (got - injected).max_abs() < 1e-10


class TestFitOrder:
    def make_rows(self, errs, eps=(0.2, 0.1, 0.05)):
        return [
            ConvergenceRow(
                eps=e, tau=1.0, h1_err_n=err, h1_err_u1=0.0, h1_err_u2=0.0,
                triple_sq=0.0, window_exit=0, wall_seconds=0.0,
            )
            for e, err in zip(eps, errs)
        ]

    def test_exact_linear_law(self):
        rows = self.make_rows([3 * e for e in (0.2, 0.1, 0.05)])
        order, constant = fit_order(rows)
        assert order == pytest.approx(1.0, abs=1e-12)
        assert constant == pytest.approx(3.0, abs=1e-12)

    def test_exact_quadratic_law(self):
        rows = self.make_rows([e**2 for e in (0.2, 0.1, 0.05)])
        order, _ = fit_order(rows)
        assert order == pytest.approx(2.0, abs=1e-12)

    def test_zero_error_degenerate(self):
        rows = self.make_rows([0.1, 0.0, 0.01])
        with pytest.raises(DegenerateFit):
            fit_order(rows)

    def test_too_few_rows(self):
        rows = self.make_rows([0.2, 0.1], eps=(0.2, 0.1))
        with pytest.raises(DegenerateFit):
            fit_order(rows)

    def test_duplicate_eps(self):
        rows = self.make_rows([0.2, 0.1, 0.05], eps=(0.1, 0.1, 0.05))
        with pytest.raises(DegenerateFit):
            fit_order(rows)


class TestRunPair:
    def test_tau_zero_errors_vanish(self):
        cfg = small_cfg(tau=0.0, snapshots=1)
        row = run_pair(0.1, cfg)
        assert row.h1_err_n < 1e-12
        assert row.h1_err_u1 < 1e-12
        assert row.h1_err_u2 < 1e-12

    def test_short_run_finite_and_deterministic(self):
        cfg = small_cfg()
        row1 = run_pair(0.2, cfg)
        row2 = run_pair(0.2, cfg)
        assert row1.h1_err_n == row2.h1_err_n
        assert row1.h1_err_u1 == row2.h1_err_u1
        assert row1.triple_sq == row2.triple_sq
        assert 0 < row1.h1_err_n < 1.0

    def test_snapshot_steps_divide_interval(self):
        # the step count per interval is integral by construction; the
        # final times land on tau exactly up to accumulation roundoff
        cfg = small_cfg(tau=0.3, snapshots=3)
        row = run_pair(0.1, cfg)
        assert row.tau == 0.3


class TestRunStudy:
    def test_rows_ordered_and_csv_schema(self, monkeypatch):
        monkeypatch.setenv("QKP_THREADS", "2")
        cfg = small_cfg()
        result = run_study(cfg)
        assert tuple(r.eps for r in result.rows) == cfg.eps_list
        text = study_csv(result)
        lines = text.strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert len([l for l in lines if not l.startswith("#")]) == 1 + len(cfg.eps_list)

    def test_csv_deterministic_modulo_wall_seconds(self):
        cfg = small_cfg()

        def strip_wall(text):
            rows = []
            for line in text.strip().split("\n"):
                if line.startswith("#") or line == CSV_HEADER:
                    rows.append(line)
                else:
                    rows.append(",".join(line.split(",")[:-1]))
            return rows

        a = strip_wall(study_csv(run_study(cfg)))
        b = strip_wall(study_csv(run_study(cfg)))
        assert a == b

    def test_qkp_threads_validation(self, monkeypatch):
        monkeypatch.setenv("QKP_THREADS", "soup")
        with pytest.raises(InvalidParam):
            run_study(small_cfg())

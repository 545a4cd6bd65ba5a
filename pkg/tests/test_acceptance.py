"""Acceptance suite.

Each test enforces one acceptance criterion at its stated tolerance and
prints a PASS/FAIL line (run with ``pytest -s`` to see them live).
"""

import time
import warnings
from contextlib import contextmanager
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from qkpsim.errors import WindowExitWarning
from qkpsim.harness import (
    ConvergenceRow,
    InitSpec,
    StudyConfig,
    extract_remainder,
    fit_order,
    run_study,
    study_csv,
)
from qkpsim.norms import triple_norm
from qkpsim.profiles import build_profiles
from qkpsim.qep import (
    QepParams,
    QepState,
    acoustic_dispersion,
    equilibrium_state,
    linear_eigenmode,
    qep_step,
    solve_electron,
    suggest_dt_qep,
)
from qkpsim.qkp import (
    QkpParams,
    QkpState,
    Regime,
    classify_regime,
    dispersion_omega,
    mode_profile,
    qkp_coefficients,
    qkp_step,
    soliton_profile,
)
from qkpsim.qkpf import read_field, write_field
from qkpsim.spectral import Grid2D, RealField2D, spectrum, translate_x1
from qkpsim.symbolic import derivation_report, derive_qkp, parse_expr, solve_sound_speed
from conftest import band_limited_random, mean_free_random

GOLDEN = Path(__file__).parent / "golden" / "derive_report.txt"


@contextmanager
def criterion(name):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE {name}: FAIL")
        raise
    print(f"\nACCEPTANCE {name}: PASS ({time.perf_counter() - start:.1f}s)")


def mode_coefficient(field, m1, m2):
    return np.fft.rfft2(field.values)[m1, m2] / (field.grid.n1 * field.grid.n2)


class TestAcceptance:
    def test_symbolic_derivation(self):
        with criterion("symbolic derivation"):
            start = time.perf_counter()
            speed = solve_sound_speed()
            assert speed.char_poly == parse_expr("V^2 - 1")
            assert speed.V == 1
            derived = derive_qkp()
            assert derived.a == parse_expr("3/2*V + 1/2*V^-1")
            assert derived.b == parse_expr("1/2*V^-1*(1 - 1/4*H^2)")
            assert derived.c == parse_expr("1/2*V")
            assert derivation_report(3) == GOLDEN.read_text()
            assert time.perf_counter() - start < 1.0

    def test_regime_table(self):
        with criterion("regime table"):
            start = time.perf_counter()
            expected = {
                0.5: Regime.QKP_II,
                1.0: Regime.QKP_II,
                1.99: Regime.QKP_II,
                2.0: Regime.DKP,
                2.01: Regime.QKP_I,
                3.0: Regime.QKP_I,
            }
            for H, regime in expected.items():
                assert classify_regime(H) is regime
            assert time.perf_counter() - start < 1.0

    def test_qkp_soliton_oracle(self):
        with criterion("soliton transit"):
            start = time.perf_counter()
            grid = Grid2D(512, 8, 40.0, 4.0)
            p = QkpParams.make(1.0, 1.0)
            u0, speed = soliton_profile(grid, p, kappa=0.6, x0=20.0)
            transit = grid.l1 / abs(speed)
            nsteps = int(np.ceil(transit / 0.01))
            dt = transit / nsteps
            s = QkpState(t=0.0, u=u0)
            for _ in range(nsteps):
                s = qkp_step(s, p, dt)
            reference = translate_x1(u0, speed * transit)
            diff = s.u - reference
            shape_err = diff.l2() / u0.l2()
            assert shape_err <= 1e-6
            # residual shift from the linearized translation fit
            from qkpsim.spectral import deriv

            ux = deriv(reference, 1, 0)
            resid = float(
                np.sum(diff.values * (-ux.values)) / np.sum(ux.values**2)
            )
            speed_measured = (speed * transit + resid) / transit
            assert abs(speed_measured - speed) / abs(speed) <= 1e-8
            assert time.perf_counter() - start < 30.0

    def test_qkp_conservation(self):
        with criterion("model conservation laws"):
            start = time.perf_counter()
            grid = Grid2D(64, 32, 40.0, 20.0)
            p = QkpParams.make(1.0, 1.0)
            u = band_limited_random(grid, seed=80, max_mode1=3, max_mode2=2,
                                    amplitude=0.2)
            s = QkpState.make(u)
            mass0 = spectrum(s.u)[0, 0]
            l2_0 = s.u.l2()
            for _ in range(1000):
                s = qkp_step(s, p, 0.01)
            assert spectrum(s.u)[0, 0] == mass0  # exact zero-mode fix
            assert abs(s.u.l2() - l2_0) / l2_0 <= 1e-8
            assert time.perf_counter() - start < 60.0

    def test_linear_dispersion(self):
        with criterion("linear dispersion"):
            start = time.perf_counter()
            # model mode frequency to 1e-10
            grid = Grid2D(32, 32, 20.0, 12.0)
            p = QkpParams.make(1.0, 1.0)
            m1, m2 = 2, 3
            s = QkpState.make(mode_profile(grid, 1e-9, m1, m2))
            k1 = 2 * np.pi * m1 / grid.l1
            k2 = 2 * np.pi * m2 / grid.l2
            omega = dispersion_omega(p, k1, k2)
            dt, nsteps = 0.02, 50
            coeffs = []
            for _ in range(nsteps):
                s = qkp_step(s, p, dt)
                coeffs.append(mode_coefficient(s.u, m1, m2))
            phases = np.unwrap(np.angle(np.array(coeffs)))
            slope = np.polyfit(dt * (1 + np.arange(nsteps)), phases, 1)[0]
            assert abs(slope + omega) / abs(omega) <= 1e-10

            # full-system mode frequency to 1e-6
            grid = Grid2D(32, 16, 20.0, 10.0)
            pe = QepParams(eps=0.1, V=1.0, H=2.0, newton_tol_per_point=1e-13)
            m1, m2, delta = 2, 1, 1e-5
            se = linear_eigenmode(grid, pe, m1, m2, delta)
            k1 = 2 * np.pi * m1 / grid.l1
            k2 = 2 * np.pi * m2 / grid.l2
            omega_e = acoustic_dispersion(pe, k1, k2)
            dte = suggest_dt_qep(se, pe, 0.5)
            times, coeffs = [], []
            for i in range(200):
                se = qep_step(se, pe, dte)
                if (i + 1) % 10 == 0:
                    times.append(se.t)
                    coeffs.append(mode_coefficient(se.n_i - 1.0, m1, m2))
            phases = np.unwrap(np.angle(np.array(coeffs)))
            slope = np.polyfit(times, phases, 1)[0]
            assert abs(slope + omega_e) / abs(omega_e) <= 1e-6
            assert time.perf_counter() - start < 30.0

    @pytest.mark.parametrize("eps", [0.1, 0.2])
    @pytest.mark.parametrize("H", [1.0, 2.0, 3.0])
    def test_elliptic_oracle(self, eps, H):
        with criterion(f"elliptic linearization eps={eps} H={H}"):
            start = time.perf_counter()
            grid = Grid2D(48, 16, 12.0, 6.0)
            p = QepParams(eps=eps, V=1.0, H=H)
            delta, m1, m2 = 1e-6, 3, 1
            k1 = 2 * np.pi * m1 / grid.l1
            k2 = 2 * np.pi * m2 / grid.l2
            kappa = eps * k1**2 + eps**2 * k2**2
            n_i = RealField2D.from_function(
                grid, lambda x1, x2: 1.0 + delta * np.cos(k1 * x1 + k2 * x2)
            )
            n_e, _ = solve_electron(n_i, p, RealField2D.full(grid, 1.0))
            ratio = mode_coefficient(n_e, m1, m2) / mode_coefficient(n_i, m1, m2)
            expected = 1.0 / (1.0 + kappa + (H**2 / 4.0) * kappa**2)
            assert abs(ratio - expected) / expected <= 1e-8
            assert time.perf_counter() - start < 10.0

    def test_qep_structure(self):
        with criterion("full-system structure"):
            start = time.perf_counter()
            # equilibrium fixed point over 1000 steps
            grid = Grid2D(32, 8, 20.0, 10.0)
            p = QepParams(eps=0.1, V=1.0, H=2.0)
            s = equilibrium_state(grid, p)
            dt = suggest_dt_qep(s, p, 0.5)
            for _ in range(1000):
                s = qep_step(s, p, dt)
            assert (s.n_i - 1.0).max_abs() < 1e-12
            assert s.u_i1.max_abs() < 1e-12

            # ion mass conservation on perturbed data
            bump = band_limited_random(grid, seed=81, max_mode1=2, max_mode2=1,
                                       amplitude=0.03) + 0.02
            n_i = bump + 1.0
            n_e, phi = solve_electron(n_i, p, RealField2D.full(grid, 1.0))
            zeros = RealField2D.zeros(grid)
            s = QepState(t=0.0, n_i=n_i, u_i1=zeros, u_i2=zeros.copy(),
                         n_e=n_e, phi=phi)
            mass0 = float(np.mean(s.n_i.values)) - 1.0
            dt = suggest_dt_qep(s, p, 0.5)
            for _ in range(1000):
                s = qep_step(s, p, dt)
            assert abs((float(np.mean(s.n_i.values)) - 1.0) - mass0) / abs(mass0) <= 1e-10

            # temporal self-convergence order
            from qkpsim.qep import advance_to

            n1 = band_limited_random(grid, seed=82, max_mode1=2, max_mode2=1,
                                     amplitude=0.05) + 1.0
            n_e, phi = solve_electron(n1, p, RealField2D.full(grid, 1.0))
            s0 = QepState(t=0.0, n_i=n1, u_i1=zeros.copy(), u_i2=zeros.copy(),
                          n_e=n_e, phi=phi)
            t_end = 0.04
            finals = [advance_to(s0, p, t_end, dt) for dt in (0.004, 0.002, 0.001)]
            e12 = (finals[0].n_i - finals[1].n_i).l2()
            e24 = (finals[1].n_i - finals[2].n_i).l2()
            assert np.log2(e12 / e24) >= 3.5
            assert time.perf_counter() - start < 120.0

    def test_convergence_study(self):
        with criterion("convergence study"):
            start = time.perf_counter()
            outcomes = {}
            for H in (1.0, 2.0, 3.0):
                cfg = StudyConfig(H=H)
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", WindowExitWarning)
                    result = run_study(cfg)
                outcomes[H] = result
                print(f"\n  H={H}: fitted_order={result.fitted_order} "
                      f"errors={[f'{r.h1_err_n:.3e}' for r in result.rows]} "
                      f"failures={result.failures}")

            def monotone(rows):
                errs = [r.h1_err_n for r in rows]
                return all(a > b for a, b in zip(errs, errs[1:]))

            for H in (1.0, 3.0):
                result = outcomes[H]
                assert not result.failures, f"H={H} run failed: {result.failures}"
                assert result.fitted_order is not None
                assert result.fitted_order >= 0.8, (
                    f"H={H}: fitted order {result.fitted_order:.3f} < 0.8"
                )
                assert monotone(result.rows), f"H={H}: errors not monotone"

            # critical case: either converges like the others or terminates
            # with the reported gradient-catastrophe diagnostic
            crit = outcomes[2.0]
            converged = (
                not crit.failures
                and crit.fitted_order is not None
                and crit.fitted_order >= 0.8
                and monotone(crit.rows)
            )
            blew_up = any("blowup" in msg for _, msg in crit.failures)
            assert converged or blew_up
            assert time.perf_counter() - start < 900.0

    def test_triple_norm_closed_form(self):
        with criterion("weighted norm closed form"):
            start = time.perf_counter()
            grid = Grid2D(32, 16, 10.0, 5.0)
            A, eps = 1.3, 0.17
            k = 2 * np.pi / grid.l1
            N_e = RealField2D.from_function(grid, lambda x1, x2: A * np.sin(k * x1))
            zeros = RealField2D.zeros(grid)
            report = triple_norm(zeros, N_e, zeros.copy(), zeros.copy(), eps=eps)
            expected = (A**2 * grid.l1 * grid.l2 / 2.0) * sum(
                eps**alpha * k ** (2 * alpha) for alpha in range(8)
            )
            assert report.total == pytest.approx(expected, rel=1e-12)
            assert time.perf_counter() - start < 1.0

    def test_round_trips(self, tmp_path):
        with criterion("round trips"):
            start = time.perf_counter()
            # QKPF write/read bit-exact
            grid = Grid2D(32, 16, 10.0, 5.0)
            f = band_limited_random(grid, seed=83)
            path = tmp_path / "f.qkpf"
            write_field(path, f)
            g = read_field(path)
            assert np.array_equal(g.values, f.values)
            write_field(tmp_path / "g.qkpf", g)
            assert (tmp_path / "g.qkpf").read_bytes() == path.read_bytes()

            # remainder extraction inverts the expansion injection
            eps = 0.15
            n1 = mean_free_random(grid, seed=84, amplitude=0.4)
            profiles = build_profiles(n1, 1.0)
            injected = [
                mean_free_random(grid, seed=85 + i, amplitude=0.5) for i in range(4)
            ]
            s = QepState(
                t=0.0,
                n_i=profiles.n1 * eps + 1.0 + injected[0] * eps**2,
                n_e=profiles.ne1 * eps + 1.0 + injected[1] * eps**2,
                u_i1=profiles.ui1_1 * eps + injected[2] * eps**2,
                u_i2=profiles.ui2_1 * eps**1.5 + injected[3] * eps**2,
                phi=RealField2D.zeros(grid),
            )
            recovered = extract_remainder(s, profiles, eps)
            for got, inj in zip(recovered, injected):
                assert (got - inj).max_abs() < 1e-10

            # CSV determinism (wall_seconds excluded)
            cfg = StudyConfig(
                eps_list=(0.2, 0.1), tau=0.1, n1=32, n2=8, l1=40.0, l2=20.0,
                H=1.0, snapshots=2,
                init=InitSpec(kind="dipole", amplitude=0.1, kappa=0.3, mu=0.3),
            )

            def stable_lines(text):
                out = []
                for line in text.strip().split("\n"):
                    if line.startswith("#") or line.startswith("eps,"):
                        out.append(line)
                    else:
                        out.append(",".join(line.split(",")[:-1]))
                return out

            with warnings.catch_warnings():
                warnings.simplefilter("ignore", WindowExitWarning)
                a = stable_lines(study_csv(run_study(cfg)))
                b = stable_lines(study_csv(run_study(cfg)))
            assert a == b
            assert time.perf_counter() - start < 10.0

"""Command-line interface.

Subcommands:
  derive    -- print the order equations and model coefficients
  qkp       -- run the model solver, dumping fields and a time series
  qep       -- run the full-system solver likewise
  converge  -- run the matched convergence study and fit the order
  norm      -- weighted-norm report of four remainder field dumps

Exit codes: 0 success, 1 usage error, 2 solver failure.
"""

from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path

import numpy as np

from .errors import QkpsimError
from .harness import (
    CSV_HEADER,
    InitSpec,
    StudyConfig,
    run_study,
    study_csv,
)
from .norms import triple_norm
from .profiles import build_wellprepared
from .qep import (
    QepParams,
    elliptic_residual_norm,
    qep_step,
    suggest_dt_qep,
)
from .qkp import (
    QkpParams,
    QkpState,
    qkp_step,
    suggest_dt,
)
from .qkpf import read_field, write_field
from .spectral import Grid2D, spectrum
from .symbolic import derivation_report


def _parse_modes(text: str) -> tuple:
    out = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        m1, m2, amp = chunk.split(",")
        out.append((int(m1), int(m2), float(amp)))
    return tuple(out)


def _init_from_section(section) -> InitSpec:
    kind = section.get("kind", "dipole")
    kwargs = {"kind": kind}
    for key, cast in (
        ("amplitude", float),
        ("kappa", float),
        ("x0", float),
        ("y0", float),
        ("mu", float),
        ("m_oblique", int),
        ("path", str),
    ):
        if key in section:
            kwargs[key] = cast(section[key])
    if "modes" in section:
        kwargs["modes"] = _parse_modes(section["modes"])
    return InitSpec(**kwargs)


def _read_config(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise QkpsimError(f"cannot read config file {path}")
    return parser


def _grid_from_args(args) -> Grid2D:
    return Grid2D(n1=args.n1, n2=args.n2, l1=args.l1, l2=args.l2)


def _apply_config(args, path):
    """Fill argparse defaults from a key=value sectioned config file."""
    parser = _read_config(path)
    sections = {
        "grid": ("n1", "n2", "l1", "l2"),
        "params": ("eps", "H", "V", "cfl", "tau", "t_end", "snapshot_every",
                   "snapshots", "newton_tol", "eps_list"),
        "output": ("out", "prefix"),
    }
    casts = {"n1": int, "n2": int, "snapshots": int}
    for section, keys in sections.items():
        if not parser.has_section(section):
            continue
        for key in keys:
            if key in parser[section] and hasattr(args, key):
                raw = parser[section][key]
                if key == "eps_list":
                    value = raw
                elif key in casts:
                    value = casts[key](raw)
                elif key in ("out", "prefix"):
                    value = raw
                else:
                    value = float(raw)
                setattr(args, key, value)
    if parser.has_section("init"):
        args.init_spec = _init_from_section(parser["init"])
    return args


def _grid_l2_norm(field) -> float:
    return field.l2()


def _dump_fields(prefix: str, index: int, fields: dict) -> None:
    for name, field in fields.items():
        write_field(f"{prefix}_{name}_{index:04d}.qkpf", field)


def _cmd_derive(args) -> int:
    sys.stdout.write(derivation_report(args.max_order))
    return 0


def _cmd_qkp(args) -> int:
    if args.config:
        _apply_config(args, args.config)
    grid = _grid_from_args(args)
    params = QkpParams.make(args.V, args.H)
    init = getattr(args, "init_spec", None) or InitSpec(kind=args.init)
    state = QkpState.make(init.build(grid, params))
    interval = args.snapshot_every
    nsteps = max(1, int(np.ceil(interval / suggest_dt(state, params, args.cfl))))
    dt = interval / nsteps
    rows = ["t,mass,l2,linf"]
    index = 0

    def record(s):
        mass = float(spectrum(s.u)[0, 0].real) * s.u.grid.cell_area
        rows.append(f"{s.t!r},{mass!r},{s.u.l2()!r},{s.u.max_abs()!r}")
        if args.prefix:
            _dump_fields(args.prefix, len(rows) - 2, {"u": s.u})

    record(state)
    while state.t < args.t_end - 1e-12:
        for _ in range(nsteps):
            state = qkp_step(state, params, dt)
        record(state)
        index += 1
    out = args.out or "qkp_series.csv"
    Path(out).write_text("\n".join(rows) + "\n")
    print(f"wrote {out} ({index} snapshots)")
    return 0


def _cmd_qep(args) -> int:
    if args.config:
        _apply_config(args, args.config)
    grid = _grid_from_args(args)
    params = QepParams(eps=args.eps, V=args.V, H=args.H,
                       newton_tol_per_point=args.newton_tol)
    # "wellprepared" is the construction, not a profile shape: the profile
    # comes from the [init] config section or the default pulse
    kind = "dipole" if args.init == "wellprepared" else args.init
    init = getattr(args, "init_spec", None) or InitSpec(kind=kind)
    qkp_params = QkpParams.make(args.V, args.H) if args.V in (1.0, -1.0) else None
    n1 = init.build(grid, qkp_params)
    state = build_wellprepared(n1, params)
    interval = args.snapshot_every
    nsteps = max(1, int(np.ceil(interval / suggest_dt_qep(state, params, args.cfl))))
    dt = interval / nsteps
    rows = ["t,mass_i,min_ne,max_ne,elliptic_residual"]
    index = 0

    def record(s):
        mass = float(np.mean(s.n_i.values) - 1.0) * grid.l1 * grid.l2
        rows.append(
            f"{s.t!r},{mass!r},{float(np.min(s.n_e.values))!r},"
            f"{float(np.max(s.n_e.values))!r},{elliptic_residual_norm(s, params)!r}"
        )
        if args.prefix:
            _dump_fields(args.prefix, len(rows) - 2, {
                "n_i": s.n_i, "u_i1": s.u_i1, "u_i2": s.u_i2,
                "n_e": s.n_e, "phi": s.phi,
            })

    record(state)
    while state.t < args.t_end - 1e-12:
        for _ in range(nsteps):
            state = qep_step(state, params, dt)
        record(state)
        index += 1
    out = args.out or "qep_series.csv"
    Path(out).write_text("\n".join(rows) + "\n")
    print(f"wrote {out} ({index} snapshots)")
    return 0


def _cmd_converge(args) -> int:
    init = getattr(args, "init_spec", None)
    if args.config:
        _apply_config(args, args.config)
        init = getattr(args, "init_spec", init)
    eps_list = tuple(float(e) for e in str(args.eps).split(","))
    cfg = StudyConfig(
        eps_list=eps_list,
        tau=args.tau,
        n1=args.n1,
        n2=args.n2,
        l1=args.l1,
        l2=args.l2,
        H=args.H,
        V=args.V,
        cfl=args.cfl,
        snapshots=args.snapshots,
        init=init or InitSpec(),
        newton_tol_per_point=args.newton_tol,
    )
    result = run_study(cfg)
    text = study_csv(result)
    Path(args.out).write_text(text)
    if result.fitted_order is not None:
        print(f"fitted order {result.fitted_order:.4f} "
              f"(constant {result.fitted_constant:.4g})")
    for eps, message in result.failures:
        print(f"eps={eps}: {message}")
    print(f"wrote {args.out}")
    return 0


def _cmd_norm(args) -> int:
    fields = {}
    for name, path in (("N_i", args.ni), ("N_e", args.ne),
                       ("U1", args.u1), ("U2", args.u2)):
        fields[name] = read_field(path)
    report = triple_norm(fields["N_i"], fields["N_e"], fields["U1"],
                         fields["U2"], args.eps)
    print("field,alpha,beta,weight,seminorm_sq")
    for (name, alpha, beta), raw in sorted(report.seminorms_sq.items()):
        weight = args.eps ** (alpha + 2 * beta)
        print(f"{name},{alpha},{beta},{weight!r},{raw!r}")
    print(f"# total={report.total!r}")
    return 0


def _add_grid_args(p, n1=128, n2=32, l1=80.0, l2=40.0):
    p.add_argument("--n1", type=int, default=n1)
    p.add_argument("--n2", type=int, default=n2)
    p.add_argument("--l1", type=float, default=l1)
    p.add_argument("--l2", type=float, default=l2)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkpsim",
        description="Solvers and verification for the KP-type limit of the "
                    "scaled 2D ion-electron system",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", help="print order equations and coefficients")
    p.add_argument("--max-order", type=float, default=3, dest="max_order")
    p.set_defaults(func=_cmd_derive)

    p = sub.add_parser("qkp", help="run the model solver")
    _add_grid_args(p)
    p.add_argument("--config", default=None)
    p.add_argument("--H", type=float, default=1.0)
    p.add_argument("--V", type=float, default=1.0)
    p.add_argument("--cfl", type=float, default=0.5)
    p.add_argument("--t-end", type=float, default=1.0, dest="t_end")
    p.add_argument("--snapshot-every", type=float, default=0.1, dest="snapshot_every")
    p.add_argument("--init", default="dipole", choices=["dipole", "modes", "soliton", "file"])
    p.add_argument("--out", default=None)
    p.add_argument("--prefix", default=None, help="QKPF dump prefix")
    p.set_defaults(func=_cmd_qkp)

    p = sub.add_parser("qep", help="run the full-system solver")
    _add_grid_args(p)
    p.add_argument("--config", default=None)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--H", type=float, default=1.0)
    p.add_argument("--V", type=float, default=1.0)
    p.add_argument("--cfl", type=float, default=0.5)
    p.add_argument("--t-end", type=float, default=1.0, dest="t_end")
    p.add_argument("--snapshot-every", type=float, default=0.1, dest="snapshot_every")
    p.add_argument("--newton-tol", type=float, default=1e-12, dest="newton_tol")
    p.add_argument("--init", default="dipole", choices=["dipole", "modes", "wellprepared", "file"])
    p.add_argument("--out", default=None)
    p.add_argument("--prefix", default=None)
    p.set_defaults(func=_cmd_qep)

    p = sub.add_parser("converge", help="run the convergence study")
    _add_grid_args(p)
    p.add_argument("--config", default=None)
    p.add_argument("--eps", default="0.2,0.1,0.05",
                   help="comma-separated decreasing list")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--H", type=float, default=1.0)
    p.add_argument("--V", type=float, default=1.0)
    p.add_argument("--cfl", type=float, default=0.5)
    p.add_argument("--snapshots", type=int, default=10)
    p.add_argument("--newton-tol", type=float, default=1e-12, dest="newton_tol")
    p.add_argument("--out", default="study.csv")
    p.set_defaults(func=_cmd_converge)

    p = sub.add_parser("norm", help="weighted-norm report from QKPF dumps")
    p.add_argument("--ni", required=True)
    p.add_argument("--ne", required=True)
    p.add_argument("--u1", required=True)
    p.add_argument("--u2", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.set_defaults(func=_cmd_norm)

    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return 0 if err.code in (0, None) else 1
    try:
        return args.func(args)
    except QkpsimError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())

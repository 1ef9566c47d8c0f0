"""Command line entry point ``swnh``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import analytic
from .config import SCENARIOS, read_config_file, parse_config
from .errors import ConfigError, NumericalError
from .runner import build_scenario, run_convergence_study, run_simulation

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _meshes(text: str) -> list[int]:
    try:
        meshes = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid mesh list {text!r}") from None
    if any(m < 3 for m in meshes):
        raise argparse.ArgumentTypeError("every mesh needs at least 3 cells")
    return meshes


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="swnh", description="Depth-averaged non-hydrostatic flow solver")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one simulation")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--cells", type=int)
    run.add_argument("--order", type=int)
    run.add_argument("--tfinal", type=float)
    run.add_argument("--cfl", type=float)
    run.add_argument("--alpha", type=float)
    run.add_argument("--out", type=Path, default=None)

    conv = sub.add_parser("converge", help="mesh convergence study against the exact solution")
    conv.add_argument("--config", required=True, type=Path)
    conv.add_argument("--meshes", required=True, type=_meshes)
    conv.add_argument("--order", type=int)
    conv.add_argument("--field", choices=("H", "u", "w"), default="H")
    conv.add_argument("--workers", type=int, default=1)
    conv.add_argument("--out", type=Path, default=None, help="CSV table (default: stdout only)")

    ref = sub.add_parser("reference", help="sample an exact solution to CSV")
    ref.add_argument("--scenario", required=True, choices=SCENARIOS)
    ref.add_argument("--t", type=float, default=0.0)
    ref.add_argument("--out", required=True, type=Path)
    ref.add_argument("--config", type=Path, default=None,
                     help="take domain and parameters from a config file")
    ref.add_argument("--cells", type=int, default=None)
    return parser


def _cmd_run(args) -> int:
    cfg = parse_config(args.config, cells=args.cells, order=args.order, t_final=args.tfinal,
                       cfl=args.cfl, alpha=args.alpha,
                       out_dir=str(args.out) if args.out else None)
    print(cfg.to_text(), end="")
    res = run_simulation(cfg)
    d = res.diagnostics
    print(f"steps={res.steps} t={res.t:.9g} wall={res.wall_clock:.3f}s "
          f"mass={d['mass'][-1]:.12g} max_div_residual={np.max(d['max_div_residual'][1:], initial=0.0):.3e} "
          f"clipped_faces={int(np.sum(d['clipped_faces']))}")
    if res.scenario.reference is not None:
        print(f"L1(H)={res.l1_error('H'):.9e}")
    return EXIT_OK


def _cmd_converge(args) -> int:
    cfg = parse_config(args.config, order=args.order)
    table = run_convergence_study(cfg, args.meshes, field=args.field, out_path=args.out,
                                  workers=args.workers)
    print("cells,h,L1_error,order,status")
    for r in table.rows:
        order = "" if np.isnan(r.order) else f"{r.order:.4f}"
        print(f"{r.cells},{r.h:.6g},{r.l1_error:.9e},{order},{r.status}")
    print(f"least_squares_order={table.order:.4f}")
    return EXIT_OK


_DEFAULT_DOMAINS = {"parabolic_bowl": (-2.0, 2.0), "soliton": (-10.0, 10.0),
                    "lake_at_rest": (0.0, 25.0), "dam_break": (-1.0, 1.0)}


def _cmd_reference(args) -> int:
    values = read_config_file(args.config) if args.config else {}
    values["scenario"] = args.scenario
    if args.config is None:
        lo, hi = _DEFAULT_DOMAINS[args.scenario]
        values.setdefault("x_min", lo)
        values.setdefault("x_max", hi)
        values.setdefault("cells", 400)
        if args.scenario == "lake_at_rest":
            values.setdefault("bathymetry", "bump")
    values["t_final"] = max(args.t, 0.0)
    if args.cells is not None:
        values["cells"] = args.cells
    cfg = parse_config(values, out_dir=None)
    sc = build_scenario(cfg)
    if sc.reference is None:
        raise ConfigError(f"scenario {args.scenario} has no exact solution")
    x = sc.grid.centers
    f = sc.reference(x, args.t)
    fields = {"H": f.H, "u": f.u, "w": f.w, "p_nh": f.p_nh, "zb": sc.bathy.zb}
    analytic.write_reference_csv(args.out, x, fields)
    print(f"wrote {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "converge": _cmd_converge, "reference": _cmd_reference}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point ``binmix``."""
from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .energy import DomainError, EQShiftError
from .nondim import nondimensionalize, read_physical, read_scales
from .output import format_value
from .presets import full_scale
from .scheme import PositivityError
from .solver import NonConvergenceError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3
EXIT_POSITIVITY = 4
EXIT_IO = 5


def _parser():
    p = argparse.ArgumentParser(prog="binmix",
                                description="Energy-stable binary compressible fluid solver")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="time-integrate a configuration")
    r.add_argument("--config", required=True)
    r.add_argument("--out", default=None, help="output directory (overrides [output] dir)")
    r.add_argument("--no-hydro", action="store_true", help="freeze the velocity at zero")
    r.add_argument("--full-scale", action="store_true", help="long-horizon fine-grid settings")

    f = sub.add_parser("refine", help="temporal or spatial refinement study")
    f.add_argument("--config", required=True)
    f.add_argument("--axis", choices=("time", "space"), required=True)
    f.add_argument("--levels", required=True, help="comma list of dt values or cell counts")
    f.add_argument("--out", default=None, help="CSV path (default: stdout)")

    d = sub.add_parser("dispersion", help="tabulate linear growth rates")
    d.add_argument("--config", required=True)
    d.add_argument("--kmin", type=float, required=True)
    d.add_argument("--kmax", type=float, required=True)
    d.add_argument("--samples", type=int, default=200)
    d.add_argument("--out", default=None)

    n = sub.add_parser("nondim", help="convert physical parameters to dimensionless ones")
    n.add_argument("--scales", required=True)
    n.add_argument("--params", required=True)

    e = sub.add_parser("eqcontour", help="modified energy h_m over a molar-density box")
    e.add_argument("--config", required=True)
    e.add_argument("--grid", type=int, default=101)
    e.add_argument("--out", default=None)
    return p


def _emit_table(rows, out):
    from .runner import write_table
    if out is None:
        write_table(sys.stdout, rows)
    else:
        write_table(out, rows)


def _cmd_run(args):
    from .runner import run
    cfg = load_config(args.config)
    if args.no_hydro:
        cfg = cfg.update("model", hydro=False)
    if args.full_scale:
        cfg = full_scale(cfg)
    res = run(cfg, out_dir=args.out)
    if res.status == "ok":
        last = res.records[-1] if res.records else None
        if last is not None:
            print(f"done: {last.step} steps, t={last.time:.6g}, E={last.energy:.10g}")
        return EXIT_OK
    print(f"aborted: {res.error}", file=sys.stderr)
    return EXIT_NONCONVERGENCE if res.status == "nonconvergence" else EXIT_POSITIVITY


def _cmd_refine(args):
    from .runner import refinement_study
    cfg = load_config(args.config)
    try:
        conv = int if args.axis == "space" else float
        levels = [conv(x) for x in args.levels.split(",")]
    except ValueError:
        raise ConfigError(f"cannot parse levels {args.levels!r}") from None
    try:
        rows = refinement_study(cfg, args.axis, levels)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _emit_table(rows, args.out)
    return EXIT_OK


def _cmd_dispersion(args):
    from .runner import dispersion_table
    cfg = load_config(args.config)
    try:
        rows = dispersion_table(cfg, args.kmin, args.kmax, args.samples)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _emit_table(rows, args.out)
    return EXIT_OK


def _cmd_nondim(args):
    try:
        scales = read_scales(args.scales)
        phys = read_physical(args.params)
        out = nondimensionalize(scales, phys)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    for k, v in out.items():
        text = ", ".join(format_value(x) for x in v) if isinstance(v, tuple) else format_value(v)
        print(f"{k} = {text}")
    return EXIT_OK


def _cmd_eqcontour(args):
    from .runner import eqcontour_table
    cfg = load_config(args.config)
    if args.grid < 2:
        raise ConfigError("--grid must be at least 2")
    rows, meta = eqcontour_table(cfg, args.grid)
    print(f"# liquid={meta['liquid'].tolist()} gas={meta['gas'].tolist()} mu={meta['mu'].tolist()}",
          file=sys.stderr)
    _emit_table(rows, args.out)
    return EXIT_OK


_COMMANDS = {"run": _cmd_run, "refine": _cmd_refine, "dispersion": _cmd_dispersion,
             "nondim": _cmd_nondim, "eqcontour": _cmd_eqcontour}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (PositivityError, DomainError, EQShiftError) as exc:
        print(f"positivity/domain error: {exc}", file=sys.stderr)
        return EXIT_POSITIVITY
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

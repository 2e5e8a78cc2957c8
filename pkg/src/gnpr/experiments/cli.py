"""``pr`` command line tool.

Exit codes: 0 success (non-convergence included), 1 usage, config or guard
error, 2 I/O or parse error, 3 numerical breakdown.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..errors import InvalidArgumentError, NumericalBreakdownError
from . import runners
from .config import build_config
from .pgm import PgmError
from .plot import PLOT_KINDS, PlotError, emit_plot

__all__ = ["main"]

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3

_RUNNERS = {
    "convergence": runners.run_convergence,
    "success-rate": runners.run_success_rate,
    "noise-sweep": runners.run_noise_sweep,
    "loo": runners.run_loo,
    "bounds": runners.run_bounds,
}


class _UsageError(Exception):
    pass


class _ParseError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _parser():
    p = _Parser(prog="pr", description="Gauss-Newton phase retrieval experiments")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in list(_RUNNERS) + ["image"]:
        s = sub.add_parser(name, help=f"run the {name} experiment")
        if name == "image":
            s.add_argument("image", help="binary PGM (P5) input")
        s.add_argument("--config", help="JSON config file")
        s.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
        s.add_argument("--out", help="output directory")
    s = sub.add_parser("plot", help="render a result CSV as SVG")
    s.add_argument("csv")
    s.add_argument("--kind", required=True, help=f"one of {', '.join(PLOT_KINDS)}")
    s.add_argument("--out", help="SVG path (default: next to the CSV)")
    return p


_FLAGS = {"config", "seed", "out", "kind", "help"}


def _split_overrides(args):
    """Separate config overrides (``--field=v``, ``--a.b=v`` or ``--a.b v``) from ordinary flags."""
    rest, overrides = [], []
    i = 0
    while i < len(args):
        a = args[i]
        key = a[2:].split("=", 1)[0] if a.startswith("--") else ""
        if key and key not in _FLAGS:
            if "=" in a:
                overrides.append(tuple(a[2:].split("=", 1)))
            elif i + 1 < len(args):
                overrides.append((key, args[i + 1]))
                i += 1
            else:
                raise _UsageError(f"override {a} needs a value")
        else:
            rest.append(a)
        i += 1
    return rest, overrides


def _load_config_file(path):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise _ParseError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}") from exc
    if not isinstance(doc, dict):
        raise InvalidArgumentError(f"{path}: config must be a JSON object")
    return doc


def _run(argv):
    rest, overrides = _split_overrides(argv)
    args = _parser().parse_args(rest)
    if args.command == "plot":
        if overrides:
            raise _UsageError("plot takes no config overrides")
        print(emit_plot(args.csv, args.kind, args.out))
        return EXIT_OK
    file_doc = _load_config_file(args.config) if args.config else None
    cfg = build_config(args.command, file_doc, overrides, seed=args.seed, out=args.out)
    if args.command == "image":
        outputs = runners.run_image(args.image, cfg)
    else:
        outputs = (_RUNNERS[args.command](cfg),)
    for path in outputs:
        print(path)
    return EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        return _run(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except NumericalBreakdownError as exc:
        print(f"pr: numerical breakdown: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (_ParseError, PgmError, PlotError, OSError) as exc:
        print(f"pr: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # InvalidArgumentError, ConfigError and GuardError land here
        print(f"pr: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

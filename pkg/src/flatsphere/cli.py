"""Command-line entry point: ``flatsphere --coeffs "1 0 1"``."""

from __future__ import annotations

import argparse
import sys

from .polynomial import RootFindingError
from .report import EXIT_NUMERIC, InputParseError, InputValidationError, JobConfig, run


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="flatsphere",
        description="Build f(w) = det M(w) for a polynomial (or an algebra element), "
                    "the flat conformal metric |f|^(-2/n)|dw|^2 on the sphere, and report "
                    "where it breaks down: at the roots.")
    ap.add_argument("--mode", choices=("poly", "algebra"), default="poly")
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", dest="input_path", help="file with coefficients or algebra JSON")
    src.add_argument("--coeffs", help='inline coefficients low-to-high, e.g. "1 0 1", or JSON')
    ap.add_argument("--extent", type=float, default=3.0)
    ap.add_argument("--resolution", type=int, default=41)
    ap.add_argument("--stencil-h", type=float, default=1e-3)
    ap.add_argument("--tol-root", type=float, default=1e-10)
    ap.add_argument("--tol-harmonic", type=float, default=1e-4)
    ap.add_argument("--tol-ledger", type=float, default=1e-9)
    fmt = ap.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="output", action="store_const", const="json")
    fmt.add_argument("--text", dest="output", action="store_const", const="text")
    ap.add_argument("--emit-grids", action="store_true", help="write grid.csv")
    ap.add_argument("--out-dir", help="directory for report.json and grid.csv")
    ap.add_argument("--seed", type=int, default=0)
    ap.set_defaults(output="json")
    return ap


def config_from_args(args: argparse.Namespace) -> JobConfig:
    return JobConfig(
        mode=args.mode, input_path=args.input_path, coeffs=args.coeffs,
        extent=args.extent, resolution=args.resolution, stencil_h=args.stencil_h,
        tol_root=args.tol_root, tol_harmonic=args.tol_harmonic, tol_ledger=args.tol_ledger,
        output=args.output, emit_grids=args.emit_grids, out_dir=args.out_dir,
        rng_seed=args.seed)


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        code, text, _ = run(config_from_args(args))
    except (InputParseError, InputValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except RootFindingError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())

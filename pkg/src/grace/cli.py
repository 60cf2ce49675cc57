"""``grace`` command line: run, bench, validate.

Exit codes: 0 success, 1 validation outside tolerance, 2 input parse error,
3 numerical abort, 4 I/O error, 5 S-state relaxation failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__, kernels
from .constants import GAMMA
from .dynamics import NumericalAbort, run, state_from_config
from .io import ParseError, SnapshotWriter, TrajectoryWriter, emit_gnuplot_script, read_input

EXIT_OK, EXIT_MISMATCH, EXIT_PARSE, EXIT_NUMERIC, EXIT_IO, EXIT_SSTATE = 0, 1, 2, 3, 4, 5
THREADS_ENV = "GRACE_THREADS"

log = logging.getLogger("grace")


def _threads(arg) -> int:
    if arg:
        return arg
    env = os.environ.get(THREADS_ENV)
    if env:
        return int(env)
    return os.cpu_count() or 1


def _set_threads(n: int):
    # scipy.fft receives workers= explicitly
    kernels.set_num_threads(n)


def cmd_run(args) -> int:
    threads = _threads(args.threads)
    _set_threads(threads)
    try:
        cfg = read_input(args.input)
    except ParseError as exc:
        print(f"{args.input}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (OSError, UnicodeDecodeError) as exc:
        print(f"cannot read input {args.input}: {exc}", file=sys.stderr)
        return EXIT_IO
    out = Path(args.output)
    stem = Path(args.input).stem
    header = (f"grace {__version__} run of {args.input}\n"
              f"grid {cfg.grid.nx}x{cfg.grid.ny}x{cfg.grid.nz}, dt = {cfg.dt:g} s, "
              f"gamma = {GAMMA:.6g} rad/(s T), threads = {threads}, backend = {kernels.BACKEND}\n"
              "t_ns mx my mz")
    try:
        out.mkdir(parents=True, exist_ok=True)
        traj = TrajectoryWriter(out / f"{stem}.dat", header=header)
        sinks = [traj]
        snaps = None
        if args.snapshots:
            snaps = SnapshotWriter(out / "snapshots")
            sinks.append(snaps)
    except OSError as exc:
        print(f"cannot write output in {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        state = state_from_config(cfg, workers=threads, cache_dir=args.cache_dir)
        run(cfg, sinks, state)
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    finally:
        traj.close()
    snap_rel = None
    if snaps is not None and snaps.paths:
        snap_rel = os.path.relpath(snaps.paths[-1], out)
    script = emit_gnuplot_script(f"{stem}.dat", snap_rel, layer=cfg.grid.nz // 2, title=stem,
                                 stride=max(1, cfg.grid.nx // 50))
    try:
        (out / f"{stem}.gnuplot").write_text(script, encoding="ascii")
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {traj.rows} rows to {traj.path}")
    return EXIT_OK


def cmd_bench(args) -> int:
    from .bench import run_bench

    threads = _threads(args.threads)
    _set_threads(threads)
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    if len(sizes) < 2:
        print("bench needs at least two sizes for the scaling check", file=sys.stderr)
        return EXIT_PARSE
    report = run_bench(sizes, steps=args.steps, threads=threads)
    print(report.to_table(), end="")
    if args.csv:
        try:
            Path(args.csv).write_text(report.to_csv(), encoding="ascii")
        except OSError as exc:
            print(f"I/O error: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        print()
        print(report.to_csv(), end="")
    return EXIT_OK


def cmd_validate(args) -> int:
    from . import sp4

    threads = _threads(args.threads)
    _set_threads(threads)
    try:
        cmp = sp4.run_validation(args.field, args.output, coarse=args.coarse, dt=args.dt,
                                 workers=threads)
    except sp4.SStateError as exc:
        print(f"S-state not reached: {exc}", file=sys.stderr)
        return EXIT_SSTATE
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(cmp.summary(), end="")
    return EXIT_OK if cmp.passed else EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grace", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"grace {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a simulation from an input file")
    r.add_argument("input")
    r.add_argument("-o", "--output", default=".", help="output directory")
    r.add_argument("--threads", type=int, default=None)
    r.add_argument("--snapshots", action="store_true", help="write a snapshot at every output row")
    r.add_argument("--cache-dir", default=None, help="directory for the demag tensor cache")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="per-step timing over cubic N^3 samples")
    b.add_argument("--sizes", default="8,16,32,64")
    b.add_argument("--steps", type=int, default=50)
    b.add_argument("--threads", type=int, default=None)
    b.add_argument("--csv", default=None, help="write the CSV report here instead of stdout")
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("validate", help="muMAG standard problem #4")
    v.add_argument("--field", type=int, choices=(1, 2), required=True)
    v.add_argument("--coarse", action="store_true", help="100x25x1 grid of 5x5x3 nm cells")
    v.add_argument("-o", "--output", default="sp4_out")
    v.add_argument("--dt", type=float, default=None, help="override the reversal time step (s)")
    v.add_argument("--threads", type=int, default=None)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

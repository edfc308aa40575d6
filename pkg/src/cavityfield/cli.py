"""``cavityfield`` command line: grids, sweeps, figure presets and the validation suite."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .dynamics import AtomFieldConfig, ProtocolTimes
from .errors import CavityFieldError, ZeroNormError
from .output import sidecar_path, write_grid, write_json, write_table
from .presets import PRESETS, preset_names
from .runner import (NORMALIZATION_NAMES, ConfigError, RunConfig, SweepSpec, format_input,
                     parse_cutoff, parse_grid, parse_input, parse_time, run_contour, run_grid,
                     run_sweep)

EXIT_OK, EXIT_CONFIG, EXIT_ZERO_NORM, EXIT_IO = 0, 2, 3, 4
EXIT_FAILED = 1


def _common(parser):
    parser.add_argument("--input", default="coherent:2", help="coherent:A | thermal:NBAR | fock:N | vacuum")
    parser.add_argument("--g", type=float, default=1.0, help="coupling for both transitions")
    parser.add_argument("--g1", type=float, default=None)
    parser.add_argument("--g2", type=float, default=None)
    parser.add_argument("--delta", type=float, default=0.0, help="detuning for both transitions")
    parser.add_argument("--delta1", type=float, default=None)
    parser.add_argument("--delta2", type=float, default=None)
    parser.add_argument("--t1", default="pi:1/6", help="first transit time, e.g. 0.5 or pi:7/6")
    parser.add_argument("--t2", default="pi:1/6", help="second transit time")
    parser.add_argument("--grid", default=None, help="re_min:re_max:im_min:im_max:nx:ny")
    parser.add_argument("--normalization", choices=sorted(NORMALIZATION_NAMES), default="faithful")
    parser.add_argument("--cutoff", default="auto", help="auto[:tail_tol[:headroom]] | fixed:DIM")
    parser.add_argument("--out", default=None, help="output file")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--no-atoms", action="store_true", help="skip both transits (input field only)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cavityfield", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("qfunc", "Husimi Q on a phase-space grid"),
                       ("wigner", "Wigner function on a phase-space grid")):
        _common(sub.add_parser(name, help=text))
    sweep = sub.add_parser("sweep", help="Mandel Q and optimal squeezing along one parameter")
    _common(sweep)
    sweep.add_argument("--param", choices=("gt", "alpha0", "nbar"), default="gt")
    sweep.add_argument("--range", dest="range_", default="0.05:pi:2", help="START:STOP (pi: allowed)")
    sweep.add_argument("--step", default="0.05")
    val = sub.add_parser("validate", help="engine self-consistency suite and discrepancy audit")
    val.add_argument("--level", choices=("fast", "full"), default="fast")
    val.add_argument("--out", default=None, help="JSON report path")
    pre = sub.add_parser("preset", help="emit the data behind one figure")
    pre.add_argument("name", choices=preset_names())
    pre.add_argument("--out", default=".", help="output directory")
    pre.add_argument("--format", choices=("csv", "json"), default="csv")
    pre.add_argument("--workers", type=int, default=1)
    rerun = sub.add_parser("rerun", help="repeat a run from its sidecar")
    rerun.add_argument("sidecar")
    rerun.add_argument("--out", default=None, help="output file (default: the recorded one)")
    rerun.add_argument("--workers", type=int, default=1)
    return parser


def _split_range(text):
    # "pi:" values contain a colon themselves, so split on the middle colon carefully
    parts = text.split(":")
    for k in range(1, len(parts)):
        left, right = ":".join(parts[:k]), ":".join(parts[k:])
        try:
            return parse_time(left), parse_time(right)
        except ConfigError:
            continue
    raise ConfigError(f"range must be START:STOP, got {text!r}")


def config_from_args(args) -> RunConfig:
    g1 = args.g if args.g1 is None else args.g1
    g2 = args.g if args.g2 is None else args.g2
    d1 = args.delta if args.delta1 is None else args.delta1
    d2 = args.delta if args.delta2 is None else args.delta2
    if args.workers < 1:
        raise ConfigError(f"--workers must be >= 1, got {args.workers}")
    try:
        config = AtomFieldConfig(g1, g2, d1, d2)
        times = ProtocolTimes(parse_time(args.t1), parse_time(args.t2))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return RunConfig(
        input=parse_input(args.input),
        config=config,
        times=times,
        time_exprs=(args.t1, args.t2),
        grid=None if args.grid is None else parse_grid(args.grid),
        normalization=NORMALIZATION_NAMES[args.normalization],
        cutoff=parse_cutoff(args.cutoff),
        no_atoms=args.no_atoms,
        out=args.out,
        fmt=args.format,
    )


def _default_out(cfg: RunConfig, stem: str) -> Path:
    return Path(cfg.out) if cfg.out else Path(f"{stem}.{cfg.fmt}")


def do_grid(cfg: RunConfig, kind: str, out: Path, workers: int) -> dict:
    field, meta = run_grid(cfg, kind, workers)
    write_grid(out, field, cfg.fmt)
    meta["output"] = str(out)
    write_json(sidecar_path(out), meta)
    return meta


def do_sweep(cfg: RunConfig, sweep: SweepSpec, out: Path, workers: int) -> dict:
    columns, rows, meta = run_sweep(cfg, sweep, workers)
    write_table(out, columns, rows, cfg.fmt)
    meta["output"] = str(out)
    write_json(sidecar_path(out), meta)
    return meta


def do_contour(cfg: RunConfig, parameter, outer, gts, out: Path, workers: int) -> dict:
    columns, rows, meta = run_contour(cfg, parameter, outer, gts, workers)
    write_table(out, columns, rows, cfg.fmt)
    meta["output"] = str(out)
    write_json(sidecar_path(out), meta)
    return meta


def _ordering_summary(name, means):
    # expected order: curves for larger alpha0 or nbar lie lower
    summary = {"preset": name, "mean_mandel_q": means, "suite_version": __version__}
    for norm in ("faithful", "renorm"):
        seq = [means[k][norm] for k in means]
        summary[f"expected_ordering_holds_{norm}"] = all(b < a for a, b in zip(seq, seq[1:]))
    return summary


def run_preset(name: str, out_dir: Path, fmt: str = "csv", workers: int = 1) -> list:
    """Write the data files of one preset; returns the paths written."""
    p = PRESETS[name]
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if p["command"] in ("qfunc", "wigner"):
        cfg = RunConfig(input=parse_input(p["input"]),
                        times=ProtocolTimes(parse_time(p["t1"]), parse_time(p["t2"])),
                        time_exprs=(p["t1"], p["t2"]), grid=p["grid"], fmt=fmt)
        out = out_dir / f"{name}.{fmt}"
        do_grid(cfg, "husimi" if p["command"] == "qfunc" else "wigner", out, workers)
        written.append(out)
    elif p["command"] == "sweep":
        sweep = SweepSpec("gt", p["start"], p["stop"], p["step"])
        means = {}
        for text in p["inputs"]:
            cfg = RunConfig(input=parse_input(text), fmt=fmt)
            out = out_dir / f"{name}_{text.replace(':', '_')}.{fmt}"
            meta = do_sweep(cfg, sweep, out, workers)
            means[text] = meta["mean_mandel_q"]
            written.append(out)
        written.append(write_json(out_dir / f"{name}.summary.json", _ordering_summary(name, means)))
    else:
        parameter = p["parameter"]
        seed = "coherent:1" if parameter == "alpha0" else "thermal:1"
        cfg = RunConfig(input=parse_input(seed), fmt=fmt)
        gts = SweepSpec("gt", p["start"], p["stop"], p["step"]).values()
        out = out_dir / f"{name}.{fmt}"
        do_contour(cfg, parameter, p["values"], gts, out, workers)
        written.append(out)
    return written


def rerun(sidecar: Path, out=None, workers: int = 1) -> Path:
    try:
        meta = json.loads(Path(sidecar).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"sidecar {sidecar} is not valid JSON: {exc}") from exc
    try:
        cfg = RunConfig.from_dict(meta["config"])
        command = meta["command"]
        out = Path(out or meta["output"])
    except KeyError as exc:
        raise ConfigError(f"sidecar lacks {exc}") from exc
    if command in ("qfunc", "wigner"):
        do_grid(cfg, "husimi" if command == "qfunc" else "wigner", out, workers)
    elif command == "sweep":
        s = meta["sweep"]
        do_sweep(cfg, SweepSpec(s["parameter"], s["start"], s["stop"], s["step"]), out, workers)
    elif command == "contour":
        c = meta["contour"]
        do_contour(cfg, c["parameter"], c["outer_values"], c["gt_values"], out, workers)
    else:
        raise ConfigError(f"cannot rerun command {command!r}")
    return out


def _dispatch(args) -> int:
    if args.command == "validate":
        from .validation import run_suite
        report = run_suite(args.level)
        if args.out:
            write_json(args.out, report)
        failed = [c["name"] for c in report["checks"] if not c["passed"]]
        print(f"validate[{args.level}]: {len(report['checks']) - len(failed)}/{len(report['checks'])} "
              f"checks passed in {report['elapsed_s']:.1f} s")
        for name in failed:
            print(f"  FAILED {name}")
        return EXIT_OK if report["passed"] else EXIT_FAILED
    if args.command == "preset":
        for path in run_preset(args.name, Path(args.out), args.format, args.workers):
            print(path)
        return EXIT_OK
    if args.command == "rerun":
        print(rerun(Path(args.sidecar), args.out, args.workers))
        return EXIT_OK

    cfg = config_from_args(args)
    try:
        if args.command in ("qfunc", "wigner"):
            out = _default_out(cfg, args.command)
            do_grid(cfg, "husimi" if args.command == "qfunc" else "wigner", out, args.workers)
        else:
            start, stop = _split_range(args.range_)
            sweep = SweepSpec(args.param, start, stop, parse_time(args.step))
            out = _default_out(cfg, "sweep")
            do_sweep(cfg, sweep, out, args.workers)
    except ZeroNormError as exc:
        raise ZeroNormError(f"{exc}; t1 = {args.t1}, input = {format_input(cfg.input)}",
                            exc.probability) from exc
    print(out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ZeroNormError as exc:
        print(f"cavityfield: zero-norm post-selection: {exc}", file=sys.stderr)
        return EXIT_ZERO_NORM
    except (CavityFieldError, ValueError) as exc:
        print(f"cavityfield: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cavityfield: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime error. Every successful run
writes its fully resolved configuration as <subcommand>-config.json next to
its outputs; the default output directory is $CHANEST_OUTDIR or the current
directory.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import design, evaluate
from .dataset import generate_dataset
from .estimators import mse
from .fading import freq_response, generate_realization
from .link import (
    ALT_PATTERN,
    DEFAULT_PATTERN,
    DmrsPattern,
    FrameConfig,
    build_slot,
    save_grid,
    transmit_receive_fd,
    transmit_receive_td,
)
from .profiles import (
    BUILTIN_NAMES,
    ChannelSpec,
    cdl_profile,
    resolve_profile,
    save_profile,
)

OUTDIR_ENV = "CHANEST_OUTDIR"


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v != ""]


def _parse_range(text: str) -> tuple[float, float]:
    """"lo:hi" or a single value (meaning a fixed draw)."""
    parts = text.split(":")
    if len(parts) == 1:
        v = float(parts[0])
        return (v, v)
    if len(parts) == 2:
        return (float(parts[0]), float(parts[1]))
    raise ValueError(f"expected LO:HI or a single value, got {text!r}")


def _parse_grid(text: str) -> list[float]:
    """"lo:hi:step" (inclusive), "a,b,c", or a single value."""
    if "," in text:
        return _parse_floats(text)
    parts = text.split(":")
    if len(parts) == 1:
        return [float(parts[0])]
    if len(parts) == 3:
        lo, hi, step = (float(p) for p in parts)
        if step <= 0 or hi < lo:
            raise ValueError(f"bad grid {text!r}")
        return list(np.arange(lo, hi + step / 2, step))
    raise ValueError(f"expected LO:HI:STEP, a comma list, or a single value, got {text!r}")


def _pattern(selector: str) -> DmrsPattern:
    if selector == "default":
        return DEFAULT_PATTERN
    if selector == "alt":
        return ALT_PATTERN
    path = Path(selector)
    if path.is_file():
        data = json.loads(path.read_text())
        if "pilot_value" in data:
            data["pilot_value"] = complex(*data["pilot_value"])
        if "pilot_symbols" in data:
            data["pilot_symbols"] = tuple(data["pilot_symbols"])
        return DmrsPattern(**data)
    raise ValueError(f"unknown pattern {selector!r}: expected default, alt, or a JSON file")


def _outdir(args) -> Path:
    out = Path(args.out or os.environ.get(OUTDIR_ENV, "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_config(args, out: Path) -> None:
    resolved = {k: v for k, v in vars(args).items() if k != "func"}
    resolved["out"] = str(out)
    path = out / f"{args.subcommand}-config.json"
    path.write_text(json.dumps(resolved, indent=2, sort_keys=True, default=str) + "\n")


def _cmd_simulate(args) -> int:
    out = _outdir(args)
    frame = FrameConfig()
    pattern = _pattern(args.pattern)
    pdp = resolve_profile(args.channel)
    spec = ChannelSpec(pdp, max_doppler_hz=args.doppler)
    rng = np.random.default_rng([args.seed])
    realization = generate_realization(spec, rng, frame.symbol_times_s())
    h = freq_response(realization, frame)
    x = build_slot(pattern, frame, seed=rng)
    if args.td:
        y = transmit_receive_td(x, realization, args.snr, frame, seed=rng)
    else:
        y = transmit_receive_fd(x, h, args.snr, seed=rng)
    for name, grid in (("x", x), ("h", h), ("y", y)):
        save_grid(out / f"{name}.grid", grid)
    est = evaluate.get_estimator(args.estimator, pattern, frame)
    err = mse(est.fn(y, args.snr, pdp), h)
    print(f"channel={pdp.name or args.channel} snr_db={args.snr:g} "
          f"estimator={est.id} mse={err!r}")
    _write_config(args, out)
    return 0


def _cmd_design_check(args) -> int:
    out = _outdir(args)
    report = design.is_applicable(
        resolve_profile(args.candidate), resolve_profile(args.designed), tol_db=args.tol_db
    )
    print(json.dumps(report.as_dict(), indent=2))
    _write_config(args, out)
    return 0


def _cmd_eigs(args) -> int:
    out = _outdir(args)
    pdp = resolve_profile(args.channel)
    frame = FrameConfig()
    if args.empirical:
        r = design.autocorrelation_matrix(pdp, frame, "empirical", n=args.empirical, seed=args.seed)
    else:
        r = design.autocorrelation_matrix(pdp, frame, "analytic")
    spectrum = design.eigen_spectrum(r)
    count = spectrum.n if args.count is None else min(args.count, spectrum.n)
    print("index,eigenvalue")
    for i in range(count):
        print(f"{i},{spectrum.eigenvalues[i]!r}")
    _write_config(args, out)
    return 0


def _cmd_gen_dataset(args) -> int:
    out = _outdir(args)
    pdp = resolve_profile(args.channel)
    manifest = generate_dataset(
        ChannelSpec(pdp),
        _pattern(args.pattern),
        FrameConfig(),
        args.count,
        _parse_range(args.snr),
        _parse_range(args.doppler),
        args.seed,
        out,
        val_fraction=args.val_frac,
        threads=args.threads,
    )
    for entry in manifest.files:
        print(f"{entry.split}: {entry.name} ({entry.count} samples)")
    _write_config(args, out)
    return 0


def _cmd_eval(args) -> int:
    out = _outdir(args)
    if args.predictions:
        if not args.dataset:
            raise ValueError("--predictions needs --dataset")
        points = [evaluate.score_predictions(args.dataset, args.predictions)]
    else:
        points = evaluate.mse_vs_snr(
            args.estimator,
            [c for c in args.channels.split(",") if c],
            _parse_grid(args.snr),
            args.n,
            args.seed,
            doppler_range=_parse_range(args.doppler),
            pattern=_pattern(args.pattern),
            threads=args.threads,
        )
    evaluate.emit_report(points, out / "eval.csv", out / "eval.svg" if args.svg else None)
    print(f"wrote {out / 'eval.csv'} ({len(points)} points)")
    _write_config(args, out)
    return 0


def _cmd_grid(args) -> int:
    out = _outdir(args)
    points = evaluate.generalization_grid(
        [c for c in args.train.split(",") if c],
        [c for c in args.test.split(",") if c],
        args.snr,
        args.n,
        args.seed,
        family=args.family,
        predictions_dir=args.predictions_dir,
        datasets_dir=args.datasets_dir,
        doppler_range=_parse_range(args.doppler),
        pattern=_pattern(args.pattern),
        threads=args.threads,
    )
    evaluate.emit_report(points, out / "grid.csv", out / "grid.svg" if args.svg else None)
    print(f"wrote {out / 'grid.csv'} ({len(points)} points)")
    _write_config(args, out)
    return 0


def _cmd_sweep_ds(args) -> int:
    out = _outdir(args)
    names = [cdl_profile(p).name for p in args.profiles.split(",") if p]
    points = evaluate.ds_sweep(
        args.estimator,
        names,
        _parse_grid(args.ds),
        args.snr,
        args.n,
        args.seed,
        doppler_range=_parse_range(args.doppler),
        pattern=_pattern(args.pattern),
        threads=args.threads,
    )
    evaluate.emit_report(points, out / "sweep.csv", out / "sweep.svg" if args.svg else None)
    print(f"wrote {out / 'sweep.csv'} ({len(points)} points)")
    _write_config(args, out)
    return 0


def _cmd_suggest(args) -> int:
    out = _outdir(args)
    inputs = [resolve_profile(c) for c in args.channels.split(",") if c]
    suggested = design.suggest_envelope(inputs, args.margin_db, args.extra_delay_ns)
    save_profile(suggested, out / "suggested.json")
    for delay, gain in zip(suggested.delays_ns, suggested.gains_db):
        print(f"{delay:12.3f} ns  {gain:8.3f} dB")
    print(f"wrote {out / 'suggested.json'}")
    _write_config(args, out)
    return 0


def _add_common(p: argparse.ArgumentParser, *, threads: bool = True) -> None:
    p.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    p.add_argument("--out", default=None, help=f"output directory (default ${OUTDIR_ENV} or .)")
    p.add_argument("--pattern", default="default", help="default | alt | pattern JSON file")
    if threads:
        p.add_argument("--threads", type=int, default=None, help="parallelism cap")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chanest", description="OFDM channel-estimation workbench")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("simulate", parents=[], help="run one slot and dump X/H/Y grids")
    p.add_argument("--channel", required=True, help=f"{'|'.join(BUILTIN_NAMES)} or JSON file")
    p.add_argument("--snr", type=float, default=20.0)
    p.add_argument("--doppler", type=float, default=97.0, help="max Doppler in Hz")
    p.add_argument("--estimator", default="ls")
    p.add_argument("--td", action="store_true", help="use the time-domain path")
    _add_common(p, threads=False)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("design-check", help="applicability of a candidate vs a designed PDP")
    p.add_argument("--designed", required=True)
    p.add_argument("--candidate", required=True)
    p.add_argument("--tol-db", type=float, default=0.0)
    _add_common(p, threads=False)
    p.set_defaults(func=_cmd_design_check)

    p = sub.add_parser("eigs", help="eigen spectrum of the channel autocorrelation")
    p.add_argument("--channel", required=True)
    p.add_argument("--count", type=int, default=None, help="print only the first N eigenvalues")
    p.add_argument("--empirical", type=int, default=0, metavar="N",
                   help="estimate from N realizations instead of the closed form")
    _add_common(p, threads=False)
    p.set_defaults(func=_cmd_eigs)

    p = sub.add_parser("gen-dataset", help="generate a training/validation dataset")
    p.add_argument("--channel", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--snr", default="5:25", help="SNR range LO:HI in dB")
    p.add_argument("--doppler", default="0:97", help="Doppler range LO:HI in Hz")
    p.add_argument("--val-frac", type=float, default=0.05)
    _add_common(p)
    p.set_defaults(func=_cmd_gen_dataset)

    p = sub.add_parser("eval", help="MSE vs SNR table, or score a predictions file")
    p.add_argument("--channels", default="", help="comma-separated channel selectors")
    p.add_argument("--estimator", default="ls", help="ls | mmse | mmse:<channel>")
    p.add_argument("--snr", default="0:30:5", help="grid LO:HI:STEP, comma list, or value")
    p.add_argument("--doppler", default="0:97")
    p.add_argument("--n", type=int, default=500, help="realizations per point")
    p.add_argument("--svg", action="store_true", help="also write a plot")
    p.add_argument("--predictions", default=None, help="predictions file to score")
    p.add_argument("--dataset", default=None, help="dataset dir the predictions belong to")
    _add_common(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("grid", help="train x test generalization matrix")
    p.add_argument("--train", required=True, help="comma-separated train channels")
    p.add_argument("--test", required=True, help="comma-separated test channels")
    p.add_argument("--snr", type=float, default=15.0)
    p.add_argument("--doppler", default="0:97")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--family", default="mmse", choices=("mmse", "predictions"))
    p.add_argument("--predictions-dir", default=None)
    p.add_argument("--datasets-dir", default=None)
    p.add_argument("--svg", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("sweep-ds", help="CDL delay-spread sweep via the time-domain path")
    p.add_argument("--profiles", default="cdl-a,cdl-b,cdl-c", help="comma-separated CDL names")
    p.add_argument("--estimator", default="ls", help="ls | mmse | mmse:<channel>")
    p.add_argument("--ds", default="100,300,1000,3000,9000,15000,22000,30000",
                   help="DS grid in ns: LO:HI:STEP, comma list, or value")
    p.add_argument("--snr", type=float, default=20.0)
    p.add_argument("--doppler", default="0:97")
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--svg", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_sweep_ds)

    p = sub.add_parser("suggest", help="construct an envelope dominating the given channels")
    p.add_argument("--channels", required=True, help="comma-separated channel selectors")
    p.add_argument("--margin-db", type=float, default=0.0)
    p.add_argument("--extra-delay-ns", type=float, default=0.0)
    _add_common(p, threads=False)
    p.set_defaults(func=_cmd_suggest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return int(args.func(args) or 0)
    except Exception as e:  # runtime failures get exit code 2
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

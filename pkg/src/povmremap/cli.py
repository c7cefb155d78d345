"""Command-line driver.

Subcommands: ``remap``, ``sweep``, ``compare``, ``dilate-verify`` and
``synth`` (fixture generator). Exit status is 0 on success, 1 on a
computation error and 2 on a usage or I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ImageIOError, InvalidGamma, PovmRemapError
from .image_core import compute_histogram, four_mode_fixture, load_image, save_image, stem, synth_mixture_image
from .pipeline import compare_csv, compare_methods, dilation_verify, reports_csv, report_for, run_proposed, sweep
from .povm import format_gamma, parse_gamma
from .remap import probability_map, probability_map_image

TIMING_NOTE = ("Reported elapsed_seconds covers estimation, POVM construction and remapping; "
               "file I/O is excluded. --no-timing leaves the column empty for byte-reproducible output.")


class UsageError(Exception):
    pass


def _gamma_arg(text):
    try:
        return parse_gamma(text)
    except InvalidGamma as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _int_list(text):
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("need a non-empty list of positive integers")
    return vals


def _gamma_list(text):
    vals = [_gamma_arg(t) for t in text.split(",") if t.strip()]
    if not vals:
        raise argparse.ArgumentTypeError("need a non-empty gamma list")
    return vals


def _common(p, need_input=True):
    p.add_argument("--input", required=need_input, help="PGM (P2/P5) or PNG image")
    p.add_argument("--estimator", choices=("kmeans", "gmm"), default="kmeans")
    p.add_argument("--k", type=_positive_int, default=4, help="number of components")
    p.add_argument("--gamma", type=_gamma_arg, default=2.0, help="sharpening exponent (> 0 or 'inf')")
    p.add_argument("--delta", type=_positive_float, default=None,
                   help="shared spread for the kmeans path (default: max(8, min centre gap / 2))")
    p.add_argument("--ssim-mode", choices=("windowed", "global"), default="windowed")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out-dir", default="out")
    p.add_argument("--threads", type=_positive_int, default=1, help="row-parallel workers for remapping")
    p.add_argument("--metrics-on", choices=("quantized", "float"), default="quantized",
                   help="score PSNR/SSIM on the 8-bit output or the float reconstruction")
    p.add_argument("--no-timing", action="store_true", help="leave elapsed_seconds empty")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="povmremap", description=__doc__.splitlines()[0], epilog=TIMING_NOTE)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("remap", help="remap one image", epilog=TIMING_NOTE)
    _common(p)
    p.add_argument("--dump-float", action="store_true", help="also write the float reconstruction as CSV")

    p = sub.add_parser("sweep", help="grid over k and gamma", epilog=TIMING_NOTE)
    _common(p)
    p.add_argument("--ks", type=_int_list, default=[2, 4, 8])
    p.add_argument("--gammas", type=_gamma_list, default=[1.0, 2.0, 4.0])

    p = sub.add_parser("compare", help="proposed methods versus thresholding baselines", epilog=TIMING_NOTE)
    _common(p)
    p.add_argument("--kappa", type=_positive_float, default=1.0, help="kappa of the recursive baseline")

    p = sub.add_parser("dilate-verify", help="exact vs sampled ancilla statistics")
    _common(p)
    p.add_argument("--samples", type=int, default=100000)

    p = sub.add_parser("synth", help="write a synthetic Gaussian-mixture PGM")
    p.add_argument("--output", required=True)
    p.add_argument("--fixture", choices=("four-mode",), default=None)
    p.add_argument("--width", type=_positive_int, default=256)
    p.add_argument("--height", type=_positive_int, default=256)
    p.add_argument("--components", default=None, help="'mean:std:weight,...'")
    p.add_argument("--seed", type=int, default=7)
    return parser


def _write(path: Path, text: str):
    try:
        path.write_text(text, newline="")
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc}") from exc


def _out_dir(args) -> Path:
    d = Path(args.out_dir)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ImageIOError(f"cannot create {d}: {exc}") from exc
    return d


def cmd_remap(args) -> int:
    img = load_image(args.input)
    name = stem(args.input)
    out = _out_dir(args)
    k = args.k
    distinct = compute_histogram(img).n_distinct
    if distinct < k:
        print(f"warning: only {distinct} distinct intensities; using k={distinct}", file=sys.stderr)
        k = distinct
    run = run_proposed(img, args.estimator, k, args.gamma, delta=args.delta, threads=args.threads)
    method = f"proposed-{args.estimator}"
    prefix = f"{name}_{args.estimator}"
    save_image(run.result.quantized, out / f"{prefix}_remap.pgm")
    for j in range(run.povm.k):
        pm = probability_map(img, run.povm, j, threads=args.threads)
        save_image(probability_map_image(pm), out / f"{prefix}_prob{j + 1}.pgm")
    _write(out / f"{prefix}_model.json", run.model.to_json() + "\n")
    _write(out / f"{prefix}_povm.csv", run.povm.to_csv())
    if args.dump_float:
        _write(out / f"{prefix}_float.csv", run.result.float_csv())
    rep = report_for(img, run.result.quantized, image=name, method=method, k=k, gamma=format_gamma(args.gamma),
                     ssim_mode=args.ssim_mode, elapsed=None if args.no_timing else run.elapsed,
                     float_image=run.result.float_image if args.metrics_on == "float" else None)
    text = reports_csv([rep])
    _write(out / f"{prefix}_metrics.csv", text)
    sys.stdout.write(text)
    return 0


def cmd_sweep(args) -> int:
    img = load_image(args.input)
    out = _out_dir(args)
    reports = sweep(img, stem(args.input), args.estimator, args.ks, args.gammas, delta=args.delta,
                    ssim_mode=args.ssim_mode, threads=args.threads, use_float=args.metrics_on == "float",
                    timing=not args.no_timing)
    text = reports_csv(reports)
    _write(out / f"{stem(args.input)}_{args.estimator}_sweep.csv", text)
    sys.stdout.write(text)
    return 0


def cmd_compare(args) -> int:
    img = load_image(args.input)
    out = _out_dir(args)
    name = stem(args.input)
    rows = compare_methods(img, name, args.k, args.gamma, delta=args.delta, ssim_mode=args.ssim_mode,
                           kappa=args.kappa, threads=args.threads, use_float=args.metrics_on == "float",
                           timing=not args.no_timing)
    text = compare_csv(rows, name, args.k)
    _write(out / f"{name}_compare.csv", text)
    sys.stdout.write(text)
    return 0


def cmd_dilate_verify(args) -> int:
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    img = load_image(args.input)
    out = _out_dir(args)
    run = run_proposed(img, args.estimator, args.k, args.gamma, delta=args.delta, threads=args.threads)
    check = dilation_verify(run.povm, args.samples, args.seed)
    name = stem(args.input)
    _write(out / f"{name}_dilate.csv", check.csv)
    sys.stdout.write(f"max_abs_diff={check.max_abs_diff:.17g} max_tv={check.max_tv:.17g} "
                     f"max_exact_error={check.max_exact_error:.3g} samples={args.samples} seed={args.seed}\n")
    return 0


def _parse_components(text):
    comps = []
    for part in text.split(","):
        fields = part.split(":")
        if len(fields) != 3:
            raise UsageError(f"bad component {part!r}; expected mean:std:weight")
        comps.append(tuple(float(f) for f in fields))
    return comps


def cmd_synth(args) -> int:
    if args.fixture == "four-mode":
        img = four_mode_fixture(args.width)
    elif args.components:
        img = synth_mixture_image(args.width, args.height, _parse_components(args.components), args.seed)
    else:
        raise UsageError("give --fixture or --components")
    save_image(img, args.output)
    return 0


COMMANDS = {
    "remap": cmd_remap,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
    "dilate-verify": cmd_dilate_verify,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"povmremap: error: {exc}", file=sys.stderr)
        return 2
    except ImageIOError as exc:
        print(f"povmremap: {exc}", file=sys.stderr)
        return 2
    except PovmRemapError as exc:
        print(f"povmremap: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())

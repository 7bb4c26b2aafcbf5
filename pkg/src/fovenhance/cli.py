"""Command-line entry point: enhance, analyze, diagnose, bench, compare, kernels."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import _backend
from .config import EXAMPLE_CONFIG, load_config
from .errors import ConfigError, FovEnhanceError, InputError
from .filterbank import BASIS_NAMES, KERNELS, frequency_response
from .foveation import GRADES
from .image import to_luma_chroma
from .io import normalize_for_display, read_image, write_image, write_luma
from .pipeline import analyze_image, bench, emit_report, run_compare, run_enhance, spectrum_fit_of

log = logging.getLogger("fovenhance")


def _gaze(s: str):
    try:
        x, y = s.split(",")
        return (float(x), float(y))
    except ValueError:
        raise argparse.ArgumentTypeError("gaze must be 'x,y'") from None


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML config (default: $FOVENHANCE_CONFIG)")
    p.add_argument("--gaze", type=_gaze, help="gaze point in pixels, 'x,y'")
    p.add_argument("--grade", choices=GRADES)
    p.add_argument("--density", help="impulse density: 1x1, 2x2 or 4x4")
    p.add_argument("--seed", type=int)
    p.add_argument("--depth", type=int)
    p.add_argument("--ppd", type=float, dest="pixels_per_degree", help="pixels per degree")
    p.add_argument("--threshold-slope", type=float)
    p.add_argument("--threshold-intercept", type=float)
    p.add_argument("--layout", choices=("exact", "paper"))
    p.add_argument("--backend", choices=("auto", "compiled", "python"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fovenhance", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enhance", help="foveate and enhance one image")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--report", help="write diagnostics JSON (+ _histogram.csv)")
    p.add_argument("--save-base", help="also write the foveated base image")
    p.add_argument("--contrast", type=float, metavar="STRENGTH",
                   help="add the simplified contrast boost with this strength")
    _common(p)

    p = sub.add_parser("analyze", help="dump orientation/phase/magnitude maps of one level")
    p.add_argument("input")
    p.add_argument("outdir")
    p.add_argument("--level", type=int, default=0)
    _common(p)

    p = sub.add_parser("diagnose", help="enhance and write the slope fit and parameter maps")
    p.add_argument("input")
    p.add_argument("outdir")
    _common(p)

    p = sub.add_parser("bench", help="per-stage timings and operation counts (JSON)")
    p.add_argument("--size", type=int, default=512)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--no-naive", action="store_true", help="skip the naive splat timing")
    p.add_argument("--enhance-size", type=int, help="also time an end-to-end enhance of NxN")
    p.add_argument("--output", help="write JSON here instead of stdout")
    _common(p)

    p = sub.add_parser("compare", help="one output per grade from the same base")
    p.add_argument("input")
    p.add_argument("outdir")
    p.add_argument("--grades", default=",".join(GRADES), help="comma-separated grades")
    _common(p)

    p = sub.add_parser("kernels", help="CSV dump of basis taps and frequency response")
    p.add_argument("outdir")
    p.add_argument("--fft-size", type=int, default=64)

    sub.add_parser("example-config", help="print an example config file")
    return ap


def _config(args, mode: str):
    cfg = load_config(getattr(args, "config", None))
    over = {k: getattr(args, k, None) for k in
            ("gaze", "grade", "density", "seed", "depth", "pixels_per_degree", "threshold_slope",
             "threshold_intercept", "layout")}
    over["mode"] = mode
    if getattr(args, "contrast", None) is not None:
        over["contrast_mode"] = "simple"
        over["contrast_strength"] = args.contrast
    return cfg.with_overrides(**over)


def _write_fields(outdir: Path, fields, tag: str) -> None:
    write_luma(outdir / f"{tag}_theta.png", fields.theta / np.pi)
    write_luma(outdir / f"{tag}_phi.png", (fields.phi + np.pi) / (2 * np.pi))
    write_luma(outdir / f"{tag}_sigma.png", normalize_for_display(fields.sigma))
    np.savetxt(outdir / f"{tag}_sigma.csv", fields.sigma, delimiter=",", fmt="%.6g")


def _cmd_enhance(args) -> int:
    cfg = _config(args, "enhance")
    img = read_image(args.input, cfg.linearize)
    res = run_enhance(cfg, img)
    write_image(args.output, res.rgb, cfg.bit_depth, cfg.linearize)
    if args.save_base:
        write_luma(args.save_base, res.base, cfg.bit_depth)
    if args.report:
        emit_report(res.report, args.report)
    log.info("wrote %s (%.3f s)", args.output, sum(res.report.timings.values()))
    return 0


def _cmd_analyze(args) -> int:
    cfg = _config(args, "analyze")
    luma, _ = to_luma_chroma(read_image(args.input, cfg.linearize))
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    _write_fields(out, analyze_image(luma, cfg.depth, args.level), f"level{args.level}")
    return 0


def _cmd_diagnose(args) -> int:
    cfg = _config(args, "diagnose")
    img = read_image(args.input, cfg.linearize)
    res = run_enhance(cfg, img)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    emit_report(res.report, out / "report.json")
    luma, _ = to_luma_chroma(img)
    fit = spectrum_fit_of(luma, cfg.depth)
    (out / "slope_fit_unfoveated.json").write_text(json.dumps(fit.to_dict(), indent=2))
    for r, flist in res.fields.items():
        for f in flist:
            _write_fields(out, f, f"region{r}_level{f.level}")
    write_luma(out / "base.png", res.base)
    write_image(out / "enhanced.png", res.rgb)
    return 0


def _cmd_bench(args) -> int:
    cfg = _config(args, "bench")
    res = bench(args.size, cfg.density, cfg.layout, cfg.seed, args.repeats, not args.no_naive,
                args.enhance_size)
    text = json.dumps(res, indent=2)
    if args.output:
        Path(args.output).write_text(text)
    else:
        print(text)
    return 0


def _cmd_compare(args) -> int:
    cfg = _config(args, "compare")
    grades = [g.strip() for g in args.grades.split(",") if g.strip()]
    img = read_image(args.input, cfg.linearize)
    results = run_compare(cfg, img, grades)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for g, res in results.items():
        write_image(out / f"{g}.png", res.rgb, cfg.bit_depth, cfg.linearize)
        summary[g] = res.report.to_dict()
    (out / "report.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_kernels(args) -> int:
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    dense = KERNELS.dense()
    for name, k in zip(BASIS_NAMES, dense):
        np.savetxt(out / f"{name}_taps.csv", k, delimiter=",", fmt="%.9g")
    freqs, mags = frequency_response(KERNELS, args.fft_size)
    centre = len(freqs) // 2
    rows = ["freq," + ",".join(BASIS_NAMES)]
    for i in range(centre, len(freqs)):
        # horizontal profile through DC
        rows.append(f"{freqs[i]:.6g}," + ",".join(f"{m[centre, i]:.6g}" for m in mags))
    (out / "frequency_response.csv").write_text("\n".join(rows) + "\n")
    return 0


def _cmd_example(args) -> int:
    sys.stdout.write(EXAMPLE_CONFIG)
    return 0


COMMANDS = {"enhance": _cmd_enhance, "analyze": _cmd_analyze, "diagnose": _cmd_diagnose,
            "bench": _cmd_bench, "compare": _cmd_compare, "kernels": _cmd_kernels,
            "example-config": _cmd_example}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        backend = getattr(args, "backend", None)
        if backend and backend != "auto":
            try:
                _backend.set_backend(backend)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        return COMMANDS[args.command](args)
    except FovEnhanceError as exc:
        print(f"fovenhance: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"fovenhance: error: {exc}", file=sys.stderr)
        return InputError.exit_code


if __name__ == "__main__":
    sys.exit(main())

"""End-to-end orchestration, diagnostics and the simplified contrast baseline."""
from __future__ import annotations

import json
import math
import time
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _backend, instrument
from .analysis import ParameterFields, analyze_level
from .config import RunConfig
from .errors import (ConfigError, DegenerateSpectrumError, DimensionError, FovEnhanceError, InputError,
                     InvariantError)
from .extrapolate import SlopeFit, analyze_reliable, estimate_spectrum_slope, extrapolate_all
from .filterbank import KERNELS, basis_responses
from .foveation import (ReliabilityMap, band_to_full, compose_luma, foveate, stack_from_foveated)
from .image import (ChromaPair, _check_depth, build_level_stack, expand, from_luma_chroma,
                    level_shapes, max_depth, reduce, to_luma_chroma)
from .synthesis import (EmptyBandWarning, accelerated_splat, build_submap_bank, generate_impulse_map,
                        impulse_weights, naive_splat, synthesize_missing_bands)

SOURCES = ("rendered", "synthesized")


# -- diagnostics ------------------------------------------------------------------

@dataclass
class DiagnosticsReport:
    slope_fits: dict = field(default_factory=dict)        # reliable level -> SlopeFit dict
    band_variance: list = field(default_factory=list)     # rows {band, rendered, synthesized}
    histogram: list = field(default_factory=list)         # rows {band, f_lo, f_hi, source, energy}
    timings: dict = field(default_factory=dict)
    peak_multiplicity: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "slope_fits": self.slope_fits,
            "band_variance": self.band_variance,
            "histogram": self.histogram,
            "timings": self.timings,
            "peak_multiplicity": self.peak_multiplicity,
            "counts": self.counts,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DiagnosticsReport":
        return cls(**{k: d.get(k, type(getattr(cls(), k))()) for k in cls().to_dict()})

    def check_finite(self) -> None:
        def walk(v, path):
            if isinstance(v, float) and not math.isfinite(v):
                raise InvariantError(f"non-finite value in report at {path}")
            if isinstance(v, dict):
                for k, x in v.items():
                    walk(x, f"{path}.{k}")
            elif isinstance(v, list):
                for i, x in enumerate(v):
                    walk(x, f"{path}[{i}]")
        walk(self.to_dict(), "report")


def emit_report(report: DiagnosticsReport, path) -> tuple[Path, Path]:
    """Write ``<path>`` (JSON) and ``<stem>_histogram.csv``."""
    report.check_finite()
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
        csv = p.with_name(p.stem + "_histogram.csv")
        lines = ["band,f_lo,f_hi,source,energy"]
        lines += [f"{r['band']},{r['f_lo']:.6g},{r['f_hi']:.6g},{r['source']},{r['energy']:.9g}"
                  for r in report.histogram]
        csv.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise InputError(f"cannot write report to {p}: {exc}") from exc
    return p, csv


def load_report(path) -> DiagnosticsReport:
    return DiagnosticsReport.from_dict(json.loads(Path(path).read_text()))


def octave_edges(n_bands: int) -> list[tuple[float, float]]:
    """Radial frequency range (cycles/pixel) of band ``k``; the last one is the
    low-pass residual."""
    edges = []
    for k in range(n_bands):
        hi = 0.5 / 2**k
        lo = 0.0 if k == n_bands - 1 else hi / 2
        edges.append((lo, hi))
    return edges


def radial_frequency(shape) -> np.ndarray:
    fy = np.fft.fftfreq(shape[0])[:, None]
    fx = np.fft.fftfreq(shape[1])[None, :]
    return np.hypot(fy, fx)


def band_energy(img, n_bands: int) -> list[float]:
    """Fraction-free FFT energy per octave (mean-square units)."""
    img = np.asarray(img, dtype=np.float64)
    spec = np.abs(np.fft.fft2(img)) ** 2 / img.size**2
    f = radial_frequency(img.shape)
    out = []
    for k, (lo, hi) in enumerate(octave_edges(n_bands)):
        sel = (f <= hi) & ((f > lo) if k < n_bands - 1 else (f >= lo))
        if k == 0:
            sel |= f > 0.5          # corners beyond the axis Nyquist
        out.append(float(spec[sel].sum()))
    return out


def band_histogram(rendered, synthesized, n_bands: int) -> list[dict]:
    rows = []
    edges = octave_edges(n_bands)
    for src, img in zip(SOURCES, (rendered, synthesized)):
        for k, e in enumerate(band_energy(img, n_bands)):
            rows.append({"band": k, "f_lo": edges[k][0], "f_hi": edges[k][1], "source": src, "energy": e})
    return rows


def count_peaks(profile, rel: float = 0.5) -> int:
    """Local maxima of a 1-D profile reaching ``rel`` of its positive maximum."""
    p = np.asarray(profile, dtype=np.float64)
    top = float(p.max()) if p.size else 0.0
    if top <= 0 or p.size < 3:
        return 0
    inner = (p[1:-1] > p[:-2]) & (p[1:-1] >= p[2:]) & (p[1:-1] >= rel * top)
    return int(inner.sum())


def peak_multiplicity(band) -> int:
    """Ridge count of a band: peaks of its row- or column-averaged profile,
    whichever varies more (i.e. the one running across the structure).
    A single reconstructed line gives 1."""
    band = np.asarray(band, dtype=np.float64)
    across_x, across_y = band.mean(axis=0), band.mean(axis=1)
    prof = across_x if across_x.var() >= across_y.var() else across_y
    return count_peaks(prof)


def masked_rms(a, b, mask=None) -> float:
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    if mask is not None:
        d = d[np.asarray(mask, dtype=bool)]
    return float(np.sqrt(np.mean(d * d))) if d.size else 0.0


# -- contrast baseline ------------------------------------------------------------

def laplacian_band_full(base, level: int) -> np.ndarray:
    """Band ``level`` of ``base``'s pyramid brought back to full resolution."""
    shapes = level_shapes(base.shape, level + 2)
    g = [np.asarray(base, dtype=np.float64)]
    for _ in range(level + 1):
        g.append(reduce(g[-1]))
    band = g[level] - expand(g[level + 1], shapes[level])
    return band_to_full(band, level, base.shape)


def contrast_enhance_simple(base, strength: float, reliability: ReliabilityMap | None = None,
                            level: int = 1) -> np.ndarray:
    """Simplified local-contrast boost: ``base + strength * band`` where
    ``band`` is the finest band the foveation kept at each pixel (``level``
    everywhere when no reliability map is given).  Not a reproduction of any
    published contrast-enhancement operator."""
    if strength < 0:
        raise ValueError("strength must be >= 0")
    base = np.asarray(base, dtype=np.float64)
    if strength == 0:
        return base.copy()
    out = base.copy()
    if reliability is None:
        return base + strength * laplacian_band_full(base, level)
    for r in reliability.distinct():
        if r < 1:
            continue
        sel = reliability.levels == r
        out[sel] += strength * laplacian_band_full(base, r)[sel]
    return out


# -- enhance ----------------------------------------------------------------------

@dataclass
class EnhanceResult:
    rgb: np.ndarray | None
    luma: np.ndarray
    base: np.ndarray
    reliability: ReliabilityMap
    bands_full: dict
    bands: dict
    fields: dict
    report: DiagnosticsReport


@contextmanager
def _stage(name, timer):
    """Time a stage and tag any package error raised inside it with the
    stage name (type preserved, so callers can still catch it)."""
    with timer.stage(name):
        try:
            yield
        except FovEnhanceError as exc:
            if getattr(exc, "stage", None) is None:
                exc.stage = name
                if exc.args and isinstance(exc.args[0], str):
                    exc.args = (f"[{name}] {exc.args[0]}",) + exc.args[1:]
            raise


def _split_input(image):
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        return image, None
    if image.ndim == 3 and image.shape[2] == 3:
        return to_luma_chroma(image)
    raise DimensionError(f"expected a 2-D luma image or an (H, W, 3) raster, got {image.shape}")


def run_enhance(config: RunConfig, image) -> EnhanceResult:
    timer = instrument.StageTimer()
    report = DiagnosticsReport()
    with instrument.counting() as counts:
        with _stage("load", timer):
            luma, chroma = _split_input(image)
            _check_depth(luma.shape, config.depth)
        with _stage("foveate", timer):
            model = config.model(luma.shape)
            max_level = config.depth - 3
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                if chroma is None:
                    base, rel = foveate(luma, model, max_level)
                    chroma_b = None
                else:
                    base, rel, chroma_b = foveate(luma, model, max_level, chroma)
            for w in caught:
                warnings.warn(w.message, w.category, stacklevel=2)
            report.meta["clamped"] = rel.clamped
        acc = {}
        fields_out = {}
        levels = [r for r in rel.distinct() if r >= 2] if config.grade != "foveated" else []
        for r in levels:
            with _stage("analysis", timer):
                stack = stack_from_foveated(base, r, config.depth)
                try:
                    fit = estimate_spectrum_slope(stack)
                except DegenerateSpectrumError:
                    report.meta.setdefault("untextured_levels", []).append(r)
                    continue
                report.slope_fits[str(r)] = fit.to_dict()
                ref = analyze_reliable(stack, r)
            with _stage("extrapolation", timer):
                flist = extrapolate_all(ref, fit, r - 1, stack.shapes, config.remeasure_phi)
                fields_out[r] = flist
            with _stage("synthesis", timer):
                targets = {f.level: fit.predicted_std(f.level) for f in flist}
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", EmptyBandWarning)
                    bands = synthesize_missing_bands(flist, targets, config.density, config.seed,
                                                     config.grade, config.layout)
                for lvl, b in bands.items():
                    mask = rel.at_level(lvl) == r
                    acc[lvl] = acc.get(lvl, 0.0) + np.where(mask, b, 0.0)
        with _stage("compose", timer):
            bands_full = {lvl: band_to_full(b, lvl, luma.shape) for lvl, b in acc.items()}
            base_out = base
            if config.contrast_mode == "simple" and config.contrast_strength > 0:
                base_out = contrast_enhance_simple(base, config.contrast_strength, rel)
            out_luma = compose_luma(base_out, bands_full, rel)
            rgb = from_luma_chroma(out_luma, chroma_b) if chroma_b is not None else None
    synth_full = out_luma - base_out
    n_bands = config.depth
    report.histogram = band_histogram(base, synth_full, n_bands)
    rendered_e = band_energy(base, n_bands)
    synth_e = band_energy(synth_full, n_bands)
    report.band_variance = [{"band": k, "rendered": rendered_e[k], "synthesized": synth_e[k]}
                            for k in range(n_bands)]
    report.peak_multiplicity = {str(l): peak_multiplicity(b) for l, b in acc.items()}
    report.timings = {k: float(v) for k, v in timer.timings.items()}
    report.counts = dict(counts)
    report.meta.update({"grade": config.grade, "seed": config.seed, "density": config.density,
                        "layout": config.layout, "depth": config.depth, "backend": _backend.name(),
                        "reliable_levels": rel.distinct(), "shape": list(luma.shape)})
    report.check_finite()
    return EnhanceResult(rgb, out_luma, base, rel, bands_full, acc, fields_out, report)


def run_compare(config: RunConfig, image, grades) -> dict:
    """One result per grade, all from the same foveated base and seed."""
    grades = list(grades)
    if len(grades) < 2:
        raise ConfigError("compare needs at least two grades")
    out = {}
    for g in grades:
        if g not in out:
            out[g] = run_enhance(config.with_overrides(grade=g), image)
    return out


# -- analyze / diagnose -----------------------------------------------------------

def analyze_image(luma, depth: int, level: int) -> ParameterFields:
    stack = build_level_stack(luma, depth)
    if not 0 <= level < depth:
        raise ConfigError(f"level {level} outside depth {depth}")
    return analyze_level(stack.gaussian[level], KERNELS, level)


def spectrum_fit_of(luma, depth: int, first_level: int = 0) -> SlopeFit:
    stack = build_level_stack(luma, depth, [k >= first_level for k in range(depth)])
    return estimate_spectrum_slope(stack)


# -- benchmark --------------------------------------------------------------------

def _best_of(fn, repeats: int) -> float:
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(size: int = 512, density=2, layout: str = "exact", seed: int = 0, repeats: int = 3,
          naive: bool = True, enhance_size: int | None = None) -> dict:
    """Per-stage timings on a random band of ``size x size`` plus, optionally,
    an end-to-end enhance at ``enhance_size``."""
    if size < 256:
        raise ConfigError(f"bench size must be >= 256 (slope fit needs two bands above level 2), got {size}")
    rng = np.random.default_rng(seed)
    level = rng.standard_normal((size, size))
    out: dict = {"size": size, "density": density, "layout": layout, "backend": _backend.name(),
                 "timings": {}, "counts": {}}
    t = out["timings"]
    with instrument.counting() as c:
        basis_responses(level)
    out["counts"]["conv1d_1x9_per_layer"] = c.get("conv1d_1x9", 0)
    t["analysis_convolutions"] = _best_of(lambda: basis_responses(level), repeats)
    imap = generate_impulse_map(level.shape, density, seed)
    t0 = time.perf_counter()
    bank = build_submap_bank(imap, KERNELS, layout)
    t["submap_precompute"] = time.perf_counter() - t0
    n = len(imap)
    wts = impulse_weights(rng.uniform(0, np.pi, n), rng.uniform(-np.pi, np.pi, n), rng.random(n))
    with instrument.counting() as c:
        accelerated_splat(bank, wts)
    out["counts"]["combine_passes_per_band"] = c.get("combine_pass", 0)
    out["counts"]["submaps"] = bank.n_groups
    out["counts"]["impulses"] = n
    t["runtime_combination"] = _best_of(lambda: accelerated_splat(bank, wts), repeats)
    if naive:
        t["naive_splat"] = _best_of(lambda: naive_splat(imap, wts), 1)
        out["speedup_vs_naive"] = t["naive_splat"] / t["runtime_combination"]
    # extrapolation cost on a smooth random field
    r = 2
    stack = build_level_stack(level, 5, [k >= r for k in range(5)])
    fit = estimate_spectrum_slope(stack)
    ref = analyze_reliable(stack, r)
    t["extrapolation"] = _best_of(lambda: extrapolate_all(ref, fit, r - 1, stack.shapes), repeats)
    out["reference_counts"] = {"conv1d_1x9_per_layer": 14, "combine_passes": {"1x1": 64, "2x2": 16}}
    if enhance_size:
        img = np.clip(0.5 + 0.1 * rng.standard_normal((enhance_size, enhance_size)), 0, 1)
        # steep blur line so most of the frame needs synthesized bands
        cfg = RunConfig(depth=min(6, max_depth((enhance_size,) * 2)), seed=seed, density=density, layout=layout, threshold_slope=1.0)
        run_enhance(cfg, img)       # warm the bank cache
        t0 = time.perf_counter()
        res = run_enhance(cfg, img)
        t["enhance_end_to_end"] = time.perf_counter() - t0
        out["enhance_stage_timings"] = res.report.timings
    return out

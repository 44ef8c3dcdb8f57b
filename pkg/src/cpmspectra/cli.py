"""
``cpm-spectra`` command-line tool.

    cpm-spectra run <config | --preset NAME> [--mode M] [--out DIR]
                    [--backend direct|poly] [--seed S] [--absolute]
    cpm-spectra validate <config | --preset NAME>
    cpm-spectra presets

Exit status: 0 on success, 1 when a conservation or comparison check
fails, 2 for an invalid config, 3 when the state-machine analysis reports a
structure or classification failure.
"""

import argparse
import json
import sys
import traceback
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .chain import build_polyphase, cyclo_period, stationary_distribution
from .config import BACKENDS, MODES, PRESETS, load_config, load_preset
from .errors import (ClassificationError, ConfigError, CpmError, InvalidFormatError,
                     NearSingularResolventError, StructureViolationError)
from .machine import build_machine, format_tpm
from .oracle import simulate_psd
from .spectrum import closed_form_psd, series_psd_oracle

POWER_TOLERANCE = 1e-3
IMAG_TOLERANCE = 1e-9
NEGATIVE_TOLERANCE = -1e-9
CHECK_GRID = (-4.0, 4.0, 2001)
COMPARE_FLOOR_DB = -40.0


@dataclass(frozen=True)
class Finding:
    level: str          # "info" or "warning"
    message: str

    def __str__(self):
        return f"{self.level}: {self.message}"


def validate(cfg):
    """Dry-run sizing of a config; never raises for oversize formats."""
    fmt = cfg.fmt
    M, L, p = fmt.M, fmt.L, fmt.p
    nh = fmt.indices.period
    nc = cyclo_period(fmt.indices)
    odd = sum(r % 2 for r in fmt.indices.numerators)
    i_full = 2 * p * M ** (L - 1)
    i0 = i_full // 2
    n0 = M ** (nc + L - 1)
    words = M ** nc
    mem = 16 * (n0 * nc * 2 + nc * M ** L * cfg.points + 3 * 2 ** 22) + 16 * i0 ** 3
    out = [
        Finding("info", f"format {fmt.describe()}"),
        Finding("info", f"p = {p}, numerators r = {list(fmt.indices.numerators)}"),
        Finding("info", f"N_h = {nh}, odd r per period = {odd}, N_c = {nc}"),
        Finding("info", f"states I = {i_full}, per class I_0 = {i0}"),
        Finding("info", f"input words per block = {words}, output words N_0 = {n0}"),
        Finding("info", f"estimated peak memory {mem / 2 ** 20:.0f} MiB"),
    ]
    if n0 > cfg.word_budget:
        out.append(Finding("warning", f"N_0 = M^(N_c+L-1) = {n0} exceeds the word budget "
                                      f"{cfg.word_budget}; the run would be refused"))
    if cfg.backend == "poly" and i0 > 128:
        out.append(Finding("warning", f"poly backend stores I_0^3 = {i0 ** 3} adjugate entries"))
    return out


def main_lobe(psd):
    """Mask of the contiguous region around the peak bounded by the first local minima."""
    k = int(np.argmax(psd))
    lo = k
    while lo > 0 and psd[lo - 1] <= psd[lo]:
        lo -= 1
    hi = k
    while hi < psd.size - 1 and psd[hi + 1] <= psd[hi]:
        hi += 1
    mask = np.zeros(psd.size, dtype=bool)
    mask[lo:hi + 1] = True
    return mask


def _db_dev(a, b):
    return np.abs(10 * np.log10(np.maximum(a, 1e-300) / np.maximum(b, 1e-300)))


def _conservation(machine, cfg, result):
    if cfg.fmin <= CHECK_GRID[0] and cfg.fmax >= CHECK_GRID[1]:
        check = result
    else:
        check = closed_form_psd(machine, np.linspace(*CHECK_GRID), cfg.backend,
                                cfg.quadrature_order)
    return check.total_power()


def _checks(result, total):
    failures = []
    if abs(total - 1.0) > POWER_TOLERANCE:
        failures.append(f"total power {total:.6f} differs from 1 by more than {POWER_TOLERANCE}")
    if result.meta["imag_residual"] > IMAG_TOLERANCE:
        failures.append(f"imaginary residual {result.meta['imag_residual']:.3g}")
    if result.meta["min_value"] < NEGATIVE_TOLERANCE:
        failures.append(f"negative PSD value {result.meta['min_value']:.3g}")
    return failures


def _compare_sim(cf_machine, cfg, est):
    sel = (est.grid >= cfg.fmin) & (est.grid <= cfg.fmax)
    grid = est.grid[sel]
    ref = closed_form_psd(cf_machine, grid, cfg.backend, cfg.quadrature_order)
    keep = ref.psd_db >= COMPARE_FLOOR_DB
    if ref.lines:
        width = 4 * (grid[1] - grid[0])
        for ln in ref.lines:
            keep &= np.abs(grid - ln.freq) > width
    dev = _db_dev(est.psd[sel], ref.psd)
    lobe = main_lobe(ref.psd) & keep
    return {"max_db_within_40db": float(dev[keep].max()),
            "max_db_main_lobe": float(dev[lobe].max()),
            "bins_compared": int(keep.sum())}


def run(cfg, out_dir, absolute=False, stream=None):
    """Execute a run; returns the exit status."""
    stream = sys.stdout if stream is None else stream
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fmt = cfg.fmt
    say = lambda msg: print(msg, file=stream)

    machine = build_polyphase(fmt, cfg.offset, cfg.word_budget)
    stationary_distribution(machine)
    say(f"format: {fmt.describe()}")
    say(f"N_c = {machine.n_c}, I_0 = {machine.i0}, N_0 = {machine.n_outputs}, p = {machine.p}")

    diag = {"format": fmt.describe(), "q": fmt.q.tolist(), "N_c": machine.n_c,
            "I_0": machine.i0, "N_0": machine.n_outputs, "p": machine.p,
            "mode": cfg.mode, "backend": cfg.backend}
    failures = []
    grid = cfg.grid
    cf = None
    if cfg.mode in ("closed-form", "compare"):
        cf = closed_form_psd(machine, grid, cfg.backend, cfg.quadrature_order)
        cf.to_csv(out / "spectrum.csv", absolute)
        if cf.lines:
            cf.lines_to_csv(out / "lines.csv")
        total = _conservation(machine, cfg, cf)
        say(f"total power over fT in [{CHECK_GRID[0]:g}, {CHECK_GRID[1]:g}] = {total:.6f}")
        failures += _checks(cf, total)
        diag["closed_form"] = {k: v for k, v in cf.meta.items() if k != "format"}
        diag["closed_form"]["total_power_check"] = total
        diag["lines"] = [{"k": ln.k, "fT": ln.freq, "weight": ln.weight} for ln in cf.lines]
    if cfg.mode in ("series-oracle", "compare"):
        se = series_psd_oracle(machine, grid, cfg.truncation, cfg.quadrature_order)
        se.to_csv(out / "series.csv", absolute)
        diag["series"] = {"truncation": cfg.truncation}
        if cf is not None:
            rel = float(np.abs(se.psd - cf.psd).max() / cf.psd.max())
            diag["series"]["max_relative_to_peak"] = rel
            say(f"closed form vs series (N={cfg.truncation}): max deviation {rel:.3g} of peak")
    if cfg.mode in ("simulate", "compare"):
        est = simulate_psd(fmt, cfg.welch)
        est.to_csv(out / "simulated.csv", absolute)
        est.write_sidecar(out / "simulated.json")
        diag["simulation"] = {"segments": est.n_segments, "seed": cfg.welch.seed}
        if cf is not None:
            cmp = _compare_sim(machine, cfg, est)
            diag["simulation"].update(cmp)
            say(f"closed form vs Welch: main lobe {cmp['max_db_main_lobe']:.3f} dB, "
                f"within 40 dB of peak {cmp['max_db_within_40db']:.3f} dB")
    if cfg.mode == "compare":
        lines = [f"{k}: {v}" for k, v in diag.items() if not isinstance(v, (dict, list))]
        for sec in ("series", "simulation"):
            for k, v in diag.get(sec, {}).items():
                lines.append(f"{sec}.{k}: {v}")
        (out / "report.txt").write_text("\n".join(lines) + "\n")

    diag["failures"] = failures
    with open(out / "diagnostics.json", "w") as fh:
        json.dump(diag, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for msg in failures:
        say(f"CHECK FAILED: {msg}")
    return 1 if failures else 0


def _dump_failure(cfg, exc, out_dir, stream):
    text = [f"error: {type(exc).__name__}: {exc}", f"format: {cfg.fmt.describe()}"]
    try:
        pti = build_machine(cfg.fmt)
        for n in range(cfg.fmt.indices.period):
            text += [f"pi_{n} (even phase states first):", format_tpm(pti, n)]
    except CpmError as inner:
        text.append(f"state machine unavailable: {inner}")
    text.append(traceback.format_exc())
    body = "\n".join(text)
    print(body, file=stream)
    try:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "failure.txt").write_text(body + "\n")
    except OSError:
        pass


def _load(args):
    if (args.config is None) == (args.preset is None):
        raise ConfigError("give exactly one of a config path or --preset NAME")
    return load_preset(args.preset) if args.preset else load_config(args.config)


def build_parser():
    ap = argparse.ArgumentParser(prog="cpm-spectra",
                                 description="Closed-form PSD of single-h and multi-h CPM.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="compute spectra")
    r.add_argument("config", nargs="?")
    r.add_argument("--preset", choices=sorted(PRESETS))
    r.add_argument("--mode", choices=MODES)
    r.add_argument("--out", default=".")
    r.add_argument("--backend", choices=BACKENDS)
    r.add_argument("--seed", type=int)
    r.add_argument("--absolute", action="store_true",
                   help="write absolute dB instead of dB relative to the peak")
    v = sub.add_parser("validate", help="dry-run sizing checks")
    v.add_argument("config", nargs="?")
    v.add_argument("--preset", choices=sorted(PRESETS))
    sub.add_parser("presets", help="list built-in presets")
    return ap


def main(argv=None, stream=None):
    stream = sys.stdout if stream is None else stream
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        for name, text in PRESETS.items():
            print(f"{name}: {' '.join(text.split())}", file=stream)
        return 0
    try:
        cfg = _load(args)
        if args.command == "validate":
            for f in validate(cfg):
                print(f, file=stream)
            return 0
        cfg = cfg.with_overrides(mode=args.mode, backend=args.backend, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg, args.out, args.absolute, stream)
    except (InvalidFormatError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (StructureViolationError, ClassificationError, NearSingularResolventError) as exc:
        _dump_failure(cfg, exc, args.out, sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

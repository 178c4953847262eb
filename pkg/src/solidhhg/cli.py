"""Command-line entry point: ``solidhhg <command> [options]``.

Exit status: 0 success, 1 failure (bad config, numerical error, failed
self-test), 2 bad command line, 3 finished but with warnings recorded in the
manifest (for example an unconverged plane-wave basis).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .dynamics import propagate
from .errors import SolidHHGError, UsageError
from .interference import KSubsetSpec, Simulation, amplitude_scan, cutoff_buildup_scan, run_subset_experiment, spectral_support
from . import plotting, report
from .units import au_to_gvm

log = logging.getLogger("solidhhg")

THREADS_ENV = "SOLIDHHG_THREADS"
EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_WARNINGS = 0, 1, 2, 3


def default_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    return max(1, n)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="TOML or JSON config file")
    p.add_argument("--out", metavar="DIR", help="output directory (overrides output.dir)")
    p.add_argument("--threads", metavar="N", type=int, default=None,
                   help=f"worker threads for k-point propagation (default: ${THREADS_ENV} or 1)")
    p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[], dest="overrides",
                   help="override a config key, e.g. --set pulse.F0='4 GV/m' (repeatable)")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p.add_argument("--dump-k", metavar="INDEX", type=int, action="append", default=[],
                   help="also write rho(t) for this k index to trajectory_k<INDEX>.csv (repeatable)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="solidhhg",
                                     description="High-harmonic generation in a 1D periodic solid.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bands", help="band structure and gaps only")
    _common(p)
    p = sub.add_parser("run", help="full-zone run: current, spectrum, peaks")
    _common(p)
    p = sub.add_parser("subset", help="restrict the k sum (single k, +-k pair, interval or list)")
    _common(p)
    p.add_argument("--mode", choices=["single", "pair", "interval", "list", "full"])
    p.add_argument("--k-index", type=int)
    p.add_argument("--fraction", type=float, help="interval half-width in units of pi/a")
    p.add_argument("--indices", help="comma-separated k indices for --mode list")
    p = sub.add_parser("buildup", help="cutoff versus symmetric k-interval width")
    _common(p)
    p.add_argument("--fractions", help="comma-separated interval fractions in (0, 1]")
    p = sub.add_parser("scan-f0", help="cutoff versus peak field with a linear fit")
    _common(p)
    p.add_argument("--F0", nargs="+", metavar="FIELD", help='peak fields, e.g. "1 GV/m" "1.5 GV/m"')
    p = sub.add_parser("selftest", help="oracle checks of solver, propagator and spectrum")
    _common(p)
    p.add_argument("--quick", action="store_true", help="shorter pulse for the propagator check")
    return parser


def _overrides(args) -> list[str]:
    out = list(args.overrides)
    if args.out:
        out.append(f'output.dir="{args.out}"')
    cmd = args.command
    if cmd == "subset":
        if args.mode:
            out.append(f'experiment.mode="{args.mode}"')
        if args.k_index is not None:
            out.append(f"experiment.k_index={args.k_index}")
        if args.fraction is not None:
            out.append(f"experiment.fraction={args.fraction!r}")
        if args.indices:
            out.append(f"experiment.indices=[{args.indices}]")
    elif cmd == "buildup" and args.fractions:
        out.append(f"experiment.fractions=[{args.fractions}]")
    elif cmd == "scan-f0" and args.F0:
        items = ", ".join(f'"{v}"' if not _is_number(v) else v for v in args.F0)
        out.append(f"experiment.F0_list=[{items}]")
    return out


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


class Run:
    """Bookkeeping for one output directory."""

    def __init__(self, cfg: RunConfig, command: str, threads: int, plots: bool, dump_k=()):
        self.cfg = cfg
        self.command = command
        self.threads = threads
        self.plots = plots
        self.out = Path(cfg.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []
        self.dump_k = tuple(dump_k)

    def csv(self, name, *a, **kw):
        report.write_csv(self.out / name, self.cfg, *a, **kw)
        self.files.append(name)

    def add(self, path):
        self.files.append(Path(path).name)

    def figure(self, fn, name, *a, **kw):
        if self.plots:
            self.add(fn(*a, path=self.out / name, **kw))


def _write_spectrum_outputs(run: Run, sim: Simulation, res, title: str):
    cfg = run.cfg
    run.add(report.write_current(run.out / "current.csv", cfg, res.trace, sim.pulse))
    run.add(report.write_spectrum(run.out / "spectrum.csv", cfg, res.spectrum))
    payload = report.peaks_payload(res.peaks, res.cutoff, spectral_support(res.peaks))
    payload["k_indices"] = list(res.indices)
    run.add(report.write_json(run.out / "peaks.json", cfg, payload))
    run.figure(plotting.plot_spectrum, "spectrum.png", res.spectrum, title=title)


def _bands_outputs(run: Run, sim: Simulation):
    run.add(report.write_bands(run.out / "bands.csv", run.cfg, sim.bands))
    run.figure(plotting.plot_bands, "bands.png", sim.bands)
    if run.dump_k and run.command != "bands":
        bad = [i for i in run.dump_k if not 0 <= i < sim.kgrid.n_k]
        if bad:
            raise UsageError(f"--dump-k indices {bad} are outside the grid of {sim.kgrid.n_k} points")
        prop = propagate(sim.bands, sim.momentum, sim.pulse, run.cfg.relaxation, sim.grid, run.dump_k, record=True)
        for col, i in enumerate(prop.indices):
            run.add(report.write_trajectory(run.out / f"trajectory_k{i}.csv", run.cfg, sim.t,
                                            prop.trajectories[:, col], int(i), sim.kgrid.k[i]))


def cmd_bands(run: Run) -> dict:
    sim = Simulation(run.cfg, run.threads)
    _bands_outputs(run, sim)
    gaps = report.gap_summary(sim.bands)
    run.add(report.write_json(run.out / "gaps.json", run.cfg, gaps))
    print(f"valence band {gaps['valence_index']}, direct gap {gaps['valence_gap_eV']:.4f} eV")
    return sim.diagnostics.as_dict()


def cmd_run(run: Run, subset: KSubsetSpec | None = None) -> dict:
    sim = Simulation(run.cfg, run.threads)
    _bands_outputs(run, sim)
    subset = subset or KSubsetSpec.full_zone()
    res = run_subset_experiment(sim, subset)
    _write_spectrum_outputs(run, sim, res, f"{subset.mode.value}: {len(res.indices)} k-points")
    print(f"{len(res.indices)} k-points, cutoff {res.cutoff}, "
          f"strongest harmonic h = {int(res.peaks.orders[np.argmax(res.peaks.heights)])}")
    return sim.diagnostics.as_dict()


def cmd_subset(run: Run) -> dict:
    return cmd_run(run, KSubsetSpec.from_config(run.cfg))


def cmd_buildup(run: Run) -> dict:
    sim = Simulation(run.cfg, run.threads)
    _bands_outputs(run, sim)
    rows = cutoff_buildup_scan(sim)
    table = []
    for r in rows:
        ratios = report.even_odd_ratios(r.result.peaks, (2, 4))
        table.append([r.fraction, len(r.result.indices), np.nan if r.cutoff is None else r.cutoff,
                      spectral_support(r.result.peaks), max(ratios.values()) if ratios else np.nan,
                      float(r.full_zone)])
    run.csv("buildup.csv", "cutoff buildup over symmetric k intervals",
            ["fraction", "n_k_points", "cutoff", "spectral_support", "max_even_odd_ratio", "full_zone"], table,
            {"full_zone_row": rows[-1].label if rows[-1].full_zone else "absent"})
    order = rows[0].result.spectrum.order
    run.csv("buildup_spectra.csv", "subset spectra", ["harmonic_order"] + [f"S_f{r.fraction:g}" for r in rows],
            np.column_stack([order] + [r.result.spectrum.S for r in rows]))
    last = rows[-1]
    _write_spectrum_outputs(run, sim, last.result, last.label)
    run.figure(plotting.plot_buildup, "buildup.png", rows)
    for r in rows:
        print(f"fraction {r.fraction:5.2f}: cutoff {r.cutoff}, support {spectral_support(r.result.peaks)}"
              + (f"  [{r.label}]" if r.full_zone else ""))
    return sim.diagnostics.as_dict()


def cmd_scan(run: Run) -> dict:
    cfg = run.cfg
    if not cfg.experiment.F0_list:
        raise SolidHHGError("scan-f0 needs field values: --F0 or experiment.F0_list")
    rows, fit = amplitude_scan(cfg, workers=run.threads)
    data = [[r.F0, au_to_gvm(r.F0), np.nan if r.cutoff is None else r.cutoff, float(r.flagged)] for r in rows]
    run.csv("scan.csv", "cutoff versus peak field", ["F0_au", "F0_GV_per_m", "cutoff", "flagged"], data)
    run.add(report.write_json(run.out / "fit.json", cfg, {**fit.as_dict(), "x": "F0_au", "y": "cutoff"}))
    run.figure(plotting.plot_scan, "scan.png", rows, fit)
    run.figure(plotting.plot_spectra_overlay, "scan_spectra.png", [r.result.spectrum for r in rows],
               [f"{au_to_gvm(r.F0):g} GV/m" for r in rows])
    for r in rows:
        print(f"F0 = {au_to_gvm(r.F0):g} GV/m: cutoff {r.cutoff}" + ("  [flagged]" if r.flagged else ""))
    r2 = "undefined" if fit.r_squared is None else f"{fit.r_squared:.4f}"
    print(f"fit: slope {fit.slope}, intercept {fit.intercept}, R^2 {r2}")
    diag = {"fit": fit.as_dict()}
    if fit.degenerate:
        diag["warnings"] = ["linear fit is degenerate (fewer than two defined cutoffs)"]
    return diag


def cmd_selftest(run: Run, quick: bool) -> dict:
    from .selftest import run_selftest

    results = run_selftest(run.cfg, quick=quick)
    run.add(report.write_json(run.out / "selftest.json", run.cfg, {"checks": [r.as_dict() for r in results]}))
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.value:.3e} (tolerance {r.tolerance:.0e})")
    failed = [r.name for r in results if not r.passed]
    return {"failed_checks": failed}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        threads = args.threads if args.threads is not None else default_threads()
        cfg = load_config(args.config, _overrides(args))
    except SolidHHGError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    run = Run(cfg, args.command, threads, not args.no_plots, args.dump_k)
    start = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            if args.command == "bands":
                diag = cmd_bands(run)
            elif args.command == "run":
                diag = cmd_run(run)
            elif args.command == "subset":
                diag = cmd_subset(run)
            elif args.command == "buildup":
                diag = cmd_buildup(run)
            elif args.command == "scan-f0":
                diag = cmd_scan(run)
            else:
                diag = cmd_selftest(run, args.quick)
        except SolidHHGError as exc:
            print(f"{args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
            report.write_manifest(run.out / "manifest.json", cfg, args.command, time.perf_counter() - start,
                                  run.files, {"error": f"{type(exc).__name__}: {exc}"}, threads, "failed")
            return EXIT_FAILURE
    warned = list(diag.get("warnings", [])) + [f"{w.category.__name__}: {w.message}" for w in caught]
    diag["warnings"] = warned
    failed = bool(diag.get("failed_checks"))
    status = "failed" if failed else ("warnings" if warned else "ok")
    run.files.append("manifest.json")
    report.write_manifest(run.out / "manifest.json", cfg, args.command, time.perf_counter() - start,
                          run.files, diag, threads, status)
    for w in warned:
        print(f"warning: {w}", file=sys.stderr)
    print(f"outputs in {run.out}")
    if failed:
        return EXIT_FAILURE
    return EXIT_WARNINGS if warned else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

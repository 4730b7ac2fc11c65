"""Command line front end.

Subcommands:
  simulate       full pipeline (calibration, interferometry, correlation, prediction)
  pairsource     jitter calibration run only
  interferogram  Michelson scan and envelope extraction only
  correlate      histogram externally supplied tag files
  predict        rescale a jitter curve CSV to a squared-envelope area
  compare        peak statistics of a g2 CSV against a prediction CSV
  report         print embedded default / reference configurations
  selftest       run the per-module invariant checks

Exit codes: 0 success, 1 usage or configuration error, 2 runtime or data error.

CSV columns written by the tools:
  histogram.csv      delay_ps, counts
  g2.csv             delay_ps, g2, sigma
  jitter.csv         delay_ps, value            (unit peak)
  envelope.csv       delay_ps, envelope         (unit peak |g1|)
  interferogram.csv  position_mm, counts
  prediction.csv     delay_ps, excess, g2
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import bunching, correlate, pipeline, tagfile
from .config import ConfigError, ExperimentConfig, dump_config, load_config, reference_config
from .selftest import selftest
from .units import NS, PS, S


class UsageError(ValueError):
    pass


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="TOML configuration file")
    p.add_argument("--seed", type=int, metavar="N", help="override run.master_seed")
    p.add_argument("--segments", type=int, metavar="K", help="override run.segments")
    p.add_argument("--threads", type=int, metavar="N",
                   help="advisory worker count (segments are deterministic regardless)")
    p.add_argument("--out", metavar="DIR", default="out", help="output directory")


def _load_cfg(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.run.master_seed = args.seed
    if getattr(args, "segments", None) is not None:
        if args.segments < 1:
            raise UsageError("--segments must be >= 1")
        cfg.run.segments = args.segments
    return cfg


def _read_csv(path, columns):
    data = np.genfromtxt(path, delimiter=",", names=True)
    for col in columns:
        if data.dtype.names is None or col not in data.dtype.names:
            raise tagfile.TagFileError(f"{path}: missing column '{col}'")
    return data


def _cmd_simulate(args) -> int:
    cfg = _load_cfg(args)
    result = pipeline.run_pipeline(cfg, args.out)
    print(result.report_text)
    for path in result.files:
        print(f"wrote {path}")
    return 0


def _cmd_pairsource(args) -> int:
    cfg = _load_cfg(args)
    jitter, hist = pipeline.calibrate_jitter(cfg)
    os.makedirs(args.out, exist_ok=True)
    jpath = os.path.join(args.out, "jitter.csv")
    hpath = os.path.join(args.out, "histogram.csv")
    bunching.write_jitter_csv(jitter, jpath)
    correlate.write_histogram_csv(hist, hpath)
    print(f"jitter curve area: {jitter.area_fs / PS:.4f} ps")
    print(f"wrote {jpath}\nwrote {hpath}")
    return 0


def _cmd_interferogram(args) -> int:
    cfg = _load_cfg(args)
    cfg.prediction.use_analytic_envelope = False
    area_fs, env, ifg = pipeline.measure_envelope(cfg)
    os.makedirs(args.out, exist_ok=True)
    ipath = os.path.join(args.out, "interferogram.csv")
    epath = os.path.join(args.out, "envelope.csv")
    pipeline._write_interferogram_csv(ifg, ipath)
    bunching.write_envelope_csv(env, epath)
    print(f"peak visibility: {env.vmax_raw:.4f}")
    print(f"squared-envelope area: {area_fs / PS:.4f} ps")
    print(f"wrote {ipath}\nwrote {epath}")
    return 0


def _cmd_correlate(args) -> int:
    a = tagfile.read_tags(args.tags_a)
    b = tagfile.read_tags(args.tags_b)
    hist = correlate.cross_correlate(a, b, args.bin_width_ps * PS, args.max_lag_ns * NS)
    os.makedirs(args.out, exist_ok=True)
    hpath = os.path.join(args.out, "histogram.csv")
    correlate.write_histogram_csv(hist, hpath)
    print(f"{int(hist.counts.sum())} coincidences in {len(hist.counts)} bins "
          f"over {hist.total_time_fs / S:.3f} s")
    print(f"wrote {hpath}")
    if args.plateau_lo_ns is not None:
        g2 = correlate.normalize(hist, args.plateau_lo_ns * NS, args.plateau_hi_ns * NS)
        gpath = os.path.join(args.out, "g2.csv")
        correlate.write_g2_csv(g2, gpath)
        print(f"plateau counts per bin: {g2.plateau_mean:.2f}")
        print(f"wrote {gpath}")
    return 0


def _cmd_predict(args) -> int:
    data = _read_csv(args.jitter_csv, ("delay_ps", "value"))
    delays = np.atleast_1d(data["delay_ps"]) * PS
    values = np.atleast_1d(data["value"]).astype(float)
    pitch = abs(delays[1] - delays[0])
    jitter = bunching.JitterCurve(
        delays_fs=delays, values=values, area_fs=float(values.sum() * pitch)
    )
    pred = bunching.predict_smeared_peak(jitter, args.g1sq_area_ps * PS, args.shift_ps * PS)
    os.makedirs(args.out, exist_ok=True)
    ppath = os.path.join(args.out, "prediction.csv")
    bunching.write_prediction_csv(pred, ppath)
    print(f"jitter curve area: {jitter.area_fs / PS:.4f} ps")
    print(f"predicted peak height: {pred.peak_height:.6g}")
    print(f"wrote {ppath}")
    return 0


def _cmd_compare(args) -> int:
    gd = _read_csv(args.g2_csv, ("delay_ps", "g2", "sigma"))
    pd = _read_csv(args.prediction_csv, ("delay_ps", "excess"))
    delays = np.atleast_1d(gd["delay_ps"]) * PS
    est = correlate.G2Estimate(
        delays_fs=delays,
        g2=np.atleast_1d(gd["g2"]).astype(float),
        sigma=np.atleast_1d(gd["sigma"]).astype(float),
        plateau_mean=float("nan"),
        bin_width_fs=abs(delays[1] - delays[0]),
    )
    excess = np.interp(delays, np.atleast_1d(pd["delay_ps"]) * PS,
                       np.atleast_1d(pd["excess"]), left=0.0, right=0.0)
    peak = correlate.peak_stats(est, args.peak_lo_ps * PS, args.peak_hi_ps * PS)
    window = (delays >= args.peak_lo_ps * PS) & (delays <= args.peak_hi_ps * PS)
    resid = (est.g2[window] - (1.0 + excess[window])) / est.sigma[window]
    print(f"measured peak height: {peak.height_excess:.6g}")
    print(f"measured excess area: {peak.area_excess_fs / PS:.4f} ps")
    print(f"measured centroid: {peak.centroid_fs / PS:.2f} ps")
    print(f"significance: {peak.significance:.2f} sigma")
    print(f"predicted peak height: {float(excess.max()):.6g}")
    print(f"residuals in window (sigma units): mean {resid.mean():.3f}, "
          f"rms {math.sqrt(float((resid**2).mean())):.3f}")
    return 0


def _cmd_report(args) -> int:
    if args.defaults:
        print(dump_config(ExperimentConfig()))
    if args.reference:
        print(dump_config(reference_config()))
        print(pipeline.reference_prediction_report())
    return 0


def _cmd_selftest(args) -> int:
    results = selftest(verbose=True)
    failed = sum(1 for _, ok, _ in results if not ok)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hbtsim",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, doc in (
        ("simulate", _cmd_simulate, "run the full pipeline and write the artifact set"),
        ("pairsource", _cmd_pairsource, "jitter calibration with a degenerate pair source"),
        ("interferogram", _cmd_interferogram, "Michelson scan and envelope extraction"),
    ):
        p = sub.add_parser(name, help=doc)
        _add_common(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("correlate", help="cross-correlate two tag files")
    p.add_argument("tags_a")
    p.add_argument("tags_b")
    p.add_argument("--bin-width-ps", type=float, default=82.2)
    p.add_argument("--max-lag-ns", type=float, default=10.0)
    p.add_argument("--plateau-lo-ns", type=float, help="also write g2.csv, plateau start")
    p.add_argument("--plateau-hi-ns", type=float, default=10.0)
    p.add_argument("--out", metavar="DIR", default="out")
    p.set_defaults(fn=_cmd_correlate)

    p = sub.add_parser("predict", help="area-rescale a jitter CSV into a predicted peak")
    p.add_argument("--jitter-csv", required=True)
    p.add_argument("--g1sq-area-ps", type=float, required=True,
                   help="area of |g1|^2 in ps (e.g. from the interferogram step)")
    p.add_argument("--shift-ps", type=float, default=0.0)
    p.add_argument("--out", metavar="DIR", default="out")
    p.set_defaults(fn=_cmd_predict)

    p = sub.add_parser("compare", help="peak statistics of a g2 CSV versus a prediction CSV")
    p.add_argument("--g2-csv", required=True)
    p.add_argument("--prediction-csv", required=True)
    p.add_argument("--peak-lo-ps", type=float, default=-300.0)
    p.add_argument("--peak-hi-ps", type=float, default=300.0)
    p.set_defaults(fn=_cmd_compare)

    p = sub.add_parser("report", help="print embedded configurations and the analytic prediction")
    p.add_argument("--defaults", action="store_true", help="print the desk-scale default config")
    p.add_argument("--reference", action="store_true",
                   help="print the reference experiment config and prediction")
    p.set_defaults(fn=_cmd_report)

    p = sub.add_parser("selftest", help="run the per-module invariant checks")
    p.set_defaults(fn=_cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    if args.fn is _cmd_report and not (args.defaults or args.reference):
        print("error: report requires --defaults and/or --reference", file=sys.stderr)
        return 1
    try:
        return args.fn(args)
    except (ConfigError, UsageError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (tagfile.TagFileError, pipeline.PipelineError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

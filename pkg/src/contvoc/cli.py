"""Command-line interface: analyze, synth, copysynth, eval, ecdf, train-toy."""

from __future__ import annotations

import argparse
import csv
import os
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import acoustic_model, metrics, plots
from .archive import (MANIFEST_NAME, ArchiveError, load_archive, remask_archive,
                      save_archive)
from .mask import CONVENTIONS
from .signal_io import SignalIOError, load_waveform, save_waveform
from .synthesis import DEFAULT_NOISE_SEED
from .vocoder import VocoderConfig, analyze, resynthesize


class CommandError(Exception):
    """Fatal CLI failure; message goes to stderr, exit status 1."""


def _fmt9(value: float) -> str:
    return f"{float(value):.9g}"


def _add_analysis_flags(p: argparse.ArgumentParser) -> None:
    defaults = VocoderConfig()
    p.add_argument("--sample-rate", type=int, default=None,
                   help="expected input sample rate; mismatch is an error")
    p.add_argument("--hop-ms", type=float, default=defaults.hop_ms)
    p.add_argument("--window-ms", type=float, default=defaults.window_ms)
    p.add_argument("--f0-min", type=float, default=defaults.f0_min)
    p.add_argument("--f0-max", type=float, default=defaults.f0_max)
    p.add_argument("--order", type=int, default=defaults.order)
    p.add_argument("--warp", type=float, default=defaults.warp)
    p.add_argument("--pdd-window", type=int, default=defaults.pdd_window)
    _add_mask_flags(p)


def _add_mask_flags(p: argparse.ArgumentParser) -> None:
    defaults = VocoderConfig()
    p.add_argument("--threshold", type=float, default=defaults.threshold)
    p.add_argument("--mask-convention", choices=list(CONVENTIONS),
                   default=defaults.convention)


def _config_from_args(args) -> VocoderConfig:
    return VocoderConfig(
        hop_ms=args.hop_ms, window_ms=args.window_ms, f0_min=args.f0_min,
        f0_max=args.f0_max, order=args.order, warp=args.warp,
        pdd_window=args.pdd_window, threshold=args.threshold,
        convention=args.mask_convention,
        seed=getattr(args, "seed", DEFAULT_NOISE_SEED))


def _load_input(path, expected_rate):
    path = Path(path)
    if not path.exists():
        raise CommandError(f"input not found: {path}")
    try:
        w = load_waveform(path)
    except SignalIOError as exc:
        raise CommandError(str(exc)) from exc
    if expected_rate is not None and w.sample_rate != expected_rate:
        raise CommandError(
            f"{path}: sample rate {w.sample_rate} != expected {expected_rate}")
    return w


def _replace_dir(tmp: Path, final: Path) -> None:
    if final.exists():
        if final.is_dir() and (not any(final.iterdir())
                               or (final / MANIFEST_NAME).exists()):
            shutil.rmtree(final)
        else:
            raise CommandError(f"refusing to overwrite {final}: not an archive")
    final.parent.mkdir(parents=True, exist_ok=True)
    os.replace(tmp, final)


def cmd_analyze(args) -> int:
    w = _load_input(args.input, args.sample_rate)
    config = _config_from_args(args)
    params, mask = analyze(w, config)
    out = Path(args.out)
    tmp = Path(tempfile.mkdtemp(prefix=out.name + ".", dir=out.parent or "."))
    try:
        save_archive(tmp, params, mask, config.warp)
        if not args.no_figures:
            plots.save_mask_overview(
                tmp / "mask_mvf.png", params.frame_times(), mask.cnm,
                params.mvf, mask.threshold, w.nyquist)
        _replace_dir(tmp, out)
    finally:
        if tmp.exists():
            shutil.rmtree(tmp, ignore_errors=True)
    print(f"wrote archive {out} ({params.n_frames} frames)")
    return 0


def _load_archive_checked(path):
    try:
        return load_archive(path)
    except (ArchiveError, OSError, ValueError) as exc:
        raise CommandError(f"bad archive {path}: {exc}") from exc


def cmd_synth(args) -> int:
    params, mask, manifest = _load_archive_checked(args.archive)
    overrides = {}
    if args.mask_convention is not None:
        overrides["convention"] = args.mask_convention
    if args.threshold is not None:
        overrides["threshold"] = args.threshold
    if overrides:
        mask = remask_archive(mask, **overrides)
    config = VocoderConfig(warp=float(manifest["warp"]), seed=args.seed)
    out_wave = resynthesize(params, mask, config)
    save_waveform(out_wave, args.out)
    print(f"wrote {args.out} ({len(out_wave.samples)} samples)")
    return 0


def cmd_copysynth(args) -> int:
    w = _load_input(args.input, args.sample_rate)
    config = _config_from_args(args)
    params, mask = analyze(w, config)
    out_wave = resynthesize(params, mask, config)
    save_waveform(out_wave, args.out)
    print(f"wrote {args.out} ({len(out_wave.samples)} samples)")
    return 0


def _params_for_eval(path, config):
    """A wav file, an archive dir, or (for pairing) raises if unusable."""
    path = Path(path)
    if path.is_dir():
        params, mask, _ = _load_archive_checked(path)
        return params
    w = _load_input(path, None)
    params, _ = analyze(w, config)
    return params


def _pair_paths(ref: Path, test: Path):
    """Yield (name, ref_path, test_path) pairs for files or directories."""
    if ref.is_dir() and not (ref / MANIFEST_NAME).exists():
        if not test.is_dir():
            raise CommandError("ref is a directory but test is not")
        ref_files = {p.stem: p for p in sorted(ref.glob("*.wav"))}
        test_files = {p.stem: p for p in sorted(test.glob("*.wav"))}
        if not ref_files:
            raise CommandError(f"no wav files in {ref}")
        unmatched = sorted(set(ref_files) ^ set(test_files))
        if unmatched:
            raise CommandError("unmatched file stems: " + ", ".join(unmatched))
        for stem in sorted(ref_files):
            yield stem, ref_files[stem], test_files[stem]
    else:
        yield Path(ref).stem, ref, test


def _single_report(ref_params, test_params) -> metrics.MetricReport:
    n_ref, n_test = ref_params.n_frames, test_params.n_frames
    if abs(n_ref - n_test) > 2:
        raise CommandError(
            f"frame counts differ too much to align: {n_ref} vs {n_test}")
    n = min(n_ref, n_test)
    nyquist = ref_params.sample_rate / 2.0
    mvf_err = metrics.rmse(ref_params.mvf[:n], test_params.mvf[:n])
    return metrics.MetricReport(
        mcd_db=metrics.mcd(ref_params.envelope[:n], test_params.envelope[:n]),
        f0_rmse_hz=metrics.rmse(ref_params.cont_f0[:n], test_params.cont_f0[:n]),
        mvf_rmse_hz=mvf_err,
        mvf_rmse_norm=mvf_err / nyquist,
        corr=metrics.pearson_corr(ref_params.cont_f0[:n], test_params.cont_f0[:n]),
        frame_count=n)


_REPORT_FIELDS = ("mcd_db", "f0_rmse_hz", "mvf_rmse_hz", "mvf_rmse_norm",
                  "corr", "frame_count")


def cmd_eval(args) -> int:
    config = _config_from_args(args)
    names, reports = [], []
    for name, ref_path, test_path in _pair_paths(Path(args.ref), Path(args.test)):
        try:
            ref_params = _params_for_eval(ref_path, config)
            test_params = _params_for_eval(test_path, config)
            report = _single_report(ref_params, test_params)
        except metrics.ConstantInputError as exc:
            raise CommandError(f"{name}: {exc}") from exc
        names.append(name)
        reports.append(report)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "report.csv"
    # aggregate = mean of the values exactly as printed, so that the written
    # aggregate row reproduces the mean of the written per-utterance rows
    printed = [[float(_fmt9(getattr(r, f))) for f in _REPORT_FIELDS] for r in reports]
    means = [sum(col) / len(col) for col in zip(*printed)]
    with open(report_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("utterance",) + _REPORT_FIELDS)
        for name, row in zip(names, printed):
            writer.writerow([name] + [_fmt9(v) for v in row])
        writer.writerow(["mean"] + [_fmt9(v) for v in means])
    if not args.no_figures:
        plots.save_metric_bars(out / "metrics.png", names, reports)
    print(f"wrote {report_path} ({len(reports)} utterance(s))")
    return 0


def cmd_ecdf(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    curves = {}
    pooled = []
    for archive in args.archives:
        _, mask, _ = _load_archive_checked(archive)
        curve = metrics.ecdf(mask.pdd)
        name = Path(archive).name
        curves[name] = curve
        pooled.append(mask.pdd)
        _write_ecdf_csv(out / f"{name}_ecdf.csv", curve)
    merged = metrics.ecdf(np.concatenate(pooled))
    _write_ecdf_csv(out / "merged_ecdf.csv", merged)
    if not args.no_figures:
        plots.save_ecdf_plot(out / "ecdf.png", {**curves, "merged": merged})
    print(f"wrote {len(curves) + 1} ECDF file(s) to {out}")
    return 0


def _write_ecdf_csv(path, curve) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("value", "cumulative"))
        for v, c in zip(curve.sorted_values, curve.cumulative):
            writer.writerow((_fmt9(v), _fmt9(c)))


def cmd_train_toy(args) -> int:
    dataset = acoustic_model.make_toy_dataset(
        n_samples=args.samples, seq_len=args.seq_len, seed=args.seed)
    params = acoustic_model.init_params(
        args.cell, dataset.inputs[0].shape[1], args.hidden,
        dataset.targets[0].shape[1], seed=args.seed)
    try:
        trained, trace = acoustic_model.train(
            params, dataset, epochs=args.epochs,
            learning_rate=args.lr, seed=args.seed)
    except acoustic_model.TrainingDivergedError as exc:
        raise CommandError(str(exc)) from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "loss_trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("epoch", "mse"))
        for epoch, loss in enumerate(trace, start=1):
            writer.writerow((epoch, _fmt9(loss)))
    acoustic_model.save_model(trained, out / "model.txt")
    if not args.no_figures:
        plots.save_loss_trace(out / "loss_trace.png", trace)
    print(f"final loss {trace[-1]:.6g} after {len(trace)} epochs; wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contvoc",
        description="Continuous-parameter vocoder: analysis, synthesis, evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="wav -> parameter archive")
    p.add_argument("input")
    p.add_argument("--out", required=True, help="archive directory to write")
    _add_analysis_flags(p)
    p.add_argument("--seed", type=int, default=DEFAULT_NOISE_SEED)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("synth", help="parameter archive -> wav")
    p.add_argument("archive")
    p.add_argument("--out", required=True, help="output wav path")
    p.add_argument("--seed", type=int, default=DEFAULT_NOISE_SEED)
    p.add_argument("--threshold", type=float, default=None,
                   help="override the archived gating threshold")
    p.add_argument("--mask-convention", choices=list(CONVENTIONS), default=None,
                   help="recompute the mask from the archived deviation track")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("copysynth", help="wav -> analyze -> resynthesize -> wav")
    p.add_argument("input")
    p.add_argument("--out", required=True, help="output wav path")
    _add_analysis_flags(p)
    p.add_argument("--seed", type=int, default=DEFAULT_NOISE_SEED)
    p.set_defaults(func=cmd_copysynth)

    p = sub.add_parser("eval", help="objective metrics for ref/test pairs")
    p.add_argument("ref", help="wav file, archive dir, or directory of wavs")
    p.add_argument("test", help="wav file, archive dir, or directory of wavs")
    p.add_argument("--out", required=True, help="report directory")
    _add_analysis_flags(p)
    p.add_argument("--seed", type=int, default=DEFAULT_NOISE_SEED)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ecdf", help="deviation-track ECDF curves from archives")
    p.add_argument("archives", nargs="+")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_ecdf)

    p = sub.add_parser("train-toy", help="train a toy recurrent model")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--cell", choices=list(acoustic_model.CELL_KINDS),
                   default=acoustic_model.CELL_VANILLA)
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--samples", type=int, default=4)
    p.add_argument("--seq-len", type=int, default=20)
    p.add_argument("--hidden", type=int, default=16)
    p.add_argument("--seed", type=int, default=DEFAULT_NOISE_SEED)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_train_toy)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SignalIOError, ArchiveError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

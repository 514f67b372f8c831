"""Parameter archives: a manifest plus one CSV per track, reloadable exactly."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .analysis import DEFAULT_WARP, ContinuousParams
from .mask import NoiseMask, compute_cnm
from .signal_io import FrameSpec

MANIFEST_NAME = "manifest.txt"
TRACK_FILES = {
    "cont_f0": "cont_f0.csv",
    "mvf": "mvf.csv",
    "envelope": "envelope.csv",
    "pdd": "pdd.csv",
    "cnm": "cnm.csv",
}


class ArchiveError(Exception):
    """Archive directory is missing pieces or internally inconsistent."""


def _fmt(value: float) -> str:
    # repr gives the shortest decimal that round-trips the float exactly,
    # which keeps reload(save(x)) lossless while staying diffable
    return repr(float(value))


def _write_track(path: Path, rows: np.ndarray) -> None:
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64).T).T
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in rows:
            writer.writerow([_fmt(v) for v in np.atleast_1d(row)])


def _read_track(path: Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    if not rows:
        raise ArchiveError(f"{path}: empty track")
    return np.array(rows)


def save_archive(directory, params: ContinuousParams, mask: NoiseMask,
                 warp: float = DEFAULT_WARP) -> None:
    """Write manifest + the five tracks into `directory` (created if needed)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    if mask.n_frames != params.n_frames:
        raise ArchiveError("mask and params frame counts differ")
    manifest = {
        "sample_rate": params.sample_rate,
        "hop": params.frame_spec.hop,
        "window_len": params.frame_spec.window_len,
        "order": params.order,
        "warp": _fmt(warp),
        "mask_convention": mask.convention,
        "threshold": _fmt(mask.threshold),
        "frame_count": params.n_frames,
    }
    with open(directory / MANIFEST_NAME, "w") as fh:
        for key, value in manifest.items():
            fh.write(f"{key} {value}\n")
    _write_track(directory / TRACK_FILES["cont_f0"], params.cont_f0[:, None])
    _write_track(directory / TRACK_FILES["mvf"], params.mvf[:, None])
    _write_track(directory / TRACK_FILES["envelope"], params.envelope)
    _write_track(directory / TRACK_FILES["pdd"], mask.pdd[:, None])
    _write_track(directory / TRACK_FILES["cnm"], mask.cnm[:, None])


def load_archive(directory) -> tuple[ContinuousParams, NoiseMask, dict]:
    """Read an archive directory back into parameter objects.

    Returns (params, mask, manifest). The mask's cnm column is stored as
    written; the threshold and convention come from the manifest.
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise ArchiveError(f"{directory}: no {MANIFEST_NAME}")
    manifest = {}
    with open(manifest_path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                key, value = line.split(" ", 1)
                manifest[key] = value
    required = {"sample_rate", "hop", "window_len", "order", "warp",
                "mask_convention", "threshold", "frame_count"}
    missing = required - manifest.keys()
    if missing:
        raise ArchiveError(f"{directory}: manifest missing {sorted(missing)}")

    tracks = {}
    for name, filename in TRACK_FILES.items():
        path = directory / filename
        if not path.exists():
            raise ArchiveError(f"{directory}: missing track {filename}")
        tracks[name] = _read_track(path)

    frame_count = int(manifest["frame_count"])
    for name, track in tracks.items():
        if track.shape[0] != frame_count:
            raise ArchiveError(
                f"{directory}: track {name} has {track.shape[0]} rows, "
                f"manifest says {frame_count}")
    order = int(manifest["order"])
    if tracks["envelope"].shape[1] != order + 1:
        raise ArchiveError(f"{directory}: envelope width does not match order")

    spec = FrameSpec(hop=int(manifest["hop"]), window_len=int(manifest["window_len"]))
    params = ContinuousParams(
        cont_f0=tracks["cont_f0"][:, 0], mvf=tracks["mvf"][:, 0],
        envelope=tracks["envelope"], frame_spec=spec,
        sample_rate=int(manifest["sample_rate"]))
    mask = NoiseMask(pdd=tracks["pdd"][:, 0], cnm=tracks["cnm"][:, 0],
                     threshold=float(manifest["threshold"]),
                     convention=manifest["mask_convention"])
    return params, mask, manifest


def remask_archive(mask: NoiseMask, convention: str | None = None,
                   threshold: float | None = None) -> NoiseMask:
    """Recompute the cnm column from the stored pdd under new settings."""
    return compute_cnm(mask.pdd,
                       convention if convention is not None else mask.convention,
                       threshold if threshold is not None else mask.threshold)

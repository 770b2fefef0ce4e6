"""Report emission: per-arm CSVs, a JSON summary, and weight snapshots.

All floats render through Python's shortest round-trip repr, and every
file is written to a temporary name and renamed into place, so a given
(config, seed) pair produces byte-identical exports on every run. The
JSON summary replaces non-finite dB values with the strings "unbounded"
(+inf), "silent" (-inf), and "undefined" (NaN); CSVs render them as inf,
-inf, and nan.

CSV schemas (one header row each):
    {arm}_error.csv        sample_index,time_s,reference,error
    {arm}_nr.csv           interval_index,start_s,nr_db
    {arm}_psd.csv          freq_hz,power_db
    {arm}_spectrogram.csv  frame_index,time_s,freq_hz,power_db
    mse_trace.csv          sample_index,mse
Multichannel arms append a _mic{k} suffix before the extension.
"""

from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

from .serialization import (
    FilterSnapshot,
    GridSnapshot,
    save_weights_binary,
    save_weights_json,
)


def _fmt(v) -> str:
    return repr(float(v))


def _atomic_write(path, text: str) -> None:
    directory = os.path.dirname(os.fspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv(header: str, rows) -> str:
    lines = [header]
    lines.extend(",".join(row) for row in rows)
    return "\n".join(lines) + "\n"


def _json_safe(value):
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if math.isnan(v):
            return "undefined"
        if math.isinf(v):
            return "unbounded" if v > 0 else "silent"
        return v
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.ndarray):
        return [_json_safe(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    return value


def _arm_files(arm, rate: float, decimation: int, reference: np.ndarray):
    files = {}
    err = np.atleast_2d(arm.error.T).T          # (T, K)
    ref = np.atleast_2d(reference.T).T
    n_mics = err.shape[1]
    for k in range(n_mics):
        suffix = f"_mic{k}" if n_mics > 1 else ""
        idx = np.arange(0, err.shape[0], decimation)
        rows = ((str(int(n)), _fmt(n / rate), _fmt(ref[n, k]), _fmt(err[n, k]))
                for n in idx)
        files[f"{arm.name}_error{suffix}.csv"] = _csv(
            "sample_index,time_s,reference,error", rows)

        report = arm.reports[k]
        nr_rows = ((str(i), _fmt(i * report.interval_s), _fmt(v))
                   for i, v in enumerate(report.nr_per_interval_db))
        files[f"{arm.name}_nr{suffix}.csv"] = _csv("interval_index,start_s,nr_db", nr_rows)

        if report.psd is not None:
            psd_rows = ((_fmt(f), _fmt(p))
                        for f, p in zip(report.psd.freq_hz, report.psd.power_db))
        else:
            psd_rows = ()
        files[f"{arm.name}_psd{suffix}.csv"] = _csv("freq_hz,power_db", psd_rows)

        def spec_rows(rep):
            if rep.spectro is None:
                return
            for fi, t in enumerate(rep.spectro.times_s):
                for bi, f in enumerate(rep.spectro.freq_hz):
                    yield (str(fi), _fmt(t), _fmt(f), _fmt(rep.spectro.power_db[fi, bi]))
        files[f"{arm.name}_spectrogram{suffix}.csv"] = _csv(
            "frame_index,time_s,freq_hz,power_db", spec_rows(report))
    return files


def summary_dict(result) -> dict:
    """The JSON summary as a plain dict (what summary.json will contain)."""
    arms = {}
    for name, arm in result.arms.items():
        arms[name] = {
            "snr_db": [_json_safe(r.snr_db) for r in arm.reports],
            "final_nr_db": [_json_safe(r.final_nr_db) for r in arm.reports],
            "nr_per_interval_db": [_json_safe(r.nr_per_interval_db) for r in arm.reports],
            "diverged": arm.diverged,
            "diverged_at": arm.diverged_at,
            "diverged_coords": list(arm.diverged_coords) if arm.diverged_coords else None,
        }
    return {
        "schema_version": 1,
        "provenance": _json_safe(result.provenance),
        "mu": result.mu,
        "interval_s": result.config.metrics.interval_s,
        "sample_rate_hz": result.config.sample_rate_hz,
        "arms": arms,
        "pretrain": {
            "seconds_trained": result.pretrain.seconds_trained,
            "nr_per_second_db": _json_safe(result.pretrain.nr_per_second_db),
            "plateau_reached": result.pretrain.plateau_reached,
            "mu": result.pretrain.mu,
            "diverged_at": result.pretrain.diverged_at,
        },
        "sysid": [
            {"j": s.j, "k": s.k, "misalignment_db": _json_safe(s.misalignment_db),
             "residual_power": _json_safe(s.residual_power),
             "undermodeled": s.undermodeled}
            for s in result.sysid_summaries
        ],
    }


def export_report(result, out_dir) -> list:
    """Write all artifacts into out_dir; returns the created file names."""
    os.makedirs(out_dir, exist_ok=True)
    rate = result.config.sample_rate_hz
    decimation = result.config.export.error_decimation

    files = {}
    d = result.arms["uncontrolled"].error
    for arm in result.arms.values():
        n = np.atleast_2d(arm.error.T).T.shape[0]
        files.update(_arm_files(arm, rate, decimation, np.atleast_2d(d.T).T[:n]))

    mse_rows = ((str(int(i * result.mse_stride)), _fmt(v))
                for i, v in enumerate(result.mse_trace))
    files["mse_trace.csv"] = _csv("sample_index,mse", mse_rows)

    files["summary.json"] = json.dumps(summary_dict(result), indent=1,
                                       sort_keys=True) + "\n"

    for name, text in files.items():
        _atomic_write(os.path.join(out_dir, name), text)

    est = result.installed_estimates
    if result.config.controller.kind == "single":
        adaptive_snap = FilterSnapshot(result.adaptive_weights, est[0, 0])
        fixed_snap = FilterSnapshot(result.fixed_weights, est[0, 0])
    else:
        adaptive_snap = GridSnapshot(result.adaptive_weights, est)
        fixed_snap = GridSnapshot(result.fixed_weights, est)
    written = sorted(files)
    for stem, snap in (("adaptive_weights", adaptive_snap), ("fixed_weights", fixed_snap)):
        for ext, saver in ((".anw", save_weights_binary), (".json", save_weights_json)):
            path = os.path.join(out_dir, stem + ext)
            saver(path + ".tmp", snap)
            os.replace(path + ".tmp", path)
            written.append(stem + ext)
    return sorted(written)

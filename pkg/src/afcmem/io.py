"""File exports.  Every file is written to a temporary sibling and renamed, so
a failed run never leaves a half-written output behind."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np


def atomic_write(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _num(x):
    # repr keeps full precision and is stable across platforms
    return repr(float(x))


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"cannot serialise {type(x).__name__}")


def spectrum_csv(spectrum) -> str:
    return _csv(["detuning_Hz", "optical_depth"],
                ((_num(f), _num(d)) for f, d in zip(spectrum.frequencies, spectrum.optical_depth)))


def spectrum_header(spectrum) -> dict:
    g = spectrum.grid
    return {"grid": {"start_Hz": g.start, "step_Hz": g.step, "count": g.count},
            "background_d0": spectrum.background_d0}


def write_spectrum(spectrum, path) -> list[Path]:
    path = Path(path)
    return [atomic_write(path, spectrum_csv(spectrum)),
            atomic_write(path.with_suffix(".json"), to_json(spectrum_header(spectrum)))]


def read_spectrum(path):
    from .spectral import AbsorptionSpectrum, FrequencyGrid

    path = Path(path)
    head = json.loads(path.with_suffix(".json").read_text())
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    g = head["grid"]
    grid = FrequencyGrid(g["start_Hz"], g["step_Hz"], g["count"])
    return AbsorptionSpectrum(grid, data[:, 1], head["background_d0"])


def trace_csv(trace) -> str:
    return _csv(["time_ns", "intensity"],
                ((_num(t * 1e9), _num(i)) for t, i in zip(trace.times, trace.intensity)))


def write_trace(trace, path, meta: dict | None = None) -> list[Path]:
    path = Path(path)
    m = dict(trace.meta)
    m.update(meta or {})
    m.setdefault("input_energy", trace.input_energy)
    m.setdefault("output_energy", trace.energy)
    windows = getattr(trace, "windows", None)
    if windows:
        m["windows_ns"] = {k: [lo * 1e9, hi * 1e9] for k, (lo, hi) in windows.items()}
    return [atomic_write(path, trace_csv(trace)), atomic_write(path.with_suffix(".json"), to_json(m))]


def histogram_csv(hist) -> str:
    e = hist.bin_edges
    return _csv(["bin_start_ns", "bin_stop_ns", "counts"],
                ((_num(a * 1e9), _num(b * 1e9), int(c)) for a, b, c in zip(e[:-1], e[1:], hist.counts)))


def table_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    header = list(rows[0])
    return _csv(header, ([_cell(r[k]) for k in header] for r in rows))


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return _num(v)
    return v

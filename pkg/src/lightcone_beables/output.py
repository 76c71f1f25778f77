"""File emitters: field CSV, 16-bit PGM heatmaps, trajectory and sampling tables."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np


def fmt(v: float) -> str:
    # 17 significant digits round-trip every double, so output is byte-stable.
    return format(float(v), ".17g")


def field_csv(field) -> str:
    buf = io.StringIO()
    buf.write(",".join(["t", "x", "total", *field.sources, "nConsistent"]) + "\n")
    ncons = field.n_consistent
    cols = [field.contributions[name] for name in field.sources]
    for i, t in enumerate(field.times):
        ts = fmt(t)
        for j, x in enumerate(field.xs):
            row = [ts, fmt(x), fmt(field.total[i, j])]
            row += [fmt(c[i, j]) for c in cols]
            row.append(str(int(ncons[i, j])))
            buf.write(",".join(row) + "\n")
    return buf.getvalue()


def write_field_csv(field, path) -> Path:
    path = Path(path)
    path.write_bytes(field_csv(field).encode("ascii"))
    return path


def pgm16(values: np.ndarray) -> bytes:
    """Binary 16-bit PGM of a 2-D array indexed ``[t, x]``, min-max normalized.

    The first time row is the bottom image row, so time runs upward.
    """
    a = np.asarray(values, dtype=float)
    lo, hi = float(a.min()), float(a.max())
    if hi > lo:
        scaled = np.rint((a - lo) / (hi - lo) * 65535.0)
    else:
        scaled = np.zeros_like(a)
    img = scaled[::-1].astype(">u2")
    h, w = img.shape
    return f"P5\n{w} {h}\n65535\n".encode("ascii") + img.tobytes()


def read_pgm16(data: bytes) -> np.ndarray:
    """Parse what :func:`pgm16` writes (header without comments)."""
    magic, dims, maxval, rest = data.split(b"\n", 3)
    if magic != b"P5" or maxval != b"65535":
        raise ValueError("not a 16-bit binary PGM")
    w, h = map(int, dims.split())
    return np.frombuffer(rest, dtype=">u2").reshape(h, w)


def write_heatmaps(field, outdir) -> list[Path]:
    outdir = Path(outdir)
    paths = []
    for name, arr in [("total", field.total), *field.contributions.items()]:
        p = outdir / f"heatmap_{name}.pgm"
        p.write_bytes(pgm16(arr))
        paths.append(p)
    return paths


def trajectories_csv(trajectories) -> str:
    lines = ["photonId,branch,tStart,xStart,dir"]
    for tr in trajectories:
        for seg in tr.segments:
            lines.append(f"{tr.photon_id},{tr.branch},{fmt(seg.t_start)},{fmt(seg.x_start)},{seg.dir}")
    return "\n".join(lines) + "\n"

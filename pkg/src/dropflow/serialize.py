"""File formats: binary PGM masks, CSV scalar fields and metrics, JSON reports.

Masks are stored as binary (P5) PGM images, pixel 255 = in the set, 0 = out;
the header comment records the spacing and extents so files round-trip
without external metadata.  In 3D one image is written per horizontal slab.
Scalar fields and run metrics go to plain CSV.
"""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path
from typing import Sequence

import numpy as np

from .flow import METRICS_COLUMNS, Trajectory
from .grid import HalfSpaceGrid, ScalarField, SetMask, make_grid, mask_from_array

__all__ = [
    "save_mask_pgm",
    "load_mask_pgm",
    "save_field_csv",
    "load_field_csv",
    "save_metrics_csv",
    "save_relax_trace_csv",
    "save_contact_samples_csv",
    "save_velocity_samples_csv",
    "save_json",
]


def _pgm_header_comment(grid: HalfSpaceGrid, slab: int | None) -> str:
    ext = ",".join(str(e) for e in grid.extents)
    s = f"# dropflow h={grid.h!r} extents={ext}"
    if slab is not None:
        s += f" slab={slab}"
    return s


def _write_one_pgm(path: Path, image: np.ndarray, comment: str) -> None:
    height, width = image.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n")
        fh.write(comment.encode("ascii") + b"\n")
        fh.write(f"{width} {height}\n255\n".encode("ascii"))
        fh.write(image.astype(np.uint8).tobytes())


def save_mask_pgm(mask: SetMask, path: str | Path) -> list[Path]:
    """Write a mask as PGM; returns the written paths (one per slab in 3D).

    2D images put the supporting plane at the bottom row.  3D slabs are
    written as ``<stem>_z{k:04d}.pgm`` horizontal cross sections.
    """
    path = Path(path)
    grid = mask.grid
    if grid.d == 2:
        img = np.where(mask.cells.T[::-1], 255, 0)
        _write_one_pgm(path, img, _pgm_header_comment(grid, None))
        return [path]
    out = []
    for k in range(grid.extents[2]):
        p = path.with_name(f"{path.stem}_z{k:04d}{path.suffix or '.pgm'}")
        img = np.where(mask.cells[:, :, k].T[::-1], 255, 0)
        _write_one_pgm(p, img, _pgm_header_comment(grid, k))
        out.append(p)
    return out


_HDR_RE = re.compile(r"#\s*dropflow\s+h=([^\s]+)\s+extents=([\d,]+)(?:\s+slab=(\d+))?")


def _read_one_pgm(path: Path):
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM file")
    # tokenize the header: magic, optional comments, width, height, maxval
    pos = 2
    fields = []
    comment = ""
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            end = data.index(b"\n", pos)
            comment += data[pos:end].decode("ascii", "replace") + "\n"
            pos = end + 1
            continue
        end = pos
        while end < len(data) and not data[end : end + 1].isspace():
            end += 1
        fields.append(int(data[pos:end]))
        pos = end
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval != 255:
        raise ValueError(f"{path}: expected maxval 255, got {maxval}")
    raw = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    img = raw.reshape(height, width)
    m = _HDR_RE.search(comment)
    if not m:
        raise ValueError(f"{path}: missing grid metadata comment")
    h = float(m.group(1))
    extents = tuple(int(x) for x in m.group(2).split(","))
    slab = int(m.group(3)) if m.group(3) is not None else None
    return img, h, extents, slab


def load_mask_pgm(paths: str | Path | Sequence[str | Path]) -> SetMask:
    """Reconstruct a mask from PGM file(s) written by :func:`save_mask_pgm`."""
    if isinstance(paths, (str, Path)):
        paths = [paths]
    first_img, h, extents, slab = _read_one_pgm(Path(paths[0]))
    d = len(extents)
    grid = make_grid(d, extents, h)
    if d == 2:
        if len(paths) != 1:
            raise ValueError("a 2D mask is a single PGM file")
        cells = first_img[::-1].T > 127
        if cells.shape != extents:
            raise ValueError(
                f"image size {cells.shape} does not match recorded extents {extents}"
            )
        return mask_from_array(grid, cells)
    if len(paths) != extents[2]:
        raise ValueError(f"need {extents[2]} slab files, got {len(paths)}")
    cells = np.zeros(extents, dtype=bool)
    for p in paths:
        img, h2, ext2, slab = _read_one_pgm(Path(p))
        if (h2, ext2) != (h, extents) or slab is None:
            raise ValueError(f"{p}: inconsistent slab metadata")
        cells[:, :, slab] = img[::-1].T > 127
    return mask_from_array(grid, cells)


def save_field_csv(field: ScalarField, path: str | Path) -> None:
    """Cell-indexed CSV: one row per cell, ``i,j[,k],value``."""
    grid = field.grid
    cols = ["i", "j", "k"][: grid.d] + ["value"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for idx in np.ndindex(grid.extents):
            writer.writerow(list(idx) + [repr(float(field.values[idx]))])


def load_field_csv(grid: HalfSpaceGrid, path: str | Path) -> ScalarField:
    values = np.zeros(grid.extents)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-1] != "value":
            raise ValueError(f"{path}: not a scalar-field CSV")
        for row in reader:
            idx = tuple(int(x) for x in row[:-1])
            values[idx] = float(row[-1])
    return ScalarField(grid, values)


def save_metrics_csv(traj: Trajectory, path: str | Path) -> None:
    """Per-frame metrics table with the canonical column set."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_COLUMNS)
        for m in traj.metrics:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in m.row()])


def save_relax_trace_csv(solution, path: str | Path) -> None:
    """Convergence history of one relaxation solve: iter, primal, gap."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "primal", "gap"])
        for it, primal, gap in solution.trace:
            writer.writerow([it, repr(primal), repr(gap)])


def save_contact_samples_csv(samples_per_frame, path: str | Path) -> None:
    """Per-sample contact measurements: frame index, location, cosine, beta."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "location", "cosine", "beta_here", "n_points", "flagged"])
        for k, samples in samples_per_frame:
            for s in samples:
                loc = ";".join(repr(float(c)) for c in s.location)
                writer.writerow(
                    [k, loc, repr(s.cosine), repr(s.beta_here), s.n_points, int(s.flagged)]
                )


def save_velocity_samples_csv(report, path: str | Path) -> None:
    """Per-sample interface velocities and independent curvature estimates."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["point", "v", "curvature", "flagged"])
        for s in report.samples:
            pt = ";".join(repr(float(c)) for c in s.point)
            writer.writerow([pt, repr(s.v), repr(s.curvature), int(s.flagged)])


def save_json(record: dict, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")

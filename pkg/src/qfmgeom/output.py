"""CSV and PGM writers.  Output is a pure function of the input, byte for byte."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .geometry import CurvatureReport


def fmt(v: float) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v + 0.0:.12g}"


def write_matrix_csv(path: Path, labels: Sequence[str], matrix: np.ndarray) -> None:
    lines = ["point," + ",".join(labels)]
    for label, row in zip(labels, matrix):
        lines.append(label + "," + ",".join(fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix_csv(path: Path) -> tuple[list[str], np.ndarray]:
    rows = Path(path).read_text().splitlines()
    labels = rows[0].split(",")[1:]
    data = np.array([[float(v) for v in r.split(",")[1:]] for r in rows[1:]])
    return labels, data


def pgm_values(matrix: np.ndarray) -> np.ndarray:
    """Scale to 0..255 by the largest finite entry; NaN maps to 0."""
    m = np.nan_to_num(np.asarray(matrix, dtype=float), nan=0.0)
    top = m.max()
    if top <= 0:
        return np.zeros(m.shape, dtype=int)
    return np.rint(255.0 * m / top).astype(int)


def write_pgm(path: Path, matrix: np.ndarray, comment: str | None = None) -> None:
    """Plain (P2) greyscale image, lines kept under 70 characters."""
    vals = pgm_values(matrix)
    h, w = vals.shape
    lines = ["P2"]
    if comment:
        lines.append("# " + comment)
    lines += [f"{w} {h}", "255"]
    for row in vals:
        line = ""
        for v in row:
            tok = str(int(v))
            if line and len(line) + 1 + len(tok) > 69:
                lines.append(line)
                line = tok
            else:
                line = f"{line} {tok}" if line else tok
        lines.append(line)
    Path(path).write_text("\n".join(lines) + "\n")


def read_pgm(path: Path) -> np.ndarray:
    tokens = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0]
        tokens += line.split()
    if tokens[0] != "P2":
        raise ValueError("not a plain PGM file")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    data = np.array([int(t) for t in tokens[4:]])
    if data.size != w * h or data.max(initial=0) > maxval:
        raise ValueError("malformed PGM payload")
    return data.reshape(h, w)


def curvature_columns(coords: Sequence[str], labels: Sequence[str]) -> list[str]:
    cols = list(coords)
    cols += [f"k_{a}_{b}" for i, a in enumerate(labels) for b in labels[i + 1:]]
    cols += [f"ric_{a}_{b}" for i, a in enumerate(labels) for b in labels[i:]]
    cols.append("scal")
    return cols


def curvature_row(report: CurvatureReport, labels: Sequence[str]) -> list[str]:
    row = [fmt(v) for v in report.base]
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            row.append(fmt(report.sectional.get((a, b), math.nan)))
    for i, a in enumerate(labels):
        for b in labels[i:]:
            row.append(fmt(report.ricci.get((a, b), math.nan)))
    row.append(fmt(report.scalar))
    return row


def write_curvature_csv(path: Path, coords: Sequence[str], labels: Sequence[str],
                        reports: Sequence[CurvatureReport]) -> None:
    lines = [",".join(curvature_columns(coords, labels))]
    lines += [",".join(curvature_row(r, labels)) for r in reports]
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv_table(path: Path) -> tuple[list[str], np.ndarray]:
    rows = Path(path).read_text().splitlines()
    header = rows[0].split(",")
    return header, np.array([[float(v) for v in r.split(",")] for r in rows[1:]])

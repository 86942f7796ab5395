"""File formats shared across the toolkit.

Three artifact kinds are used everywhere:

* dense float64 matrix blobs (text header ``MATRIX <rows> <cols>`` followed
  by row-major little-endian binary data),
* PGM images (binary P5 for 8-bit previews/scenes, plain P2 for integer
  label maps such as ring images),
* CSV tables with a leading ``# schema: <name>`` comment line so every
  table is self-describing.

Writes go through a temp file + rename so partially written artifacts are
never observed by concurrent readers.
"""

from __future__ import annotations

import csv
import io as _io
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

_MAGIC = b"MATRIX"


def _atomic_write(path: Path | str, data: bytes) -> None:
    """Write bytes to `path` via a same-directory temp file and rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_matrix_blob(path: Path | str, matrix: np.ndarray) -> None:
    """Write a dense 2-D float64 matrix as a header + raw binary blob."""
    m = np.ascontiguousarray(np.asarray(matrix, dtype=np.float64))
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    header = b"%s %d %d\n" % (_MAGIC, m.shape[0], m.shape[1])
    _atomic_write(path, header + m.astype("<f8").tobytes(order="C"))


def read_matrix_blob(path: Path | str) -> np.ndarray:
    """Read a matrix blob written by :func:`write_matrix_blob`."""
    raw = Path(path).read_bytes()
    newline = raw.index(b"\n")
    fields = raw[:newline].split()
    if len(fields) != 3 or fields[0] != _MAGIC:
        raise ValueError(f"{path}: not a matrix blob (bad header)")
    rows, cols = int(fields[1]), int(fields[2])
    body = np.frombuffer(raw, dtype="<f8", offset=newline + 1)
    if body.size != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} values, found {body.size}")
    return body.reshape(rows, cols).astype(np.float64)


def write_pgm(path: Path | str, image: np.ndarray) -> None:
    """Write an 8-bit binary (P5) PGM.

    Float input is interpreted on [0, 1] and quantized; integer input must
    already be in [0, 255].
    """
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {img.shape}")
    if np.issubdtype(img.dtype, np.floating):
        img = np.rint(np.clip(img, 0.0, 1.0) * 255.0)
    img = img.astype(np.uint8)
    header = b"P5\n%d %d\n255\n" % (img.shape[1], img.shape[0])
    _atomic_write(path, header + img.tobytes(order="C"))


def write_pgm_labels(path: Path | str, labels: np.ndarray) -> None:
    """Write an integer label image (e.g. a time-bin ring map) as plain P2 PGM."""
    lab = np.asarray(labels)
    if lab.ndim != 2:
        raise ValueError(f"expected a 2-D label image, got shape {lab.shape}")
    lab = lab.astype(np.int64)
    if lab.min() < 0:
        raise ValueError("labels must be non-negative")
    maxval = max(int(lab.max()), 1)
    if maxval > 65535:
        raise ValueError(f"label range {maxval} exceeds the PGM limit of 65535")
    buf = _io.StringIO()
    buf.write(f"P2\n{lab.shape[1]} {lab.shape[0]}\n{maxval}\n")
    for row in lab:
        buf.write(" ".join(str(v) for v in row))
        buf.write("\n")
    _atomic_write(path, buf.getvalue().encode("ascii"))


def read_pgm(path: Path | str) -> np.ndarray:
    """Read a P2 or P5 PGM and return a float image scaled to [0, 1]."""
    raw = Path(path).read_bytes()
    # Header tokens: magic, width, height, maxval.  Comments start with '#'.
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if pos < len(raw) and raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    magic, width, height, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic == b"P5":
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        data = np.frombuffer(raw, dtype=dtype, offset=pos, count=width * height)
        img = data.reshape(height, width).astype(np.float64)
    elif magic == b"P2":
        values = raw[pos:].split()
        if len(values) < width * height:
            raise ValueError(f"{path}: truncated P2 data")
        img = np.array([int(v) for v in values[: width * height]], dtype=np.float64)
        img = img.reshape(height, width)
    else:
        raise ValueError(f"{path}: unsupported PGM magic {magic!r}")
    return img / float(maxval)


def format_value(value: object) -> str:
    """Stable text form for CSV cells (floats via %.12g, bit-for-bit stable)."""
    if isinstance(value, (bool, np.bool_)):
        return "True" if value else "False"
    if isinstance(value, (float, np.floating)):
        return "%.12g" % float(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_csv(
    path: Path | str,
    schema: str,
    header: Sequence[str],
    rows: Iterable[Sequence[object]],
) -> None:
    """Write a CSV with a ``# schema: <name>`` first line and a header row."""
    buf = _io.StringIO()
    buf.write(f"# schema: {schema}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    _atomic_write(path, buf.getvalue().encode("utf-8"))


def read_csv(path: Path | str) -> tuple[str, list[str], list[list[str]]]:
    """Read a schema-tagged CSV; returns (schema, header, rows of strings)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if not first.startswith("# schema:"):
            raise ValueError(f"{path}: missing '# schema:' line")
        schema = first.split(":", 1)[1].strip()
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader if row]
    return schema, header, rows

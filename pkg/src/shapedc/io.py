"""Readers and writers for cubes, label masks and metrics reports.

One normative cube format: band-sequential, row-major within band,
little-endian, f32 or f64, described by a small key=value header file.
Label masks are plain text grids so test fixtures stay diff-able.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .metrics import MetricsReport
from .types import HyperCube, LabelMap

_DTYPES = {"f32": np.dtype("<f4"), "f64": np.dtype("<f8")}
_HEADER_KEYS = ("height", "width", "bands", "dtype", "interleave", "byte_order")


@dataclass(frozen=True)
class CubeHeader:
    """Shape and encoding of a raw cube file."""

    height: int
    width: int
    bands: int
    dtype: str = "f32"
    interleave: str = "bsq"
    byte_order: str = "little"

    def __post_init__(self):
        if self.height < 1 or self.width < 1 or self.bands < 1:
            raise ValueError("header counts must all be >= 1")
        if self.dtype not in _DTYPES:
            raise ValueError(f"unsupported dtype {self.dtype!r} (expected f32 or f64)")
        if self.interleave != "bsq":
            raise ValueError(f"unsupported interleave {self.interleave!r} (expected bsq)")
        if self.byte_order != "little":
            raise ValueError(f"unsupported byte_order {self.byte_order!r} (expected little)")


def read_cube_header(path) -> CubeHeader:
    fields: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"malformed header line {lineno}: {raw!r}")
        key, value = line.split("=", 1)
        fields[key.strip()] = value.strip()
    for key in _HEADER_KEYS:
        if key not in fields:
            raise ValueError(f"missing key {key!r} in cube header")
    try:
        height = int(fields["height"])
        width = int(fields["width"])
        bands = int(fields["bands"])
    except ValueError as exc:
        raise ValueError(f"non-integer count in cube header: {exc}") from None
    return CubeHeader(
        height=height,
        width=width,
        bands=bands,
        dtype=fields["dtype"],
        interleave=fields["interleave"],
        byte_order=fields["byte_order"],
    )


def read_cube(header_path, data_path) -> HyperCube:
    """Read a band-sequential cube into (row, col, band) order."""
    header = read_cube_header(header_path)
    dtype = _DTYPES[header.dtype]
    count = header.height * header.width * header.bands
    expected_bytes = count * dtype.itemsize
    raw = Path(data_path).read_bytes()
    if len(raw) != expected_bytes:
        raise ValueError(
            f"size mismatch: data file holds {len(raw)} bytes, "
            f"header implies {expected_bytes}"
        )
    flat = np.frombuffer(raw, dtype=dtype)
    values = flat.reshape(header.bands, header.height, header.width)
    return HyperCube(values.transpose(1, 2, 0).astype(np.float64))


def write_cube(cube: HyperCube, header_path, data_path, dtype: str = "f32") -> None:
    """Write a cube in the normative format (the inverse of :func:`read_cube`)."""
    header = CubeHeader(cube.height, cube.width, cube.bands, dtype=dtype)
    lines = [
        f"height={header.height}",
        f"width={header.width}",
        f"bands={header.bands}",
        f"dtype={header.dtype}",
        f"interleave={header.interleave}",
        f"byte_order={header.byte_order}",
    ]
    Path(header_path).write_text("\n".join(lines) + "\n")
    planes = cube.values.transpose(2, 0, 1)  # (band, row, col)
    Path(data_path).write_bytes(np.ascontiguousarray(planes, dtype=_DTYPES[dtype]).tobytes())


def read_label_map(path) -> LabelMap:
    """Parse the text grid format: "height width" then one row per line."""
    text = Path(path).read_text()
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty label map file")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError("first line must be 'height width'")
    height, width = (int(v) for v in head)
    if len(lines) - 1 != height:
        raise ValueError(f"expected {height} rows, found {len(lines) - 1}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        entries = line.split()
        if len(entries) != width:
            raise ValueError(f"ragged row at line {lineno}: expected {width} entries")
        values = [int(v) for v in entries]
        if any(v < 0 for v in values):
            raise ValueError(f"negative label at line {lineno}")
        rows.append(values)
    return LabelMap(np.array(rows, dtype=np.int64))


def write_label_map(label_map: LabelMap, path) -> None:
    lines = [f"{label_map.height} {label_map.width}"]
    lines.extend(" ".join(str(int(v)) for v in row) for row in label_map.labels)
    Path(path).write_text("\n".join(lines) + "\n")


def write_metrics(report: MetricsReport, path) -> None:
    """CSV: confusion matrix rows, per-class accuracies, then the summary rows."""
    lines = [",".join(str(int(v)) for v in row) for row in report.confusion]
    for k, acc in enumerate(report.class_accuracy, start=1):
        lines.append(f"class_acc,{k},{acc:.6f}")
    lines.append(f"overall,{report.overall:.6f}")
    lines.append(f"average,{report.average:.6f}")
    lines.append(f"kappa,{report.kappa:.6f}")
    Path(path).write_text("\n".join(lines) + "\n")

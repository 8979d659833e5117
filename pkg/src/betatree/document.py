"""File formats: CSV ingestion, the histogram JSON document and plot data."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EmptySelection, InvalidAxis, ParseError
from .inference import BetaTree, Bin
from .modes import ModeReport
from .partition import Config, Rect

__all__ = [
    "SCHEMA_VERSION",
    "CsvTable",
    "HistogramDocument",
    "ingest_csv",
    "document_from_betatree",
    "emit_plot_data",
]

SCHEMA_VERSION = "1.0"


@dataclass
class CsvTable:
    data: np.ndarray
    columns: list
    rejected: list = field(default_factory=list)


def _resolve_columns(columns, header, width):
    if columns is None:
        return list(range(width))
    out = []
    for c in columns:
        if isinstance(c, str) and header is not None and c in header:
            out.append(header.index(c))
            continue
        try:
            j = int(c)
        except (TypeError, ValueError):
            raise EmptySelection(f"unknown column {c!r}") from None
        if not 0 <= j < width:
            raise EmptySelection(f"column index {j} out of range (width {width})")
        out.append(j)
    if not out:
        raise EmptySelection("no columns selected")
    return out


def ingest_csv(path, delimiter: str = ",", header: bool = False,
               columns: Optional[Sequence] = None, skip_invalid: bool = False) -> CsvTable:
    """Read selected numeric columns of a CSV file.

    ``columns`` holds header names (with ``header=True``) or 0-based
    indices. A cell that is not a finite number raises :class:`ParseError`
    with its 1-based file row and column name, unless ``skip_invalid`` is
    set, in which case the row is dropped and its number recorded in
    ``rejected``.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    names = None
    first = 1
    if header:
        if not rows:
            raise EmptySelection("file is empty")
        names = [s.strip() for s in rows[0]]
        rows = rows[1:]
        first = 2
    rows_with_no = [(first + i, r) for i, r in enumerate(rows) if any(cell.strip() for cell in r)]
    if not rows_with_no:
        raise EmptySelection("no data rows")
    width = len(names) if names is not None else len(rows_with_no[0][1])
    cols = _resolve_columns(columns, names, width)
    labels = [names[j] if names else str(j) for j in cols]
    data = []
    rejected = []
    for lineno, row in rows_with_no:
        try:
            vals = []
            for j, label in zip(cols, labels):
                if j >= len(row):
                    raise ParseError(f"row {lineno}: missing column {label!r}", lineno, label)
                cell = row[j].strip()
                try:
                    v = float(cell)
                except ValueError:
                    v = math.nan
                if not math.isfinite(v):
                    raise ParseError(f"row {lineno}, column {label!r}: not a finite number: {cell!r}",
                                     lineno, label)
                vals.append(v)
        except ParseError:
            if not skip_invalid:
                raise
            rejected.append(lineno)
            continue
        data.append(vals)
    if not data:
        raise EmptySelection("every row was rejected")
    return CsvTable(np.asarray(data, dtype=float), labels, rejected)


def _mode_to_dict(report: ModeReport) -> dict:
    return {
        "max_path_length": report.max_path_length,
        "modes": [int(m) for m in report.modes],
        "node_index": [int(k) for k in report.node_index],
        "centers": [[float(c) for c in ctr] for ctr in report.centers],
        "witness": {str(k): {"mode": int(v["mode"]), "path": [int(p) for p in v["path"]]}
                    for k, v in sorted(report.witness.items())},
    }


def _mode_from_dict(obj: dict) -> ModeReport:
    return ModeReport(
        modes=list(obj["modes"]),
        witness={int(k): {"mode": v["mode"], "path": list(v["path"])} for k, v in obj["witness"].items()},
        max_path_length=obj["max_path_length"],
        node_index=list(obj["node_index"]),
        centers=[np.asarray(c, dtype=float) for c in obj["centers"]],
    )


@dataclass
class HistogramDocument:
    """Serializable Beta-tree histogram.

    Each bin is ``{"index", "bounds": [[lo, hi], ...], "depth", "count",
    "density", "lower", "upper"}``.
    """

    n: int
    d: int
    alpha: float
    root_mode: str
    config: dict
    bins: list
    modes: Optional[dict] = None
    schema_version: str = SCHEMA_VERSION

    def to_dict(self) -> dict:
        out = {
            "schema_version": self.schema_version,
            "n": self.n,
            "d": self.d,
            "alpha": self.alpha,
            "root_mode": self.root_mode,
            "config": self.config,
            "bins": self.bins,
        }
        if self.modes is not None:
            out["modes"] = self.modes
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, obj: dict) -> "HistogramDocument":
        if obj.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {obj.get('schema_version')!r}")
        return cls(
            n=obj["n"], d=obj["d"], alpha=obj["alpha"], root_mode=obj["root_mode"],
            config=obj["config"], bins=obj["bins"], modes=obj.get("modes"),
            schema_version=obj["schema_version"],
        )

    @classmethod
    def loads(cls, text: str) -> "HistogramDocument":
        return cls.from_dict(json.loads(text))

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "HistogramDocument":
        with open(path) as fh:
            return cls.loads(fh.read())

    def to_betatree(self) -> BetaTree:
        bins = []
        for b in self.bins:
            bounds = np.asarray(b["bounds"], dtype=float).reshape(-1, 2)
            bins.append(Bin(index=b["index"], rect=Rect(bounds[:, 0], bounds[:, 1]), h=b["density"],
                            lower=b["lower"], upper=b["upper"], depth=b["depth"], count=b["count"]))
        return BetaTree(bins=bins, alpha=self.alpha)

    def mode_report(self) -> Optional[ModeReport]:
        return None if self.modes is None else _mode_from_dict(self.modes)

    def with_modes(self, report: ModeReport) -> "HistogramDocument":
        return HistogramDocument(**{**self.__dict__, "modes": _mode_to_dict(report)})


def document_from_betatree(bt: BetaTree, config: Config, n: int) -> HistogramDocument:
    bins = [
        {
            "index": b.index,
            "bounds": [[float(lo), float(hi)] for lo, hi in zip(b.rect.lower, b.rect.upper)],
            "depth": b.depth,
            "count": b.count,
            "density": b.h,
            "lower": b.lower,
            "upper": b.upper,
        }
        for b in bt.bins
    ]
    d = bt.d
    return HistogramDocument(n=int(n), d=int(d), alpha=float(config.alpha),
                             root_mode=config.root_mode, config=asdict(config), bins=bins)


def emit_plot_data(doc: HistogramDocument, slice_axis: Optional[int] = None,
                   slice_value: Optional[float] = None, slab: Optional[float] = None,
                   density_floor: float = 0.0, points=None) -> dict:
    """Rectangles (and optionally observations) ready for plotting.

    Without a slice every bin is returned. With ``slice_axis`` (0-based) and
    ``slice_value`` only bins whose closed extent along that axis contains
    the value are kept, projected onto the other axes; observations with
    ``|x[axis] - value| <= slab`` are included. Bins with density below
    ``density_floor`` are dropped.
    """
    axes = list(range(doc.d))
    if slice_axis is not None:
        if not 0 <= slice_axis < doc.d or doc.d < 2:
            raise InvalidAxis(f"slice axis {slice_axis} invalid for d={doc.d}")
        if slice_value is None:
            raise ValueError("slice_value is required with slice_axis")
        axes.remove(slice_axis)
    rects = []
    for b in doc.bins:
        if b["density"] < density_floor:
            continue
        bounds = b["bounds"]
        if slice_axis is not None:
            lo, hi = bounds[slice_axis]
            if not lo <= slice_value <= hi:
                continue
        rects.append({
            "index": b["index"],
            "lower": [bounds[a][0] for a in axes],
            "upper": [bounds[a][1] for a in axes],
            "density": b["density"],
            "ci": [b["lower"], b["upper"]],
        })
    out = {"axes": axes, "slice": None, "rectangles": rects, "points": []}
    if slice_axis is not None:
        out["slice"] = {"axis": slice_axis, "value": slice_value, "slab": slab}
    if points is not None:
        x = np.atleast_2d(np.asarray(points, dtype=float))
        if slice_axis is not None:
            half = 0.0 if slab is None else slab
            x = x[np.abs(x[:, slice_axis] - slice_value) <= half]
        out["points"] = x[:, axes].tolist()
    return out

"""Reading and writing count tables, edge lists and JSON reports."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .core import AdjacencyMatrix, CountMatrix, LLGMError, ParseError

ORIENTATIONS = ("samples-by-variables", "variables-by-samples")


def _delimiter(path: Path) -> str:
    return "," if path.suffix.lower() == ".csv" else "\t"


def ingest(path, orientation: str = "samples-by-variables") -> CountMatrix:
    """Read a delimited count table.

    The first row holds column labels after a corner cell, and every later
    row starts with its row label. Files ending in ``.csv`` are comma
    separated, anything else tab separated. With
    ``orientation="variables-by-samples"`` rows are variables and the table
    is transposed on load.
    """
    if orientation not in ORIENTATIONS:
        raise ParseError(f"orientation must be one of {ORIENTATIONS}, got {orientation!r}")
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter=_delimiter(path)) if r]
    if len(rows) < 2:
        raise ParseError(f"{path}: need a header row and at least one data row")
    header = rows[0]
    col_labels = [c.strip() for c in header[1:]]
    width = len(header)
    row_labels, data = [], []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ParseError(f"{path}: line {r} has {len(row)} fields, expected {width}")
        label = row[0].strip()
        vals = []
        for c, cell in enumerate(row[1:]):
            try:
                x = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: non-numeric value {cell!r} at row {label!r}, column "
                    f"{col_labels[c]!r}") from None
            if not math.isfinite(x) or x < 0:
                raise ParseError(
                    f"{path}: invalid count {cell!r} at row {label!r}, column "
                    f"{col_labels[c]!r}")
            vals.append(x)
        row_labels.append(label)
        data.append(vals)
    for what, labels in (("row", row_labels), ("column", col_labels)):
        seen = set()
        for s in labels:
            if s in seen:
                raise ParseError(f"{path}: duplicate {what} label {s!r}")
            seen.add(s)
    values = np.asarray(data, dtype=np.float64)
    if orientation == "variables-by-samples":
        values, row_labels, col_labels = values.T, col_labels, row_labels
    try:
        return CountMatrix(values, row_labels, col_labels)
    except LLGMError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def write_counts(X: CountMatrix, path, orientation: str = "samples-by-variables",
                 corner: str = "sample") -> None:
    """Write a count table that :func:`ingest` reads back unchanged."""
    path = Path(path)
    values, rows, cols = X.values, X.sample_ids, X.variable_ids
    if orientation == "variables-by-samples":
        values, rows, cols = values.T, cols, rows
    d = _delimiter(path)
    with path.open("w", newline="") as fh:
        fh.write(d.join([corner, *cols]) + "\n")
        for label, row in zip(rows, values):
            fh.write(d.join([label, *map(_fmt, row)]) + "\n")


def write_edge_list(edges, path) -> None:
    """Write ``(node_a, node_b, weight)`` triples as a TSV with a header."""
    with Path(path).open("w", newline="") as fh:
        fh.write("node_a\tnode_b\tweight\n")
        for a, b, w in edges:
            fh.write(f"{a}\t{b}\t{_fmt(w)}\n")


def read_edge_list(path, labels, drop_unknown: bool = False) -> AdjacencyMatrix:
    """Read an edge-list TSV into an adjacency matrix over ``labels``.

    Edges naming a node outside ``labels`` raise :class:`ParseError`, or are
    skipped when ``drop_unknown`` is set (the induced subgraph).
    """
    labels = list(labels)
    index = {s: i for i, s in enumerate(labels)}
    pairs = []
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh, delimiter="\t")
        header = next(reader, None)
        if header is None or header[:2] != ["node_a", "node_b"]:
            raise ParseError(f"{path}: expected a 'node_a<TAB>node_b<TAB>weight' header")
        for r, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 2:
                raise ParseError(f"{path}: line {r} has too few fields")
            try:
                pairs.append((index[row[0]], index[row[1]]))
            except KeyError as exc:
                if drop_unknown:
                    continue
                raise ParseError(f"{path}: line {r}: unknown node {exc.args[0]!r}") from None
    return AdjacencyMatrix.from_edges(len(labels), pairs, labels)


def adjacency_edges(A: AdjacencyMatrix):
    return [(A.labels[j], A.labels[k], 1) for j, k in A.edge_list()]


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_json(obj, path) -> None:
    with Path(path).open("w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_default)
        fh.write("\n")


def read_json(path):
    with Path(path).open() as fh:
        return json.load(fh)


def sha256(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()

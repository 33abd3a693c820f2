"""
CSV exchange format for ensemble predictions.

One row per instance with the header::

    feat_0, ..., feat_{d-1}, pred_0_0, ..., pred_{M-1}_{K-1}, label

``pred_m_k`` is member ``m``'s probability for class ``k`` and ``label``
is a class number in ``1..K`` (empty when the file is unlabelled).  Values
are written with 17 significant digits; a write/read cycle preserves them
up to the one-ulp renormalization applied to every probability row on read.
"""

from __future__ import annotations

import csv
import re
from pathlib import Path

import numpy as np

from .simplex import CredalDataset, SimplexError, as_prob_rows

_FEAT = re.compile(r"^feat_(\d+)$")
_PRED = re.compile(r"^pred_(\d+)_(\d+)$")


class ParseError(ValueError):
    """Malformed CSV input; the message carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class DataError(ValueError):
    """Well-formed CSV whose values violate dataset invariants."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


def _layout(header: list[str]):
    header = [h.strip() for h in header]
    if not header or header[-1] != "label":
        raise ParseError("last column must be 'label'", 1)
    d = 0
    while d < len(header) - 1 and _FEAT.match(header[d]):
        if int(_FEAT.match(header[d]).group(1)) != d:
            raise ParseError(f"feature column {d} is named {header[d]!r}", 1)
        d += 1
    preds = header[d:-1]
    if not preds:
        raise ParseError("no prediction columns", 1)
    pairs = []
    for name in preds:
        m = _PRED.match(name)
        if m is None:
            raise ParseError(f"unexpected column {name!r}", 1)
        pairs.append((int(m.group(1)), int(m.group(2))))
    n_members = max(p[0] for p in pairs) + 1
    n_classes = max(p[1] for p in pairs) + 1
    expected = [(m, k) for m in range(n_members) for k in range(n_classes)]
    if pairs != expected:
        raise ParseError(f"prediction columns must run pred_0_0 .. pred_{n_members - 1}_{n_classes - 1} "
                         "in member-major order", 1)
    if n_classes < 2:
        raise ParseError("need at least two classes", 1)
    return d, n_members, n_classes


def read_predictions(path) -> CredalDataset:
    """Load a :class:`CredalDataset` from the CSV exchange format.

    Raises
    ------
    ParseError
        Structural problems (header, column count, non-numeric cells).
    DataError
        Probability vectors off the simplex by more than 1e-6, or labels
        outside ``1..K``.  The message names the 0-based data row.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", 1) from None
        d, M, K = _layout(header)
        width = d + M * K + 1
        feats, preds, labels = [], [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise ParseError(f"expected {width} columns, found {len(row)}", line)
            try:
                values = [float(c) for c in row[:-1]]
            except ValueError as exc:
                raise ParseError(f"non-numeric value ({exc})", line) from None
            cell = row[-1].strip()
            if cell:
                try:
                    lab = float(cell)
                except ValueError:
                    raise ParseError(f"non-numeric label {cell!r}", line) from None
                if lab != int(lab):
                    raise ParseError(f"label {cell!r} is not an integer", line)
                labels.append(int(lab))
            else:
                labels.append(None)
            feats.append(values[:d])
            preds.append(values[d:])
    n = len(preds)
    if n == 0:
        raise ParseError("no data rows", 2)
    P = np.array(preds, dtype=float).reshape(n, M, K)
    for i in range(n):
        try:
            P[i] = as_prob_rows(P[i])
        except SimplexError as exc:
            raise DataError(str(exc), i) from None
    X = np.array(feats, dtype=float).reshape(n, d)
    if d == 0:
        X = np.zeros((n, 1))
    have = [lab is not None for lab in labels]
    if any(have) and not all(have):
        raise DataError("labels must be given for every row or for none", have.index(False))
    y = None
    if all(have):
        y = np.array(labels, dtype=np.int64)
        bad = np.flatnonzero((y < 1) | (y > K))
        if bad.size:
            raise DataError(f"label {y[bad[0]]} outside 1..{K}", int(bad[0]))
        y = y - 1
    return CredalDataset(X, P, y)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_predictions(data: CredalDataset, path) -> None:
    """Write ``data`` in the CSV exchange format (labels stored as ``1..K``)."""
    n, M, K = data.predictions.shape
    d = data.features.shape[1]
    header = [f"feat_{j}" for j in range(d)]
    header += [f"pred_{m}_{k}" for m in range(M) for k in range(K)]
    header.append("label")
    flat = data.predictions.reshape(n, M * K)
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(n):
            row = [_fmt(v) for v in data.features[i]] + [_fmt(v) for v in flat[i]]
            row.append("" if data.labels is None else str(int(data.labels[i]) + 1))
            writer.writerow(row)

"""Biaxial datasets and the CSV dataset file format."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kinematics import BiaxialPoint, DomainError, pullback_point, pushforward_point

STRETCH_HEADER = ("protocol", "lambda1", "lambda2", "p1_kpa", "p2_kpa")
STRAIN_HEADER = ("protocol", "e11", "e22", "s11_kpa", "s22_kpa")


class DatasetFormatError(ValueError):
    """Malformed dataset file; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


def fmt(x: float) -> str:
    """Full-precision float text (17 significant digits)."""
    return format(float(x), ".17g")


@dataclass
class Dataset:
    """Observations as parallel arrays; ``protocol`` holds one label per row."""

    protocol: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    p1: np.ndarray
    p2: np.ndarray

    def __post_init__(self):
        self.protocol = np.asarray(self.protocol, dtype=object)
        for name in ("lambda1", "lambda2", "p1", "p2"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        n = len(self.protocol)
        if any(len(getattr(self, k)) != n for k in ("lambda1", "lambda2", "p1", "p2")):
            raise ValueError("dataset columns differ in length")

    def __len__(self):
        return len(self.protocol)

    @classmethod
    def from_points(cls, points) -> "Dataset":
        points = list(points)
        return cls(
            [p.protocol for p in points],
            [p.lambda1 for p in points],
            [p.lambda2 for p in points],
            [p.p1 for p in points],
            [p.p2 for p in points],
        )

    def points(self) -> list[BiaxialPoint]:
        return [
            BiaxialPoint(float(a), float(b), float(c), float(d), str(lab))
            for lab, a, b, c, d in zip(self.protocol, self.lambda1, self.lambda2, self.p1, self.p2)
        ]

    @property
    def measured(self) -> np.ndarray:
        """Measured stresses, shape ``(n, 2)``."""
        return np.stack([self.p1, self.p2], axis=-1)

    def labels(self) -> list[str]:
        """Protocol labels in order of first appearance."""
        return list(dict.fromkeys(str(p) for p in self.protocol))

    def subset(self, mask) -> "Dataset":
        return Dataset(
            self.protocol[mask], self.lambda1[mask], self.lambda2[mask], self.p1[mask], self.p2[mask]
        )

    def groups(self) -> dict[str, "Dataset"]:
        return {lab: self.subset(self.protocol == lab) for lab in self.labels()}

    @classmethod
    def concat(cls, parts) -> "Dataset":
        parts = list(parts)
        return cls(
            np.concatenate([p.protocol for p in parts]),
            np.concatenate([p.lambda1 for p in parts]),
            np.concatenate([p.lambda2 for p in parts]),
            np.concatenate([p.p1 for p in parts]),
            np.concatenate([p.p2 for p in parts]),
        )


def _parse_rows(text: str):
    reader = csv.reader(io.StringIO(text))
    rows = []
    header = None
    for lineno, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        cells = [c.strip() for c in row]
        if header is None:
            header = tuple(c.lower() for c in cells)
            if header not in (STRETCH_HEADER, STRAIN_HEADER):
                raise DatasetFormatError(
                    f"unrecognized header {','.join(cells)!r}; expected "
                    f"{','.join(STRETCH_HEADER)!r} or {','.join(STRAIN_HEADER)!r}",
                    lineno,
                )
            continue
        if len(cells) != 5:
            raise DatasetFormatError(f"expected 5 fields, found {len(cells)}", lineno)
        if not cells[0]:
            raise DatasetFormatError("empty protocol label", lineno)
        try:
            nums = [float(c) for c in cells[1:]]
        except ValueError as exc:
            raise DatasetFormatError(f"non-numeric field ({exc})", lineno) from None
        if not all(math.isfinite(v) for v in nums):
            raise DatasetFormatError("non-finite value", lineno)
        rows.append((lineno, cells[0], nums))
    if header is None:
        raise DatasetFormatError("empty file: missing header", 1)
    return header, rows


def parse_dataset(text: str) -> Dataset:
    """Parse dataset CSV text; strain/2nd-Piola files are pulled back row by row."""
    header, rows = _parse_rows(text)
    if not rows:
        raise DatasetFormatError("dataset contains no observations")
    labels, l1, l2, p1, p2 = [], [], [], [], []
    for lineno, label, (a, b, c, d) in rows:
        if header == STRAIN_HEADER:
            try:
                a, b, c, d = (float(v) for v in pullback_point(a, b, c, d))
            except DomainError as exc:
                raise DatasetFormatError(str(exc), lineno) from None
        elif not (a > 0 and b > 0):
            raise DatasetFormatError("stretches must be positive", lineno)
        labels.append(label)
        l1.append(a)
        l2.append(b)
        p1.append(c)
        p2.append(d)
    return Dataset(labels, l1, l2, p1, p2)


def read_dataset(path) -> Dataset:
    return parse_dataset(Path(path).read_text())


def format_dataset(data: Dataset, strain: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if strain:
        writer.writerow(STRAIN_HEADER)
        cols = pushforward_point(data.lambda1, data.lambda2, data.p1, data.p2)
    else:
        writer.writerow(STRETCH_HEADER)
        cols = (data.lambda1, data.lambda2, data.p1, data.p2)
    for i, lab in enumerate(data.protocol):
        writer.writerow([lab] + [fmt(c[i]) for c in cols])
    return buf.getvalue()


def write_dataset(data: Dataset, path, strain: bool = False) -> None:
    Path(path).write_text(format_dataset(data, strain=strain))


def convert_text(text: str, inverse: bool = False) -> str:
    """Strain/2nd-Piola CSV to stretch/1st-Piola CSV (or back with ``inverse``)."""
    header, _ = _parse_rows(text)
    expected = STRETCH_HEADER if inverse else STRAIN_HEADER
    if header != expected:
        raise DatasetFormatError(f"expected header {','.join(expected)!r}", 1)
    data = parse_dataset(text)
    return format_dataset(data, strain=inverse)

"""Reading censored samples from CSV and writing reports as JSON/CSV."""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import DomainError
from .models import CensoredSample

__all__ = ["DataFormatError", "read_censored_csv", "to_jsonable", "dumps_json", "write_csv"]


class DataFormatError(DomainError):
    """Malformed input file; ``line`` is the 1-based physical line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


def _parse_delta(text: str) -> bool:
    t = text.strip()
    if t == "1":
        return True
    if t == "0":
        return False
    raise ValueError(f"delta must be 0 or 1, got {text!r}")


def read_censored_csv(path) -> CensoredSample:
    """Read a ``z,delta`` CSV file.

    The first line must be the header ``z,delta``.  Blank lines are skipped.
    The first bad row aborts the read with a :class:`DataFormatError` naming
    its line number.
    """
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise DataFormatError(f"cannot open {path}: {exc.strerror}") from None
    z, delta = [], []
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("empty file", 1) from None
        if [h.strip().lower() for h in header] != ["z", "delta"]:
            raise DataFormatError(f"expected header 'z,delta', got {','.join(header)!r}", 1)
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise DataFormatError(f"expected 2 fields, got {len(row)}", line)
            try:
                zi = float(row[0])
            except ValueError:
                raise DataFormatError(f"z is not a number: {row[0]!r}", line) from None
            if not (math.isfinite(zi) and zi > 0):
                raise DataFormatError(f"z must be finite and positive, got {row[0].strip()}", line)
            try:
                di = _parse_delta(row[1])
            except ValueError as exc:
                raise DataFormatError(str(exc), line) from None
            z.append(zi)
            delta.append(di)
    if not z:
        raise DataFormatError("no data rows")
    return CensoredSample(np.array(z), np.array(delta, dtype=bool))


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays to Python types; NaN/inf become None."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps_json(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else ""
    return str(v)


def write_csv(path, header, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])

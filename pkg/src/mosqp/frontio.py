"""Reading and writing fronts as CSV or JSON.

CSV files start with a ``# problem=<name>`` comment (plus ``sign=max`` for
maximization problems), then a header ``x1..xn,f1..fm`` and one point per
line at 17 significant digits. Objectives of maximization problems are
stored in their natural sign and re-negated on read, so a loaded
:class:`~mosqp.pareto.Front` always uses the minimized convention.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from mosqp.pareto import Front

FORMATS = ("csv", "json")


class FrontParseError(ValueError):
    """A front file could not be parsed; carries the file and line number."""

    def __init__(self, path, line: int | None, message: str):
        self.path = str(path)
        self.line = line
        where = self.path if line is None else f"{self.path}:{line}"
        super().__init__(f"{where}: {message}")


def infer_format(path, fmt: str | None = None) -> str:
    if fmt is not None:
        if fmt not in FORMATS:
            raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
        return fmt
    suffix = Path(path).suffix.lower().lstrip(".")
    return suffix if suffix in FORMATS else "csv"


def _num(v: float) -> str:
    return "%.17g" % v


def format_csv(front: Front, maximize: bool = False) -> str:
    n, m = front.x.shape[1], front.f.shape[1]
    f = -front.f if maximize else front.f
    buf = io.StringIO()
    meta = f"# problem={front.problem_name}" + (" sign=max" if maximize else "")
    buf.write(meta + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"x{i + 1}" for i in range(n)] + [f"f{j + 1}" for j in range(m)])
    for xr, fr in zip(front.x, f):
        writer.writerow([_num(v) for v in xr] + [_num(v) for v in fr])
    return buf.getvalue()


def format_json(front: Front, maximize: bool = False, config: dict | None = None,
                counters: dict | None = None) -> str:
    f = -front.f if maximize else front.f
    doc = {
        "problem": front.problem_name,
        "sign": "max" if maximize else "min",
        "config": config or {},
        "points": [{"x": xr.tolist(), "f": fr.tolist()} for xr, fr in zip(front.x, f)],
        "counters": counters or {},
    }
    return json.dumps(doc, indent=2) + "\n"


def write_front(front: Front, path, fmt: str | None = None, maximize: bool = False,
                config: dict | None = None, counters: dict | None = None) -> None:
    """Write ``front`` to ``path``; ``fmt`` defaults to the file extension."""
    kind = infer_format(path, fmt)
    if kind == "json":
        text = format_json(front, maximize, config, counters)
    else:
        text = format_csv(front, maximize)
    Path(path).write_text(text)


def _parse_meta(line: str) -> dict[str, str]:
    meta = {}
    for token in line.lstrip("#").split():
        key, sep, value = token.partition("=")
        if sep:
            meta[key] = value
    return meta


def _parse_csv(path, text: str) -> Front:
    meta: dict[str, str] = {}
    header = None
    n = m = 0
    rows_x, rows_f = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            meta.update(_parse_meta(line))
            continue
        cells = [c.strip() for c in next(csv.reader([line]))]
        if header is None:
            header = cells
            n = sum(1 for c in cells if c.startswith("x"))
            m = sum(1 for c in cells if c.startswith("f"))
            expected = [f"x{i + 1}" for i in range(n)] + [f"f{j + 1}" for j in range(m)]
            if cells != expected or m == 0:
                raise FrontParseError(path, lineno, f"bad header {cells!r}; expected x1..xn,f1..fm")
            continue
        if len(cells) != n + m:
            raise FrontParseError(path, lineno, f"expected {n + m} fields, found {len(cells)}")
        try:
            vals = [float(c) for c in cells]
        except ValueError as exc:
            raise FrontParseError(path, lineno, str(exc)) from None
        rows_x.append(vals[:n])
        rows_f.append(vals[n:])
    if header is None:
        raise FrontParseError(path, None, "missing header row")
    return _build(path, meta.get("problem", ""), meta.get("sign", "min"), rows_x, rows_f, n, m)


def _parse_json(path, text: str) -> Front:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FrontParseError(path, exc.lineno, exc.msg) from None
    if not isinstance(doc, dict) or not isinstance(doc.get("points"), list):
        raise FrontParseError(path, None, "expected an object with a 'points' list")
    rows_x, rows_f = [], []
    for i, pt in enumerate(doc["points"]):
        try:
            rows_x.append([float(v) for v in pt["x"]])
            rows_f.append([float(v) for v in pt["f"]])
        except (KeyError, TypeError, ValueError) as exc:
            raise FrontParseError(path, None, f"point {i}: {exc}") from None
    n = len(rows_x[0]) if rows_x else 0
    m = len(rows_f[0]) if rows_f else 0
    if any(len(r) != n for r in rows_x) or any(len(r) != m for r in rows_f):
        raise FrontParseError(path, None, "points have inconsistent lengths")
    return _build(path, str(doc.get("problem", "")), doc.get("sign", "min"), rows_x, rows_f, n, m)


def _build(path, problem: str, sign: str, rows_x, rows_f, n: int, m: int) -> Front:
    if sign not in ("min", "max"):
        raise FrontParseError(path, None, f"unknown sign {sign!r}")
    x = np.array(rows_x, dtype=float).reshape(-1, n)
    f = np.array(rows_f, dtype=float).reshape(-1, m)
    if sign == "max":
        f = -f
    front = Front(x, f, problem)
    front.meta["sign"] = sign
    return front


def read_front(path, fmt: str | None = None) -> Front:
    """Load a front written by :func:`write_front` (objectives minimized)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FrontParseError(path, None, exc.strerror or str(exc)) from None
    if infer_format(path, fmt) == "json":
        return _parse_json(path, text)
    return _parse_csv(path, text)

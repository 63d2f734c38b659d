"""JSON/CSV emission with stable column order and number formatting."""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any, Iterable, Sequence


def fmt(x: Any) -> str:
    """CSV cell text: floats at 15 significant digits, '.' separator."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.15g}"
    if isinstance(x, (list, tuple)):
        return json.dumps(list(x), separators=(",", ":"))
    return str(x)


def jsonable(x: Any) -> Any:
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    return x


def to_json_text(obj: Any) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=False) + "\n"


def to_csv_text(columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()

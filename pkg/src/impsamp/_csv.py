"""CSV emission: UTF-8, LF line endings, %.12g numeric formatting.

Any non-finite value in a row is a hard error so that a "successful" run
can never leave NaNs in its outputs.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .exceptions import NumericalError


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if not math.isfinite(f):
            raise NumericalError(f"non-finite value {v!r} in CSV output")
        return "%.12g" % f
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path

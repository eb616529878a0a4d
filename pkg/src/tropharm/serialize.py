"""Canonical JSON output: sorted keys, floats at 17 significant digits.

Deterministic byte-for-byte for equal inputs; 17 significant digits make the
float round trip exact.
"""
from __future__ import annotations

import json
import math

import numpy as np


def _num(x: float) -> str:
    if isinstance(x, float) and (math.isnan(x) or math.isinf(x)):
        return "null"
    return format(float(x), ".17g")


def dumps_canonical(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dumps_canonical(obj.tolist())
    if isinstance(obj, dict):
        items = [f"{json.dumps(str(k))}: {dumps_canonical(v)}" for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))]
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps_canonical(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj)!r}")

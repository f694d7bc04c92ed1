"""
Deterministic JSON and CSV writers.

Floats are rounded through the ``%.12e`` format before serialization so that
identical inputs produce byte-identical files; complex numbers are written
as ``[re, im]`` pairs.
"""

import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Union

import numpy as np
import pandas as pd

FLOAT_FORMAT = '%.12e'


def _round(x: float) -> Union[float, str]:
    if not math.isfinite(x):
        return str(x)
    return float(FLOAT_FORMAT % x)


def to_jsonable(obj: Any) -> Any:
    """Recursively convert numpy scalars/arrays, complex numbers and enums."""
    if hasattr(obj, 'to_dict') and not isinstance(obj, pd.DataFrame):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_round(float(obj.real)), _round(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj))
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps(data: Any) -> str:
    return json.dumps(to_jsonable(data), indent=2) + '\n'


def write_json(data: Any, path: Union[str, Path]) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(dumps(data), encoding='utf-8')
    return out


def write_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return out

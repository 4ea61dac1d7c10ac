"""Small result containers returned by certification checks and experiments."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from typing import Any


@dataclass
class BoundReport:
    """Outcome of a numerical certification sweep.

    satisfied is the overall verdict, constants holds the named scalar
    certificates (best constants, certified rates), details carries grids
    and per-case tables, and failures lists the sample points that broke
    a monotonicity or sign requirement, if any.
    """

    name: str
    satisfied: bool
    constants: dict[str, float]
    details: dict[str, Any] = field(default_factory=dict)
    failures: list[dict[str, Any]] = field(default_factory=list)


@dataclass
class FitResult:
    """Least-squares exponential fit log y = log amplitude - rate * t.

    flat marks series with no usable variation (rate pinned to 0).
    """

    rate: float
    amplitude: float
    r_squared: float
    flat: bool = False


def _to_jsonable(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {k: _to_jsonable(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        try:
            return obj.item()
        except (AttributeError, ValueError):
            pass
    if hasattr(obj, "tolist"):
        return obj.tolist()
    return obj


def report_to_json(report: Any, indent: int = 2) -> str:
    """Serialize any report dataclass to deterministic JSON text."""
    return json.dumps(_to_jsonable(report), indent=indent, sort_keys=True)

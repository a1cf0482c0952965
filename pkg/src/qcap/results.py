"""Result container shared by the SDP and LP bound evaluations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any


@dataclass
class BoundResult:
    """One evaluated bound.

    ``value`` is the raw program optimum; ``log_value`` is the bound in
    base-2 log domain (sign convention depends on the bound family:
    one-shot fidelity-style bounds report -log2(value), asymptotic
    rate-style bounds report +log2(value)).
    """

    name: str
    value: float
    log_value: float
    status: str
    gap: float
    wall_time: float
    certificate: Any = None

    def to_json_dict(self) -> dict:
        def _num(v: float) -> float | None:
            if v is None or (isinstance(v, float) and math.isnan(v)):
                return None
            return float(v)

        return {
            "name": self.name,
            "value": _num(self.value),
            "log_value": _num(self.log_value),
            "status": self.status,
            "gap": _num(self.gap),
            "wall_time": _num(self.wall_time),
        }

import json
import logging
import math
from fractions import Fraction
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from ..constants import TOOL_NAME

logger = logging.getLogger("Pedsafe.Reporting")


def format_number(value: Any) -> str:
    """Shortest round-trip text for floats, "num/den" for exact ratios; everything else via str()."""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if value is None:
        return ""
    return str(value)


def plain(value: Any) -> Any:
    """Convert numpy scalars and non-finite floats into JSON-friendly values."""
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, Fraction):
        return format_number(value)
    if isinstance(value, float) and not math.isfinite(value):
        return None if math.isnan(value) else repr(value)
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    return value


class Report(BaseModel):
    """One analysis result: provenance plus an ordered list of rows."""
    tool: str = TOOL_NAME
    version: str
    command: str
    seed: Optional[int] = None
    config: Dict[str, Any] = Field(default_factory=dict)
    rows: List[Dict[str, Any]] = Field(default_factory=list)
    artifacts: List[str] = Field(default_factory=list)

    def add_row(self, **values: Any) -> Dict[str, Any]:
        self.rows.append(values)
        return values

    @property
    def columns(self) -> List[str]:
        """Union of row keys in first-seen order."""
        seen: Dict[str, None] = {}
        for row in self.rows:
            for key in row:
                seen.setdefault(key, None)
        return list(seen)

    def config_json(self) -> str:
        return json.dumps(plain(self.config), sort_keys=True, separators=(",", ":"))

    def to_document(self) -> Dict[str, Any]:
        return {
            "tool": self.tool,
            "version": self.version,
            "command": self.command,
            "seed": self.seed,
            "config": plain(self.config),
            "rows": [plain(row) for row in self.rows],
            "artifacts": list(self.artifacts),
        }

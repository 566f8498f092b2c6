import json

from ..core.reporting import Report
from .base import BasePlugin


class JsonPlugin(BasePlugin):
    name = "json"
    extension = "json"
    description = "Single self-describing JSON document with provenance and rows."

    def render(self, report: Report) -> str:
        return json.dumps(report.to_document(), indent=2, allow_nan=False) + "\n"

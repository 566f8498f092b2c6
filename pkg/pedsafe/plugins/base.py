from abc import ABC, abstractmethod
from pathlib import Path
from typing import ClassVar

from ..core.reporting import Report


class BasePlugin(ABC):
    """
    A report writer. Subclasses declare the ``--format`` name they answer to
    and the file extension used when no ``--output`` path is given.
    """

    name: ClassVar[str]
    extension: ClassVar[str]
    description: ClassVar[str] = ""

    @abstractmethod
    def render(self, report: Report) -> str:
        ...

    def generate(self, report: Report, output_path: Path) -> Path:
        """Write the rendered report as UTF-8 with LF line endings."""
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, "w", encoding="utf-8", newline="") as f:
            f.write(self.render(report))
        return output_path

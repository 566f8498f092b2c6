import importlib
import inspect
import logging
import pkgutil
from typing import Dict, List

from ..core.errors import UsageError
from .base import BasePlugin

logger = logging.getLogger("Pedsafe.PluginManager")

_INFRASTRUCTURE = {"base", "manager"}


class PluginManager:
    """Report writers found in the pedsafe.plugins package, keyed by format name."""

    def __init__(self):
        self._writers: Dict[str, BasePlugin] = {}
        self._discover_plugins()

    def _discover_plugins(self):
        import pedsafe.plugins as plugins_pkg

        for info in pkgutil.iter_modules(plugins_pkg.__path__):
            if info.name in _INFRASTRUCTURE:
                continue
            try:
                module = importlib.import_module(f"{plugins_pkg.__name__}.{info.name}")
            except ImportError as e:
                logger.error(f"Skipping report writer module {info.name}: {e}")
                continue

            for _, cls in inspect.getmembers(module, inspect.isclass):
                if issubclass(cls, BasePlugin) and not inspect.isabstract(cls) and cls.__module__ == module.__name__:
                    self.register_plugin(cls())

    def register_plugin(self, writer: BasePlugin):
        if writer.name in self._writers:
            logger.warning(f"Report format '{writer.name}' registered twice; keeping {type(writer).__name__}")
        self._writers[writer.name] = writer
        logger.debug(f"Report format '{writer.name}' -> {type(writer).__name__}")

    def formats(self) -> List[str]:
        return sorted(self._writers)

    def get_plugin(self, name: str) -> BasePlugin:
        try:
            return self._writers[name]
        except KeyError:
            raise UsageError(
                f"no report writer for format '{name}' (available: {', '.join(self.formats())})", key="format"
            ) from None

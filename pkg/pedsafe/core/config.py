import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import yaml
from dotenv import load_dotenv
from pydantic import Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from ..constants import DEFAULT_CONFIG_FILENAME, ENV_PREFIX, TOOL_NAME
from .errors import UsageError
from .models import Settings

# Load environment variables from .env file
load_dotenv()

logger = logging.getLogger("Pedsafe.Config")

DEFAULTS_PATH = Path(__file__).parent.parent / "defaults.yaml"


class EnvSettings(BaseSettings):
    """Settings read from PEDSAFE_* environment variables (and .env)."""
    model_config = SettingsConfigDict(env_prefix=ENV_PREFIX, extra="ignore")

    seed: Optional[int] = Field(default=None, ge=0, lt=2**64)


def load_yaml(path: Path) -> Dict[str, Any]:
    if path.exists():
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise UsageError(f"{path} must contain a mapping at the top level")
        return data
    return {}


def _merge_dicts(base: Dict, update: Dict):
    """Recursively merge update dict into base dict."""
    for k, v in update.items():
        if isinstance(v, dict) and k in base and isinstance(base[k], dict):
            _merge_dicts(base[k], v)
        else:
            base[k] = v


def find_config_file(config_path: Optional[str] = None) -> Optional[Path]:
    """Explicit path, else ./pedsafe.yaml, else ~/.config/pedsafe/pedsafe.yaml."""
    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise UsageError(f"config file {path} does not exist", key="config")
        return path

    cwd_config = Path(DEFAULT_CONFIG_FILENAME)
    home_config = Path.home() / ".config" / TOOL_NAME / DEFAULT_CONFIG_FILENAME
    for candidate in (cwd_config, home_config):
        if candidate.exists():
            return candidate
    return None


def usage_error_from(exc: ValidationError, prefix: str = "") -> UsageError:
    """Turn the first pydantic validation failure into a UsageError naming its key."""
    first = exc.errors()[0]
    key = ".".join(str(part) for part in first["loc"])
    if prefix:
        key = f"{prefix}.{key}" if key else prefix
    message = "unknown key" if first["type"] == "extra_forbidden" else first["msg"]
    return UsageError(message, key=key or None)


def load_settings(
    config_path: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> Tuple[Settings, Optional[Path]]:
    """
    Build Settings from packaged defaults, the user config file, environment,
    and command-line overrides, in increasing priority.

    Raises:
        UsageError: for unknown keys or invalid values, naming the key.
    """
    merged = load_yaml(DEFAULTS_PATH)
    user_path = find_config_file(config_path)
    if user_path is not None:
        logger.debug(f"Using config file {user_path}")
        _merge_dicts(merged, load_yaml(user_path))

    try:
        env = EnvSettings()
    except ValidationError as e:
        raise usage_error_from(e, prefix=f"{ENV_PREFIX}SEED".lower()) from None
    if env.seed is not None and merged.get("seed") is None:
        merged["seed"] = env.seed

    if overrides:
        _merge_dicts(merged, overrides)

    try:
        settings = Settings(**merged)
    except ValidationError as e:
        raise usage_error_from(e) from None
    return settings, user_path

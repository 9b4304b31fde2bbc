import json
import logging
from pathlib import Path
from typing import Optional

from pydantic import TypeAdapter, ValidationError

from src.domain.entities.results import VerifyCriterion
from src.domain.errors import ConfigError

logger = logging.getLogger(__name__)

MANIFEST_PATH = Path(__file__).with_name("verify_manifest.json")

_manifest_adapter = TypeAdapter(dict[str, VerifyCriterion])


def load_manifest(path: Optional[str] = None) -> dict[str, VerifyCriterion]:
    """Reads the per-preset pass criteria; `path` overrides the manifest shipped with the package."""
    source = Path(path) if path is not None else MANIFEST_PATH
    try:
        raw = json.loads(source.read_text(encoding="utf-8"))
        return _manifest_adapter.validate_python(raw)
    except FileNotFoundError:
        raise ConfigError(f"verification manifest '{source}' does not exist") from None
    except (json.JSONDecodeError, ValidationError) as e:
        raise ConfigError(f"invalid verification manifest '{source}': {e}") from e


def criterion_for(manifest: dict[str, VerifyCriterion], preset_name: str) -> VerifyCriterion:
    try:
        return manifest[preset_name]
    except KeyError:
        raise ConfigError(f"no verification criterion for preset '{preset_name}'") from None

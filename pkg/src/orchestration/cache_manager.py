import json
import hashlib
from pathlib import Path
from typing import Optional

from src.config.settings import RUNTIME_SETTINGS
from .logger import setup_logger

logger = setup_logger()


class ProfileCache:
    """
    On-disk cache of exact isoperimetric profiles.

    Entries are JSON files keyed by md5(edge list, kmax).  Enumeration at
    N near the budget takes minutes, and campaigns revisit the same graphs.
    """

    def __init__(self, cache_dir: Optional[str] = None, enabled: Optional[bool] = None):
        self.enabled = RUNTIME_SETTINGS["cache_profiles"] if enabled is None else enabled
        self.cache_dir = Path(cache_dir or RUNTIME_SETTINGS["cache_directory"])
        if self.enabled:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        logger.debug(f"ProfileCache initialized (enabled={self.enabled})")

    def _get_cache_path(self, graph_key: str, kmax: int) -> Path:
        digest = hashlib.md5(f"{graph_key}|{kmax}".encode()).hexdigest()
        return self.cache_dir / f"{digest}.json"

    def get(self, graph_key: str, kmax: int) -> Optional[dict]:
        if not self.enabled:
            return None
        path = self._get_cache_path(graph_key, kmax)
        if not path.exists():
            return None
        try:
            with open(path, "r", encoding="utf-8") as f:
                cached = json.load(f)
            if cached.get("graph_key") != graph_key:
                logger.warning(f"Profile cache key mismatch at {path.name}")
                return None
            logger.debug(f"Profile cache hit {path.name}")
            return cached["content"]
        except Exception as e:
            logger.warning(f"Profile cache read failed for {path.name}: {str(e)}")
            return None

    def set(self, graph_key: str, kmax: int, content: dict) -> None:
        if not self.enabled:
            return
        path = self._get_cache_path(graph_key, kmax)
        try:
            with open(path, "w", encoding="utf-8") as f:
                json.dump({"graph_key": graph_key, "content": content}, f, sort_keys=True)
            logger.debug(f"Profile cached as {path.name}")
        except Exception as e:
            logger.warning(f"Profile cache write failed for {path.name}: {str(e)}")

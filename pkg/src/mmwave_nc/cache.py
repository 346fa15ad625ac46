"""Disk cache for exact bound evaluations, enabled by MMWAVE_NC_CACHE_DIR."""

import hashlib
from typing import Any, Callable, Optional

from diskcache import Cache

from mmwave_nc.logging_config import get_logger
from mmwave_nc.shared import get_settings

logger = get_logger(__name__)

# Global diskcache instance, None when caching is disabled
_cache: Optional[Cache] = None


def get_cache() -> Optional[Cache]:
    """Get or create the global diskcache instance, or None if no cache directory is configured."""
    global _cache
    if _cache is None:
        cache_dir = get_settings().cache_dir
        if not cache_dir:
            return None
        _cache = Cache(cache_dir, size_limit=256 * 1024 * 1024)
        logger.info(f"Initialised bound cache at {cache_dir}")
    return _cache


def close_cache():
    global _cache
    if _cache is not None:
        _cache.close()
        _cache = None


class BoundCache:
    """Values of pure bound functions keyed by name and arguments."""

    CACHE_PREFIX = "bound:"

    def _get_cache_key(self, name: str, args: tuple) -> str:
        digest = hashlib.sha256(repr(args).encode()).hexdigest()
        return f"{self.CACHE_PREFIX}{name}:{digest}"

    def get_or_compute(self, name: str, args: tuple, compute: Callable[[], Any]) -> Any:
        cache = get_cache()
        if cache is None:
            return compute()
        key = self._get_cache_key(name, args)
        value = cache.get(key)
        if value is not None:
            return value
        value = compute()
        cache.set(key, value)
        logger.debug(f"Cached {name}{args}")
        return value

    def clear(self):
        """Clear all bound cache entries."""
        cache = get_cache()
        if cache is None:
            return
        count = 0
        for key in list(cache):
            if isinstance(key, str) and key.startswith(self.CACHE_PREFIX):
                cache.delete(key)
                count += 1
        logger.info(f"Cleared {count} bound cache entries")

    def get_stats(self) -> dict:
        cache = get_cache()
        if cache is None:
            return {"enabled": False}
        keys = [k for k in cache if isinstance(k, str) and k.startswith(self.CACHE_PREFIX)]
        return {"enabled": True, "total_entries": len(keys), "cache_directory": cache.directory}


bound_cache = BoundCache()

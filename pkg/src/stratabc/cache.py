from functools import lru_cache

from diskcache import Cache

from stratabc.config import get_settings


@lru_cache
def get_cache() -> Cache:
    """Disk cache for observed datasets and prior-predictive pilots.

    Lives under ``Settings.cache_dir`` (relative to where the CLI is run).
    Size limit and LRU eviction come from the settings as well.
    """
    settings = get_settings()
    return Cache(directory=str(settings.cache_dir), size_limit=settings.cache_size_limit)

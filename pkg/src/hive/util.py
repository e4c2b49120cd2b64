"""Small shared helpers."""

from __future__ import annotations

import os


def worker_count() -> int:
    """Worker-pool bound, overridable through HIVE_THREADS."""
    env = os.environ.get("HIVE_THREADS")
    if env:
        try:
            n = int(env)
            if n >= 1:
                return n
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)

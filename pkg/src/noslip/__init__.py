"""Rolling-disk (no-slip) billiards under a constant force."""

import hashlib
import importlib
import os
import tempfile
from pathlib import Path

import numba

__version__ = "0.1.0"

# numba stamps each cache entry with its own source file only, so the event
# loop, which inlines the root solver, would keep a stale copy after an edit
# to numerics.py.  Kernels are therefore cached under a directory named by a
# hash of every jit source; the global setting is restored once they exist.
_JIT_SOURCES = ("numerics.py", "_engine.py")


def _kernel_cache_dir() -> str:
    here = Path(__file__).parent
    digest = hashlib.sha256()
    for name in _JIT_SOURCES:
        digest.update((here / name).read_bytes())
    tag = f"noslip-{digest.hexdigest()[:16]}"
    base = numba.config.CACHE_DIR or str(here / "__pycache__")
    path = os.path.join(base, tag)
    try:
        os.makedirs(path, exist_ok=True)
    except OSError:
        path = os.path.join(tempfile.gettempdir(), tag)
    return path


_previous = numba.config.CACHE_DIR
numba.config.CACHE_DIR = _kernel_cache_dir()
try:
    for _name in ("numerics", "_engine"):
        importlib.import_module(f".{_name}", __name__)
finally:
    numba.config.CACHE_DIR = _previous

"""Scan-kernel backend selection: compiled extension with numpy fallback.

The compiled module is optional. ``LANEPOST_BACKEND`` can force a choice:
``auto`` (default), ``compiled``, or ``pure``.
"""

from __future__ import annotations

import os
from types import ModuleType

_CACHE: dict[str, tuple[ModuleType, str]] = {}


def available_backends() -> list[str]:
    names = []
    try:
        from . import _scan  # noqa: F401

        names.append("compiled")
    except ImportError:
        pass
    names.append("pure")
    return names


def get_backend(name: str | None = None) -> tuple[ModuleType, str]:
    """Return (module, label) for the requested scan backend."""
    name = name or os.environ.get("LANEPOST_BACKEND", "auto")
    if name in _CACHE:
        return _CACHE[name]
    if name in ("auto", "compiled"):
        try:
            from . import _scan

            _CACHE[name] = (_scan, "compiled")
            return _CACHE[name]
        except ImportError:
            if name == "compiled":
                raise RuntimeError(
                    "compiled scan kernel requested but not built; "
                    "run 'pip install -e .' or set LANEPOST_BACKEND=pure"
                ) from None
    elif name != "pure":
        raise ValueError(f"unknown backend {name!r}")
    from . import _scan_py

    _CACHE[name] = (_scan_py, "pure")
    return _CACHE[name]

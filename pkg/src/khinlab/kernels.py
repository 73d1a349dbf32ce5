"""Scan-kernel backend selection.

The compiled Cython kernel is preferred when built; the numpy mirror is
the fallback.  KHINLAB_BACKEND=compiled|numpy forces a choice (forcing
`compiled` on a build without the extension is an error).  Both
backends implement the same margin protocol, so results are identical
after the caller's exact border resolution.
"""

from __future__ import annotations

import os

from .errors import ConfigError

_IMPL = None
_BACKEND: str | None = None


def _load() -> None:
    global _IMPL, _BACKEND
    if _IMPL is not None:
        return
    choice = os.environ.get("KHINLAB_BACKEND", "").strip().lower()
    if choice not in ("", "compiled", "numpy"):
        raise ConfigError(f"unknown backend {choice!r}")
    if choice in ("", "compiled"):
        try:
            from . import _scan as impl

            _IMPL, _BACKEND = impl, "compiled"
            return
        except ImportError:
            if choice == "compiled":
                raise ConfigError(
                    "KHINLAB_BACKEND=compiled but the extension is not built"
                )
    from . import _scan_py as impl

    _IMPL, _BACKEND = impl, "numpy"


def backend_name() -> str:
    _load()
    assert _BACKEND is not None
    return _BACKEND


def scan_hits(xs, gs, q2_vals, run_ptr, run_start, run_len,
              theta, margin, max_steps, hits, border_buf):
    _load()
    return _IMPL.scan_hits(
        xs, gs, q2_vals, run_ptr, run_start, run_len,
        theta, margin, max_steps, hits, border_buf,
    )

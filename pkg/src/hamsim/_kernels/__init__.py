"""Kernel backend selection.

The compiled Cython kernel is used when present; otherwise the pure-numpy
fallback, which has an identical signature and semantics.  HAMSIM_KERNEL=py
or =cy forces the choice (cy raises if the extension is unavailable).
"""

from __future__ import annotations

import os

from . import _one_sparse_py

_forced = os.environ.get("HAMSIM_KERNEL", "").strip().lower()

if _forced == "py":
    BACKEND = "py"
    apply_plan = _one_sparse_py.apply_plan
else:
    try:
        from . import _one_sparse_cy

        BACKEND = "cy"
        apply_plan = _one_sparse_cy.apply_plan
    except ImportError:
        if _forced == "cy":
            raise ImportError(
                "HAMSIM_KERNEL=cy requested but the compiled kernel is not built"
            )
        BACKEND = "py"
        apply_plan = _one_sparse_py.apply_plan


def available_backends() -> list[str]:
    out = ["py"]
    try:
        from . import _one_sparse_cy  # noqa: F401
    except ImportError:
        return out
    out.append("cy")
    return out


def get_kernel(name: str | None = None):
    """apply_plan for a specific backend; None gives the default choice."""
    if name is None:
        return apply_plan
    if name == "py":
        return _one_sparse_py.apply_plan
    if name == "cy":
        from . import _one_sparse_cy

        return _one_sparse_cy.apply_plan
    raise ValueError(f"unknown kernel backend {name!r}")

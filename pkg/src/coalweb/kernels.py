"""Kernel backend selection.

The compiled extension is used when it imports; set ``COALWEB_PURE=1`` to
force the numpy implementations.  ``BACKEND`` names the active one.
"""

from __future__ import annotations

import os

from . import _pykernels

_NAMES = (
    "arrows",
    "walk_finals",
    "walk_tracks",
    "meet_rows",
    "tightness_hits",
    "first_meeting",
    "pairwise_sup",
    "modulus",
)


def _load():
    if os.environ.get("COALWEB_PURE", "") not in ("", "0"):
        return _pykernels, "python"
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return _pykernels, "python"
    return _kernels, "compiled"


_impl, BACKEND = _load()

arrows = _impl.arrows
walk_finals = _impl.walk_finals
walk_tracks = _impl.walk_tracks
meet_rows = _impl.meet_rows
tightness_hits = _impl.tightness_hits
first_meeting = _impl.first_meeting
pairwise_sup = _impl.pairwise_sup
modulus = _impl.modulus


def backend(name: str):
    """Return the kernel module for ``"python"`` or ``"compiled"``."""
    if name == "python":
        return _pykernels
    if name == "compiled":
        from . import _kernels  # type: ignore[attr-defined]

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")

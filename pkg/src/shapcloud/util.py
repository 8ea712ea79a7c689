"""Small shared helpers: seed derivation and deterministic number formatting."""

from __future__ import annotations

import hashlib


def derive_seed(*parts) -> int:
    """Derive a 64-bit seed from a tuple of parts (ints or strings).

    Stage seeds and per-task seeds are all derived this way from a single
    master seed, so results never depend on worker count or stage order.
    """
    text = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def fmt_float(x) -> str:
    """Shortest exact decimal representation; round-trips bit-identically."""
    return repr(float(x))

"""Stable seed derivation independent of process hash randomisation."""

import hashlib


def derive_seed(*parts):
    """Hash arbitrary parts into a 64-bit unsigned seed."""
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(repr(p).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")

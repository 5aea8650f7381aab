"""Labeled seed derivation so one root seed reproducibly drives every module."""

import hashlib


def derive_seed(root: int, *labels: object) -> int:
    """Derive a stable 63-bit seed from a root seed and a label path.

    The derivation is a SHA-256 over the decimal root and the stringified
    labels, so it is stable across processes, platforms and Python versions
    (unlike hash()).
    """
    h = hashlib.sha256()
    h.update(str(int(root)).encode())
    for label in labels:
        h.update(b"/")
        h.update(str(label).encode())
    return int.from_bytes(h.digest()[:8], "little") & (2**63 - 1)

"""Seed derivation and content digests shared by generators and reports."""
import hashlib
import json


def derive_seed(*parts) -> int:
    """A 63-bit seed determined by ``parts``; stable across runs and platforms."""
    key = "\x1f".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big") >> 1


def digest(obj) -> str:
    """sha256 of the canonical JSON form of ``obj``."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def in_validation(seed: int, index: int, fraction: float) -> bool:
    """Deterministic train/validation assignment of record ``index``."""
    h = hashlib.sha256(f"split:{seed}:{index}".encode()).digest()
    return int.from_bytes(h[:8], "big") / 2**64 < fraction

import hashlib
import json
from pathlib import Path
from typing import Union

from src.modules.table import Table, to_record


def derive_seed(seed: int, *parts: object) -> int:
    """
    Derives a 64-bit sub-seed from a global seed and a stable key, such as
    (table id, column, purpose). Results never depend on scheduling order.

    Args:
        seed (int): The global seed.
        *parts (object): Components of the key; each is rendered with str().

    Returns:
        int: A seed in [0, 2**64).
    """
    payload = "\x1f".join(str(p) for p in (seed, *parts)).encode("utf-8")
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")


def file_digest(path: Union[str, Path]) -> str:
    sha256_hash = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 16), b""):
            sha256_hash.update(block)
    return sha256_hash.hexdigest()


def table_digest(table: Table) -> str:
    payload = json.dumps(to_record(table), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()

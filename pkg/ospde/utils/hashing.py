"""
Checksum helpers for run manifests.
"""

import hashlib
import json
from typing import Any


def calculate_checksum(file_path) -> str:
    """
    Calculate SHA-256 checksum of a file.

    Args:
        file_path: Path to file

    Returns:
        Hexadecimal checksum string
    """
    hash_sha256 = hashlib.sha256()
    with open(file_path, 'rb') as f:
        for chunk in iter(lambda: f.read(4096), b""):
            hash_sha256.update(chunk)
    return hash_sha256.hexdigest()


def config_hash(config: Any) -> str:
    """SHA-256 of the canonical JSON form (sorted keys, no whitespace) of a config."""
    payload = json.dumps(config, sort_keys=True, separators=(',', ':')).encode('utf-8')
    return hashlib.sha256(payload).hexdigest()

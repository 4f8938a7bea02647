"""
Common utility functions.
"""

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Mapping, Optional

OUTPUT_DIR_ENV = "PRIVCON_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "results"


def create_directory(path: Path, exist_ok: bool = True) -> None:
    """Create a directory if it doesn't exist."""
    path.mkdir(parents=True, exist_ok=exist_ok)


def write_file(path: Path, content: str) -> None:
    """Write content to a file, creating parent directories."""
    path.parent.mkdir(parents=True, exist_ok=True)
    # newline="" keeps output byte-identical across platforms
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(content)


def resolve_output_dir(output_dir: Optional[str] = None) -> Path:
    """Output directory from the flag, then the environment, then ./results."""
    if output_dir:
        return Path(output_dir)
    return Path(os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR))


def canonical_json(data: Mapping[str, Any]) -> str:
    """Key-sorted compact JSON, used for provenance headers and hashing."""
    return json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)


def stable_hash(data: Mapping[str, Any], digest_size: int = 8) -> str:
    """Hex digest of a mapping that does not depend on dict ordering or the process."""
    return hashlib.blake2b(canonical_json(data).encode("utf-8"), digest_size=digest_size).hexdigest()


def format_bits(value: float) -> str:
    """Format a mutual-information value in bits, with the divergent case spelled out."""
    if value == float("inf"):
        return "∞"
    return f"{value:.4f}"

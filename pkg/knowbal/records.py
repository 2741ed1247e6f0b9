"""
Line-record artifact files.

Layout: one header object, one compact JSON record per line, and a final
``{"checksum": "sha256:<hex>"}`` line computed over every preceding byte.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Tuple, Union

from .core.errors import CatalogChecksumError, CatalogFormatError, CatalogVersionError

PathLike = Union[str, Path]


def _dump(obj: Dict[str, Any]) -> str:
    return json.dumps(obj, separators=(",", ":"))


def render_records(header: Dict[str, Any], records: Iterable[Dict[str, Any]]) -> str:
    """Serialize header and records, appending the checksum line."""
    lines = [_dump(header)]
    lines.extend(_dump(record) for record in records)
    body = "\n".join(lines) + "\n"
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    return body + _dump({"checksum": f"sha256:{digest}"}) + "\n"


def write_records(path: PathLike, header: Dict[str, Any], records: Iterable[Dict[str, Any]]) -> None:
    """Write an artifact file atomically (temp file, then rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(render_records(header, records), encoding="utf-8")
    tmp.replace(path)


def read_records(
    path: PathLike, expected_format: str, expected_version: int
) -> Tuple[Dict[str, Any], List[Dict[str, Any]]]:
    """
    Read and verify an artifact file.

    Args:
        path: File to read
        expected_format: Required value of the header ``format`` field
        expected_version: Required value of the header ``version`` field

    Returns:
        Tuple of (header, records)
    """
    text = Path(path).read_text(encoding="utf-8")
    if not text.endswith("\n"):
        raise CatalogFormatError(f"{path}: truncated file")
    lines = text[:-1].split("\n")
    if len(lines) < 2:
        raise CatalogFormatError(f"{path}: missing header or checksum")

    try:
        parsed = [json.loads(line) for line in lines]
    except json.JSONDecodeError as e:
        raise CatalogFormatError(f"{path}: malformed record: {e}") from e

    trailer = parsed[-1]
    if not isinstance(trailer, dict) or set(trailer) != {"checksum"}:
        raise CatalogFormatError(f"{path}: missing checksum line (truncated file?)")

    header = parsed[0]
    if not isinstance(header, dict) or header.get("format") != expected_format:
        raise CatalogFormatError(f"{path}: not a {expected_format} file")
    if header.get("version") != expected_version:
        raise CatalogVersionError(
            f"{path}: unsupported version {header.get('version')!r}, expected {expected_version}"
        )

    body = "\n".join(lines[:-1]) + "\n"
    digest = "sha256:" + hashlib.sha256(body.encode("utf-8")).hexdigest()
    if trailer["checksum"] != digest:
        raise CatalogChecksumError(f"{path}: checksum mismatch")

    return header, parsed[1:-1]

"""Checksum-verifying dataset fetch helper.

The toolkit never bundles the datasets (licensing); this helper downloads
a file the user points it at and refuses to keep anything that does not
match the expected sha256.
"""

from __future__ import annotations

import urllib.request
from pathlib import Path

from ..corpus import file_sha256
from ..errors import ChecksumMismatchError


def fetch(url: str, dest: str | Path, sha256: str, overwrite: bool = False) -> Path:
    """Download ``url`` to ``dest`` and verify its digest.

    An existing destination that already matches is left alone. A digest
    mismatch removes the partial download and raises.
    """
    dest = Path(dest)
    sha256 = sha256.lower().strip()
    if dest.is_file() and not overwrite:
        actual = file_sha256(dest)
        if actual == sha256:
            return dest
        raise ChecksumMismatchError(
            f"{dest} already exists with sha256 {actual}, expected {sha256}; "
            "pass overwrite to replace it"
        )

    dest.parent.mkdir(parents=True, exist_ok=True)
    partial = dest.with_suffix(dest.suffix + ".part")
    with urllib.request.urlopen(url) as response, partial.open("wb") as out:
        while True:
            chunk = response.read(1 << 20)
            if not chunk:
                break
            out.write(chunk)

    actual = file_sha256(partial)
    if actual != sha256:
        partial.unlink(missing_ok=True)
        raise ChecksumMismatchError(f"download of {url} has sha256 {actual}, expected {sha256}")
    partial.replace(dest)
    return dest


def verify(path: str | Path, sha256: str) -> bool:
    """True when the file exists and matches the digest."""
    path = Path(path)
    return path.is_file() and file_sha256(path) == sha256.lower().strip()

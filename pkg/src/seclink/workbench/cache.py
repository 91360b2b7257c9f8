"""Content-addressed result cache.

Records live as ``<key>.json`` in the cache directory, where the key hashes
the config digest, the command (with its rate arguments), the seed and the
tool version.  Writes go to a temporary file that is renamed into place.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

from seclink import __version__

CACHE_ENV = "SECLINK_CACHE_DIR"


class CacheError(OSError):
    pass


@dataclass(frozen=True)
class ResultRecord:
    digest: str
    command: str
    seed: int
    tool_version: str
    outputs: dict
    timestamp: str = ""

    def key(self) -> str:
        return record_key(self.digest, self.command, self.seed, self.tool_version)


def record_key(digest: str, command: str, seed: int, tool_version: str = __version__) -> str:
    payload = json.dumps([digest, command, int(seed), tool_version], separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


def default_cache_dir() -> Path:
    env = os.environ.get(CACHE_ENV)
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or os.path.join(os.path.expanduser("~"), ".cache")
    return Path(base) / "seclink"


class ResultCache:
    def __init__(self, root: str | os.PathLike | None = None):
        self.root = Path(root) if root is not None else default_cache_dir()

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def lookup(self, digest: str, command: str, seed: int, tool_version: str = __version__) -> ResultRecord | None:
        path = self._path(record_key(digest, command, seed, tool_version))
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (FileNotFoundError, json.JSONDecodeError):
            return None
        rec = ResultRecord(**data)
        # the version is in the key, but a hand-copied file must not slip through
        if (rec.digest, rec.command, rec.seed, rec.tool_version) != (digest, command, seed, tool_version):
            return None
        return rec

    def store(self, record: ResultRecord) -> Path:
        if not record.timestamp:
            stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
            record = ResultRecord(**{**asdict(record), "timestamp": stamp})
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=self.root, prefix=".tmp-", suffix=".json")
        except OSError as exc:
            raise CacheError(f"cache directory {self.root} is not writable: {exc}") from exc
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(asdict(record), fh, sort_keys=True, indent=1)
            os.replace(tmp, self._path(record.key()))
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        return self._path(record.key())

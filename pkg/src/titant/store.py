"""Date-versioned column-family feature store.

Each version is one immutable binary snapshot file holding, per user
row-key, the "basic" family (52 feature qualifiers) and the "embedding"
family (one qualifier per dimension). A text manifest lists versions and
the latest pointer; publishes write the snapshot first and swap the
manifest in atomically with os.replace, so a crashed publish leaves no
readable partial version.

Snapshot encoding (documented contract, bit-exact round trip):
  header line  b"titant-store <version_date> <n_rows> <dim>\\n"
  per row      u16 key length | utf-8 user key | 52 float64 | dim float64
All integers and floats little-endian.

Reads go through an in-memory index (user -> row) built once per version
at open; get_latest never touches the manifest file. Many readers and one
publisher can share a Store: the latest pointer is swapped as a single
reference, so a reader sees either the old version or the new one.
"""

from __future__ import annotations

import os
import struct
import threading
from datetime import date

import numpy as np

from .ingest import N_BASIC_FEATURES

_MAGIC = b"titant-store"


class StoreError(RuntimeError):
    pass


class _Version:
    """Loaded snapshot: arrays plus the user -> row index."""

    def __init__(self, version_date: date, users: list[str], basic: np.ndarray,
                 embedding: np.ndarray):
        self.version_date = version_date
        self.users = users
        self.basic = basic
        self.embedding = embedding
        self.index = {u: i for i, u in enumerate(users)}

    @property
    def dim(self) -> int:
        return self.embedding.shape[1]


class FeatureStore:
    """Directory-backed store; open existing or start empty."""

    def __init__(self, root):
        self.root = str(root)
        os.makedirs(self.root, exist_ok=True)
        self._lock = threading.Lock()
        self._versions: dict[date, _Version] = {}
        self._latest: _Version | None = None
        for d in self._manifest_dates():
            v = _read_snapshot(self._snapshot_path(d))
            self._versions[d] = v
        if self._versions:
            self._latest = self._versions[max(self._versions)]

    # -- write path ---------------------------------------------------------

    def publish_version(self, version_date: date, rows) -> date:
        """Publish {user: (basic52, embedding)} as an immutable version.

        Atomic: the snapshot is fully written and validated before the
        manifest (and the in-memory pointer) move. The new version becomes
        latest only if its date exceeds every prior version's.
        """
        if not rows:
            raise StoreError("cannot publish an empty version")
        users, basic, embedding = _validate_rows(rows)
        with self._lock:
            if version_date in self._versions:
                raise StoreError(f"version {version_date.isoformat()} already published")
            snap = self._snapshot_path(version_date)
            tmp = snap + ".tmp"
            _write_snapshot(tmp, version_date, users, basic, embedding)
            os.replace(tmp, snap)
            version = _Version(version_date, users, basic, embedding)
            dates = sorted(self._versions) + [version_date]
            _write_manifest(os.path.join(self.root, "manifest.txt"), dates)
            self._versions[version_date] = version
            if self._latest is None or version_date > self._latest.version_date:
                self._latest = version
        return version_date

    # -- read path ----------------------------------------------------------

    def get_latest(self, user_id: str):
        """(basic, embedding, version_date) from the latest version, or
        None when the user has no row there."""
        latest = self._latest
        if latest is None:
            raise StoreError("no versions published")
        i = latest.index.get(user_id)
        if i is None:
            return None
        return latest.basic[i], latest.embedding[i], latest.version_date

    def get_at(self, version_date: date, user_id: str):
        v = self._versions.get(version_date)
        if v is None:
            raise StoreError(f"no version for {version_date.isoformat()}")
        i = v.index.get(user_id)
        if i is None:
            return None
        return v.basic[i], v.embedding[i], v.version_date

    def latest_date(self) -> date:
        latest = self._latest
        if latest is None:
            raise StoreError("no versions published")
        return latest.version_date

    def versions(self) -> list[date]:
        return sorted(self._versions)

    @property
    def dim(self) -> int:
        latest = self._latest
        if latest is None:
            raise StoreError("no versions published")
        return latest.dim

    # -- internals ----------------------------------------------------------

    def _snapshot_path(self, d: date) -> str:
        return os.path.join(self.root, f"v{d.isoformat()}.snap")

    def _manifest_dates(self) -> list[date]:
        path = os.path.join(self.root, "manifest.txt")
        if not os.path.exists(path):
            return []
        dates = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                parts = line.split()
                if len(parts) == 2 and parts[0] == "version":
                    dates.append(date.fromisoformat(parts[1]))
        return dates


def _validate_rows(rows):
    users = list(rows.keys())
    dim = None
    for u in users:
        entry = rows[u]
        if entry is None or len(entry) != 2:
            raise StoreError(f"row for {u!r} must carry (basic, embedding) families")
        b, e = entry
        if b is None or len(b) != N_BASIC_FEATURES:
            raise StoreError(f"row for {u!r} is missing a complete basic family")
        if e is None or len(e) == 0:
            raise StoreError(f"row for {u!r} is missing the embedding family")
        if dim is None:
            dim = len(e)
        elif len(e) != dim:
            raise StoreError(f"row for {u!r} has embedding arity {len(e)}, expected {dim}")
    basic = np.array([np.asarray(rows[u][0], dtype=np.float64) for u in users])
    embedding = np.array([np.asarray(rows[u][1], dtype=np.float64) for u in users])
    if not (np.isfinite(basic).all() and np.isfinite(embedding).all()):
        raise StoreError("feature values must be finite")
    return users, basic, embedding


def _write_snapshot(path, version_date, users, basic, embedding):
    dim = embedding.shape[1]
    with open(path, "wb") as fh:
        fh.write(_MAGIC + f" {version_date.isoformat()} {len(users)} {dim}\n".encode())
        for i, u in enumerate(users):
            key = u.encode("utf-8")
            fh.write(struct.pack("<H", len(key)))
            fh.write(key)
            fh.write(basic[i].astype("<f8").tobytes())
            fh.write(embedding[i].astype("<f8").tobytes())
        fh.flush()
        os.fsync(fh.fileno())


def _read_snapshot(path) -> _Version:
    with open(path, "rb") as fh:
        blob = fh.read()
    eol = blob.index(b"\n")
    header = blob[:eol].decode("utf-8").split()
    if header[0].encode() != _MAGIC:
        raise StoreError(f"not a snapshot file: {path}")
    version_date = date.fromisoformat(header[1])
    n, dim = int(header[2]), int(header[3])
    users = []
    basic = np.empty((n, N_BASIC_FEATURES), dtype=np.float64)
    embedding = np.empty((n, dim), dtype=np.float64)
    view = memoryview(blob)
    pos = eol + 1
    row_bytes = 8 * (N_BASIC_FEATURES + dim)
    for i in range(n):
        (klen,) = struct.unpack_from("<H", view, pos)
        pos += 2
        users.append(bytes(view[pos:pos + klen]).decode("utf-8"))
        pos += klen
        row = np.frombuffer(view, dtype="<f8", count=N_BASIC_FEATURES + dim, offset=pos)
        basic[i] = row[:N_BASIC_FEATURES]
        embedding[i] = row[N_BASIC_FEATURES:]
        pos += row_bytes
    return _Version(version_date, users, basic, embedding)


def _write_manifest(path, dates: list[date]) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        for d in dates:
            fh.write(f"version {d.isoformat()}\n")
        fh.write(f"latest {max(dates).isoformat()}\n")
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)

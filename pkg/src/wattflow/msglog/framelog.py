"""Append-only frame files: the storage primitive behind topic partitions.

A frame is ``[u32 rest][u32 key_len][key][value]`` (big-endian), where
``rest`` counts everything after itself. A sidecar ``.meta`` JSON, replaced
atomically after every append, records the durable byte size, the message
count, and a sparse offset index. Readers trust only bytes below the meta
size, so a torn tail left by a killed writer is invisible until the next
appender truncates it away. Appends are serialized with an ``flock`` on a
sibling ``.lock`` file, which makes the file safe to share between processes.
"""

from __future__ import annotations

import fcntl
import json
import os
import struct
import threading
from pathlib import Path

HEADER = struct.Struct(">I")
KEYLEN = struct.Struct(">I")
INDEX_STRIDE = 512
_READ_CHUNK = 1 << 19


class StorageError(RuntimeError):
    """The on-disk log state is inconsistent with its metadata."""


def frame(key: bytes, value: bytes) -> bytes:
    return HEADER.pack(4 + len(key) + len(value)) + KEYLEN.pack(len(key)) + key + value


class FrameLog:
    """One append-only frame file plus its meta sidecar."""

    def __init__(self, path: str | Path, fsync: bool = False):
        self.path = Path(path)
        self.meta_path = self.path.with_suffix(".meta")
        self.lock_path = self.path.with_suffix(".lock")
        self.fsync = fsync
        self._fd = -1
        self._lock_fd = -1
        self._thread_lock = threading.Lock()
        self._meta_cache: dict | None = None

    def _ensure_open(self):
        if self._fd < 0:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fd = os.open(self.path, os.O_RDWR | os.O_CREAT, 0o644)

    def close(self):
        for attr in ("_fd", "_lock_fd"):
            fd = getattr(self, attr)
            if fd >= 0:
                os.close(fd)
                setattr(self, attr, -1)

    # meta handling

    def _read_meta(self) -> dict:
        # Sizes only grow, so a cached meta stays valid exactly while the
        # data file's size equals it; one fstat replaces a JSON parse on the
        # hot path. A grown file means another writer landed: reload.
        cached = self._meta_cache
        if cached is not None and self._fd >= 0:
            try:
                if os.fstat(self._fd).st_size == cached["size"]:
                    return cached
            except OSError:
                pass
        meta = self._load_meta_file()
        self._meta_cache = meta
        return meta

    def _load_meta_file(self) -> dict:
        try:
            with open(self.meta_path, "rb") as f:
                return json.loads(f.read())
        except FileNotFoundError:
            if self.path.exists() and self.path.stat().st_size > 0:
                return self._rebuild_meta()
            return {"size": 0, "count": 0, "index": []}

    def _rebuild_meta(self) -> dict:
        # meta lost but data present: walk every complete frame
        self._ensure_open()
        size = os.fstat(self._fd).st_size
        pos = 0
        count = 0
        index: list[list[int]] = []
        while pos + 4 <= size:
            rest = HEADER.unpack(os.pread(self._fd, 4, pos))[0]
            if pos + 4 + rest > size:
                break
            if count % INDEX_STRIDE == 0:
                index.append([count, pos])
            pos += 4 + rest
            count += 1
        return {"size": pos, "count": count, "index": index}

    def _write_meta(self, meta: dict):
        tmp = self.meta_path.with_suffix(".meta.tmp")
        data = json.dumps(meta, separators=(",", ":")).encode()
        with open(tmp, "wb") as f:
            f.write(data)
            if self.fsync:
                os.fsync(f.fileno())
        os.replace(tmp, self.meta_path)
        self._meta_cache = meta

    # appending

    def append_batch(self, entries: list[tuple[bytes, bytes]]) -> int:
        """Append frames for ``entries`` and return the offset of the first one."""
        if not entries:
            raise ValueError("empty batch")
        self._ensure_open()
        with self._thread_lock:
            if self._lock_fd < 0:
                self._lock_fd = os.open(self.lock_path, os.O_RDWR | os.O_CREAT, 0o644)
            fcntl.flock(self._lock_fd, fcntl.LOCK_EX)
            try:
                meta = self._read_meta()
                size, count = meta["size"], meta["count"]
                index = list(meta["index"])  # never mutate a cached snapshot
                real = os.fstat(self._fd).st_size
                if real > size:
                    os.ftruncate(self._fd, size)  # torn tail from a killed writer
                elif real < size:
                    raise StorageError(
                        f"{self.path}: file shorter ({real}) than meta size ({size})"
                    )
                buf = bytearray()
                pos = size
                for i, (key, value) in enumerate(entries):
                    if (count + i) % INDEX_STRIDE == 0:
                        index.append([count + i, pos])
                    f = frame(key, value)
                    buf += f
                    pos += len(f)
                os.pwrite(self._fd, bytes(buf), size)
                if self.fsync:
                    os.fsync(self._fd)
                self._write_meta({"size": pos, "count": count + len(entries), "index": index})
                return count
            finally:
                fcntl.flock(self._lock_fd, fcntl.LOCK_UN)

    def append(self, key: bytes, value: bytes) -> int:
        return self.append_batch([(key, value)])

    # reading

    def count(self) -> int:
        return self._read_meta()["count"]

    def _locate(self, meta: dict, offset: int) -> int:
        """Byte position of message ``offset``, via the sparse index plus a walk."""
        base_off, base_pos = 0, 0
        for ent_off, ent_pos in meta["index"]:
            if ent_off <= offset:
                base_off, base_pos = ent_off, ent_pos
            else:
                break
        pos = base_pos
        for _ in range(offset - base_off):
            rest = HEADER.unpack(os.pread(self._fd, 4, pos))[0]
            pos += 4 + rest
        return pos

    def read_from(
        self,
        offset: int,
        max_messages: int,
        pos_hint: int | None = None,
    ) -> tuple[list[tuple[int, bytes, bytes]], int]:
        """Read up to ``max_messages`` complete frames starting at ``offset``.

        Returns ``(messages, next_byte_pos)`` where each message is
        ``(offset, key, value)``; ``next_byte_pos`` can be passed back as
        ``pos_hint`` for the following sequential read.
        """
        meta = self._read_meta()
        size, count = meta["size"], meta["count"]
        if offset >= count or max_messages <= 0:
            return [], pos_hint if pos_hint is not None else size
        self._ensure_open()
        pos = pos_hint if pos_hint is not None else self._locate(meta, offset)
        out: list[tuple[int, bytes, bytes]] = []
        buf = b""
        buf_start = pos
        cur = offset
        while len(out) < max_messages and cur < count:
            rel = pos - buf_start
            if rel + 8 > len(buf):
                buf = os.pread(self._fd, min(_READ_CHUNK, size - pos), pos)
                buf_start = pos
                rel = 0
                if len(buf) < 8:
                    break
            rest = HEADER.unpack_from(buf, rel)[0]
            if rel + 4 + rest > len(buf):
                if 4 + rest > _READ_CHUNK:  # oversized frame: read it directly
                    raw = os.pread(self._fd, 4 + rest, pos)
                    if len(raw) < 4 + rest:
                        break
                    klen = KEYLEN.unpack_from(raw, 4)[0]
                    out.append((cur, raw[8 : 8 + klen], raw[8 + klen : 4 + rest]))
                    pos += 4 + rest
                    cur += 1
                    continue
                buf = os.pread(self._fd, min(_READ_CHUNK, size - pos), pos)
                buf_start = pos
                rel = 0
                if len(buf) < 4 + rest:
                    break
            klen = KEYLEN.unpack_from(buf, rel + 4)[0]
            body = rel + 8
            out.append((cur, buf[body : body + klen], buf[body + klen : rel + 4 + rest]))
            pos += 4 + rest
            cur += 1
        return out, pos

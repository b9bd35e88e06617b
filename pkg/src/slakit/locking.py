"""Single-writer discipline per transcript.

An advisory ``<id>.lock`` file marks the writer; its presence means busy.
Readers never take the lock.  The file holds the owner's pid for post-mortem
diagnosis; stale locks are the operator's to remove.
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from pathlib import Path

from slakit.errors import LockHeld


@contextmanager
def transcript_lock(data_dir: str | os.PathLike, transcript_id: str):
    path = Path(data_dir) / f"{transcript_id}.lock"
    try:
        fd = os.open(path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise LockHeld(
            f"{path} exists; another writer owns transcript {transcript_id!r}"
        ) from None
    try:
        os.write(fd, f"{os.getpid()}\n".encode())
        os.close(fd)
        yield path
    finally:
        try:
            os.unlink(path)
        except FileNotFoundError:
            pass

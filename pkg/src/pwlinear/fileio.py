"""Crash-safe file writing: temp file in the target directory, then rename."""

import os
import tempfile


def atomic_write(path: str, write) -> None:
    """Call ``write(handle)`` on a temp file, then move it over ``path``.

    The temp file lives in the destination directory so the final
    os.replace stays on one filesystem and is atomic. On any failure the
    destination is left untouched.
    """
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            write(handle)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise

"""Deterministic on-disk array archives.

`numpy.savez` stamps zip members with the current time, so two identical
saves differ at the byte level. Model files and run artifacts here must be
byte-reproducible for equal inputs, so members are written with a fixed
timestamp instead. The result is still a plain zip of ``.npy`` members
that ``numpy.load`` understands, and float payloads round-trip bit-exact.
"""

from __future__ import annotations

import io
import zipfile

import numpy as np

_FIXED_DATE = (1980, 1, 1, 0, 0, 0)


def write_array_archive(path, arrays: dict) -> None:
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(buf, np.asarray(arrays[name]))
            info = zipfile.ZipInfo(name + ".npy", date_time=_FIXED_DATE)
            zf.writestr(info, buf.getvalue())


def read_array_archive(path) -> dict:
    out = {}
    with np.load(path, allow_pickle=False) as data:
        for key in data.files:
            out[key] = data[key]
    return out

"""Binary container for network weight snapshots.

Layout (all integers little-endian):

    magic   5 bytes  b"ECFW1"
    count   uint32   number of tensors
    entry*  uint16 name length, utf-8 name,
            uint8 ndim, ndim x uint32 dims
    data    raw float32 tensors, in manifest order

Entries are written sorted by name so equal weight dictionaries always
serialize to identical bytes. Tensors are always float32.
"""

import struct

import numpy as np

from .errors import CodecError
from .fileio import _atomic_write

MAGIC = b"ECFW1"


def save_weights(path, tensors):
    """Serialize a {name: array} mapping to an ECFW1 file."""
    chunks = [MAGIC, struct.pack("<I", len(tensors))]
    payload = []
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype=np.float32)
        if not np.all(np.isfinite(arr)):
            raise CodecError(f"tensor {name!r} contains non-finite values")
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise CodecError(f"tensor name too long: {name[:40]!r}...")
        if arr.ndim > 0xFF:
            raise CodecError(f"tensor {name!r} has too many dimensions")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        payload.append(arr.astype("<f4").tobytes())
    _atomic_write(path, b"".join(chunks) + b"".join(payload))


def load_weights(path):
    """Read an ECFW1 file back into a {name: float32 array} dict."""
    with open(path, "rb") as handle:
        buf = handle.read()
    if len(buf) < len(MAGIC) + 4:
        raise CodecError("weight file too short for its header", offset=len(buf))
    if buf[: len(MAGIC)] != MAGIC:
        raise CodecError(f"bad weight container magic {buf[:5]!r}", offset=0)
    pos = len(MAGIC)
    (count,) = struct.unpack_from("<I", buf, pos)
    pos += 4
    manifest = []
    for _ in range(count):
        if pos + 2 > len(buf):
            raise CodecError("truncated weight manifest", offset=pos)
        (name_len,) = struct.unpack_from("<H", buf, pos)
        pos += 2
        if pos + name_len + 1 > len(buf):
            raise CodecError("truncated weight manifest", offset=pos)
        name = buf[pos : pos + name_len].decode("utf-8")
        pos += name_len
        (ndim,) = struct.unpack_from("<B", buf, pos)
        pos += 1
        if pos + 4 * ndim > len(buf):
            raise CodecError("truncated weight manifest", offset=pos)
        shape = struct.unpack_from(f"<{ndim}I", buf, pos)
        pos += 4 * ndim
        manifest.append((name, shape))
    tensors = {}
    for name, shape in manifest:
        size = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = size * 4
        if pos + nbytes > len(buf):
            raise CodecError(f"truncated tensor data for {name!r}", offset=pos)
        flat = np.frombuffer(buf, dtype="<f4", count=size, offset=pos)
        finite = np.isfinite(flat)
        if not finite.all():
            bad = int(np.argmin(finite))
            raise CodecError(
                f"non-finite value in tensor {name!r}", offset=pos + bad * 4
            )
        tensors[name] = flat.reshape(shape).astype(np.float32, copy=True)
        pos += nbytes
    if pos != len(buf):
        raise CodecError(
            f"trailing bytes after tensor data: expected {pos}, file has {len(buf)}",
            offset=pos,
        )
    return tensors

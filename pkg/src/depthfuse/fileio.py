"""PFM, FLO and PNG codecs.

PFM files are grayscale ("Pf") float32 maps with scanlines stored
bottom-up; a negative scale marks little-endian data, which is the only
variant written. FLO files use the Middlebury layout: float32 magic
202021.25, int32 width/height, then interleaved float32 (dx, dy) pairs
row-major top-down. PNGs are 8-bit RGB with round-to-nearest
quantization on save. All writes go through a temp file and an atomic
rename.
"""

import os
import tempfile

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from .errors import CodecError
from .types import DepthMap, EdgeMap, FlowField, Image

FLO_MAGIC = 202021.25


def _atomic_write(path, payload):
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_token(buf, pos):
    n = len(buf)
    while pos < n and buf[pos : pos + 1].isspace():
        pos += 1
    start = pos
    while pos < n and not buf[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise CodecError("unexpected end of PFM header", offset=start)
    return buf[start:pos], pos


def read_pfm(path):
    """Read a grayscale PFM file into a float32 (H, W) array."""
    with open(path, "rb") as handle:
        buf = handle.read()
    kind, pos = _read_token(buf, 0)
    if kind == b"PF":
        raise CodecError("color PFM is not supported, expected grayscale 'Pf'", offset=0)
    if kind != b"Pf":
        raise CodecError(f"bad PFM identifier {kind!r}", offset=0)
    tok, tok_pos = _read_token(buf, pos)
    try:
        width = int(tok)
    except ValueError:
        raise CodecError(f"bad PFM width {tok!r}", offset=tok_pos - len(tok)) from None
    tok, tok_pos = _read_token(buf, tok_pos)
    try:
        height = int(tok)
    except ValueError:
        raise CodecError(f"bad PFM height {tok!r}", offset=tok_pos - len(tok)) from None
    if width <= 0 or height <= 0:
        raise CodecError(f"bad PFM dimensions {width}x{height}", offset=pos)
    tok, tok_pos = _read_token(buf, tok_pos)
    try:
        scale = float(tok)
    except ValueError:
        raise CodecError(f"bad PFM scale {tok!r}", offset=tok_pos - len(tok)) from None
    if scale == 0.0:
        raise CodecError("PFM scale must be non-zero", offset=tok_pos - len(tok))
    data_offset = tok_pos + 1  # single whitespace byte after the scale token
    if data_offset > len(buf):
        raise CodecError("unexpected end of PFM header", offset=len(buf))
    expected = width * height * 4
    actual = len(buf) - data_offset
    if actual != expected:
        raise CodecError(
            f"PFM raster size mismatch: expected {expected} bytes, found {actual}",
            offset=data_offset,
        )
    dtype = "<f4" if scale < 0 else ">f4"
    flat = np.frombuffer(buf, dtype=dtype, count=width * height, offset=data_offset)
    finite = np.isfinite(flat)
    if not finite.all():
        bad = int(np.argmin(finite))
        raise CodecError(
            "non-finite value in PFM raster", offset=data_offset + bad * 4
        )
    arr = flat.reshape(height, width)
    # Scanlines are stored bottom-up.
    return np.flipud(arr).astype(np.float32, copy=True)


def write_pfm(path, data):
    """Write a 2-d array as a little-endian grayscale PFM file."""
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim != 2 or arr.size == 0:
        raise CodecError(f"PFM payload must be non-empty 2-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise CodecError("refusing to write non-finite values to PFM")
    height, width = arr.shape
    header = f"Pf\n{width} {height}\n-1.0\n".encode("ascii")
    payload = header + np.flipud(arr).astype("<f4").tobytes()
    _atomic_write(path, payload)


def read_flo(path):
    """Read a Middlebury .flo file into a FlowField."""
    with open(path, "rb") as handle:
        buf = handle.read()
    if len(buf) < 12:
        raise CodecError("FLO file too short for its header", offset=len(buf))
    magic = np.frombuffer(buf, dtype="<f4", count=1, offset=0)[0]
    if magic != np.float32(FLO_MAGIC):
        raise CodecError(f"bad FLO magic {magic!r}", offset=0)
    width, height = np.frombuffer(buf, dtype="<i4", count=2, offset=4)
    if width <= 0 or height <= 0:
        raise CodecError(f"bad FLO dimensions {width}x{height}", offset=4)
    expected = int(width) * int(height) * 2 * 4
    actual = len(buf) - 12
    if actual != expected:
        raise CodecError(
            f"FLO raster size mismatch: expected {expected} bytes, found {actual}",
            offset=12,
        )
    flat = np.frombuffer(buf, dtype="<f4", count=int(width) * int(height) * 2, offset=12)
    finite = np.isfinite(flat)
    if not finite.all():
        bad = int(np.argmin(finite))
        raise CodecError("non-finite value in FLO raster", offset=12 + bad * 4)
    return FlowField(flat.reshape(int(height), int(width), 2))


def write_flo(path, flow):
    """Write a FlowField as a Middlebury .flo file."""
    arr = np.asarray(flow.data if isinstance(flow, FlowField) else flow, dtype=np.float32)
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.size == 0:
        raise CodecError(f"FLO payload must have shape (H, W, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise CodecError("refusing to write non-finite values to FLO")
    height, width = arr.shape[:2]
    header = (
        np.asarray([FLO_MAGIC], dtype="<f4").tobytes()
        + np.asarray([width, height], dtype="<i4").tobytes()
    )
    _atomic_write(path, header + arr.astype("<f4").tobytes())


def load_image(path):
    """Load an 8-bit RGB PNG into an Image with values in [0, 1]."""
    try:
        with PILImage.open(path) as img:
            if img.format != "PNG":
                raise CodecError(f"expected a PNG file, got {img.format}")
            if img.mode != "RGB":
                raise CodecError(
                    f"unsupported PNG mode {img.mode!r}: only 8-bit RGB is accepted"
                )
            arr = np.asarray(img, dtype=np.float64)
    except UnidentifiedImageError:
        raise CodecError(f"not a decodable image: {path}") from None
    return Image(arr / 255.0)


def save_image(path, image):
    """Save an Image as an 8-bit RGB PNG with round-to-nearest values."""
    quantized = np.rint(image.data * 255.0).astype(np.uint8)
    pil = PILImage.fromarray(quantized, mode="RGB")
    import io as _io

    buf = _io.BytesIO()
    pil.save(buf, format="PNG")
    _atomic_write(path, buf.getvalue())


def load_depth(path):
    """Read a PFM file as a nonnegative DepthMap."""
    return DepthMap(read_pfm(path).astype(np.float64)).require_nonnegative(
        f"depth map {path}"
    )


def save_depth(path, depth):
    """Write a DepthMap to a PFM file."""
    write_pfm(path, depth.data)


def write_text(path, text):
    """Write a text file atomically (UTF-8)."""
    _atomic_write(path, text.encode("utf-8"))


def load_edge(path):
    """Read a PFM file as an EdgeMap with values in [0, 1]."""
    return EdgeMap(read_pfm(path).astype(np.float64))


def save_edge(path, edge):
    """Write an EdgeMap to a PFM file."""
    write_pfm(path, edge.data)

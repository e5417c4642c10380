"""8-bit image container, PNG/PPM/PGM codecs, color conversion and resizing.

Images are stored row-major as ``(height, width, channels)`` uint8 arrays.
Channel order is RGB throughout; decoders normalize to it. Supported file
formats are deliberately narrow (8-bit PNG, binary PPM/PGM with maxval 255)
so every byte on disk has one auditable interpretation.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ChannelMismatchError, CorruptImageError, UnsupportedFormatError

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"

# sRGB <-> CIELAB constants (D65 white point)
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_TO_SRGB = np.linalg.inv(_SRGB_TO_XYZ)
_WHITE = np.array([0.95047, 1.0, 1.08883])
_LAB_DELTA = 6.0 / 29.0


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


@dataclass(frozen=True)
class ImageU8:
    """8-bit raster image, 1 (gray) or 3 (RGB) interleaved channels."""

    data: np.ndarray

    def __post_init__(self):
        d = self.data
        if not isinstance(d, np.ndarray) or d.dtype != np.uint8:
            raise TypeError("ImageU8 requires a uint8 ndarray")
        if d.ndim == 2:
            d = d[:, :, None]
        if d.ndim != 3 or d.shape[2] not in (1, 3):
            raise ValueError(f"expected (h, w, 1|3) shape, got {d.shape}")
        if d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError("image dimensions must be >= 1")
        object.__setattr__(self, "data", np.ascontiguousarray(d))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ImageU8":
        """Build from any integer/float array, validating the 0..255 range."""
        a = np.asarray(arr)
        if a.dtype != np.uint8:
            if np.issubdtype(a.dtype, np.floating) and not np.all(np.isfinite(a)):
                raise ValueError("non-finite samples")
            if a.min(initial=0) < 0 or a.max(initial=0) > 255:
                raise ValueError("samples outside 0..255")
            a = a.astype(np.uint8)
        return cls(a)


@dataclass(frozen=True)
class ImageF32:
    """Real-valued image used for LAB and intermediate filter math."""

    data: np.ndarray
    space: str = "linear"  # "linear" or "lab"

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float32)
        if d.ndim == 2:
            d = d[:, :, None]
        if d.ndim != 3:
            raise ValueError(f"expected (h, w, c) shape, got {d.shape}")
        if self.space == "lab":
            if d.shape[2] != 3:
                raise ChannelMismatchError("LAB image needs 3 channels")
            lmin, lmax = float(d[:, :, 0].min()), float(d[:, :, 0].max())
            if lmin < -1e-3 or lmax > 100.0 + 1e-3:
                raise ValueError(f"L channel outside [0, 100]: [{lmin}, {lmax}]")
        object.__setattr__(self, "data", np.ascontiguousarray(d))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


# ---------------------------------------------------------------------------
# PNG decoding/encoding (8-bit, gray / RGB / +alpha which is dropped)
# ---------------------------------------------------------------------------

def _png_read_chunks(buf: bytes):
    pos = 8
    while pos < len(buf):
        if pos + 8 > len(buf):
            raise CorruptImageError("truncated chunk header")
        (length,) = struct.unpack(">I", buf[pos : pos + 4])
        ctype = buf[pos + 4 : pos + 8]
        data = buf[pos + 8 : pos + 8 + length]
        if len(data) != length or pos + 12 + length > len(buf):
            raise CorruptImageError("truncated chunk payload")
        (crc,) = struct.unpack(">I", buf[pos + 8 + length : pos + 12 + length])
        if zlib.crc32(ctype + data) & 0xFFFFFFFF != crc:
            raise CorruptImageError(f"bad CRC in {ctype!r} chunk")
        yield ctype, data
        pos += 12 + length


def _paeth(a: int, b: int, c: int) -> int:
    p = a + b - c
    pa, pb, pc = abs(p - a), abs(p - b), abs(p - c)
    if pa <= pb and pa <= pc:
        return a
    if pb <= pc:
        return b
    return c


def _png_unfilter(raw: bytes, width: int, height: int, spp: int) -> np.ndarray:
    stride = width * spp
    if len(raw) != (stride + 1) * height:
        raise CorruptImageError("decompressed size mismatch")
    out = np.zeros((height, stride), dtype=np.uint8)
    raw_arr = np.frombuffer(raw, dtype=np.uint8).reshape(height, stride + 1)
    prev = np.zeros(stride, dtype=np.uint8)
    for y in range(height):
        ftype = int(raw_arr[y, 0])
        line = raw_arr[y, 1:].astype(np.int32)
        if ftype == 0:
            rec = line
        elif ftype == 1:  # Sub: per-channel running sum
            rec = line.copy()
            for lane in range(spp):
                rec[lane::spp] = np.cumsum(rec[lane::spp]) & 0xFF
        elif ftype == 2:  # Up
            rec = (line + prev) & 0xFF
        elif ftype == 3:  # Average
            rec = np.zeros(stride, dtype=np.int32)
            for x in range(stride):
                left = rec[x - spp] if x >= spp else 0
                rec[x] = (line[x] + (left + int(prev[x])) // 2) & 0xFF
        elif ftype == 4:  # Paeth
            rec = np.zeros(stride, dtype=np.int32)
            for x in range(stride):
                left = int(rec[x - spp]) if x >= spp else 0
                upleft = int(prev[x - spp]) if x >= spp else 0
                rec[x] = (line[x] + _paeth(left, int(prev[x]), upleft)) & 0xFF
        else:
            raise CorruptImageError(f"unknown filter type {ftype}")
        out[y] = rec.astype(np.uint8)
        prev = out[y]
    return out.reshape(height, width, spp)


def _decode_png(buf: bytes) -> np.ndarray:
    if len(buf) < 8 or buf[:8] != _PNG_SIGNATURE:
        raise CorruptImageError("bad PNG signature")
    header = None
    idat = bytearray()
    palette = None
    seen_end = False
    for ctype, data in _png_read_chunks(buf):
        if ctype == b"IHDR":
            header = struct.unpack(">IIBBBBB", data)
        elif ctype == b"IDAT":
            idat.extend(data)
        elif ctype == b"PLTE":
            palette = data
        elif ctype == b"IEND":
            seen_end = True
            break
    if header is None:
        raise CorruptImageError("missing IHDR")
    width, height, depth, color, comp, filt, interlace = header
    if width < 1 or height < 1:
        raise CorruptImageError("zero dimension")
    if depth == 16:
        raise UnsupportedFormatError("16-bit PNG rejected")
    if depth != 8:
        raise UnsupportedFormatError(f"unsupported bit depth {depth}")
    if color == 3 or palette is not None:
        raise UnsupportedFormatError("palette PNG not supported; convert to gray/RGB first")
    if color not in (0, 2, 4, 6):
        raise UnsupportedFormatError(f"unsupported color type {color}")
    if comp != 0 or filt != 0:
        raise CorruptImageError("nonstandard compression/filter method")
    if interlace != 0:
        raise UnsupportedFormatError("interlaced PNG not supported")
    if not seen_end or not idat:
        raise CorruptImageError("missing IDAT/IEND")
    spp = {0: 1, 2: 3, 4: 2, 6: 4}[color]
    try:
        raw = zlib.decompress(bytes(idat))
    except zlib.error as exc:
        raise CorruptImageError(f"inflate failed: {exc}") from exc
    pixels = _png_unfilter(raw, width, height, spp)
    if spp == 2:  # gray + alpha -> gray
        pixels = pixels[:, :, :1]
    elif spp == 4:  # RGBA -> RGB
        pixels = pixels[:, :, :3]
    return pixels


def _encode_png(arr: np.ndarray) -> bytes:
    h, w, c = arr.shape
    color = 0 if c == 1 else 2
    ihdr = struct.pack(">IIBBBBB", w, h, 8, color, 0, 0, 0)
    rows = np.concatenate([np.zeros((h, 1), dtype=np.uint8), arr.reshape(h, w * c)], axis=1)
    idat = zlib.compress(rows.tobytes(), 6)

    def chunk(ctype: bytes, data: bytes) -> bytes:
        return (
            struct.pack(">I", len(data))
            + ctype
            + data
            + struct.pack(">I", zlib.crc32(ctype + data) & 0xFFFFFFFF)
        )

    return _PNG_SIGNATURE + chunk(b"IHDR", ihdr) + chunk(b"IDAT", idat) + chunk(b"IEND", b"")


# ---------------------------------------------------------------------------
# PPM (P6) / PGM (P5), binary, maxval 255
# ---------------------------------------------------------------------------

def _decode_pnm(buf: bytes) -> np.ndarray:
    magic = buf[:2]
    channels = {b"P5": 1, b"P6": 3}.get(magic)
    if channels is None:
        raise UnsupportedFormatError(f"unsupported PNM magic {magic!r}")
    # header: magic, width, height, maxval as whitespace-separated tokens,
    # '#' comments allowed, one whitespace byte after maxval then raster
    pos = 2
    fields = []
    while len(fields) < 3:
        if pos >= len(buf):
            raise CorruptImageError("truncated PNM header")
        ch = buf[pos : pos + 1]
        if ch == b"#":
            while pos < len(buf) and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        elif ch.isdigit():
            start = pos
            while pos < len(buf) and buf[pos : pos + 1].isdigit():
                pos += 1
            fields.append(int(buf[start:pos]))
        else:
            raise CorruptImageError(f"bad PNM header byte {ch!r}")
    pos += 1  # single whitespace after maxval
    width, height, maxval = fields
    if maxval != 255:
        raise UnsupportedFormatError(f"PNM maxval must be 255, got {maxval}")
    if width < 1 or height < 1:
        raise CorruptImageError("zero dimension")
    need = width * height * channels
    raster = buf[pos : pos + need]
    if len(raster) != need:
        raise CorruptImageError("truncated PNM raster")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, channels).copy()


def _encode_pnm(arr: np.ndarray) -> bytes:
    h, w, c = arr.shape
    magic = b"P5" if c == 1 else b"P6"
    return magic + f"\n{w} {h}\n255\n".encode() + arr.tobytes()


def load_image(path) -> ImageU8:
    """Decode a PNG/PPM/PGM file into an RGB or gray ImageU8.

    4-channel PNG drops alpha; 16-bit inputs are rejected.
    """
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(p)
    buf = p.read_bytes()
    if buf[:8] == _PNG_SIGNATURE:
        return ImageU8(_decode_png(buf))
    if buf[:2] in (b"P5", b"P6"):
        return ImageU8(_decode_pnm(buf))
    raise UnsupportedFormatError(f"unrecognized format in {p.name}")


def save_image(img: ImageU8, path) -> None:
    """Encode to PNG, PPM or PGM based on the file extension."""
    p = Path(path)
    suffix = p.suffix.lower()
    if suffix == ".png":
        payload = _encode_png(img.data)
    elif suffix in (".ppm", ".pgm", ".pnm"):
        payload = _encode_pnm(img.data)
    else:
        raise UnsupportedFormatError(f"cannot encode to '{suffix}'")
    p.write_bytes(payload)


# ---------------------------------------------------------------------------
# Color conversion
# ---------------------------------------------------------------------------

def to_gray(img: ImageU8) -> ImageU8:
    """BT.601 luma: gray = round(0.299 R + 0.587 G + 0.114 B).

    1-channel inputs pass through unchanged (documented identity).
    """
    if img.channels == 1:
        return img
    rgb = img.data.astype(np.float64)
    gray = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
    gray = np.clip(_round_half_up(gray), 0, 255).astype(np.uint8)
    return ImageU8(gray[:, :, None])


def gray_to_rgb(img: ImageU8) -> ImageU8:
    if img.channels == 3:
        return img
    return ImageU8(np.repeat(img.data, 3, axis=2))


def _lab_f(t: np.ndarray) -> np.ndarray:
    d3 = _LAB_DELTA**3
    return np.where(t > d3, np.cbrt(t), t / (3 * _LAB_DELTA**2) + 4.0 / 29.0)


def _lab_f_inv(t: np.ndarray) -> np.ndarray:
    return np.where(t > _LAB_DELTA, t**3, 3 * _LAB_DELTA**2 * (t - 4.0 / 29.0))


def rgb_to_lab(img: ImageU8) -> ImageF32:
    """sRGB (D65) -> CIELAB. L in [0, 100], a/b roughly [-128, 127]."""
    if img.channels != 3:
        raise ChannelMismatchError("rgb_to_lab needs a 3-channel image")
    srgb = img.data.astype(np.float64) / 255.0
    linear = np.where(srgb <= 0.04045, srgb / 12.92, ((srgb + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _SRGB_TO_XYZ.T
    f = _lab_f(xyz / _WHITE)
    lab = np.empty_like(xyz)
    lab[:, :, 0] = 116.0 * f[:, :, 1] - 16.0
    lab[:, :, 1] = 500.0 * (f[:, :, 0] - f[:, :, 1])
    lab[:, :, 2] = 200.0 * (f[:, :, 1] - f[:, :, 2])
    lab[:, :, 0] = np.clip(lab[:, :, 0], 0.0, 100.0)
    return ImageF32(lab.astype(np.float32), space="lab")


def lab_to_rgb(img: ImageF32) -> ImageU8:
    """CIELAB -> sRGB bytes; inverse of rgb_to_lab within 1 intensity level."""
    if img.space != "lab" or img.channels != 3:
        raise ChannelMismatchError("lab_to_rgb needs a LAB-tagged 3-channel image")
    lab = img.data.astype(np.float64)
    fy = (lab[:, :, 0] + 16.0) / 116.0
    fx = fy + lab[:, :, 1] / 500.0
    fz = fy - lab[:, :, 2] / 200.0
    xyz = np.stack([_lab_f_inv(fx), _lab_f_inv(fy), _lab_f_inv(fz)], axis=2) * _WHITE
    linear = xyz @ _XYZ_TO_SRGB.T
    linear = np.clip(linear, 0.0, 1.0)
    srgb = np.where(
        linear <= 0.0031308, 12.92 * linear, 1.055 * np.power(linear, 1.0 / 2.4) - 0.055
    )
    return ImageU8(np.clip(_round_half_up(srgb * 255.0), 0, 255).astype(np.uint8))


# ---------------------------------------------------------------------------
# Resizing
# ---------------------------------------------------------------------------

def resize_bilinear(img: ImageU8, out_w: int, out_h: int) -> ImageU8:
    """Bilinear resample with half-pixel-centered sampling.

    Same-size calls return byte-identical output.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError("output dimensions must be >= 1")
    h, w = img.height, img.width
    if (out_w, out_h) == (w, h):
        return ImageU8(img.data.copy())
    src = img.data.astype(np.float64)

    def axis_coords(n_out: int, n_in: int):
        coords = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        coords = np.clip(coords, 0.0, n_in - 1.0)
        lo = np.floor(coords).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        frac = coords - lo
        return lo, hi, frac

    x0, x1, fx = axis_coords(out_w, w)
    y0, y1, fy = axis_coords(out_h, h)
    fx = fx[None, :, None]
    fy = fy[:, None, None]
    top = src[y0][:, x0] * (1 - fx) + src[y0][:, x1] * fx
    bot = src[y1][:, x0] * (1 - fx) + src[y1][:, x1] * fx
    out = top * (1 - fy) + bot * fy
    return ImageU8(np.clip(_round_half_up(out), 0, 255).astype(np.uint8))

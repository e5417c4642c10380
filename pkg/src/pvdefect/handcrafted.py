"""Handcrafted texture/shape descriptors: uniform LBP histograms, HOG with
L2-Hys block normalization, and Gabor filter-bank magnitude statistics."""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from functools import lru_cache

import numpy as np

from .image import ImageU8, resize_bilinear, to_gray

LBP_NAME = "LBP"
HOG_NAME = "HOG"
GABOR_NAME = "GABOR"
DEEP_NAME = "DEEP"


@dataclass(frozen=True)
class FeatureBlock:
    """Named per-sample feature vector; `dim` is fixed per (name, config)."""

    name: str
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if not np.all(np.isfinite(v)):
            raise ValueError(f"non-finite values in block {self.name}")
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class HandcraftedConfig:
    lbp_points: int = 8
    lbp_radius: float = 1.0
    hog_input: int = 128
    hog_cell: int = 8
    hog_block: int = 2
    hog_bins: int = 9
    gabor_orientations: tuple[float, ...] = (0.0, 45.0, 90.0, 135.0)
    gabor_wavelengths: tuple[float, ...] = (4.0, 8.0, 16.0, 32.0)
    gabor_sigma_ratio: float = 0.56
    gabor_aspect: float = 0.5

    def __post_init__(self):
        if self.lbp_points != 8:
            raise ValueError("only 8-point LBP codes are supported")
        if self.hog_input % self.hog_cell != 0:
            raise ValueError("hog_input must be divisible by hog_cell")
        if not self.gabor_orientations or not self.gabor_wavelengths:
            raise ValueError("gabor bank must be non-empty")

    @property
    def lbp_bins(self) -> int:
        return self.lbp_points * (self.lbp_points - 1) + 3  # 59 for P=8

    @property
    def hog_dim(self) -> int:
        cells = self.hog_input // self.hog_cell
        blocks = cells - self.hog_block + 1
        return blocks * blocks * self.hog_block * self.hog_block * self.hog_bins

    @property
    def gabor_dim(self) -> int:
        return len(self.gabor_orientations) * len(self.gabor_wavelengths) * 2

    def to_json(self) -> str:
        d = asdict(self)
        d["gabor_orientations"] = list(self.gabor_orientations)
        d["gabor_wavelengths"] = list(self.gabor_wavelengths)
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "HandcraftedConfig":
        d = dict(d)
        for key in ("gabor_orientations", "gabor_wavelengths"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


# ---------------------------------------------------------------------------
# Local binary patterns
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _uniform_bin_table(points: int) -> np.ndarray:
    """code -> bin; uniform codes (<= 2 circular transitions) get their own
    bin in ascending code order, everything else shares the last bin."""
    n_codes = 1 << points
    uniform = []
    for code in range(n_codes):
        bits = [(code >> i) & 1 for i in range(points)]
        transitions = sum(bits[i] != bits[(i + 1) % points] for i in range(points))
        if transitions <= 2:
            uniform.append(code)
    table = np.full(n_codes, len(uniform), dtype=np.int64)
    for b, code in enumerate(uniform):
        table[code] = b
    return table


def _neighbor_offsets(points: int, radius: float) -> list[tuple[float, float]]:
    offsets = []
    for p in range(points):
        theta = 2.0 * np.pi * p / points
        dx = radius * np.cos(theta)
        dy = radius * np.sin(theta)
        # snap near-integer offsets so exact pixels are sampled exactly
        if abs(dx - round(dx)) < 1e-9:
            dx = float(round(dx))
        if abs(dy - round(dy)) < 1e-9:
            dy = float(round(dy))
        offsets.append((dx, dy))
    return offsets


def lbp_histogram(gray: ImageU8, cfg: HandcraftedConfig = HandcraftedConfig()) -> FeatureBlock:
    """Uniform-LBP histogram over interior pixels, L1-normalized.

    A neighbor's bit is set when its bilinearly sampled value is >= the
    center pixel.
    """
    if gray.channels != 1:
        raise ValueError("LBP operates on grayscale images")
    margin = int(np.ceil(cfg.lbp_radius))
    h, w = gray.height, gray.width
    if min(h, w) <= 2 * margin:
        raise ValueError("image too small for the LBP radius")
    img = gray.data[:, :, 0].astype(np.float64)
    center = img[margin : h - margin, margin : w - margin]
    codes = np.zeros(center.shape, dtype=np.int64)
    ys = np.arange(margin, h - margin, dtype=np.float64)
    xs = np.arange(margin, w - margin, dtype=np.float64)
    for bit, (dx, dy) in enumerate(_neighbor_offsets(cfg.lbp_points, cfg.lbp_radius)):
        sy = ys + dy
        sx = xs + dx
        y0 = np.floor(sy).astype(np.int64)
        x0 = np.floor(sx).astype(np.int64)
        fy = (sy - y0)[:, None]
        fx = (sx - x0)[None, :]
        y1 = np.minimum(y0 + 1, h - 1)
        x1 = np.minimum(x0 + 1, w - 1)
        v00 = img[np.ix_(y0, x0)]
        v10 = img[np.ix_(y0, x1)]
        v01 = img[np.ix_(y1, x0)]
        v11 = img[np.ix_(y1, x1)]
        # incremental bilinear form: exact (== v00) on constant neighborhoods
        val = v00 + fx * (v10 - v00) + fy * (v01 - v00) + fx * fy * (v00 - v10 - v01 + v11)
        codes |= (val >= center).astype(np.int64) << bit
    table = _uniform_bin_table(cfg.lbp_points)
    hist = np.bincount(table[codes].ravel(), minlength=cfg.lbp_bins).astype(np.float64)
    return FeatureBlock(LBP_NAME, hist / hist.sum())


def uniform_bin_of_code(code: int, points: int = 8) -> int:
    """Histogram bin index of a raw LBP code (test and inspection helper)."""
    return int(_uniform_bin_table(points)[code])


# ---------------------------------------------------------------------------
# Histogram of oriented gradients
# ---------------------------------------------------------------------------

def hog_descriptor(gray: ImageU8, cfg: HandcraftedConfig = HandcraftedConfig()) -> FeatureBlock:
    """HOG on a square internal resize: central-difference gradients,
    unsigned orientations voted linearly into the two nearest of 9 bins
    (centers at 0, 20, ..., 160 degrees), 2x2-cell blocks at stride one
    cell, L2-Hys normalization (clip 0.2)."""
    if gray.channels != 1:
        raise ValueError("HOG operates on grayscale images")
    size = cfg.hog_input
    if (gray.height, gray.width) != (size, size):
        gray = resize_bilinear(gray, size, size)
    img = gray.data[:, :, 0].astype(np.float64)

    gx = np.zeros_like(img)
    gy = np.zeros_like(img)
    gx[:, 1:-1] = img[:, 2:] - img[:, :-2]
    gy[1:-1, :] = img[2:, :] - img[:-2, :]
    mag = np.hypot(gx, gy)
    ang = np.degrees(np.arctan2(gy, gx)) % 180.0

    nbins = cfg.hog_bins
    binw = 180.0 / nbins
    pos = ang / binw  # centers at k * binw
    lower = np.floor(pos).astype(np.int64) % nbins
    frac = pos - np.floor(pos)
    upper = (lower + 1) % nbins

    cell = cfg.hog_cell
    cells = size // cell
    cy = (np.arange(size) // cell)[:, None].repeat(size, axis=1)
    cx = (np.arange(size) // cell)[None, :].repeat(size, axis=0)
    hist = np.zeros((cells, cells, nbins))
    flat_lo = (cy * cells + cx) * nbins + lower
    flat_hi = (cy * cells + cx) * nbins + upper
    np.add.at(hist.ravel(), flat_lo.ravel(), (mag * (1 - frac)).ravel())
    np.add.at(hist.ravel(), flat_hi.ravel(), (mag * frac).ravel())

    bsz = cfg.hog_block
    nblocks = cells - bsz + 1
    eps = 1e-12
    out = np.zeros((nblocks, nblocks, bsz * bsz * nbins))
    for by in range(nblocks):
        for bx in range(nblocks):
            v = hist[by : by + bsz, bx : bx + bsz, :].ravel()
            v = v / np.sqrt(np.sum(v * v) + eps)
            v = np.minimum(v, 0.2)
            v = v / np.sqrt(np.sum(v * v) + eps)
            out[by, bx] = v
    return FeatureBlock(HOG_NAME, out.ravel())


# ---------------------------------------------------------------------------
# Gabor filter bank
# ---------------------------------------------------------------------------

def gabor_kernel(theta_deg: float, wavelength: float, sigma_ratio: float = 0.56,
                 aspect: float = 0.5) -> np.ndarray:
    """Even (cosine-phase) Gabor kernel with the DC component removed, so the
    response to a constant image is exactly zero."""
    sigma = sigma_ratio * wavelength
    half = int(np.ceil(3.0 * sigma / min(aspect, 1.0)))
    theta = np.deg2rad(theta_deg)
    y, x = np.mgrid[-half : half + 1, -half : half + 1].astype(np.float64)
    xr = x * np.cos(theta) + y * np.sin(theta)
    yr = -x * np.sin(theta) + y * np.cos(theta)
    k = np.exp(-(xr**2 + (aspect * yr) ** 2) / (2.0 * sigma**2)) * np.cos(
        2.0 * np.pi * xr / wavelength
    )
    return k - k.mean()


@lru_cache(maxsize=8)
def _kernel_bank(orientations: tuple, wavelengths: tuple, sigma_ratio: float, aspect: float):
    return [
        (theta, lam, gabor_kernel(theta, lam, sigma_ratio, aspect))
        for theta in orientations
        for lam in wavelengths
    ]


def _convolve_same_symmetric(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """FFT convolution with mirror-padded borders; kernel must be odd-sized
    and point-symmetric (true for even Gabor kernels)."""
    kh = kernel.shape[0] // 2
    h, w = img.shape
    padded = np.pad(img, kh, mode="symmetric")
    sh, sw = h + 4 * kh, w + 4 * kh
    fimg = np.fft.rfft2(padded, s=(sh, sw))
    fker = np.fft.rfft2(kernel, s=(sh, sw))
    full = np.fft.irfft2(fimg * fker, s=(sh, sw))
    return full[2 * kh : 2 * kh + h, 2 * kh : 2 * kh + w]


def gabor_features(gray: ImageU8, cfg: HandcraftedConfig = HandcraftedConfig()) -> FeatureBlock:
    """Mean and standard deviation of the response magnitude for every
    (orientation, wavelength) pair, orientation-major order."""
    if gray.channels != 1:
        raise ValueError("Gabor features operate on grayscale images")
    img = gray.data[:, :, 0].astype(np.float64)
    bank = _kernel_bank(
        tuple(cfg.gabor_orientations),
        tuple(cfg.gabor_wavelengths),
        cfg.gabor_sigma_ratio,
        cfg.gabor_aspect,
    )
    feats = []
    for _theta, _lam, kernel in bank:
        magnitude = np.abs(_convolve_same_symmetric(img, kernel))
        feats.append(magnitude.mean())
        feats.append(magnitude.std())
    return FeatureBlock(GABOR_NAME, np.array(feats))


def extract_handcrafted(
    img: ImageU8,
    which: set[str] | None = None,
    cfg: HandcraftedConfig = HandcraftedConfig(),
) -> list[FeatureBlock]:
    """Run the selected extractors on one image (grayscale conversion happens
    once); blocks come back in canonical LBP, HOG, GABOR order."""
    selected = {LBP_NAME, HOG_NAME, GABOR_NAME} if which is None else set(which)
    if not selected:
        raise ValueError("empty extractor selection")
    unknown = selected - {LBP_NAME, HOG_NAME, GABOR_NAME}
    if unknown:
        raise ValueError(f"unknown extractors: {sorted(unknown)}")
    gray = to_gray(img)
    blocks = []
    if LBP_NAME in selected:
        blocks.append(lbp_histogram(gray, cfg))
    if HOG_NAME in selected:
        blocks.append(hog_descriptor(gray, cfg))
    if GABOR_NAME in selected:
        blocks.append(gabor_features(gray, cfg))
    return blocks

"""Noise reduction and contrast enhancement stages.

The default pipeline is resize -> bilateral -> non-local means -> CLAHE on
the LAB luminance -> gamma correction. Every stage maps constant images to
constant images and uses symmetric (edge-mirroring) border padding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .errors import ChannelMismatchError
from .image import ImageF32, ImageU8, lab_to_rgb, resize_bilinear, rgb_to_lab


@dataclass(frozen=True)
class PreprocessConfig:
    bilateral_d: int = 9
    sigma_color: float = 75.0
    sigma_space: float = 75.0
    nlm_h: float = 10.0
    nlm_h_color: float = 10.0
    nlm_template: int = 7
    nlm_search: int = 21
    clahe_clip: float = 2.0
    clahe_tiles: tuple[int, int] = (8, 8)
    gamma: float = 1.5
    target_size: tuple[int, int] = (640, 640)
    enable_clahe: bool = True
    enable_gamma: bool = True

    def __post_init__(self):
        if self.bilateral_d < 3 or self.bilateral_d % 2 == 0:
            raise ValueError("bilateral_d must be odd and >= 3")
        if self.nlm_template % 2 == 0 or self.nlm_search % 2 == 0:
            raise ValueError("NLM windows must be odd")
        if self.nlm_template >= self.nlm_search:
            raise ValueError("template window must be smaller than search window")
        if self.clahe_clip < 1.0:
            raise ValueError("clahe_clip must be >= 1.0")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")

    def to_json(self) -> str:
        d = asdict(self)
        d["clahe_tiles"] = list(self.clahe_tiles)
        d["target_size"] = list(self.target_size)
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "PreprocessConfig":
        d = dict(d)
        if "clahe_tiles" in d:
            d["clahe_tiles"] = tuple(d["clahe_tiles"])
        if "target_size" in d:
            d["target_size"] = tuple(d["target_size"])
        return cls(**d)


def _pad_sym(arr: np.ndarray, pad: int) -> np.ndarray:
    return np.pad(arr, ((pad, pad), (pad, pad), (0, 0)), mode="symmetric")


def bilateral_filter(
    img: ImageU8, d: int = 9, sigma_color: float = 75.0, sigma_space: float = 75.0
) -> ImageU8:
    """Edge-preserving smoothing over a d x d neighborhood.

    Weight of neighbor q for center p is
    exp(-(dx^2+dy^2) / (2 sigma_space^2)) * exp(-|I(q)-I(p)|^2 / (2 sigma_color^2)),
    with the color distance taken jointly over channels (Euclidean). Borders
    mirror the image edge.
    """
    if d < 3 or d % 2 == 0:
        raise ValueError("diameter must be odd and >= 3")
    r = d // 2
    src = img.data.astype(np.float64)
    padded = _pad_sym(src, r)
    h, w, c = src.shape
    num = np.zeros_like(src)
    den = np.zeros((h, w))
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            shifted = padded[r + dy : r + dy + h, r + dx : r + dx + w, :]
            diff2 = np.sum((shifted - src) ** 2, axis=2)
            wgt = np.exp(
                -(dx * dx + dy * dy) / (2.0 * sigma_space**2)
                - diff2 / (2.0 * sigma_color**2)
            )
            num += wgt[:, :, None] * shifted
            den += wgt
    out = num / den[:, :, None]
    return ImageU8(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))


def _window_sums(arr: np.ndarray, radius: int) -> np.ndarray:
    """Sliding-window sum over a (2r+1)^2 box; input already padded by r."""
    k = 2 * radius + 1
    cs = np.cumsum(np.cumsum(arr, axis=0), axis=1)
    cs = np.pad(cs, ((1, 0), (1, 0)), mode="constant")
    return cs[k:, k:] - cs[:-k, k:] - cs[k:, :-k] + cs[:-k, :-k]


def nlm_denoise(
    img: ImageU8,
    h: float = 10.0,
    h_color: float = 10.0,
    template: int = 7,
    search: int = 21,
) -> ImageU8:
    """Non-local means: each pixel becomes the weighted mean of pixels in the
    search window, weighted by exp(-d2 / h^2) where d2 is the mean squared
    difference of their template patches (all channels pooled).

    Gray images use `h`, color images `h_color`. Borders mirror the edge.
    """
    if template % 2 == 0 or search % 2 == 0 or template >= search:
        raise ValueError("windows must be odd with template < search")
    src = img.data.astype(np.float64)
    hgt, wid, c = src.shape
    ts = template // 2
    ss = search // 2
    h_eff = h if c == 1 else h_color
    padded = _pad_sym(src, ss + ts)
    # center patches, extended by the template radius on each side
    center = padded[ss : ss + hgt + 2 * ts, ss : ss + wid + 2 * ts, :]
    norm = float(template * template * c)
    num = np.zeros_like(src)
    den = np.zeros((hgt, wid))
    for dy in range(-ss, ss + 1):
        for dx in range(-ss, ss + 1):
            cand = padded[
                ss + dy : ss + dy + hgt + 2 * ts, ss + dx : ss + dx + wid + 2 * ts, :
            ]
            sq = np.sum((center - cand) ** 2, axis=2)
            d2 = _window_sums(sq, ts) / norm
            wgt = np.exp(-d2 / (h_eff * h_eff))
            num += wgt[:, :, None] * cand[ts : ts + hgt, ts : ts + wid, :]
            den += wgt
    out = num / den[:, :, None]
    return ImageU8(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))


# ---------------------------------------------------------------------------
# CLAHE on the LAB luminance channel
# ---------------------------------------------------------------------------

def _tile_bounds(n: int, tiles: int) -> list[tuple[int, int]]:
    edges = [(i * n) // tiles for i in range(tiles + 1)]
    return [(edges[i], edges[i + 1]) for i in range(tiles)]


def _clahe_mappings(plane: np.ndarray, clip: float, tiles: tuple[int, int]):
    """Per-tile clipped-equalization lookup tables (float, unrounded)."""
    ty, tx = tiles
    rows = _tile_bounds(plane.shape[0], ty)
    cols = _tile_bounds(plane.shape[1], tx)
    maps = np.zeros((ty, tx, 256))
    centers_y = np.array([(r0 + r1 - 1) / 2.0 for r0, r1 in rows])
    centers_x = np.array([(c0 + c1 - 1) / 2.0 for c0, c1 in cols])
    for i, (r0, r1) in enumerate(rows):
        for j, (c0, c1) in enumerate(cols):
            tile = plane[r0:r1, c0:c1]
            npix = tile.size
            hist = np.bincount(tile.ravel(), minlength=256).astype(np.float64)
            limit = clip * npix / 256.0
            excess = np.sum(np.maximum(hist - limit, 0.0))
            hist = np.minimum(hist, limit) + excess / 256.0
            cdf = np.cumsum(hist)
            maps[i, j] = cdf * 255.0 / npix
    return maps, centers_y, centers_x


def equalize_l_plane(
    lab: ImageF32, clip: float = 2.0, tiles: tuple[int, int] = (8, 8)
) -> ImageF32:
    """CLAHE on the L channel of a LAB image; a and b pass through untouched.

    L is quantized to 256 levels, per-tile histograms are clipped at
    clip * tile_pixels / 256 with the excess spread uniformly, and the
    resulting tile mappings are bilinearly interpolated between tile centers.
    """
    if lab.space != "lab":
        raise ChannelMismatchError("expected a LAB image")
    data = lab.data
    plane = np.clip(np.floor(data[:, :, 0].astype(np.float64) * 255.0 / 100.0 + 0.5), 0, 255)
    plane = plane.astype(np.int64)
    maps, cy, cx = _clahe_mappings(plane, clip, tiles)

    h, w = plane.shape
    ys = np.arange(h, dtype=np.float64)
    xs = np.arange(w, dtype=np.float64)

    def interp_axis(coords: np.ndarray, centers: np.ndarray):
        lo = np.clip(np.searchsorted(centers, coords, side="right") - 1, 0, len(centers) - 2)
        hi = lo + 1
        span = centers[hi] - centers[lo]
        frac = np.clip((coords - centers[lo]) / span, 0.0, 1.0)
        return lo, hi, frac

    if len(cy) == 1:
        iy0 = iy1 = np.zeros(h, dtype=np.int64)
        fy = np.zeros(h)
    else:
        iy0, iy1, fy = interp_axis(ys, cy)
    if len(cx) == 1:
        ix0 = ix1 = np.zeros(w, dtype=np.int64)
        fx = np.zeros(w)
    else:
        ix0, ix1, fx = interp_axis(xs, cx)

    IY0 = iy0[:, None]
    IY1 = iy1[:, None]
    IX0 = ix0[None, :]
    IX1 = ix1[None, :]
    v00 = maps[IY0, IX0, plane]
    v01 = maps[IY0, IX1, plane]
    v10 = maps[IY1, IX0, plane]
    v11 = maps[IY1, IX1, plane]
    FY = fy[:, None]
    FX = fx[None, :]
    eq = (v00 * (1 - FY) * (1 - FX) + v01 * (1 - FY) * FX + v10 * FY * (1 - FX) + v11 * FY * FX)
    eq = np.clip(np.floor(eq + 0.5), 0, 255)

    out = data.copy()
    out[:, :, 0] = (eq * 100.0 / 255.0).astype(np.float32)
    return ImageF32(out, space="lab")


def clahe_luminance(
    img: ImageU8, clip: float = 2.0, tiles: tuple[int, int] = (8, 8)
) -> ImageU8:
    """RGB -> LAB, equalize L with CLAHE, recombine with original a/b -> RGB."""
    if img.channels != 3:
        raise ChannelMismatchError("clahe_luminance needs an RGB image")
    lab = rgb_to_lab(img)
    return lab_to_rgb(equalize_l_plane(lab, clip, tiles))


def gamma_lut(gamma: float) -> np.ndarray:
    """256-entry brightening lookup table: LUT[i] = round(255 (i/255)^(1/gamma))."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    i = np.arange(256, dtype=np.float64)
    return np.clip(np.floor(255.0 * (i / 255.0) ** (1.0 / gamma) + 0.5), 0, 255).astype(np.uint8)


def gamma_correct(img: ImageU8, gamma: float = 1.5) -> ImageU8:
    return ImageU8(gamma_lut(gamma)[img.data])


def preprocess_pipeline(img: ImageU8, cfg: PreprocessConfig = PreprocessConfig()) -> ImageU8:
    """resize -> bilateral -> NLM -> CLAHE (if enabled) -> gamma (if enabled)."""
    tw, th = cfg.target_size
    out = resize_bilinear(img, tw, th)
    out = bilateral_filter(out, cfg.bilateral_d, cfg.sigma_color, cfg.sigma_space)
    out = nlm_denoise(out, cfg.nlm_h, cfg.nlm_h_color, cfg.nlm_template, cfg.nlm_search)
    if cfg.enable_clahe and out.channels == 3:
        out = clahe_luminance(out, cfg.clahe_clip, cfg.clahe_tiles)
    if cfg.enable_gamma:
        out = gamma_correct(out, cfg.gamma)
    return out

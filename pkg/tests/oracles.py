"""Independent brute-force references for every kernel under test.

These are deliberately written as scalar loops (or direct window sums) so
they share no code path with the vectorized implementations they check.
"""

from __future__ import annotations

import math

import numpy as np


# ---------------------------------------------------------------------------
# Filters
# ---------------------------------------------------------------------------

def bilateral_oracle(arr: np.ndarray, d: int, sigma_color: float, sigma_space: float) -> np.ndarray:
    """Double-loop bilateral filter; joint-channel Euclidean range distance,
    mirrored borders, half-up rounding."""
    r = d // 2
    src = arr.astype(np.float64)
    h, w, c = src.shape
    padded = np.pad(src, ((r, r), (r, r), (0, 0)), mode="symmetric")
    out = np.zeros_like(src)
    for y in range(h):
        for x in range(w):
            center = src[y, x]
            acc = np.zeros(c)
            wsum = 0.0
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    q = padded[y + r + dy, x + r + dx]
                    diff2 = float(np.sum((q - center) ** 2))
                    wgt = math.exp(
                        -(dx * dx + dy * dy) / (2.0 * sigma_space**2)
                        - diff2 / (2.0 * sigma_color**2)
                    )
                    acc += wgt * q
                    wsum += wgt
            out[y, x] = acc / wsum
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def nlm_oracle(arr: np.ndarray, h: float, h_color: float, template: int, search: int) -> np.ndarray:
    """Per-pixel non-local means with explicit patch comparisons."""
    src = arr.astype(np.float64)
    hh, ww, c = src.shape
    ts, ss = template // 2, search // 2
    h_eff = h if c == 1 else h_color
    pad = ss + ts
    padded = np.pad(src, ((pad, pad), (pad, pad), (0, 0)), mode="symmetric")
    norm = float(template * template * c)
    out = np.zeros_like(src)
    for y in range(hh):
        for x in range(ww):
            py, px = y + pad, x + pad
            ref = padded[py - ts : py + ts + 1, px - ts : px + ts + 1]
            acc = np.zeros(c)
            wsum = 0.0
            for dy in range(-ss, ss + 1):
                for dx in range(-ss, ss + 1):
                    qy, qx = py + dy, px + dx
                    patch = padded[qy - ts : qy + ts + 1, qx - ts : qx + ts + 1]
                    d2 = float(np.sum((ref - patch) ** 2)) / norm
                    wgt = math.exp(-d2 / (h_eff * h_eff))
                    acc += wgt * padded[qy, qx]
                    wsum += wgt
            out[y, x] = acc / wsum
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def clahe_plane_oracle(plane: np.ndarray, clip: float, tiles: tuple[int, int]):
    """Scalar CLAHE on a 0..255 integer plane. Returns the equalized plane
    and the list of clipped tile histograms (for the clip-bound assertion)."""
    h, w = plane.shape
    ty, tx = tiles

    def bounds(n, t):
        return [((i * n) // t, ((i + 1) * n) // t) for i in range(t)]

    rows, cols = bounds(h, ty), bounds(w, tx)
    maps = [[None] * tx for _ in range(ty)]
    cy = [(r0 + r1 - 1) / 2.0 for r0, r1 in rows]
    cx = [(c0 + c1 - 1) / 2.0 for c0, c1 in cols]
    clipped_hists = []
    for i in range(ty):
        for j in range(tx):
            r0, r1 = rows[i]
            c0, c1 = cols[j]
            tile = plane[r0:r1, c0:c1]
            npix = tile.size
            hist = [0.0] * 256
            for v in tile.ravel():
                hist[int(v)] += 1.0
            limit = clip * npix / 256.0
            excess = sum(max(x - limit, 0.0) for x in hist)
            hist = [min(x, limit) + excess / 256.0 for x in hist]
            clipped_hists.append((hist, limit, excess / 256.0))
            cdf = np.cumsum(hist)
            maps[i][j] = cdf * 255.0 / npix

    def axis_pick(coord, centers):
        if len(centers) == 1:
            return 0, 0, 0.0
        lo = 0
        while lo + 1 < len(centers) - 1 and coord >= centers[lo + 1]:
            lo += 1
        hi = lo + 1
        frac = (coord - centers[lo]) / (centers[hi] - centers[lo])
        return lo, hi, min(max(frac, 0.0), 1.0)

    out = np.zeros_like(plane)
    for y in range(h):
        i0, i1, fy = axis_pick(float(y), cy)
        for x in range(w):
            j0, j1, fx = axis_pick(float(x), cx)
            v = int(plane[y, x])
            val = (
                maps[i0][j0][v] * (1 - fy) * (1 - fx)
                + maps[i0][j1][v] * (1 - fy) * fx
                + maps[i1][j0][v] * fy * (1 - fx)
                + maps[i1][j1][v] * fy * fx
            )
            out[y, x] = min(max(int(math.floor(val + 0.5)), 0), 255)
    return out, clipped_hists


# ---------------------------------------------------------------------------
# Descriptors
# ---------------------------------------------------------------------------

def lbp_oracle(arr: np.ndarray, points: int = 8, radius: float = 1.0) -> np.ndarray:
    """Nested-loop uniform LBP histogram (L1-normalized)."""
    img = arr.astype(np.float64)
    h, w = img.shape
    margin = int(math.ceil(radius))

    offsets = []
    for p in range(points):
        theta = 2.0 * math.pi * p / points
        dx = radius * math.cos(theta)
        dy = radius * math.sin(theta)
        if abs(dx - round(dx)) < 1e-9:
            dx = float(round(dx))
        if abs(dy - round(dy)) < 1e-9:
            dy = float(round(dy))
        offsets.append((dx, dy))

    uniform = []
    for code in range(1 << points):
        bits = [(code >> i) & 1 for i in range(points)]
        if sum(bits[i] != bits[(i + 1) % points] for i in range(points)) <= 2:
            uniform.append(code)
    bin_of = {code: b for b, code in enumerate(uniform)}
    n_bins = len(uniform) + 1

    hist = np.zeros(n_bins)
    for y in range(margin, h - margin):
        for x in range(margin, w - margin):
            center = img[y, x]
            code = 0
            for bit, (dx, dy) in enumerate(offsets):
                sy, sx = y + dy, x + dx
                y0, x0 = int(math.floor(sy)), int(math.floor(sx))
                y1, x1 = min(y0 + 1, h - 1), min(x0 + 1, w - 1)
                fy, fx = sy - y0, sx - x0
                v00, v10 = img[y0, x0], img[y0, x1]
                v01, v11 = img[y1, x0], img[y1, x1]
                val = v00 + fx * (v10 - v00) + fy * (v01 - v00) + fx * fy * (v00 - v10 - v01 + v11)
                if val >= center:
                    code |= 1 << bit
            hist[bin_of.get(code, n_bins - 1)] += 1.0
    return hist / hist.sum()


def hog_oracle(arr: np.ndarray, cell: int = 8, block: int = 2, nbins: int = 9) -> np.ndarray:
    """Scalar HOG on an already-sized square grayscale array."""
    img = arr.astype(np.float64)
    size = img.shape[0]
    cells = size // cell
    binw = 180.0 / nbins
    hist = np.zeros((cells, cells, nbins))
    for y in range(size):
        for x in range(size):
            gx = img[y, x + 1] - img[y, x - 1] if 0 < x < size - 1 else 0.0
            gy = img[y + 1, x] - img[y - 1, x] if 0 < y < size - 1 else 0.0
            mag = math.hypot(gx, gy)
            ang = math.degrees(math.atan2(gy, gx)) % 180.0
            pos = ang / binw
            lo = int(math.floor(pos)) % nbins
            frac = pos - math.floor(pos)
            hi = (lo + 1) % nbins
            hist[y // cell, x // cell, lo] += mag * (1 - frac)
            hist[y // cell, x // cell, hi] += mag * frac
    eps = 1e-12
    nblocks = cells - block + 1
    parts = []
    for by in range(nblocks):
        for bx in range(nblocks):
            v = hist[by : by + block, bx : bx + block, :].ravel().copy()
            v = v / math.sqrt(float(np.sum(v * v)) + eps)
            v = np.minimum(v, 0.2)
            v = v / math.sqrt(float(np.sum(v * v)) + eps)
            parts.append(v)
    return np.concatenate(parts)


def gabor_response_oracle(arr: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Direct windowed correlation with mirrored borders (kernel is
    point-symmetric, so correlation equals convolution)."""
    img = arr.astype(np.float64)
    kh = kernel.shape[0] // 2
    h, w = img.shape
    padded = np.pad(img, kh, mode="symmetric")
    out = np.zeros_like(img)
    for y in range(h):
        for x in range(w):
            window = padded[y : y + 2 * kh + 1, x : x + 2 * kh + 1]
            out[y, x] = float(np.sum(window * kernel))
    return out


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def metrics_oracle(y_true, y_pred, k: int):
    """Accuracy plus macro precision/recall/F1 straight from label lists."""
    n = len(y_true)
    correct = sum(1 for t, p in zip(y_true, y_pred) if t == p)
    precisions, recalls, f1s = [], [], []
    for c in range(k):
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == c and p == c)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != c and p == c)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == c and p != c)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        precisions.append(prec)
        recalls.append(rec)
        f1s.append(f1)
    return (
        correct / n,
        sum(precisions) / k,
        sum(recalls) / k,
        sum(f1s) / k,
    )


def svm_decision_oracle(alpha_y: np.ndarray, sv: np.ndarray, b: float, gamma: float,
                        kernel: str, x: np.ndarray) -> float:
    """Direct sum alpha_i y_i K(x_i, x) + b."""
    total = 0.0
    for ay, s in zip(alpha_y, sv):
        if kernel == "linear":
            total += ay * float(np.dot(s, x))
        else:
            total += ay * math.exp(-gamma * float(np.sum((s - x) ** 2)))
    return total + b

#!/usr/bin/env python3
"""Image container and codec walkthrough.

Builds a small RGB test card, saves and reloads it as PNG and PPM, converts
to grayscale and CIELAB, and resizes it, printing what happens to the bytes
at each step.
"""

from pathlib import Path

import numpy as np

from pvdefect import ImageU8, lab_to_rgb, load_image, resize_bilinear, rgb_to_lab, save_image, to_gray

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# a 64x64 test card: smooth color gradients with a bright block
yy, xx = np.mgrid[0:64, 0:64]
card = np.stack([xx * 4, yy * 4, (xx + yy) * 2], axis=2).astype(np.uint8)
card[20:40, 20:40] = [250, 250, 250]
img = ImageU8(card)
print(f"test card: {img.width}x{img.height}x{img.channels}")

for name in ("card.png", "card.ppm"):
    save_image(img, OUT / name)
    back = load_image(OUT / name)
    print(f"{name}: {Path(OUT / name).stat().st_size} bytes, "
          f"round trip identical: {np.array_equal(back.data, img.data)}")

gray = to_gray(img)
print(f"grayscale range: {gray.data.min()}..{gray.data.max()}")

lab = rgb_to_lab(img)
print(f"L channel range: {lab.data[:, :, 0].min():.1f}..{lab.data[:, :, 0].max():.1f} (must stay within 0..100)")
back = lab_to_rgb(lab)
drift = np.abs(back.data.astype(int) - img.data.astype(int)).max()
print(f"LAB round-trip max per-channel drift: {drift} (contract: <= 1)")

small = resize_bilinear(img, 16, 16)
same = resize_bilinear(img, 64, 64)
print(f"resize 64->16 shape: {small.width}x{small.height}")
print(f"same-size resize byte-identical: {np.array_equal(same.data, img.data)}")

#!/usr/bin/env python3
"""The three handcrafted descriptors on synthetic textures.

LBP histograms react to micro-texture, HOG to edges, the Gabor bank to
oriented spatial frequency. Each claim is demonstrated on a texture built
to trigger it.
"""

import numpy as np

from pvdefect import HandcraftedConfig, extract_handcrafted, gabor_features, hog_descriptor, lbp_histogram
from pvdefect.image import ImageU8

rng = np.random.default_rng(1)
cfg = HandcraftedConfig()

# LBP: smooth vs salt-and-pepper texture
smooth = ImageU8(np.full((48, 48, 1), 128, dtype=np.uint8))
speckled = ImageU8(np.where(rng.random((48, 48, 1)) < 0.3, 40, 210).astype(np.uint8))
h_smooth = lbp_histogram(smooth).values
h_speck = lbp_histogram(speckled).values
print(f"LBP: smooth image concentrates all mass in one bin (max={h_smooth.max():.2f}); "
      f"speckle spreads it (max={h_speck.max():.2f})")

# HOG: a vertical edge puts its energy in the 0-degree bin
edge = np.zeros((128, 128, 1), dtype=np.uint8)
edge[:, 64:] = 255
d = hog_descriptor(ImageU8(edge), cfg).values
energy = np.sum(d.reshape(-1, 9) ** 2, axis=0)
print(f"HOG: vertical step edge -> bin energies {np.round(energy / energy.sum(), 3)}")

# Gabor: gratings light up the matching (orientation, wavelength) cell
for theta_deg, lam in ((0, 8.0), (90, 16.0)):
    yy, xx = np.mgrid[0:64, 0:64]
    proj = xx * np.cos(np.deg2rad(theta_deg)) + yy * np.sin(np.deg2rad(theta_deg))
    row = np.clip(np.floor(127.5 + 100 * np.cos(2 * np.pi * proj / lam) + 0.5), 0, 255)
    img = ImageU8(row.astype(np.uint8)[:, :, None])
    means = gabor_features(img, cfg).values[0::2].reshape(4, 4)
    i, j = np.unravel_index(np.argmax(means), means.shape)
    print(f"Gabor: grating ({theta_deg} deg, wavelength {lam}) -> strongest response at "
          f"({cfg.gabor_orientations[i]:.0f} deg, wavelength {cfg.gabor_wavelengths[j]:.0f})")

blocks = extract_handcrafted(ImageU8(rng.integers(0, 256, (64, 64, 3), dtype=np.uint8)))
print("full extraction:", ", ".join(f"{b.name}({b.dim})" for b in blocks))

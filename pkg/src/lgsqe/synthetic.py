"""Seeded synthetic image sources for demos and offline testing.

``stroke_images`` renders random smooth polyline strokes on a square canvas,
giving structured grayscale images with handwriting-like statistics (sparse
ink, smooth edges, correlated neighborhoods) at any requested size.
``gaussian_degrade`` turns a real set into a pseudo-generated one by adding
clipped Gaussian pixel noise, a controllable stand-in for a weak generator.
"""

from __future__ import annotations

import numpy as np

from .datasets import GENERATED, ImageSet


def stroke_images(count: int, side: int = 28, seed: int = 0, noise: float = 0.0) -> ImageSet:
    """Render ``count`` random stroke drawings as a real-provenance ImageSet.

    ``noise`` adds a clipped Gaussian floor to every image, mimicking sensor
    noise; without it the canvases are unnaturally smooth and any additive
    degradation becomes trivially detectable.
    """
    rng = np.random.default_rng(seed)
    grid_y, grid_x = np.mgrid[0:side, 0:side]
    grid = np.stack([grid_y.ravel(), grid_x.ravel()], axis=1).astype(np.float64)
    images = np.empty((count, side, side, 1), dtype=np.float32)
    lo, hi = 0.18 * side, 0.82 * side
    for i in range(count):
        n_anchor = int(rng.integers(3, 6))
        anchors = rng.uniform(lo, hi, size=(n_anchor, 2))
        thickness = rng.uniform(0.035 * side, 0.06 * side)
        centers = []
        for a, b in zip(anchors[:-1], anchors[1:]):
            steps = np.linspace(0.0, 1.0, 24)[:, None]
            centers.append(a + steps * (b - a))
        centers = np.concatenate(centers, axis=0)
        sq_dist = ((grid[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        ink = np.exp(-sq_dist / (2.0 * thickness**2)).sum(axis=1)
        ink *= rng.uniform(0.7, 1.0) / ink.max()
        canvas = ink.reshape(side, side)
        if noise > 0.0:
            canvas = canvas + rng.normal(0.0, noise, size=canvas.shape)
        images[i, :, :, 0] = np.clip(canvas, 0.0, 1.0)
    return ImageSet(images, "real")


def gaussian_degrade(images: ImageSet, sigma: float, seed: int = 0) -> ImageSet:
    """Additive clipped Gaussian noise; provenance becomes 'generated'."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    rng = np.random.default_rng(seed)
    noisy = images.pixels + rng.normal(0.0, sigma, size=images.pixels.shape)
    return ImageSet(np.clip(noisy, 0.0, 1.0).astype(np.float32), GENERATED)


def mixed_quality_degrade(images: ImageSet, max_sigma: float, seed: int = 0) -> ImageSet:
    """Per-sample noise level drawn uniformly from [0, max_sigma].

    Mimics a generator whose samples span a quality range: some are nearly
    indistinguishable from real images, others clearly degraded, so soft
    scores spread across (0, 1) instead of saturating.
    """
    if max_sigma < 0:
        raise ValueError(f"max_sigma must be >= 0, got {max_sigma}")
    rng = np.random.default_rng(seed)
    sigmas = rng.uniform(0.0, max_sigma, size=images.count)
    noise = rng.normal(0.0, 1.0, size=images.pixels.shape) * sigmas[:, None, None, None]
    return ImageSet(np.clip(images.pixels + noise, 0.0, 1.0).astype(np.float32), GENERATED)

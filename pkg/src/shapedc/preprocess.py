"""Band normalization and overlapping-patch enumeration."""

from __future__ import annotations

import numpy as np

from .types import HyperCube, PatchGeometry

# Bands whose population std falls below this are treated as constant.
_CONSTANT_BAND_STD = 1e-12


def z_normalize(cube: HyperCube) -> HyperCube:
    """Standardize each band to zero mean and unit population std.

    Bands with (near-)zero variance are set to all zeros instead of being
    divided by a vanishing std.
    """
    values = cube.values
    mean = values.mean(axis=(0, 1))
    std = values.std(axis=(0, 1))  # population (1/N) standard deviation
    constant = std < _CONSTANT_BAND_STD
    safe_std = np.where(constant, 1.0, std)
    normalized = (values - mean) / safe_std
    if constant.any():
        normalized[:, :, constant] = 0.0
    return HyperCube(normalized)


def enumerate_patches(cube: HyperCube, geometry: PatchGeometry) -> list[tuple[int, int]]:
    """All fully-interior patch anchors (top-left corners), row-major, stride 1."""
    side = geometry.side
    if cube.height < side or cube.width < side:
        raise ValueError(
            f"cube smaller than patch: image is {cube.height}x{cube.width}, "
            f"patch side is {side}"
        )
    return [
        (row, col)
        for row in range(cube.height - side + 1)
        for col in range(cube.width - side + 1)
    ]


def extract_patch(
    cube: HyperCube, anchor: tuple[int, int], geometry: PatchGeometry
) -> tuple[np.ndarray, np.ndarray]:
    """Return the vectorized patch and its per-pixel spectra.

    The vector lays out patch pixels row-major with the bands of each pixel
    contiguous, so pixel ``z`` occupies rows ``[z*bands, (z+1)*bands)``. The
    second array has shape ``(pixel_count, bands)`` and shares that ordering.
    """
    row, col = anchor
    side = geometry.side
    if row < 0 or col < 0 or row + side > cube.height or col + side > cube.width:
        raise ValueError(f"anchor {anchor} is out of bounds for side {side}")
    window = cube.values[row:row + side, col:col + side, :]
    pixels = window.reshape(geometry.pixel_count, cube.bands)
    return pixels.reshape(-1), pixels


def unvectorize(vector: np.ndarray, geometry: PatchGeometry, bands: int) -> np.ndarray:
    """Inverse of the patch vectorization: back to ``(side, side, bands)``."""
    vector = np.asarray(vector)
    if vector.size != geometry.pixel_count * bands:
        raise ValueError("vector length does not match the patch geometry")
    return vector.reshape(geometry.side, geometry.side, bands)

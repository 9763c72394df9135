"""SLIC-style superpixel segmentation over all bands of a normalized cube.

Cluster centers start on a regular grid (perturbed to the lowest-gradient
pixel in a 3x3 neighborhood), pixels are assigned to the nearest center
within a +-target_size search window under a combined spectral/spatial
distance, and centers move to the mean of their pixels for a fixed number
of iterations. A postprocessing pass merges stray components so every
segment is a single 4-connected region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .types import HyperCube, IntArray, LabelMap, _as_readonly_int

_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class Segmentation:
    """Segment ids per pixel (1-based); every segment is 4-connected."""

    labels: IntArray  # (height, width), values in 1..segment_count
    segment_count: int

    def __post_init__(self):
        labels = _as_readonly_int(self.labels, "segment labels", 2)
        if self.segment_count < 1:
            raise ValueError("segment_count must be >= 1")
        if labels.min() < 1 or labels.max() > self.segment_count:
            raise ValueError("segment ids must lie in 1..segment_count")
        if np.unique(labels).size != self.segment_count:
            raise ValueError("every segment id must occur")
        object.__setattr__(self, "labels", labels)

    def as_label_map(self) -> LabelMap:
        return LabelMap(self.labels)


def slic_segment(
    cube: HyperCube,
    target_size: int = 20,
    compactness: float = 1.0,
    iterations: int = 10,
) -> Segmentation:
    """Segment the cube into roughly ``target_size``-sided compact superpixels."""
    if target_size < 2:
        raise ValueError("target_size must be >= 2")
    if cube.height < target_size or cube.width < target_size:
        raise ValueError(
            f"target_size larger than image: {target_size} vs "
            f"{cube.height}x{cube.width}"
        )
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if compactness < 0:
        raise ValueError("compactness must be nonnegative")

    values = cube.values
    height, width = cube.height, cube.width
    spatial_weight = (compactness / target_size) ** 2

    center_pos, center_spec = _init_centers(values, target_size)
    n_centers = center_pos.shape[0]

    rows_grid, cols_grid = np.indices((height, width))
    assignment = np.zeros((height, width), dtype=np.int64)

    for _ in range(iterations):
        best = np.full((height, width), np.inf)
        assignment.fill(-1)
        for ci in range(n_centers):
            cr, cc = center_pos[ci]
            r0 = max(int(np.floor(cr)) - target_size, 0)
            r1 = min(int(np.floor(cr)) + target_size + 1, height)
            c0 = max(int(np.floor(cc)) - target_size, 0)
            c1 = min(int(np.floor(cc)) + target_size + 1, width)
            if r0 >= r1 or c0 >= c1:
                continue
            window = values[r0:r1, c0:c1, :]
            d_spec = ((window - center_spec[ci]) ** 2).sum(axis=2)
            d_spat = (rows_grid[r0:r1, c0:c1] - cr) ** 2 + (cols_grid[r0:r1, c0:c1] - cc) ** 2
            dist = d_spec + spatial_weight * d_spat
            view_best = best[r0:r1, c0:c1]
            view_assign = assignment[r0:r1, c0:c1]
            closer = dist < view_best
            view_best[closer] = dist[closer]
            view_assign[closer] = ci
        if (assignment < 0).any():
            # Grid spacing <= target_size makes this unreachable in practice,
            # but stay total: snap leftovers to the spatially nearest center.
            rr, cc = np.nonzero(assignment < 0)
            d = (rr[:, None] - center_pos[:, 0]) ** 2 + (cc[:, None] - center_pos[:, 1]) ** 2
            assignment[rr, cc] = np.argmin(d, axis=1)
        for ci in range(n_centers):
            mask = assignment == ci
            if not mask.any():
                continue
            center_spec[ci] = values[mask].mean(axis=0)
            center_pos[ci, 0] = rows_grid[mask].mean()
            center_pos[ci, 1] = cols_grid[mask].mean()

    labels = _enforce_connectivity(assignment)
    return Segmentation(labels, int(labels.max()))


def _init_centers(values: np.ndarray, target_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Regular grid of centers, each moved to its 3x3 lowest-gradient pixel."""
    height, width, _ = values.shape
    gradient = _gradient_magnitude(values)
    n_rows = max(1, int(np.ceil(height / target_size)))
    n_cols = max(1, int(np.ceil(width / target_size)))
    positions = []
    for i in range(n_rows):
        row = min(int((i + 0.5) * height / n_rows), height - 1)
        for j in range(n_cols):
            col = min(int((j + 0.5) * width / n_cols), width - 1)
            r0, r1 = max(row - 1, 0), min(row + 2, height)
            c0, c1 = max(col - 1, 0), min(col + 2, width)
            patch = gradient[r0:r1, c0:c1]
            flat = int(np.argmin(patch))
            positions.append((r0 + flat // patch.shape[1], c0 + flat % patch.shape[1]))
    pos = np.array(positions, dtype=np.float64)
    spec = values[pos[:, 0].astype(int), pos[:, 1].astype(int), :].copy()
    return pos, spec


def _gradient_magnitude(values: np.ndarray) -> np.ndarray:
    """Sum over bands of squared forward differences (0 past the last row/col)."""
    grad = np.zeros(values.shape[:2])
    grad[:, :-1] += ((values[:, 1:, :] - values[:, :-1, :]) ** 2).sum(axis=2)
    grad[:-1, :] += ((values[1:, :, :] - values[:-1, :, :]) ** 2).sum(axis=2)
    return grad


def _enforce_connectivity(assignment: np.ndarray) -> np.ndarray:
    """Merge every non-largest component of a segment into its largest neighbor."""
    labels = assignment.copy()
    while True:
        merged = False
        sizes = np.bincount(labels.ravel())
        for sid in np.unique(labels):
            components, count = ndimage.label(labels == sid, structure=_FOUR_CONNECTED)
            if count <= 1:
                continue
            comp_sizes = np.bincount(components.ravel())[1:]
            keep = int(np.argmax(comp_sizes)) + 1
            for comp_id in range(1, count + 1):
                if comp_id == keep:
                    continue
                region = components == comp_id
                dilated = ndimage.binary_dilation(region, structure=_FOUR_CONNECTED)
                border = dilated & ~region
                neighbor_ids = np.unique(labels[border])
                neighbor_ids = neighbor_ids[neighbor_ids != sid]
                if neighbor_ids.size == 0:
                    continue
                target = neighbor_ids[int(np.argmax(sizes[neighbor_ids]))]
                labels[region] = target
                sizes = np.bincount(labels.ravel(), minlength=sizes.size)
                merged = True
        if not merged:
            break
    return _relabel_by_first_occurrence(labels)


def _relabel_by_first_occurrence(labels: np.ndarray) -> np.ndarray:
    flat = labels.ravel()
    _, first = np.unique(flat, return_index=True)
    order = flat[np.sort(first)]
    mapping = np.zeros(int(flat.max()) + 1, dtype=np.int64)
    mapping[order] = np.arange(1, order.size + 1)
    return mapping[labels]

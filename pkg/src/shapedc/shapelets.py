"""Learning representative spatial patterns from a segmentation.

Every segmentation window is turned into one binary patch per intersecting
segment (0 on the segment, 1 elsewhere); k-medoids under Hamming distance
picks the most representative patches; their 4-connected components become
the labeled regions of a shapelet. A deterministic dyadic generator provides
synthetic block patterns for ablation runs.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import ndimage

from .superpixel import Segmentation
from .types import PatchGeometry, Shapelet, ShapeletSet

_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_POPCOUNT = np.unpackbits(np.arange(256, dtype=np.uint8)[:, None], axis=1).sum(axis=1)


def extract_binary_patches(
    segmentation: Segmentation, geometry: PatchGeometry, stride: int = 1
) -> np.ndarray:
    """Distinct binary patches of all windows, one per intersecting segment.

    Returns a ``(count, side, side)`` uint8 array in first-occurrence order
    (row-major window scan, ascending segment id within a window).
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    side = geometry.side
    labels = segmentation.labels
    height, width = labels.shape
    if side > height or side > width:
        raise ValueError(f"window larger than image: side {side} vs {height}x{width}")
    seen: dict[bytes, None] = {}
    patches: list[np.ndarray] = []
    for row in range(0, height - side + 1, stride):
        for col in range(0, width - side + 1, stride):
            window = labels[row:row + side, col:col + side]
            for segment_id in np.unique(window):
                patch = (window != segment_id).astype(np.uint8)
                key = patch.tobytes()
                if key not in seen:
                    seen[key] = None
                    patches.append(patch)
    return np.stack(patches)


def _pack(patches: np.ndarray) -> np.ndarray:
    return np.packbits(patches.reshape(patches.shape[0], -1), axis=1)


def _hamming(packed_a: np.ndarray, packed_b: np.ndarray) -> np.ndarray:
    """Pairwise Hamming distances between two packed bit-patch arrays."""
    xor = np.bitwise_xor(packed_a[:, None, :], packed_b[None, :, :])
    return _POPCOUNT[xor].sum(axis=2)


def total_hamming_cost(patches: np.ndarray, medoids: np.ndarray) -> int:
    """Sum over patches of the Hamming distance to the nearest medoid."""
    distances = _hamming(_pack(patches), _pack(medoids))
    return int(distances.min(axis=1).sum())


def kmedoids(
    binary_patches: np.ndarray, n_medoids: int, max_iter: int = 100, seed: int = 0
) -> np.ndarray:
    """PAM-style alternating k-medoids under Hamming distance.

    Medoids are initialized by a farthest-first sweep from a seeded random
    patch, then assignment and medoid-update steps alternate until a fixed
    point (or ``max_iter``). The returned medoids are members of the input.
    """
    patches = np.asarray(binary_patches, dtype=np.uint8)
    if patches.ndim != 3:
        raise ValueError("binary patches must be a (count, side, side) array")
    if n_medoids < 1:
        raise ValueError("n_medoids must be >= 1")
    count = patches.shape[0]
    distinct = np.unique(patches.reshape(count, -1), axis=0).shape[0]
    if distinct < n_medoids:
        raise ValueError(
            f"fewer than N distinct patches: requested {n_medoids} medoids "
            f"from {distinct} distinct patches"
        )
    packed = _pack(patches)
    rng = np.random.default_rng(seed)

    medoids = [int(rng.integers(count))]
    nearest = _hamming(packed, packed[medoids[-1:]])[:, 0]
    while len(medoids) < n_medoids:
        medoids.append(int(np.argmax(nearest)))
        nearest = np.minimum(nearest, _hamming(packed, packed[medoids[-1:]])[:, 0])
    medoid_idx = np.array(medoids)

    for _ in range(max_iter):
        distances = _hamming(packed, packed[medoid_idx])
        assignment = np.argmin(distances, axis=1)
        updated = medoid_idx.copy()
        for j in range(n_medoids):
            members = np.flatnonzero(assignment == j)
            if members.size == 0:
                continue
            within = _hamming(packed[members], packed[members])
            updated[j] = members[int(np.argmin(within.sum(axis=1)))]
        if np.array_equal(updated, medoid_idx):
            break
        medoid_idx = updated
    return patches[medoid_idx]


def medoids_to_shapelets(medoids: np.ndarray) -> ShapeletSet:
    """Label the 4-connected components of each medoid mask as regions.

    Both 0-areas and 1-areas become regions; ids follow row-major first
    occurrence.
    """
    medoids = np.asarray(medoids, dtype=np.uint8)
    shapelets = []
    for mask in medoids:
        zero_comp, n_zero = ndimage.label(mask == 0, structure=_FOUR_CONNECTED)
        one_comp, _ = ndimage.label(mask == 1, structure=_FOUR_CONNECTED)
        combined = np.where(mask == 0, zero_comp, n_zero + one_comp)
        region_map = _relabel_first_occurrence(combined)
        shapelets.append(Shapelet(region_map, int(region_map.max())))
    return ShapeletSet(tuple(shapelets))


def _relabel_first_occurrence(labels: np.ndarray) -> np.ndarray:
    flat = labels.ravel()
    _, first = np.unique(flat, return_index=True)
    order = flat[np.sort(first)]
    mapping = np.zeros(int(flat.max()) + 1, dtype=np.int64)
    mapping[order] = np.arange(1, order.size + 1)
    return mapping[labels]


def haar_shapelets(side: int, count: int) -> ShapeletSet:
    """Deterministic dyadic block patterns: full patch, half splits, quadrant
    patterns, then finer levels, truncated to ``count``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if side < 2:
        raise ValueError("side must be >= 2")
    patterns: list[np.ndarray] = [np.ones((side, side), dtype=np.int64)]
    level = 1
    while len(patterns) < count:
        parts = 2 ** level
        if parts > side:
            raise ValueError(
                f"{count} synthetic shapelets requested but only {len(patterns)} "
                f"dyadic patterns exist for side {side}"
            )
        band = np.zeros(side, dtype=np.int64)
        for i in range(parts):
            band[i * side // parts:(i + 1) * side // parts] = i
        vertical = np.broadcast_to(band[None, :] + 1, (side, side)).copy()
        horizontal = np.broadcast_to(band[:, None] + 1, (side, side)).copy()
        blocks = band[:, None] * parts + band[None, :] + 1
        checker = (band[:, None] + band[None, :]) % 2 + 1
        patterns.extend([vertical, horizontal, blocks, checker])
        level += 1
    shapelets = tuple(
        Shapelet(p, int(p.max())) for p in patterns[:count]
    )
    return ShapeletSet(shapelets)


def write_shapelet_set(shapelet_set: ShapeletSet, path) -> None:
    """Text format: "count side", then per shapelet its region count and grid."""
    lines = [f"{len(shapelet_set)} {shapelet_set.side}"]
    for shapelet in shapelet_set:
        lines.append(str(shapelet.region_count))
        lines.extend(" ".join(str(int(v)) for v in row) for row in shapelet.region_map)
    Path(path).write_text("\n".join(lines) + "\n")


def read_shapelet_set(path) -> ShapeletSet:
    lines = [line for line in Path(path).read_text().splitlines() if line.strip()]
    if not lines:
        raise ValueError("empty shapelet file")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError("first line must be 'count side'")
    count, side = (int(v) for v in head)
    shapelets = []
    cursor = 1
    for _ in range(count):
        if cursor >= len(lines):
            raise ValueError("truncated shapelet file")
        region_count = int(lines[cursor])
        cursor += 1
        grid = lines[cursor:cursor + side]
        if len(grid) != side:
            raise ValueError("truncated shapelet grid")
        cursor += side
        rows = [[int(v) for v in line.split()] for line in grid]
        if any(len(row) != side for row in rows):
            raise ValueError("ragged shapelet grid")
        shapelets.append(Shapelet(np.array(rows, dtype=np.int64), region_count))
    return ShapeletSet(tuple(shapelets))

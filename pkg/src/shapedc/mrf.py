"""Per-patch selection of training spectra via exact energy minimization.

For one image patch and one shapelet, every patch pixel and every shapelet
region gets assigned a training sample. The energy rewards pixel/sample
correlation and region classes that dominate a rough per-pixel label
estimate, and penalizes pixels disagreeing with their region's class:

    E = - sum_z corr(z, pixel_choice[z])
        - gamma * sum_r h_r[class(region_choice[r])]
        + omega * sum_r sum_{z in region r} [class(pixel_choice[z]) != class(region_choice[r])]

Region nodes connect only to their own member pixels, so minimizing over
one region class at a time (with pixels optimized independently given that
class) is exact. Ties resolve to the lowest class id, then the lowest
sample index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import (
    FloatArray,
    IntArray,
    MrfConfig,
    PatchDictionary,
    Shapelet,
    ShapeletSet,
    TrainingSet,
    _as_readonly_float,
    _as_readonly_int,
)

# Centered spectra with a norm below this count as zero-variance.
_ZERO_VARIANCE = 1e-12


@dataclass(frozen=True)
class Assignment:
    """Chosen training-sample indices (0-based) for pixels and regions."""

    pixel_choice: IntArray   # (pixel_count,)
    region_choice: IntArray  # (region_count,)
    energy: float

    def __post_init__(self):
        object.__setattr__(self, "pixel_choice", _as_readonly_int(self.pixel_choice, "pixel_choice", 1))
        object.__setattr__(self, "region_choice", _as_readonly_int(self.region_choice, "region_choice", 1))


def pixel_correlations(patch_pixels: np.ndarray, training_set: TrainingSet) -> FloatArray:
    """Pearson correlation over bands between each patch pixel and each sample.

    Zero-variance spectra (on either side) yield correlation 0.
    """
    pixels = np.asarray(patch_pixels, dtype=np.float64)
    if pixels.ndim != 2:
        raise ValueError("patch pixels must be a (pixel_count, bands) array")
    if pixels.shape[1] != training_set.bands:
        raise ValueError("patch pixels and training spectra disagree on band count")
    if pixels.shape[1] < 2:
        raise ValueError("correlation undefined over a single band")
    px = pixels - pixels.mean(axis=1, keepdims=True)
    tx = training_set.spectra - training_set.spectra.mean(axis=1, keepdims=True)
    px_norm = np.linalg.norm(px, axis=1)
    tx_norm = np.linalg.norm(tx, axis=1)
    denom = np.outer(px_norm, tx_norm)
    degenerate = (px_norm[:, None] < _ZERO_VARIANCE) | (tx_norm[None, :] < _ZERO_VARIANCE)
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.where(degenerate, 0.0, (px @ tx.T) / np.where(degenerate, 1.0, denom))
    return np.clip(corr, -1.0, 1.0)


def nn_label_estimate(correlations: np.ndarray, training_labels: np.ndarray) -> IntArray:
    """Rough per-pixel class estimate: label of the best-correlated sample.

    Ties go to the lowest sample index.
    """
    correlations = np.asarray(correlations)
    labels = np.asarray(training_labels, dtype=np.int64)
    return labels[np.argmax(correlations, axis=1)]


def region_histogram(estimated_labels: np.ndarray, region_pixels: np.ndarray, class_count: int) -> FloatArray:
    """Normalized class histogram of the estimated labels inside one region."""
    region_pixels = np.asarray(region_pixels, dtype=np.int64)
    if region_pixels.size == 0:
        raise ValueError("empty region")
    picked = np.asarray(estimated_labels, dtype=np.int64)[region_pixels]
    counts = np.bincount(picked - 1, minlength=class_count).astype(np.float64)
    return counts / region_pixels.size


def energy(
    pixel_choice: np.ndarray,
    region_choice: np.ndarray,
    correlations: np.ndarray,
    histograms: np.ndarray,
    shapelet: Shapelet,
    training_labels: np.ndarray,
    config: MrfConfig,
) -> float:
    """Evaluate the dictionary-construction energy for one full assignment."""
    pixel_choice = np.asarray(pixel_choice, dtype=np.int64)
    region_choice = np.asarray(region_choice, dtype=np.int64)
    correlations = np.asarray(correlations)
    histograms = np.asarray(histograms)
    labels = np.asarray(training_labels, dtype=np.int64)

    pixel_count = pixel_choice.size
    region_count = region_choice.size
    corr_term = correlations[np.arange(pixel_count), pixel_choice].sum()
    region_classes = labels[region_choice]
    hist_term = histograms[np.arange(region_count), region_classes - 1].sum()
    regions_flat = shapelet.region_map.reshape(-1)  # pixel z <-> flat index z
    disagreements = int((labels[pixel_choice] != region_classes[regions_flat - 1]).sum())
    return float(-corr_term - config.gamma * hist_term + config.omega * disagreements)


def _class_conditional_costs(
    correlations: np.ndarray, training_labels: np.ndarray, class_count: int, omega: float
) -> tuple[np.ndarray, np.ndarray]:
    """Per class k: the best sample for each pixel when the region class is k.

    Returns ``(cost, choice)`` of shape ``(class_count, pixel_count)`` where
    ``cost[k-1, z] = min_l (-corr[z, l] + omega * [label_l != k])`` and
    ``choice`` holds the minimizing sample index (lowest index on ties).
    """
    base = -np.asarray(correlations)
    labels = np.asarray(training_labels, dtype=np.int64)
    pixel_count = base.shape[0]
    cost = np.empty((class_count, pixel_count))
    choice = np.empty((class_count, pixel_count), dtype=np.int64)
    for k in range(1, class_count + 1):
        penalized = base + omega * (labels != k)[None, :]
        choice[k - 1] = np.argmin(penalized, axis=1)
        cost[k - 1] = penalized[np.arange(pixel_count), choice[k - 1]]
    return cost, choice


def _first_sample_per_class(training_set: TrainingSet) -> np.ndarray:
    return np.array(
        [int(np.flatnonzero(training_set.labels == k)[0]) for k in range(1, training_set.class_count + 1)]
    )


def _infer_with_costs(
    cost: np.ndarray,
    choice: np.ndarray,
    estimated_labels: np.ndarray,
    shapelet: Shapelet,
    first_of_class: np.ndarray,
    gamma: float,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact per-region minimization given precomputed class-conditional costs."""
    class_count = cost.shape[0]
    regions_flat = shapelet.region_map.reshape(-1)
    pixel_choice = np.empty(regions_flat.size, dtype=np.int64)
    region_choice = np.empty(shapelet.region_count, dtype=np.int64)
    histograms = np.empty((shapelet.region_count, class_count))
    for r in range(1, shapelet.region_count + 1):
        members = np.flatnonzero(regions_flat == r)
        hist = region_histogram(estimated_labels, members, class_count)
        histograms[r - 1] = hist
        scores = cost[:, members].sum(axis=1) - gamma * hist
        winner = int(np.argmin(scores))  # ties -> lowest class id
        pixel_choice[members] = choice[winner, members]
        region_choice[r - 1] = first_of_class[winner]
    return pixel_choice, region_choice, histograms


def infer_assignment(
    correlations: np.ndarray,
    shapelet: Shapelet,
    training_set: TrainingSet,
    config: MrfConfig,
) -> Assignment:
    """Global minimizer of the dictionary-construction energy.

    The region's representative sample only matters through its class, so the
    lowest-index sample of the winning class is stored.
    """
    correlations = np.asarray(correlations)
    if correlations.shape[0] != shapelet.side ** 2:
        raise ValueError("correlation rows must match the shapelet pixel count")
    if correlations.shape[1] != training_set.sample_count:
        raise ValueError("correlation columns must match the training sample count")
    estimated = nn_label_estimate(correlations, training_set.labels)
    cost, choice = _class_conditional_costs(
        correlations, training_set.labels, training_set.class_count, config.omega
    )
    pixel_choice, region_choice, histograms = _infer_with_costs(
        cost, choice, estimated, shapelet, _first_sample_per_class(training_set), config.gamma
    )
    value = energy(
        pixel_choice, region_choice, correlations, histograms,
        shapelet, training_set.labels, config,
    )
    return Assignment(pixel_choice, region_choice, value)


def build_patch_dictionary(
    patch_pixels: np.ndarray,
    shapelet_set: ShapeletSet,
    training_set: TrainingSet,
    config: MrfConfig,
) -> PatchDictionary:
    """One candidate column per shapelet, deduplicated by source indices.

    Column n stacks the chosen training spectrum of every patch pixel in the
    normative pixel-major layout; duplicate pixel choices (possible when two
    shapelets induce the same selection) keep their first occurrence.
    """
    pixels = np.asarray(patch_pixels, dtype=np.float64)
    correlations = pixel_correlations(pixels, training_set)
    estimated = nn_label_estimate(correlations, training_set.labels)
    cost, choice = _class_conditional_costs(
        correlations, training_set.labels, training_set.class_count, config.omega
    )
    first_of_class = _first_sample_per_class(training_set)

    columns: list[np.ndarray] = []
    pixel_labels: list[np.ndarray] = []
    source_indices: list[np.ndarray] = []
    seen: set[bytes] = set()
    for shapelet in shapelet_set:
        pixel_choice, _, _ = _infer_with_costs(
            cost, choice, estimated, shapelet, first_of_class, config.gamma
        )
        key = pixel_choice.tobytes()
        if key in seen:
            continue
        seen.add(key)
        columns.append(training_set.spectra[pixel_choice].reshape(-1))
        pixel_labels.append(training_set.labels[pixel_choice])
        source_indices.append(pixel_choice)
    return PatchDictionary(
        np.stack(columns, axis=1), np.stack(pixel_labels), np.stack(source_indices)
    )

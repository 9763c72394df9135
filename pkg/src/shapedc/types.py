"""Core domain types shared by every pipeline stage.

Conventions used throughout the package:

* class ids are 1-based; 0 is reserved for "unlabeled / ignore" in masks,
* training-sample indices are 0-based (plain numpy indices),
* a patch of side ``s`` covers ``Z = s*s`` pixels enumerated row-major, and a
  vectorized patch stores pixel ``z`` as the contiguous block of rows
  ``[z*bands, (z+1)*bands)``.

All types except :class:`VoteField` are immutable after construction (their
arrays are marked read-only) and safe to share across concurrent workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import numpy.typing as npt

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]


def _as_readonly_float(values, name: str, ndim: int) -> FloatArray:
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got {arr.ndim} dimensions")
    arr.setflags(write=False)
    return arr


def _as_readonly_int(values, name: str, ndim: int) -> IntArray:
    arr = np.ascontiguousarray(values, dtype=np.int64)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got {arr.ndim} dimensions")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class HyperCube:
    """Multi-band image raster with values indexed ``(row, col, band)``."""

    values: FloatArray

    def __post_init__(self):
        arr = _as_readonly_float(self.values, "cube values", 3)
        if min(arr.shape) < 1:
            raise ValueError("cube dimensions must all be >= 1")
        object.__setattr__(self, "values", arr)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def bands(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class TrainingSet:
    """Labeled spectra providing the spectral content of every dictionary."""

    spectra: FloatArray  # (samples, bands)
    labels: IntArray     # (samples,), class ids in 1..class_count
    class_count: int

    def __post_init__(self):
        spectra = _as_readonly_float(self.spectra, "training spectra", 2)
        labels = _as_readonly_int(self.labels, "training labels", 1)
        if spectra.shape[0] < 1:
            raise ValueError("training set must contain at least one sample")
        if spectra.shape[0] != labels.shape[0]:
            raise ValueError(
                "length mismatch: "
                f"{spectra.shape[0]} spectra but {labels.shape[0]} labels"
            )
        if self.class_count < 1:
            raise ValueError("class_count must be >= 1")
        if labels.min() < 1 or labels.max() > self.class_count:
            raise ValueError(
                f"label out of range: labels must lie in 1..{self.class_count}"
            )
        present = np.unique(labels)
        if present.size != self.class_count:
            missing = sorted(set(range(1, self.class_count + 1)) - set(present.tolist()))
            raise ValueError(f"empty class: no training sample for class {missing[0]}")
        object.__setattr__(self, "spectra", spectra)
        object.__setattr__(self, "labels", labels)

    @property
    def sample_count(self) -> int:
        return self.spectra.shape[0]

    @property
    def bands(self) -> int:
        return self.spectra.shape[1]


def validate_training_set(spectra, labels, bands: int) -> TrainingSet:
    """Build a :class:`TrainingSet`, checking spectra length against ``bands``.

    The class count is inferred as the largest label; every class id up to it
    must occur at least once.
    """
    spectra = np.asarray(spectra, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if spectra.ndim != 2 or spectra.shape[1] != bands:
        raise ValueError(
            f"length mismatch: spectra must have {bands} bands, "
            f"got shape {spectra.shape}"
        )
    if labels.ndim != 1 or labels.shape[0] != spectra.shape[0]:
        raise ValueError(
            f"length mismatch: {spectra.shape[0]} spectra but {labels.size} labels"
        )
    if labels.size == 0:
        raise ValueError("training set must contain at least one sample")
    if labels.min() < 1:
        raise ValueError("label out of range: class ids must be >= 1")
    return TrainingSet(spectra, labels, int(labels.max()))


@dataclass(frozen=True)
class PatchGeometry:
    """Square patch geometry; fixes the normative vectorization layout."""

    side: int

    def __post_init__(self):
        if self.side < 2:
            raise ValueError("patch side must be >= 2")

    @property
    def pixel_count(self) -> int:
        return self.side * self.side


@dataclass(frozen=True)
class Shapelet:
    """A patch-sized map of labeled regions; regions partition the patch."""

    region_map: IntArray  # (side, side), values in 1..region_count
    region_count: int

    def __post_init__(self):
        region_map = _as_readonly_int(self.region_map, "region map", 2)
        if region_map.shape[0] != region_map.shape[1]:
            raise ValueError("region map must be square")
        if self.region_count < 1:
            raise ValueError("region_count must be >= 1")
        if region_map.min() < 1 or region_map.max() > self.region_count:
            raise ValueError(f"region ids must lie in 1..{self.region_count}")
        if np.unique(region_map).size != self.region_count:
            raise ValueError("every region id 1..region_count must occur")
        object.__setattr__(self, "region_map", region_map)

    @property
    def side(self) -> int:
        return self.region_map.shape[0]


@dataclass(frozen=True)
class ShapeletSet:
    """A collection of shapelets sharing one patch side."""

    shapelets: tuple[Shapelet, ...]

    def __post_init__(self):
        shapelets = tuple(self.shapelets)
        if not shapelets:
            raise ValueError("shapelet set must contain at least one shapelet")
        sides = {s.side for s in shapelets}
        if len(sides) != 1:
            raise ValueError("all shapelets must share the same side")
        object.__setattr__(self, "shapelets", shapelets)

    @property
    def side(self) -> int:
        return self.shapelets[0].side

    def __len__(self) -> int:
        return len(self.shapelets)

    def __iter__(self):
        return iter(self.shapelets)

    def __getitem__(self, index) -> Shapelet:
        return self.shapelets[index]


@dataclass(frozen=True)
class PatchDictionary:
    """Patch-specific dictionary of vectorized candidate patches.

    Each column stacks one training spectrum per patch pixel; the per-pixel
    class labels and source sample indices are kept alongside so class-wise
    reconstruction errors can be computed later.
    """

    columns: FloatArray         # (pixel_count * bands, n_columns)
    pixel_labels: IntArray      # (n_columns, pixel_count)
    source_indices: IntArray    # (n_columns, pixel_count), 0-based sample ids

    def __post_init__(self):
        columns = _as_readonly_float(self.columns, "dictionary columns", 2)
        pixel_labels = _as_readonly_int(self.pixel_labels, "pixel labels", 2)
        source_indices = _as_readonly_int(self.source_indices, "source indices", 2)
        n_cols = columns.shape[1]
        if n_cols < 1:
            raise ValueError("dictionary must contain at least one column")
        if pixel_labels.shape[0] != n_cols or source_indices.shape[0] != n_cols:
            raise ValueError("per-column metadata must match the number of columns")
        pixel_count = pixel_labels.shape[1]
        if source_indices.shape[1] != pixel_count:
            raise ValueError("pixel_labels and source_indices disagree on pixel count")
        if pixel_count < 1 or columns.shape[0] % pixel_count != 0:
            raise ValueError("column length must be a multiple of the pixel count")
        if np.unique(source_indices, axis=0).shape[0] != n_cols:
            raise ValueError("duplicate columns: identical source_indices must be deduplicated")
        object.__setattr__(self, "columns", columns)
        object.__setattr__(self, "pixel_labels", pixel_labels)
        object.__setattr__(self, "source_indices", source_indices)

    @property
    def n_columns(self) -> int:
        return self.columns.shape[1]

    @property
    def pixel_count(self) -> int:
        return self.pixel_labels.shape[1]

    @property
    def bands(self) -> int:
        return self.columns.shape[0] // self.pixel_count


@dataclass(frozen=True)
class SparseCode:
    """Result of greedy sparse coding: selected columns, weights, residual."""

    selected: IntArray        # ordered column indices, at most the atom budget
    coefficients: FloatArray  # weights w.r.t. the original (unnormalized) columns
    residual_norm: float
    step_residuals: tuple[float, ...] = ()  # residual norm after each selection

    def __post_init__(self):
        selected = _as_readonly_int(self.selected, "selected indices", 1)
        coefficients = _as_readonly_float(self.coefficients, "coefficients", 1)
        if selected.shape[0] != coefficients.shape[0]:
            raise ValueError("selected indices and coefficients must have equal length")
        if np.unique(selected).size != selected.size:
            raise ValueError("selected column indices must be distinct")
        if self.residual_norm < 0:
            raise ValueError("residual norm must be nonnegative")
        object.__setattr__(self, "selected", selected)
        object.__setattr__(self, "coefficients", coefficients)
        object.__setattr__(self, "step_residuals", tuple(float(r) for r in self.step_residuals))


class VoteField:
    """Per-pixel, per-class vote accumulator.

    The one mutable pipeline type: patches add their votes into it and
    :func:`shapedc.classify.finalize` reduces it to a label map. Accumulation
    order is fixed by the caller so float sums are reproducible.
    """

    def __init__(self, height: int, width: int, class_count: int):
        if height < 1 or width < 1 or class_count < 1:
            raise ValueError("vote field dimensions must all be >= 1")
        self.votes = np.zeros((height, width, class_count), dtype=np.float64)
        self.coverage = np.zeros((height, width), dtype=np.int64)

    @property
    def class_count(self) -> int:
        return self.votes.shape[2]


@dataclass(frozen=True)
class LabelMap:
    """Grid of class ids; 0 marks unlabeled / ignored pixels."""

    labels: IntArray  # (height, width), values >= 0

    def __post_init__(self):
        labels = _as_readonly_int(self.labels, "labels", 2)
        if min(labels.shape) < 1:
            raise ValueError("label map dimensions must be >= 1")
        if labels.min() < 0:
            raise ValueError("negative label")
        object.__setattr__(self, "labels", labels)

    @property
    def height(self) -> int:
        return self.labels.shape[0]

    @property
    def width(self) -> int:
        return self.labels.shape[1]

    @property
    def max_label(self) -> int:
        return int(self.labels.max())


@dataclass(frozen=True)
class MrfConfig:
    """Weights of the dictionary-construction energy.

    ``gamma`` scales the reward for region classes that dominate the rough
    per-pixel label estimate; ``omega`` penalizes pixels whose chosen sample
    disagrees with their region's class.
    """

    gamma: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        if self.gamma < 0 or self.omega < 0:
            raise ValueError("gamma and omega must be nonnegative")


def training_set_from_mask(cube: HyperCube, mask: LabelMap) -> TrainingSet:
    """Collect the spectra of all mask-labeled pixels, in row-major order."""
    if (mask.height, mask.width) != (cube.height, cube.width):
        raise ValueError("mask dimensions do not match the cube")
    rows, cols = np.nonzero(mask.labels)
    if rows.size == 0:
        raise ValueError("mask selects no pixels")
    spectra = cube.values[rows, cols, :]
    labels = mask.labels[rows, cols]
    return validate_training_set(spectra, labels, cube.bands)

"""Counting objects by eroding segmentation maps.

Training targets erode every instance mask independently before taking the
union, so the model learns object interiors that stay separated. At test
time the predicted map is thresholded, eroded again to break thin bridges,
and the surviving connected components are counted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, ParamError


@dataclass(frozen=True)
class StructuringElement:
    """Binary neighborhood mask with odd side lengths, anchored at its center."""

    mask: np.ndarray
    iterations: int = 1

    def __post_init__(self):
        m = np.asarray(self.mask).astype(bool)
        object.__setattr__(self, "mask", m)
        if m.ndim != 2 or m.shape[0] % 2 == 0 or m.shape[1] % 2 == 0:
            raise ParamError(f"element must be 2-D with odd sides, got shape {m.shape}")
        if not m.any():
            raise ParamError("element has no true cells")
        if self.iterations < 1:
            raise ParamError(f"iterations must be >= 1, got {self.iterations}")

    @staticmethod
    def square(side: int = 3, iterations: int = 1) -> "StructuringElement":
        return StructuringElement(np.ones((side, side), dtype=bool), iterations)


def erode(mask, element: StructuringElement) -> np.ndarray:
    """Morphological erosion with zero padding, repeated ``iterations`` times."""
    out = np.asarray(mask).astype(bool)
    eh, ew = element.mask.shape
    ch, cw = eh // 2, ew // 2
    offsets = [(di - ch, dj - cw) for di, dj in zip(*np.nonzero(element.mask))]
    h, w = out.shape
    for _ in range(element.iterations):
        padded = np.zeros((h + 2 * ch, w + 2 * cw), dtype=bool)
        padded[ch : ch + h, cw : cw + w] = out
        acc = np.ones((h, w), dtype=bool)
        for di, dj in offsets:
            acc &= padded[ch + di : ch + di + h, cw + dj : cw + dj + w]
        out = acc
    return out


def label_components(mask, connectivity: int = 8) -> tuple[np.ndarray, int]:
    """Label connected foreground components 1..K with a two-pass scan.

    Returns the label grid and K. Connectivity is 4 or 8.
    """
    if connectivity not in (4, 8):
        raise ParamError(f"connectivity must be 4 or 8, got {connectivity}")
    grid = np.asarray(mask).astype(bool)
    h, w = grid.shape
    labels = np.zeros((h, w), dtype=np.int64)
    parent = [0]  # union-find over provisional labels; parent[0] unused

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    if connectivity == 4:
        back_offsets = ((-1, 0), (0, -1))
    else:
        back_offsets = ((-1, -1), (-1, 0), (-1, 1), (0, -1))

    next_label = 1
    for i in range(h):
        row = grid[i]
        for j in range(w):
            if not row[j]:
                continue
            neighbors = []
            for di, dj in back_offsets:
                ni, nj = i + di, j + dj
                if 0 <= ni < h and 0 <= nj < w and labels[ni, nj]:
                    neighbors.append(labels[ni, nj])
            if not neighbors:
                labels[i, j] = next_label
                parent.append(next_label)
                next_label += 1
            else:
                lead = min(neighbors)
                labels[i, j] = lead
                for other in neighbors:
                    union(lead, other)

    remap = {}
    compact = 0
    flat = labels.ravel()
    for idx in range(flat.size):
        lab = flat[idx]
        if lab:
            root = find(lab)
            if root not in remap:
                compact += 1
                remap[root] = compact
            flat[idx] = remap[root]
    return labels, compact


@dataclass(frozen=True)
class CountResult:
    count: int
    areas: list[int]
    eroded: np.ndarray = field(repr=False)


def make_training_targets(instances, element: StructuringElement) -> tuple[np.ndarray, list[int]]:
    """Erode every instance independently, union the results.

    ``instances`` is a [H, W] grid of instance ids with 0 as background.
    Returns the binary target map and the ids of instances that eroded away.
    """
    grid = np.asarray(instances)
    if grid.ndim != 2:
        raise DataError(f"instance map must be 2-D, got shape {grid.shape}")
    target = np.zeros(grid.shape, dtype=bool)
    dropped = []
    for obj_id in np.unique(grid):
        if obj_id == 0:
            continue
        eroded = erode(grid == obj_id, element)
        if eroded.any():
            target |= eroded
        else:
            dropped.append(int(obj_id))
    return target, dropped


def count(seg_prob, threshold: float, element: StructuringElement, *,
          min_area: int = 4, connectivity: int = 8) -> CountResult:
    """Threshold, erode, drop specks, count components."""
    if not 0 < threshold < 1:
        raise ParamError(f"threshold must lie in (0, 1), got {threshold}")
    binary = np.asarray(seg_prob) > threshold
    eroded = erode(binary, element)
    labels, k = label_components(eroded, connectivity=connectivity)
    areas = []
    for lab in range(1, k + 1):
        area = int(np.count_nonzero(labels == lab))
        if area < min_area:
            eroded[labels == lab] = False
        else:
            areas.append(area)
    return CountResult(count=len(areas), areas=areas, eroded=eroded)


def evaluate_counting(predicted, truth) -> float:
    """Mean absolute count error."""
    predicted = np.asarray(predicted, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if predicted.shape != truth.shape:
        raise DataError(f"length mismatch: {predicted.shape} vs {truth.shape}")
    return float(np.mean(np.abs(predicted - truth)))

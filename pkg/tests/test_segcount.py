import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gtta.errors import DataError, ParamError
from gtta.rng import RngStream
from gtta.segcount import (
    CountResult,
    StructuringElement,
    count,
    erode,
    evaluate_counting,
    label_components,
    make_training_targets,
)


def erosion_oracle(mask, element):
    """Brute-force double loop, no shifting tricks."""
    mask = np.asarray(mask).astype(bool)
    h, w = mask.shape
    eh, ew = element.mask.shape
    ch, cw = eh // 2, ew // 2
    out = mask.copy()
    for _ in range(element.iterations):
        nxt = np.zeros_like(out)
        for i in range(h):
            for j in range(w):
                keep = True
                for di in range(eh):
                    for dj in range(ew):
                        if not element.mask[di, dj]:
                            continue
                        ni, nj = i + di - ch, j + dj - cw
                        inside = 0 <= ni < h and 0 <= nj < w
                        if not (inside and out[ni, nj]):
                            keep = False
                            break
                    if not keep:
                        break
                nxt[i, j] = keep
        out = nxt
    return out


def flood_fill_oracle(mask, connectivity):
    """Stack-based flood fill, independent of the two-pass labeling."""
    mask = np.asarray(mask).astype(bool)
    h, w = mask.shape
    seen = np.zeros((h, w), dtype=bool)
    if connectivity == 4:
        neigh = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    else:
        neigh = [(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)]
    comps = 0
    for i in range(h):
        for j in range(w):
            if not mask[i, j] or seen[i, j]:
                continue
            comps += 1
            stack = [(i, j)]
            seen[i, j] = True
            while stack:
                ci, cj = stack.pop()
                for di, dj in neigh:
                    ni, nj = ci + di, cj + dj
                    if 0 <= ni < h and 0 <= nj < w and mask[ni, nj] and not seen[ni, nj]:
                        seen[ni, nj] = True
                        stack.append((ni, nj))
    return comps


FULL3 = StructuringElement.square(3)


def test_solid_square_erodes_to_interior():
    mask = np.zeros((7, 7), dtype=bool)
    mask[1:6, 1:6] = True
    out = erode(mask, FULL3)
    expected = np.zeros((7, 7), dtype=bool)
    expected[2:5, 2:5] = True
    assert np.array_equal(out, expected)


def test_single_cell_element_is_identity():
    gen = RngStream(0).generator()
    mask = gen.random((9, 9)) > 0.5
    out = erode(mask, StructuringElement(np.ones((1, 1), dtype=bool)))
    assert np.array_equal(out, mask)


def test_thin_mask_vanishes():
    mask = np.zeros((6, 8), dtype=bool)
    mask[3] = True  # one pixel thick
    assert not erode(mask, FULL3).any()


def test_border_treated_as_background():
    mask = np.ones((4, 4), dtype=bool)
    out = erode(mask, FULL3)
    expected = np.zeros((4, 4), dtype=bool)
    expected[1:3, 1:3] = True
    assert np.array_equal(out, expected)


def test_element_validation():
    with pytest.raises(ParamError):
        StructuringElement(np.ones((2, 3), dtype=bool))
    with pytest.raises(ParamError):
        StructuringElement(np.zeros((3, 3), dtype=bool))
    with pytest.raises(ParamError):
        StructuringElement(np.ones((3, 3), dtype=bool), iterations=0)


@settings(max_examples=40, deadline=None)
@given(
    mask=arrays(bool, (8, 10), elements=st.booleans()),
    iters=st.integers(1, 2),
)
def test_erosion_matches_oracle_and_is_antiextensive(mask, iters):
    element = StructuringElement.square(3, iterations=iters)
    out = erode(mask, element)
    assert np.array_equal(out, erosion_oracle(mask, element))
    assert not (out & ~mask).any()  # anti-extensive


@settings(max_examples=25, deadline=None)
@given(
    a=arrays(bool, (7, 7), elements=st.booleans()),
    b=arrays(bool, (7, 7), elements=st.booleans()),
)
def test_erosion_monotone(a, b):
    small = a & b
    big = a | b
    assert not (erode(small, FULL3) & ~erode(big, FULL3)).any()


@pytest.mark.parametrize("connectivity", [4, 8])
def test_labeling_matches_flood_fill(connectivity):
    for seed in range(25):
        gen = RngStream(seed).generator()
        h, w = int(gen.integers(3, 30)), int(gen.integers(3, 30))
        mask = gen.random((h, w)) > 0.6
        _, k = label_components(mask, connectivity=connectivity)
        assert k == flood_fill_oracle(mask, connectivity)


def test_labels_are_contiguous_ids():
    mask = np.array([
        [1, 0, 1],
        [0, 0, 0],
        [1, 0, 1],
    ], dtype=bool)
    labels, k = label_components(mask, connectivity=4)
    assert k == 4
    assert sorted(np.unique(labels).tolist()) == [0, 1, 2, 3, 4]


def test_diagonal_connectivity_difference():
    mask = np.array([[1, 0], [0, 1]], dtype=bool)
    assert label_components(mask, connectivity=4)[1] == 2
    assert label_components(mask, connectivity=8)[1] == 1


def test_training_targets_two_squares():
    inst = np.zeros((7, 13), dtype=np.int64)
    inst[1:6, 1:6] = 1
    inst[1:6, 7:12] = 2
    target, dropped = make_training_targets(inst, FULL3)
    assert dropped == []
    expected = np.zeros_like(inst, dtype=bool)
    expected[2:5, 2:5] = True
    expected[2:5, 8:11] = True
    assert np.array_equal(target, expected)
    assert label_components(target)[1] == 2


def test_training_targets_empty_map():
    target, dropped = make_training_targets(np.zeros((5, 5), dtype=np.int64), FULL3)
    assert not target.any()
    assert dropped == []


def test_training_targets_report_vanished_instances():
    inst = np.zeros((6, 6), dtype=np.int64)
    inst[1:5, 1:5] = 1
    inst[0, 5] = 2  # single pixel, erodes away
    target, dropped = make_training_targets(inst, FULL3)
    assert dropped == [2]
    assert target.any()


def test_touching_instances_separate_after_erosion():
    # Two rectangles sharing a full boundary edge: one merged foreground blob.
    inst = np.zeros((7, 12), dtype=np.int64)
    inst[1:6, 1:6] = 1
    inst[1:6, 6:11] = 2
    assert label_components(inst > 0)[1] == 1
    target, dropped = make_training_targets(inst, FULL3)
    assert dropped == []
    assert label_components(target)[1] == 2
    ys, xs = np.nonzero(target)
    left = xs[xs <= 5]
    right = xs[xs > 5]
    # brute-force min pixel distance between the two eroded interiors
    gap = min(
        abs(int(b) - int(a)) for a in np.unique(left) for b in np.unique(right)
    )
    assert gap >= 2


def test_count_two_blobs():
    prob = np.zeros((9, 18))
    prob[1:8, 1:8] = 0.9
    prob[1:8, 10:17] = 0.9
    result = count(prob, 0.5, FULL3, min_area=1)
    assert result.count == 2
    assert result.areas == [25, 25]


def test_count_empty_map():
    result = count(np.zeros((6, 6)), 0.5, FULL3)
    assert result.count == 0
    assert result.areas == []


def test_bridge_is_cut_by_erosion():
    prob = np.zeros((11, 25))
    prob[1:10, 1:10] = 0.9
    prob[1:10, 15:24] = 0.9
    prob[5, 10:15] = 0.9  # one-pixel bridge
    assert flood_fill_oracle(prob > 0.5, 8) == 1
    result = count(prob, 0.5, FULL3, min_area=1)
    assert result.count == 2
    assert flood_fill_oracle(result.eroded, 8) == 2


def test_min_area_drops_specks():
    prob = np.zeros((12, 12))
    prob[1:8, 1:8] = 0.9   # survives erosion with a large core
    prob[9:12, 9:12] = 0.9  # erodes to a single pixel
    relaxed = count(prob, 0.5, FULL3, min_area=1)
    strict = count(prob, 0.5, FULL3, min_area=4)
    assert relaxed.count == 2
    assert strict.count == 1
    assert not strict.eroded[10, 10]


def test_count_translation_invariant():
    gen = RngStream(3).generator()
    base = gen.random((10, 10)) > 0.55
    padded = np.zeros((20, 20))
    shifted = np.zeros((20, 20))
    padded[2:12, 2:12] = base
    shifted[7:17, 5:15] = base
    for conn in (4, 8):
        a = count(padded, 0.5, FULL3, min_area=1, connectivity=conn)
        b = count(shifted, 0.5, FULL3, min_area=1, connectivity=conn)
        assert a.count == b.count
        assert sorted(a.areas) == sorted(b.areas)


def test_count_threshold_validation():
    with pytest.raises(ParamError):
        count(np.zeros((3, 3)), 0.0, FULL3)
    with pytest.raises(ParamError):
        count(np.zeros((3, 3)), 1.0, FULL3)


def test_count_result_invariant():
    prob = np.zeros((9, 9))
    prob[1:8, 1:8] = 1.0
    result = count(prob, 0.5, FULL3, min_area=1)
    assert isinstance(result, CountResult)
    assert result.count == len(result.areas)


def test_mae_values():
    assert evaluate_counting([3, 5], [3, 5]) == 0.0
    assert evaluate_counting([4, 3], [3, 5]) == pytest.approx(1.5)
    with pytest.raises(DataError):
        evaluate_counting([1, 2], [1])

import dataclasses

import numpy as np
import pytest

from gtta.errors import ParamError
from gtta.segcount import label_components
from gtta.synthdata import (
    BlobImagesSpec,
    BlobsSpec,
    FrameSequenceSpec,
    TabularSpec,
    bayes_accuracy,
    gen_blob_images,
    gen_blobs,
    gen_circle_pattern,
    gen_frame_sequence,
    gen_tabular,
    spec_from_dict,
    tabular_target,
)


def test_tabular_deterministic():
    spec = TabularSpec(seed=5)
    a, b = gen_tabular(spec), gen_tabular(spec)
    assert np.array_equal(a.train.inputs, b.train.inputs)
    assert np.array_equal(a.train.targets, b.train.targets)
    assert np.array_equal(a.coefficients, b.coefficients)


def test_tabular_zero_noise_recoverable():
    data = gen_tabular(TabularSpec(noise=0.0, seed=1))
    for split in (data.train, data.val, data.test):
        expected = tabular_target(split.inputs, data.coefficients, data.spec.nonlinear_scale)
        assert np.array_equal(split.targets, expected)


def test_tabular_default_width_and_splits():
    data = gen_tabular(TabularSpec(n=100, seed=2))
    assert data.train.d == 36
    assert data.train.n + data.val.n + data.test.n == 100
    assert data.train.n == 60


def test_blobs_deterministic_and_balanced():
    spec = BlobsSpec(n=201, seed=3)
    a, b = gen_blobs(spec), gen_blobs(spec)
    assert np.array_equal(a.data.inputs, b.data.inputs)
    counts = np.bincount(a.data.targets.astype(int))
    assert abs(counts[0] - counts[1]) <= 1


def test_blobs_zero_amplitude_leaves_rows_clean():
    base = BlobsSpec(n=80, distractor_amplitude=0.0, seed=4)
    hit = dataclasses.replace(base, distractor_amplitude=2.0)
    a, b = gen_blobs(base), gen_blobs(hit)
    assert not a.pattern.any()
    changed = np.any(a.data.inputs != b.data.inputs, axis=1)
    assert np.array_equal(changed, b.injected)


def test_blobs_pattern_carries_no_class_signal():
    blobs = gen_blobs(BlobsSpec(n=50, distractor_amplitude=1.5, seed=5))
    assert blobs.pattern[0] == 0.0
    assert np.linalg.norm(blobs.pattern) == pytest.approx(1.5)


def test_blobs_injection_fraction():
    blobs = gen_blobs(BlobsSpec(n=4000, distractor_amplitude=1.0,
                                distractor_fraction=0.5, seed=6))
    # binomial: 5 sigma around 0.5 at n = 4000 is about 0.04
    assert abs(blobs.injected.mean() - 0.5) < 0.04


def test_blobs_per_class_fractions():
    blobs = gen_blobs(BlobsSpec(n=4000, distractor_amplitude=1.0,
                                distractor_fractions=(0.9, 0.1), seed=7))
    labels = blobs.data.targets.astype(int)
    rate0 = blobs.injected[labels == 0].mean()
    rate1 = blobs.injected[labels == 1].mean()
    assert abs(rate0 - 0.9) < 0.04
    assert abs(rate1 - 0.1) < 0.04


def test_blobs_shared_pattern_across_row_seeds():
    a = gen_blobs(BlobsSpec(n=30, distractor_amplitude=1.0, pattern_seed=9, seed=10))
    b = gen_blobs(BlobsSpec(n=44, distractor_amplitude=1.0, pattern_seed=9, seed=11))
    assert np.array_equal(a.pattern, b.pattern)
    assert not np.array_equal(a.data.inputs[0], b.data.inputs[0])


def test_bayes_accuracy_closed_form_oracle():
    spec = BlobsSpec(n=20000, dim=8, class_sep=2.0, cluster_std=1.0, seed=8)
    blobs = gen_blobs(spec)
    # optimal rule for symmetric isotropic blobs: sign of the class axis
    pred = (blobs.data.inputs[:, 0] > 0).astype(int)
    empirical = np.mean(pred == blobs.data.targets)
    theory = bayes_accuracy(spec)
    # binomial se at n = 20000 is ~0.0035; allow 5 sigma
    assert abs(empirical - theory) < 0.0175


def test_blob_images_counts_match_components():
    data = gen_blob_images(BlobImagesSpec(n_images=40, seed=9))
    for inst, k in zip(data.instance_maps, data.counts):
        assert label_components(inst > 0, connectivity=8)[1] == k
        ids = np.unique(inst)
        assert ids[-1] == k  # contiguous ids 1..K


def test_blob_images_clean_targets_match_masks():
    data = gen_blob_images(BlobImagesSpec(n_images=10, boundary_noise=0.0, seed=10))
    for i, inst in enumerate(data.instance_maps):
        assert np.array_equal(data.data.targets[i], (inst > 0).astype(float))
        assert np.array_equal(data.clean_targets[i], data.data.targets[i])


def test_blob_images_boundary_noise_flips_only_near_edges():
    spec = BlobImagesSpec(n_images=10, boundary_noise=0.5, seed=11)
    noisy = gen_blob_images(spec)
    clean = gen_blob_images(dataclasses.replace(spec, boundary_noise=0.0))
    assert np.array_equal(noisy.clean_targets, clean.data.targets)
    diff = noisy.data.targets != noisy.clean_targets
    assert diff.any()
    for i in range(10):
        fg = noisy.instance_maps[i] > 0
        interior = fg.copy()
        # flipped pixels must touch the boundary band (erosion/dilation by 1)
        from gtta.segcount import StructuringElement, erode

        inner = erode(fg, StructuringElement.square(3))
        outer = ~erode(~fg, StructuringElement.square(3))
        band = outer & ~inner
        assert not (diff[i] & ~band).any()


def test_blob_images_deterministic():
    spec = BlobImagesSpec(n_images=6, seed=12)
    a, b = gen_blob_images(spec), gen_blob_images(spec)
    assert np.array_equal(a.data.inputs, b.data.inputs)
    assert np.array_equal(a.counts, b.counts)


def test_blob_images_validation():
    with pytest.raises(ParamError):
        BlobImagesSpec(radius_min=0.5)
    with pytest.raises(ParamError):
        BlobImagesSpec(blobs_min=3, blobs_max=2)


def test_frame_sequence_shares_scene():
    data = gen_frame_sequence(FrameSequenceSpec(n_frames=8, frame_noise=0.02, seed=13))
    assert data.frames.n == 8
    spread = data.frames.inputs.std(axis=0)
    assert spread.max() < 0.1  # frames hug the scene
    assert np.abs(data.frames.inputs.mean(axis=0) - data.scene).max() < 0.05


def test_circle_pattern_geometry():
    pat = gen_circle_pattern(16, 16, radius=5.0, thickness=1.5, amplitude=2.0)
    img = pat.reshape(16, 16)
    assert img.max() == 2.0
    yy, xx = np.nonzero(img)
    dist = np.hypot(yy - 7.5, xx - 7.5)
    assert np.all(np.abs(dist - 5.0) <= 0.76)
    assert not img[7:9, 7:9].any()  # center stays empty


def test_spec_from_dict():
    spec = spec_from_dict("tabular", {"n": 50, "seed": 3})
    assert isinstance(spec, TabularSpec)
    assert spec.n == 50
    with pytest.raises(ParamError):
        spec_from_dict("tabular", {"bogus": 1})
    with pytest.raises(ParamError):
        spec_from_dict("nope", {})

import numpy as np
import pytest

from gtta.data import Dataset, Task
from gtta.distill import (
    PseudoLabelSet,
    distill,
    generate_pseudolabels,
    load_pseudolabels,
    save_pseudolabels,
)
from gtta.errors import ParamError
from gtta.perturb import NoiseSchedule
from gtta.predictor import (
    MlpModel,
    OutputKind,
    batch_from_dataset,
    mlp_train,
    weighted_cross_entropy,
)
from gtta.rng import RngStream
from gtta.subspace import fit
from gtta.synthdata import BlobsSpec, gen_blobs


def make_setup(seed=0, n=24, d=6):
    gen = RngStream(seed).generator()
    X = gen.standard_normal((n, d))
    s = fit(X, "all")
    model = MlpModel([d, 8, 2], OutputKind.probabilities(2), RngStream(seed, 1))
    unlabeled = Dataset(X[: n // 2], None, Task.classification(2))
    return model, s, unlabeled


def test_zero_noise_teacher_equals_base_model():
    model, s, unlabeled = make_setup()
    sched = NoiseSchedule("constant", 0.0, 6)
    pseudo = generate_pseudolabels(model, s, sched, unlabeled, RngStream(2))
    base = np.stack([
        model.predict(unlabeled.inputs[i : i + 1])[0] for i in range(unlabeled.n)
    ])
    assert np.array_equal(pseudo.teacher_targets, base)
    assert np.array_equal(pseudo.weights, np.ones_like(base))


def test_known_two_candidate_teacher():
    model, s, unlabeled = make_setup(seed=3)

    class TwoOutputs:
        output_kind = OutputKind.probabilities(2)

        def predict(self, batch):
            rows = np.array([[0.8, 0.2], [0.6, 0.4]])
            return rows[: np.atleast_2d(batch).shape[0]].copy()

    sched = NoiseSchedule("constant", 0.2, 2)
    pseudo = generate_pseudolabels(TwoOutputs(), s, sched, unlabeled.subset([0]), RngStream(4))
    assert np.allclose(pseudo.teacher_targets[0], [0.7, 0.3], atol=1e-12)
    assert np.allclose(pseudo.weights[0], [0.9, 0.9], atol=1e-12)


def test_regeneration_is_bit_identical():
    model, s, unlabeled = make_setup(seed=5)
    sched = NoiseSchedule("incremental", 0.3, 5)
    rng = RngStream(11, 4)
    first = generate_pseudolabels(model, s, sched, unlabeled, rng)
    prov = first.provenance
    again = generate_pseudolabels(
        model,
        s,
        NoiseSchedule(prov["strategy"], prov["sigma"], prov["ensemble_size"],
                      var_floor=prov["var_floor"], sigma_cap=prov["sigma_cap"]),
        unlabeled,
        RngStream(prov["master_seed"], prov["stream_id"]),
    )
    assert np.array_equal(first.teacher_targets, again.teacher_targets)
    assert np.array_equal(first.weights, again.weights)


def test_pseudolabel_persistence(tmp_path):
    model, s, unlabeled = make_setup(seed=6)
    pseudo = generate_pseudolabels(model, s, NoiseSchedule("constant", 0.1, 4),
                                   unlabeled, RngStream(7))
    path = tmp_path / "pl.gtt"
    save_pseudolabels(pseudo, path)
    back = load_pseudolabels(path)
    assert np.array_equal(back.inputs, pseudo.inputs)
    assert np.array_equal(back.teacher_targets, pseudo.teacher_targets)
    assert np.array_equal(back.weights, pseudo.weights)
    assert back.provenance == pseudo.provenance


def _labeled_and_pseudo(seed):
    blobs = gen_blobs(BlobsSpec(n=40, dim=6, class_sep=3.0, seed=seed))
    model = MlpModel([6, 8, 2], OutputKind.probabilities(2), RngStream(seed, 2))
    mlp_train(model, batch_from_dataset(blobs.data), epochs=10, lr=0.1,
              rng=RngStream(seed, 3))
    s = fit(blobs.data.inputs, "all")
    unlabeled = Dataset(blobs.data.inputs[:16], None, Task.classification(2))
    pseudo = generate_pseudolabels(model, s, NoiseSchedule("constant", 0.05, 5),
                                   unlabeled, RngStream(seed, 4))
    return model, blobs.data, pseudo


def test_full_mixing_equals_supervised_training():
    model, labeled, pseudo = _labeled_and_pseudo(seed=8)
    rng = RngStream(9)
    distilled, _ = distill(model, labeled, pseudo, mixing=1.0, epochs=4, lr=0.1, rng=rng)
    plain = model.copy()
    mlp_train(plain, batch_from_dataset(labeled), epochs=4, lr=0.1, rng=rng)
    for a, b in zip(distilled.weights, plain.weights):
        assert np.array_equal(a, b)
    for a, b in zip(distilled.biases, plain.biases):
        assert np.array_equal(a, b)


def test_zero_weight_pseudo_matches_full_mixing():
    model, labeled, pseudo = _labeled_and_pseudo(seed=10)
    dead = PseudoLabelSet(pseudo.inputs, pseudo.teacher_targets,
                          np.zeros_like(pseudo.weights), pseudo.provenance)
    rng = RngStream(11)
    a, _ = distill(model, labeled, dead, mixing=0.5, epochs=4, lr=0.1, rng=rng)
    b, _ = distill(model, labeled, pseudo, mixing=1.0, epochs=4, lr=0.1, rng=rng)
    for wa, wb in zip(a.weights + a.biases, b.weights + b.biases):
        assert np.array_equal(wa, wb)


def test_mixing_bounds():
    model, labeled, pseudo = _labeled_and_pseudo(seed=12)
    with pytest.raises(ParamError):
        distill(model, labeled, pseudo, mixing=1.5, epochs=1, lr=0.1, rng=RngStream(0))


def test_self_training_initial_loss_matches_independent_pass():
    model, s, unlabeled = make_setup(seed=13)
    sched = NoiseSchedule("constant", 0.0, 3)
    pseudo = generate_pseudolabels(model, s, sched, unlabeled, RngStream(14))
    labeled = Dataset(
        unlabeled.inputs,
        np.zeros(unlabeled.n),
        Task.classification(2),
    )
    _, report = distill(model, labeled, pseudo, mixing=0.0, epochs=1, lr=0.0,
                        rng=RngStream(15), batch_size=unlabeled.n)
    base = model.predict(unlabeled.inputs)
    expected = weighted_cross_entropy(base, base, np.ones_like(base))
    assert report["history"][0]["train_loss"] == pytest.approx(expected, abs=1e-12)


def test_hard_labels_threshold_targets():
    model, labeled, pseudo = _labeled_and_pseudo(seed=16)
    soft, _ = distill(model, labeled, pseudo, mixing=0.5, epochs=2, lr=0.1,
                      rng=RngStream(17))
    hard, _ = distill(model, labeled, pseudo, mixing=0.5, epochs=2, lr=0.1,
                      rng=RngStream(17), hard_labels=True)
    assert any(
        not np.array_equal(a, b) for a, b in zip(soft.weights, hard.weights)
    )


def test_restart_reinitializes():
    model, labeled, pseudo = _labeled_and_pseudo(seed=18)
    fresh, _ = distill(model, labeled, pseudo, mixing=0.5, epochs=0, lr=0.1,
                       rng=RngStream(19), restart=True)
    assert not np.array_equal(fresh.weights[0], model.weights[0])


def test_distilled_student_runs_single_pass():
    model, labeled, pseudo = _labeled_and_pseudo(seed=20)
    distilled, _ = distill(model, labeled, pseudo, mixing=0.5, epochs=2, lr=0.1,
                           rng=RngStream(21))
    calls = []
    original = distilled.predict

    def counted(batch):
        calls.append(np.atleast_2d(batch).shape[0])
        return original(batch)

    distilled.predict = counted
    distilled.predict(labeled.inputs)
    assert calls == [labeled.n]


def test_pseudolabels_carry_no_ground_truth():
    _, _, pseudo = _labeled_and_pseudo(seed=22)
    assert not hasattr(pseudo, "targets")
    assert set(vars(pseudo)) == {"inputs", "teacher_targets", "weights", "provenance"}

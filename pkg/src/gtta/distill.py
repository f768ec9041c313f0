"""Distilling the perturbation ensemble into the single base model.

The ensemble plays teacher on unlabeled inputs: its mean prediction becomes
the soft target and its consensus (1 - std) the per-element loss weight.
The student then trains on a mix of the original supervised loss and the
weighted pseudo-label loss, so a single forward pass at test time inherits
the ensemble's behavior.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .ensemble import run_gtta, uncertainty_weights
from .errors import DataError, ParamError, TrainingDivergedError
from .perturb import NoiseSchedule
from .predictor import (
    MlpModel,
    WeightedBatch,
    batch_from_dataset,
    epoch_batches,
)
from .rng import RngStream
from .subspace import Subspace
from .tensorio import load_container, save_container


@dataclass(frozen=True)
class PseudoLabelSet:
    """Teacher outputs for unlabeled inputs, with regeneration provenance."""

    inputs: np.ndarray           # [m, d]
    teacher_targets: np.ndarray  # ensemble mean predictions
    weights: np.ndarray          # 1 - ensemble std, in [0, 1]
    provenance: dict

    @property
    def n(self) -> int:
        return self.inputs.shape[0]


def generate_pseudolabels(model, s: Subspace, sched: NoiseSchedule,
                          unlabeled: Dataset, rng: RngStream) -> PseudoLabelSet:
    """Run one ensemble per unlabeled row; input i uses stream ``rng.derive(i)``."""
    targets = []
    weights = []
    for i in range(unlabeled.n):
        result = run_gtta(model, s, sched, unlabeled.inputs[i], rng.derive(i))
        targets.append(result.mean_prediction)
        weights.append(uncertainty_weights(result, model.output_kind))
    provenance = {
        "strategy": sched.strategy,
        "sigma": sched.sigma,
        "ensemble_size": sched.ensemble_size,
        "var_floor": sched.var_floor,
        "sigma_cap": sched.sigma_cap,
        "master_seed": rng.master_seed,
        "stream_id": rng.stream_id,
        "subspace_fingerprint": s.fit_fingerprint,
    }
    return PseudoLabelSet(
        inputs=unlabeled.inputs.copy(),
        teacher_targets=np.stack(targets),
        weights=np.stack(weights),
        provenance=provenance,
    )


def distill(student: MlpModel, labeled: Dataset, pseudo: PseudoLabelSet, *,
            mixing: float, epochs: int, lr: float, rng: RngStream,
            batch_size: int = 32, holdout: Dataset | None = None,
            hard_labels: bool = False, restart: bool = False,
            eval_fn=None) -> tuple[MlpModel, dict]:
    """Train the student on mixing * supervised + (1 - mixing) * pseudo loss.

    ``mixing`` = 1 reproduces continued supervised training exactly. A pseudo
    set whose weights are all zero carries no usable labels, so its term is
    dropped and training degenerates to the supervised loss at full weight.
    The supervised half shuffles with ``rng.derive(1)`` and the pseudo half
    with ``rng.derive(2)``, so the two halves never perturb each other's
    order. ``eval_fn(model, holdout) -> float`` is scored once per epoch.
    """
    if not 0 <= mixing <= 1:
        raise ParamError(f"mixing must lie in [0, 1], got {mixing}")
    if lr < 0:
        raise ParamError(f"lr must be nonnegative, got {lr}")
    if not np.any(pseudo.weights):
        mixing = 1.0
    model = student.copy()
    if restart:
        fresh = MlpModel(model.layer_sizes, model.output_kind, rng.derive(99))
        model.weights = fresh.weights
        model.biases = fresh.biases

    sup = batch_from_dataset(labeled)
    pseudo_batch = WeightedBatch(
        pseudo.inputs,
        _pseudo_targets(pseudo, model, hard_labels),
        pseudo.weights,
    )

    sup_root = rng.derive(1)
    pseudo_root = rng.derive(2)
    history = []
    step = 0
    for epoch in range(epochs):
        sup_batches = epoch_batches(sup.n, batch_size, sup_root.derive(epoch))
        pseudo_batches = _cycled_batches(
            pseudo_batch.n, batch_size, pseudo_root.derive(epoch), len(sup_batches)
        )
        losses = []
        for idx_sup, idx_pseudo in zip(sup_batches, pseudo_batches):
            loss_s, grads_s = model.loss_and_gradients(sup.take(idx_sup))
            loss_p, grads_p = model.loss_and_gradients(pseudo_batch.take(idx_pseudo))
            loss = mixing * loss_s + (1 - mixing) * loss_p
            if not np.isfinite(loss):
                raise TrainingDivergedError(step)
            for i, ((gws, gbs), (gwp, gbp)) in enumerate(zip(grads_s, grads_p)):
                model.weights[i] -= lr * (mixing * gws + (1 - mixing) * gwp)
                model.biases[i] -= lr * (mixing * gbs + (1 - mixing) * gbp)
            losses.append(loss)
            step += 1
        entry = {"epoch": epoch, "train_loss": float(np.mean(losses))}
        if holdout is not None and eval_fn is not None:
            entry["holdout_score"] = float(eval_fn(model, holdout))
        history.append(entry)
    report = {"mixing": mixing, "epochs": epochs, "lr": lr, "history": history}
    return model, report


def _pseudo_targets(pseudo: PseudoLabelSet, model: MlpModel, hard: bool) -> np.ndarray:
    targets = pseudo.teacher_targets
    if not hard:
        return targets
    if model.output_kind.kind == "probabilities":
        labels = targets.argmax(axis=1)
        out = np.zeros_like(targets)
        out[np.arange(len(labels)), labels] = 1.0
        return out
    return (targets > 0.5).astype(np.float64)


def _cycled_batches(n, batch_size, stream, count):
    """`count` minibatch index arrays, reshuffling whenever the set is exhausted."""
    batches = []
    round_ = 0
    while len(batches) < count:
        batches.extend(epoch_batches(n, batch_size, stream.derive(round_)))
        round_ += 1
    return batches[:count]


def save_pseudolabels(p: PseudoLabelSet, path) -> None:
    save_container(
        {
            "inputs": p.inputs,
            "teacher_targets": p.teacher_targets,
            "weights": p.weights,
        },
        path,
    )
    with open(str(path) + ".json", "w") as fh:
        json.dump(p.provenance, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_pseudolabels(path) -> PseudoLabelSet:
    sections = load_container(path)
    try:
        with open(str(path) + ".json") as fh:
            provenance = json.load(fh)
    except OSError as exc:
        raise DataError(f"missing provenance sidecar for {path}: {exc}") from exc
    return PseudoLabelSet(
        inputs=sections["inputs"],
        teacher_targets=sections["teacher_targets"],
        weights=sections["weights"],
        provenance=provenance,
    )

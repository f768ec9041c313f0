"""Statistical diagnostics for perturbation ensembles.

Four experiments: the bias/variance/error decomposition across noise levels,
latent covariance spectra against a low-rank jitter baseline, the relation
between ensemble spread and true error, and how well reconstruction under
latent noise scrubs a fixed structured distractor from the input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import CLASSIFICATION, Dataset
from .ensemble import run_gtta
from .errors import ParamError, UnsupportedTaskError
from .metrics import pearson_r
from .perturb import NoiseSchedule, latent_candidates, make_candidates
from .predictor import one_hot
from .rng import RngStream
from .subspace import Subspace, fit, project


def _target_rows(eval_data: Dataset) -> np.ndarray:
    if eval_data.targets is None:
        raise ParamError("evaluation data needs targets")
    if eval_data.task.kind == CLASSIFICATION:
        return one_hot(eval_data.targets, eval_data.task.num_classes)
    return np.asarray(eval_data.targets, dtype=np.float64)


# --------------------------------------------------------------------------
# bias / variance / error across noise levels


@dataclass(frozen=True)
class BiasVarianceReport:
    rows: list            # dicts: strategy, sigma, bias2, variance, error
    ensemble_size: int
    repeats: int

    def to_dict(self) -> dict:
        return {"rows": self.rows, "ensemble_size": self.ensemble_size,
                "repeats": self.repeats}


def bias_variance_sweep(model, s: Subspace, strategy: str, sigma_grid, N: int,
                        eval_data: Dataset, M: int, rng: RngStream,
                        var_floor: float = 1e-6) -> BiasVarianceReport:
    """Monte Carlo decomposition of the ensemble error per noise level.

    For each sigma, each evaluation input gets M independent N-candidate
    ensembles. With grand = mean of the M ensemble means:

      bias2    = (grand - target)^2
      variance = mean_m (mean_m' - grand)^2
      error    = mean_m (mean_m' - target)^2

    so error == bias2 + variance identically, all averaged over inputs and
    output elements. Repeat m of input i draws from rng.derive(i).derive(m)
    for every sigma, so noise levels share their underlying draws.
    """
    if M < 2:
        raise ParamError(f"need at least 2 repeats, got {M}")
    targets = _target_rows(eval_data)
    rows = []
    for sigma in sigma_grid:
        sched = NoiseSchedule(strategy, float(sigma), N, var_floor=var_floor)
        bias_acc, var_acc, err_acc = 0.0, 0.0, 0.0
        for i in range(eval_data.n):
            x = eval_data.inputs[i]
            stream_i = rng.derive(i)
            cands = np.concatenate(
                [make_candidates(sched, s, x, stream_i.derive(m)) for m in range(M)]
            )
            preds = np.asarray(model.predict(cands), dtype=np.float64)
            ens_means = preds.reshape((M, N) + preds.shape[1:]).mean(axis=1)
            grand = ens_means.mean(axis=0)
            y = targets[i]
            bias_acc += float(np.mean((grand - y) ** 2))
            var_acc += float(np.mean((ens_means - grand) ** 2))
            err_acc += float(np.mean((ens_means - y) ** 2))
        rows.append({
            "strategy": strategy,
            "sigma": float(sigma),
            "bias2": bias_acc / eval_data.n,
            "variance": var_acc / eval_data.n,
            "error": err_acc / eval_data.n,
        })
    return BiasVarianceReport(rows=rows, ensemble_size=N, repeats=M)


# --------------------------------------------------------------------------
# latent covariance spectra


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray                # latent-noise ensemble, descending
    baseline_eigenvalues: np.ndarray | None
    n_inputs: int
    ensemble_size: int

    def to_dict(self) -> dict:
        return {
            "eigenvalues": self.eigenvalues.tolist(),
            "baseline_eigenvalues": (
                None if self.baseline_eigenvalues is None
                else self.baseline_eigenvalues.tolist()
            ),
            "n_inputs": self.n_inputs,
            "ensemble_size": self.ensemble_size,
        }


def _averaged_spectrum(latent_fn, n_inputs: int, n_u: int) -> np.ndarray:
    # Per-input sample covariances are averaged as matrices before the
    # eigendecomposition; averaging sorted per-input eigenvalues instead
    # would inflate the spread through the sorting bias.
    acc = np.zeros((n_u, n_u))
    for i in range(n_inputs):
        latents = latent_fn(i)
        if np.all(latents == latents[0]):
            continue  # identical rows contribute exactly zero covariance
        acc += np.atleast_2d(np.cov(latents, rowvar=False, ddof=1))
    return np.sort(np.linalg.eigvalsh(acc / n_inputs))[::-1]


def covariance_spectrum_experiment(s: Subspace, sched: NoiseSchedule,
                                   inputs: Dataset, N: int, rng: RngStream, *,
                                   baseline: str = "none",
                                   equal_sigma: float | None = None,
                                   jitter_scale: tuple = (0.1, 0.1)) -> SpectrumReport:
    """Eigenvalues of the averaged latent sample covariance over the inputs.

    ``equal_sigma`` overrides the schedule with one shared noise std on
    every component. ``baseline="global_jitter"`` also reports the spectrum
    of a two-parameter brightness/contrast transform projected into the
    same latent space.
    """
    if N < 2:
        raise ParamError(f"need N >= 2, got {N}")
    if baseline not in ("none", "global_jitter"):
        raise ParamError(f"unknown baseline {baseline!r}")
    sched = NoiseSchedule(sched.strategy, sched.sigma, N,
                          var_floor=sched.var_floor, sigma_cap=sched.sigma_cap)

    def gtta_latents(i: int) -> np.ndarray:
        x = inputs.inputs[i]
        stream = rng.derive(1).derive(i)
        if equal_sigma is None:
            return latent_candidates(sched, s, x, stream)
        base = project(s, x)
        out = np.empty((N, s.n_u))
        for j in range(1, N + 1):
            noise = equal_sigma * stream.derive(j).generator().standard_normal(s.n_u)
            out[j - 1] = base + noise
        return out

    eigenvalues = _averaged_spectrum(gtta_latents, inputs.n, s.n_u)

    baseline_eigs = None
    if baseline == "global_jitter":
        sa, sb = jitter_scale

        def jitter_latents(i: int) -> np.ndarray:
            x = inputs.inputs[i]
            stream = rng.derive(2).derive(i)
            out = np.empty((N, s.n_u))
            for j in range(1, N + 1):
                za, zb = stream.derive(j).generator().standard_normal(2)
                out[j - 1] = project(s, (1.0 + sa * za) * x + sb * zb)
            return out

        baseline_eigs = _averaged_spectrum(jitter_latents, inputs.n, s.n_u)

    return SpectrumReport(
        eigenvalues=eigenvalues,
        baseline_eigenvalues=baseline_eigs,
        n_inputs=inputs.n,
        ensemble_size=N,
    )


# --------------------------------------------------------------------------
# ensemble spread vs true error


@dataclass(frozen=True)
class CorrelationReport:
    bin_edges: np.ndarray
    bin_mae: list            # mean absolute error per bin, None where empty
    bin_counts: np.ndarray
    pearson: float | None
    degenerate: bool
    n_elements: int

    def to_dict(self) -> dict:
        return {
            "bin_edges": self.bin_edges.tolist(),
            "bin_mae": self.bin_mae,
            "bin_counts": self.bin_counts.tolist(),
            "pearson": self.pearson,
            "degenerate": self.degenerate,
            "n_elements": self.n_elements,
        }


def std_error_correlation(model, s: Subspace, sched: NoiseSchedule,
                          eval_data: Dataset, rng: RngStream,
                          bins: int = 10) -> CorrelationReport:
    """Pool per-element (ensemble std, absolute error) pairs over the inputs."""
    if not model.output_kind.is_probabilistic:
        raise UnsupportedTaskError("spread/error correlation needs probability outputs")
    targets = _target_rows(eval_data)
    stds, errs = [], []
    for i in range(eval_data.n):
        result = run_gtta(model, s, sched, eval_data.inputs[i], rng.derive(i))
        stds.append(result.std_map.ravel())
        errs.append(np.abs(result.mean_prediction - targets[i]).ravel())
    std = np.concatenate(stds)
    err = np.concatenate(errs)

    lo, hi = float(std.min()), float(std.max())
    degenerate = hi - lo < 1e-12
    edges = np.linspace(lo, hi if not degenerate else lo + 1.0, bins + 1)
    idx = np.clip(((std - edges[0]) / (edges[-1] - edges[0]) * bins).astype(int), 0, bins - 1)
    counts = np.bincount(idx, minlength=bins)
    mae = [
        float(err[idx == b].mean()) if counts[b] else None
        for b in range(bins)
    ]
    return CorrelationReport(
        bin_edges=edges,
        bin_mae=mae,
        bin_counts=counts,
        pearson=None if degenerate else pearson_r(std, err),
        degenerate=degenerate,
        n_elements=int(std.size),
    )


# --------------------------------------------------------------------------
# structured distractor removal


@dataclass(frozen=True)
class StructuredNoiseReport:
    correlation: float             # mean |cos(residual, pattern)| under latent noise
    baseline_correlation: float    # same statistic for the global jitter
    per_row: list = field(repr=False, default_factory=list)

    def to_dict(self) -> dict:
        return {
            "correlation": self.correlation,
            "baseline_correlation": self.baseline_correlation,
            "per_row": self.per_row,
        }


def _pattern_correlation(residuals: np.ndarray, pattern: np.ndarray) -> float:
    pnorm = np.linalg.norm(pattern)
    if pnorm == 0:
        return 0.0
    rnorm = np.linalg.norm(residuals, axis=1)
    safe = np.where(rnorm == 0, 1.0, rnorm)
    cos = np.abs(residuals @ pattern) / (safe * pnorm)
    return float(np.where(rnorm == 0, 0.0, cos).mean())


def structured_noise_removal(carrier: Dataset, pattern: np.ndarray,
                             sched: NoiseSchedule, rng: RngStream, *,
                             inject_fraction: float = 0.5,
                             retain="all",
                             test_count: int | None = None,
                             jitter_scale: tuple = (0.1, 0.1)) -> StructuredNoiseReport:
    """How much of a fixed additive pattern survives noisy reconstruction.

    The pattern is injected into ``inject_fraction`` of the fit rows, the
    subspace is fit on that contaminated set, and held-out rows carrying the
    pattern are perturbed and reconstructed. The report compares the mean
    normalized correlation between (reconstruction - clean input) and the
    pattern against the same statistic for a two-parameter global jitter.
    """
    pattern = np.asarray(pattern, dtype=np.float64)
    if pattern.shape != (carrier.d,):
        raise ParamError(f"pattern must have shape ({carrier.d},), got {pattern.shape}")
    if not 0 <= inject_fraction <= 1:
        raise ParamError(f"inject_fraction must lie in [0, 1], got {inject_fraction}")

    n = carrier.n
    if test_count is None:
        test_count = max(1, n // 5)
    if test_count >= n - 1:
        raise ParamError("not enough rows to hold out a test split")
    order = rng.derive(1).generator().permutation(n)
    test_rows = carrier.inputs[order[:test_count]]
    fit_rows = carrier.inputs[order[test_count:]].copy()

    n_inject = int(round(inject_fraction * fit_rows.shape[0]))
    fit_rows[:n_inject] += pattern
    s = fit(fit_rows, retain)

    sa, sb = jitter_scale
    per_row = []
    gtta_vals, base_vals = [], []
    for i in range(test_count):
        x_clean = test_rows[i]
        x_pat = x_clean + pattern
        cands = make_candidates(sched, s, x_pat, rng.derive(2).derive(i))
        gtta_corr = _pattern_correlation(cands - x_clean, pattern)

        stream = rng.derive(3).derive(i)
        jittered = np.empty((sched.ensemble_size, carrier.d))
        for j in range(1, sched.ensemble_size + 1):
            za, zb = stream.derive(j).generator().standard_normal(2)
            jittered[j - 1] = (1.0 + sa * za) * x_pat + sb * zb
        base_corr = _pattern_correlation(jittered - x_clean, pattern)

        gtta_vals.append(gtta_corr)
        base_vals.append(base_corr)
        per_row.append({"latent_noise": gtta_corr, "global_jitter": base_corr})

    return StructuredNoiseReport(
        correlation=float(np.mean(gtta_vals)),
        baseline_correlation=float(np.mean(base_vals)),
        per_row=per_row,
    )

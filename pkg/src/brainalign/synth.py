"""Synthetic ground-truth generator.

Produces feature matrices for four conditions (joint, lang_only, vis_only,
mask_truth) plus multi-subject response matrices whose ROIs carry planted
components, so every analysis has a known-answer test bed:

- ``lang``/``vis``: modality-unique latents. A ROI driven by ``vis`` is
  predictable from the joint features but not from lang_only -- the
  planted cross-modal connection.
- ``shared``: a latent mixed into *both* unimodal conditions and the
  joint one; removing the unimodal features removes it from the joint.
- ``interaction``: a standardized elementwise product of projections of
  the lang and vis latents. It is not in the linear span of the unimodal
  latents, so it survives linear removal -- the planted multimodal
  interaction (present in the joint features only when enabled).

Latents get AR(1) temporal smoothing so block-CV leakage tests run on
autocorrelated data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

COMPONENTS = ("lang", "vis", "shared", "interaction")


def _default_voxels():
    return {"roi_crossmodal": 8, "roi_language": 8, "roi_interaction": 8, "roi_null": 8}


def _default_snr():
    return {
        "roi_crossmodal": {"vis": 1.5},
        "roi_language": {"lang": 1.5},
        "roi_interaction": {"interaction": 1.5},
        "roi_null": {},
    }


def _default_latent_dims():
    return {"lang": 4, "vis": 4, "shared": 3, "interaction": 3}


def _default_feature_dims():
    return {"joint": 24, "lang_only": 16, "vis_only": 16, "mask_truth": 12}


@dataclass
class SynthSpec:
    n_samples: int = 120
    n_subjects: int = 4
    voxels_per_roi: dict = field(default_factory=_default_voxels)
    latent_dims: dict = field(default_factory=_default_latent_dims)
    feature_dims: dict = field(default_factory=_default_feature_dims)
    snr: dict = field(default_factory=_default_snr)
    noise_sigma: float | list = 1.0
    ar_coef: float = 0.3
    feature_noise: float = 0.05
    include_interaction_in_joint: bool = True
    seed: int = 0

    def subject_sigmas(self) -> list[float]:
        if np.isscalar(self.noise_sigma):
            return [float(self.noise_sigma)] * self.n_subjects
        sig = [float(s) for s in self.noise_sigma]
        if len(sig) != self.n_subjects:
            raise ValueError("noise_sigma list length must equal n_subjects")
        return sig

    def validate(self) -> None:
        if self.n_samples < 10 or self.n_subjects < 1:
            raise ValueError("need n_samples >= 10 and n_subjects >= 1")
        if not 0 <= self.ar_coef < 1:
            raise ValueError("AR coefficient must be in [0, 1)")
        for name, d in self.latent_dims.items():
            if name not in COMPONENTS or d < 1:
                raise ValueError(f"bad latent dim {name}={d}")
        for roi, comps in self.snr.items():
            if roi not in self.voxels_per_roi:
                raise ValueError(f"snr references unknown ROI {roi!r}")
            for c, v in comps.items():
                if c not in COMPONENTS:
                    raise ValueError(f"unknown component {c!r} in snr for {roi!r}")
                if v < 0:
                    raise ValueError(f"snr must be nonnegative, got {c}={v}")
        if any(s <= 0 for s in self.subject_sigmas()):
            raise ValueError("noise_sigma must be positive")


@dataclass
class SynthData:
    features: dict  # condition name -> n x p matrix
    responses: list  # per subject, n x v
    atlas: dict  # roi name -> voxel indices
    ground_truth: dict
    spec: SynthSpec


def _ar1(rng: np.random.Generator, n: int, d: int, rho: float) -> np.ndarray:
    """AR(1)-smoothed standard-normal columns, re-standardized."""
    eps = rng.standard_normal((n, d))
    if rho > 0:
        out = np.empty_like(eps)
        out[0] = eps[0]
        c = np.sqrt(1.0 - rho * rho)
        for t in range(1, n):
            out[t] = rho * out[t - 1] + c * eps[t]
    else:
        out = eps
    return _standardize(out)


def _standardize(arr: np.ndarray) -> np.ndarray:
    sd = arr.std(axis=0)
    sd[sd == 0.0] = 1.0
    return (arr - arr.mean(axis=0)) / sd


def _mix(rng, sources: list[np.ndarray], out_dim: int, noise: float) -> np.ndarray:
    src = np.hstack(sources)
    M = rng.standard_normal((src.shape[1], out_dim)) / np.sqrt(src.shape[1])
    F = src @ M
    if noise > 0:
        F = F + noise * rng.standard_normal(F.shape)
    return F


def generate(spec: SynthSpec) -> SynthData:
    """Generate the full test bed; bit-identical for identical spec+seed."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    n = spec.n_samples
    dims = spec.latent_dims

    z = {
        "lang": _ar1(rng, n, dims["lang"], spec.ar_coef),
        "vis": _ar1(rng, n, dims["vis"], spec.ar_coef),
        "shared": _ar1(rng, n, dims["shared"], spec.ar_coef),
    }
    d_int = dims["interaction"]
    proj_l = rng.standard_normal((dims["lang"], d_int)) / np.sqrt(dims["lang"])
    proj_v = rng.standard_normal((dims["vis"], d_int)) / np.sqrt(dims["vis"])
    z["interaction"] = _standardize((z["lang"] @ proj_l) * (z["vis"] @ proj_v))

    joint_sources = [z["lang"], z["vis"], z["shared"]]
    if spec.include_interaction_in_joint:
        joint_sources.append(z["interaction"])
    features = {
        "joint": _mix(rng, joint_sources, spec.feature_dims["joint"], spec.feature_noise),
        "lang_only": _mix(
            rng, [z["lang"], z["shared"]], spec.feature_dims["lang_only"], spec.feature_noise
        ),
        "vis_only": _mix(
            rng, [z["vis"], z["shared"]], spec.feature_dims["vis_only"], spec.feature_noise
        ),
        "mask_truth": _mix(
            rng, [z["lang"]], spec.feature_dims["mask_truth"], spec.feature_noise
        ),
    }

    # voxel signal weights are drawn once and shared across subjects so
    # paired across-subject tests see a common signal with private noise
    atlas = {}
    start = 0
    roi_signals = {}
    for roi, count in spec.voxels_per_roi.items():
        atlas[roi] = np.arange(start, start + count, dtype=np.int64)
        start += count
        comps = spec.snr.get(roi, {})
        sig = np.zeros((n, count))
        for comp, snr in comps.items():
            w = rng.standard_normal((dims[comp], count))
            sig += snr * _standardize(z[comp] @ w)
        roi_signals[roi] = sig
    total_voxels = start

    responses = []
    for sigma in spec.subject_sigmas():
        Y = np.empty((n, total_voxels))
        for roi in spec.voxels_per_roi:
            Y[:, atlas[roi]] = roi_signals[roi] + sigma * rng.standard_normal(
                (n, atlas[roi].size)
            )
        responses.append(Y)

    ground_truth = {
        "roi_components": {roi: dict(spec.snr.get(roi, {})) for roi in spec.voxels_per_roi},
        "latent_dims": dict(dims),
        "interaction_in_joint": spec.include_interaction_in_joint,
        "noise_sigma": spec.subject_sigmas(),
        "seed": spec.seed,
    }
    return SynthData(
        features=features,
        responses=responses,
        atlas=atlas,
        ground_truth=ground_truth,
        spec=spec,
    )

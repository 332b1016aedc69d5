"""Stimulus-to-recording (TR) alignment.

Stimuli are presented on a fixed stride; each maps to the recording index
(TR) at its onset. A stimulus spans several TRs, and which one carries the
most relevant signal differs by analysis: the first relevant TR aligns
best with language-driven representations, the last relevant TR with
vision-driven ones, so the policy is selectable per contrast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TR_POLICIES = ("first_relevant", "last_relevant")


@dataclass(frozen=True)
class TrMapConfig:
    tr_seconds: float = 1.49
    stimulus_stride_seconds: float = 3.0
    segment_seconds: float = 5.0
    tr_policy: str = "first_relevant"
    # The acquisition heuristic treats a 5 s segment as spanning 3 TRs of
    # 1.49 s even though ceil(5/1.49) = 4; the default override reproduces
    # that. Set to None to use the exact ceil.
    span_override: int | None = 3

    def __post_init__(self):
        if self.tr_seconds <= 0 or self.stimulus_stride_seconds <= 0 or self.segment_seconds <= 0:
            raise ValueError("all durations must be positive")
        if self.tr_policy not in TR_POLICIES:
            raise ValueError(f"tr_policy must be one of {TR_POLICIES}")
        if self.span_override is not None and self.span_override < 1:
            raise ValueError("span_override must be >= 1")

    @property
    def span(self) -> int:
        """Number of TRs one stimulus segment covers."""
        if self.span_override is not None:
            return self.span_override
        return math.ceil(self.segment_seconds / self.tr_seconds)


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def stimulus_to_tr(stimulus_index: int, cfg: TrMapConfig) -> int:
    """Recording index for a stimulus under the configured policy.

    Onset rounding is half-away-from-zero. first_relevant returns the TR
    at onset; last_relevant returns onset + span - 1.
    """
    if stimulus_index < 0:
        raise ValueError("stimulus_index must be >= 0")
    onset_seconds = stimulus_index * cfg.stimulus_stride_seconds
    base_tr = _round_half_away(onset_seconds / cfg.tr_seconds)
    tr = base_tr if cfg.tr_policy == "first_relevant" else base_tr + cfg.span - 1
    if tr < 0:
        raise ValueError(f"stimulus {stimulus_index} maps to negative TR {tr}")
    return tr


def align_rows(
    features: np.ndarray, responses: np.ndarray, cfg: TrMapConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Select the response row for each feature row (stimulus).

    Returns (X, Y) with equal row counts: X unchanged, Y rows picked at
    the mapped TR indices in stimulus order.
    """
    features = np.asarray(features, dtype=np.float64)
    responses = np.asarray(responses, dtype=np.float64)
    n_stim = features.shape[0]
    idx = np.array([stimulus_to_tr(i, cfg) for i in range(n_stim)], dtype=np.int64)
    bad = np.flatnonzero(idx >= responses.shape[0])
    if bad.size:
        raise ValueError(
            f"{bad.size} stimuli map past the recording "
            f"({responses.shape[0]} rows); first offenders: {bad[:10].tolist()}"
        )
    return features, responses[idx]

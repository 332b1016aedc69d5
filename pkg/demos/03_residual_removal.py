"""Removing one representation's information from another.

Three cases: removing a matrix from itself (variance collapses), removing
an unrelated matrix (variance survives), and removing the unimodal
features from the joint ones (only the planted product interaction
survives, and it still predicts the interaction ROI).
"""

import numpy as np

from brainalign.crossval import fit_encoding, make_folds, score_alignment
from brainalign.residual import remove_information
from brainalign.synth import SynthSpec, generate

rng = np.random.default_rng(0)
scheme = make_folds(120, 6)

A = rng.standard_normal((120, 10))
B = rng.standard_normal((120, 10))

ratio = lambda r, orig: r.var(axis=0).sum() / orig.var(axis=0).sum()
print(f"self-removal variance retained:        {ratio(remove_information(A, A, scheme), A):.5f}")
print(f"independent removal variance retained: {ratio(remove_information(A, B, scheme), B):.5f}")

# joint minus unimodal leaves the interaction component
data = generate(SynthSpec(seed=1))
unimodal = np.hstack([data.features["lang_only"], data.features["vis_only"]])
resid = remove_information(unimodal, data.features["joint"], scheme)
print(f"\njoint-minus-unimodal variance retained: {ratio(resid, data.features['joint']):.3f}")

enc = fit_encoding(resid, data.responses[0], scheme)
for roi in ("roi_interaction", "roi_null"):
    print(f"residual predicts {roi}: r = {score_alignment(enc, data.atlas[roi]):.3f}")

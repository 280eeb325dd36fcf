"""Inverse-variance fusion of two independent Gaussian estimates."""

from __future__ import annotations

import numpy as np

from .analytical import ComEstimate


def fuse(e1: ComEstimate, e2: ComEstimate) -> ComEstimate:
    """Precision-weighted combination, per axis:

        mu    = (mu1/s1^2 + mu2/s2^2) / (1/s1^2 + 1/s2^2)
        sigma = sqrt(1 / (1/s1^2 + 1/s2^2))

    Treats the two measurements as independent, so the fused variance never
    exceeds either input's.
    """
    for e in (e1, e2):
        if e.std is None:
            raise ValueError("fuse requires both estimates to carry a std")
        if not np.all(e.std > 0):
            raise ValueError("fuse requires positive stds")
    p1 = 1.0 / np.square(e1.std)
    p2 = 1.0 / np.square(e2.std)
    precision = p1 + p2
    mean = (e1.mean * p1 + e2.mean * p2) / precision
    std = np.sqrt(1.0 / precision)
    return ComEstimate(mean=mean, std=std)

"""Closed-form single-reading CoM estimate.

With torque = r x F, the component of r perpendicular to the force direction
is recovered exactly by r_perp = (F x tau) / |F|^2; the component parallel to
F never contributes torque and is reported as zero. No uncertainty is
attached, which is what makes this a baseline rather than a method.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSignalError
from .sim import Wrench

FORCE_FLOOR_DEFAULT = 0.1


@dataclass
class ComEstimate:
    """Per-axis mean and standard deviation of the CoM offset, meters.

    ``std`` is None for estimators that carry no uncertainty (the closed-form
    solution); when present it must be positive elementwise.
    """

    mean: np.ndarray
    std: np.ndarray | None = None

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        if self.mean.shape != (3,):
            raise ValueError("mean must be a 3-vector")
        if self.std is not None:
            self.std = np.asarray(self.std, dtype=float)
            if self.std.shape != (3,):
                raise ValueError("std must be a 3-vector")
            if not np.all(self.std > 0):
                raise ValueError("std components must be positive when defined")


def solve_com_analytical(
    w: Wrench, force_floor: float = FORCE_FLOOR_DEFAULT
) -> ComEstimate:
    """Recover the torque-observable part of the CoM offset from one wrench.

    Raises InsufficientSignalError when |force| <= force_floor: too little
    weight to separate the lever arm from sensor noise (light objects).
    """
    force = w.force
    norm_sq = float(force @ force)
    if norm_sq <= force_floor * force_floor:
        raise InsufficientSignalError(
            f"|force| = {np.sqrt(norm_sq):.4f} N at or below floor {force_floor} N"
        )
    r_perp = np.cross(force, w.torque) / norm_sq
    return ComEstimate(mean=r_perp, std=None)

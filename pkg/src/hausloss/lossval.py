"""The value-plus-gradient record returned by every loss."""

from __future__ import annotations

from dataclasses import dataclass, field

import math

import numpy as np


def total(arr) -> float:
    """Correctly rounded sum, so loss values do not depend on summation order."""
    return math.fsum(np.asarray(arr, dtype=np.float64).ravel())


@dataclass(frozen=True, eq=False)
class LossEval:
    """Scalar loss, its gradient with respect to the prediction ``q``, and provenance.

    ``family`` is one of ``DSC``, ``DT``, ``DT-OS``, ``DT-Gauss``, ``ER``,
    ``CV`` or ``combined``.  ``flags`` carries evaluation metadata such as a
    one-sided fallback or the separate terms of a combined loss.
    """

    value: float
    grad: np.ndarray
    family: str
    params: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        grad = np.array(self.grad, dtype=np.float64, copy=True)
        grad.setflags(write=False)
        object.__setattr__(self, "grad", grad)
        object.__setattr__(self, "value", float(self.value))

    def summary(self) -> dict:
        return {"family": self.family, "value": self.value,
                "params": dict(self.params), "flags": dict(self.flags)}

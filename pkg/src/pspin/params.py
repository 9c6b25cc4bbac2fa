"""Model parameters of the kicked p-spin family."""
from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ModelParams:
    """Parameter triple (p, k, alpha) identifying one kicked p-spin model.

    p      : integer >= 2, order of the all-to-all interaction (p=2 is the
             kicked top).
    k      : kick strength, dimensionless, >= 0.
    alpha  : precession angle in radians, normalized into [0, 2*pi) at
             construction.
    """

    p: int
    k: float
    alpha: float

    def __post_init__(self):
        if not isinstance(self.p, int) or isinstance(self.p, bool):
            raise TypeError(f"p must be an integer, got {self.p!r}")
        if self.p < 2:
            raise ValueError(f"p must be >= 2, got {self.p}")
        if not math.isfinite(self.k) or self.k < 0:
            raise ValueError(f"k must be a finite real >= 0, got {self.k}")
        if not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be finite, got {self.alpha}")
        object.__setattr__(self, "k", float(self.k))
        object.__setattr__(self, "alpha", float(self.alpha) % TWO_PI)

    def replace(self, **kw) -> "ModelParams":
        vals = {"p": self.p, "k": self.k, "alpha": self.alpha}
        vals.update(kw)
        return ModelParams(**vals)

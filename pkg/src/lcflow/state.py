from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterError
from .grid import Grid

GL = "GL"
EL = "EL"


@dataclass(frozen=True, eq=False)
class State:
    """Solution snapshot.

    ``epsilon`` selects the system: a positive value means the
    Ginzburg-Landau penalized flow, ``None`` the constrained
    Ericksen-Leslie flow.  ``p`` is diagnostic and may be absent until the
    pressure has been recovered.
    """

    grid: Grid
    t: float
    u: np.ndarray
    v: np.ndarray
    p: Optional[np.ndarray] = None
    epsilon: Optional[float] = None

    def __post_init__(self):
        self.grid.check(self.u, ranks=(1,))
        self.grid.check(self.v, ranks=(1,))
        if self.p is not None:
            self.grid.check(self.p, ranks=(0,))
        if self.epsilon is not None and not self.epsilon > 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")

    @property
    def mode(self):
        return EL if self.epsilon is None else GL

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def pressure_or_zero(self):
        return self.p if self.p is not None else np.zeros(self.grid.shape)

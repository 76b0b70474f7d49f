"""Initial-condition generators."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import grid as sg
from .errors import DegenerateInitialConditionError, ParameterError
from .state import State

KINDS = ("constant_b", "perturbed_b", "planar_twist", "taylor_green_velocity", "composite")
MIN_MODULUS = 1e-3
BUMP_POWER = 2


@dataclass(frozen=True)
class InitialConditionSpec:
    kind: str = "constant_b"
    b: tuple = (0.0, 0.0, 1.0)
    amplitude: float = 0.1
    mode_count: int = 2
    m: int = 1
    parts: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown initial condition kind {self.kind!r}; expected one of {KINDS}")
        b = np.asarray(self.b, dtype=float)
        if b.shape != (3,) or abs(np.linalg.norm(b) - 1.0) > 1e-12:
            raise ParameterError(f"b must be a unit 3-vector, got {self.b}")
        if not (math.isfinite(self.amplitude) and self.amplitude >= 0):
            raise ParameterError(f"amplitude must be non-negative, got {self.amplitude}")
        if self.mode_count < 1:
            raise ParameterError(f"mode_count must be >= 1, got {self.mode_count}")
        if self.kind == "composite" and not self.parts:
            raise ParameterError("composite initial condition needs at least one part")


def center_bump(grid):
    """Smooth periodic bump equal to one at the box centre and zero on its faces."""
    kappa = 2.0 * math.pi / grid.box_length
    out = np.ones(grid.shape)
    for x in grid.coords:
        out = out * ((1.0 + np.cos(kappa * (x - grid.box_length / 2.0))) / 2.0) ** BUMP_POWER
    return out


def random_low_modes(grid, mode_count, rng):
    """Random trigonometric vector field with modes ``|m_i| <= mode_count``.

    Coefficients are drawn in a fixed order, so the field is the same
    function whatever the resolution.  It is scaled so that ``|w| <= 1``.
    """
    kappa = 2.0 * math.pi / grid.box_length
    modes = [m for m in itertools.product(range(-mode_count, mode_count + 1), repeat=grid.dim) if any(m)]
    coef = rng.standard_normal((len(modes), 3, 2))
    w = np.zeros((3,) + grid.shape)
    for (m, c) in zip(modes, coef):
        phase = kappa * sum(mi * x for mi, x in zip(m, grid.coords))
        cos, sin = np.cos(phase), np.sin(phase)
        for i in range(3):
            w[i] += c[i, 0] * cos + c[i, 1] * sin
    bound = np.sqrt(np.sum(np.sum(np.abs(coef), axis=(0, 2)) ** 2))
    return w / bound


def _parts(spec, grid, rng):
    """Director deviation from ``b`` and velocity contributed by ``spec``."""
    b = np.asarray(spec.b, dtype=float).reshape((3,) + (1,) * grid.dim)
    zero = np.zeros((3,) + grid.shape)
    kappa = 2.0 * math.pi / grid.box_length
    if spec.kind == "constant_b":
        return zero, zero
    if spec.kind == "perturbed_b":
        return spec.amplitude * center_bump(grid) * random_low_modes(grid, spec.mode_count, rng), zero
    if spec.kind == "planar_twist":
        th = spec.m * kappa * grid.coords[0]
        u = np.stack([np.cos(th), np.sin(th), np.zeros_like(th)])
        return u - b, zero
    if spec.kind == "taylor_green_velocity":
        x1, x2 = kappa * grid.coords[0], kappa * grid.coords[1]
        v = spec.amplitude * np.stack([np.sin(x1) * np.cos(x2), -np.cos(x1) * np.sin(x2), np.zeros_like(x1)])
        return zero, v
    du, v = zero, zero
    for part in spec.parts:
        pdu, pv = _parts(part, grid, rng)
        du, v = du + pdu, v + pv
    return du, v


def initial_condition(spec, grid, epsilon=None, seed=0):
    """State at ``t = 0``: unit director ``normalize(b + sum of deviations)``,
    Leray-projected velocity.  ``epsilon=None`` selects the constrained flow."""
    rng = np.random.default_rng(seed)
    du, v = _parts(spec, grid, rng)
    u = np.asarray(spec.b, dtype=float).reshape((3,) + (1,) * grid.dim) + du
    modulus = np.sqrt(np.sum(u * u, axis=0))
    if modulus.min() < MIN_MODULUS:
        raise DegenerateInitialConditionError(
            f"director nearly vanishes before normalization (min |u| = {modulus.min():.2e})"
        )
    u = u / modulus
    if np.any(v):
        v = sg.leray_project(grid, v)
    return State(grid=grid, t=0.0, u=u, v=v, p=None, epsilon=epsilon)

"""Periodic grids and exact spectral calculus on them.

Fields are plain numpy arrays whose trailing ``grid.dim`` axes are spatial
(C order, so the last coordinate varies fastest in memory):

* scalar:  ``grid.shape``
* vector:  ``(3,) + grid.shape``
* tensor:  ``(3, 3) + grid.shape``

On a two-dimensional grid fields depend on ``(x1, x2)`` only but vectors
still carry three components, so every ``x3`` derivative vanishes.

The gradient tensor of a vector field is stored as ``G[i, a] = d_a u^i``
(component first, derivative second).  Derivative symbols use wavenumbers
with the Nyquist entry set to zero, which makes the discrete derivatives
skew-adjoint and keeps ``div``, ``grad``, ``curl`` and the Laplacian
mutually consistent (``div grad == laplacian`` and ``div curl == 0`` hold
to round-off).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

from .errors import DegenerateGridError, GridMismatchError, ParameterError, RankError

__all__ = [
    "Grid",
    "fft",
    "ifft",
    "grad",
    "div",
    "curl",
    "laplacian",
    "grad_tensor",
    "derivative",
    "dealias",
    "leray_project",
    "pressure_poisson",
    "integrate",
    "l2_norm",
    "l2_norm_spectral",
    "field_rank",
]

_DERIVATIVE_KINDS = ("grad", "div", "curl", "laplacian", "grad_tensor")


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[0, box_length)**dim``."""

    dim: int = 3
    n: int = 32
    box_length: float = 2.0 * math.pi
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ParameterError(f"dim must be 2 or 3, got {self.dim}")
        if not isinstance(self.n, (int, np.integer)) or self.n <= 0:
            raise DegenerateGridError(f"grid size must be a positive integer, got {self.n!r}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ParameterError(f"n must be a power of two >= 8, got {self.n}")
        if not (self.box_length > 0 and math.isfinite(self.box_length)):
            raise ParameterError(f"box_length must be positive, got {self.box_length}")
        if not 0 < self.dealias_fraction <= 1:
            raise ParameterError(f"dealias_fraction must lie in (0, 1], got {self.dealias_fraction}")

    # -- geometry -------------------------------------------------------
    @property
    def shape(self):
        return (self.n,) * self.dim

    @property
    def spectral_shape(self):
        return (self.n,) * (self.dim - 1) + (self.n // 2 + 1,)

    @property
    def axes(self):
        return tuple(range(-self.dim, 0))

    @property
    def spacing(self):
        return self.box_length / self.n

    @property
    def volume(self):
        return self.box_length**self.dim

    @property
    def cell_volume(self):
        return self.spacing**self.dim

    @cached_property
    def coords(self):
        x = np.arange(self.n) * self.spacing
        return tuple(np.meshgrid(*([x] * self.dim), indexing="ij"))

    # -- spectral symbols -----------------------------------------------
    @cached_property
    def mode_numbers(self):
        """Integer mode numbers per axis, broadcastable to ``spectral_shape``."""
        out = []
        for ax in range(self.dim):
            if ax == self.dim - 1:
                m = np.arange(self.n // 2 + 1)
            else:
                m = np.fft.fftfreq(self.n, 1.0 / self.n).astype(int)
            bshape = [1] * self.dim
            bshape[ax] = m.size
            out.append(m.reshape(bshape))
        return tuple(out)

    @cached_property
    def wavenumbers(self):
        """Derivative symbols ``k_a`` with the Nyquist entry zeroed."""
        scale = 2.0 * math.pi / self.box_length
        out = []
        for m in self.mode_numbers:
            k = m * scale
            k = np.where(np.abs(m) == self.n // 2, 0.0, k)
            out.append(k)
        return tuple(out)

    @cached_property
    def k2(self):
        return sum(k * k for k in self.wavenumbers) * np.ones(self.spectral_shape)

    @cached_property
    def inv_k2(self):
        k2 = self.k2
        with np.errstate(divide="ignore"):
            return np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)

    @cached_property
    def dealias_mask(self):
        cutoff = self.dealias_fraction * (self.n / 2)
        keep = np.ones(self.spectral_shape, dtype=bool)
        for m in self.mode_numbers:
            keep &= np.abs(m) <= cutoff
        return keep

    @cached_property
    def rfft_weights(self):
        """Multiplicity of each stored half-spectrum mode in the full spectrum."""
        w = np.full(self.spectral_shape, 2.0)
        last = self.mode_numbers[-1]
        w[..., 0] = 1.0
        if self.n % 2 == 0:
            w = np.where(last == self.n // 2, 1.0, w)
        return w

    # -- validation -----------------------------------------------------
    def check(self, f, ranks=(0, 1, 2)):
        """Return the tensor rank of ``f`` after verifying its shape."""
        f = np.asarray(f)
        if f.shape[f.ndim - self.dim:] != self.shape or f.ndim < self.dim:
            raise GridMismatchError(f"field of shape {f.shape} does not live on grid {self.shape}")
        rank = f.ndim - self.dim
        if any(s != 3 for s in f.shape[:rank]):
            raise GridMismatchError(f"component axes must have length 3, got {f.shape[:rank]}")
        if rank not in ranks:
            raise RankError(f"expected rank in {ranks}, got rank {rank}")
        return rank


def field_rank(grid, f):
    return grid.check(f)


def fft(grid, f):
    return sfft.rfftn(f, axes=grid.axes)


def ifft(grid, fh):
    return sfft.irfftn(fh, s=grid.shape, axes=grid.axes)


def _dhat(grid, fh, axis):
    if axis >= grid.dim:
        return np.zeros_like(fh)
    return 1j * grid.wavenumbers[axis] * fh


def grad(grid, f):
    """Gradient of a scalar field as a 3-vector field."""
    grid.check(f, ranks=(0,))
    fh = fft(grid, f)
    out = np.zeros((3,) + grid.shape)
    for a in range(grid.dim):
        out[a] = ifft(grid, 1j * grid.wavenumbers[a] * fh)
    return out


def grad_tensor(grid, u):
    """``G[i, a] = d_a u^i`` for a vector field ``u``."""
    grid.check(u, ranks=(1,))
    return grad_tensor_hat(grid, fft(grid, u))


def grad_tensor_hat(grid, uh):
    out = np.zeros((3, 3) + grid.shape)
    dh = np.stack([1j * grid.wavenumbers[a] * uh for a in range(grid.dim)], axis=1)
    out[:, : grid.dim] = ifft(grid, dh)
    return out


def div(grid, v):
    """Divergence of a vector field; of a tensor ``T[a, ...]`` over its first index."""
    grid.check(v, ranks=(1, 2))
    return ifft(grid, div_hat(grid, fft(grid, v)))


def div_hat(grid, vh):
    acc = 1j * grid.wavenumbers[0] * vh[0]
    for a in range(1, grid.dim):
        acc = acc + 1j * grid.wavenumbers[a] * vh[a]
    return acc


def curl(grid, v):
    grid.check(v, ranks=(1,))
    return ifft(grid, curl_hat(grid, fft(grid, v)))


def curl_hat(grid, vh):
    d = lambda comp, ax: _dhat(grid, vh[comp], ax)  # noqa: E731
    return np.stack([d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)])


def laplacian(grid, f):
    grid.check(f)
    return ifft(grid, -grid.k2 * fft(grid, f))


def derivative(grid, f, kind):
    """Dispatch to one of the spectral operators by name."""
    rank = grid.check(f)
    allowed = {"grad": (0,), "div": (1, 2), "curl": (1,), "laplacian": (0, 1, 2), "grad_tensor": (1,)}
    if kind not in allowed:
        raise RankError(f"unknown derivative kind {kind!r}; expected one of {_DERIVATIVE_KINDS}")
    if rank not in allowed[kind]:
        raise RankError(f"{kind} is not defined for a rank-{rank} field")
    return {"grad": grad, "div": div, "curl": curl, "laplacian": laplacian, "grad_tensor": grad_tensor}[kind](grid, f)


def dealias(grid, f):
    """Zero every Fourier mode above the dealiasing cutoff.

    Fields whose out-of-band content is already at round-off level are
    returned unchanged (as a copy), so the filter is exactly idempotent.
    """
    grid.check(f)
    fh = fft(grid, f)
    mask = grid.dealias_mask
    scale = np.max(np.abs(fh)) if fh.size else 0.0
    if scale == 0.0 or np.max(np.abs(np.where(mask, 0.0, fh))) <= 64 * np.finfo(float).eps * scale:
        return np.array(f, dtype=float, copy=True)
    return ifft(grid, fh * mask)


def leray_hat(grid, vh):
    """Project a spectral vector field onto divergence-free fields."""
    kdotv = grid.wavenumbers[0] * vh[0]
    for a in range(1, grid.dim):
        kdotv = kdotv + grid.wavenumbers[a] * vh[a]
    kdotv = kdotv * grid.inv_k2
    out = vh.copy()
    for a in range(grid.dim):
        out[a] = vh[a] - grid.wavenumbers[a] * kdotv
    return out


def leray_project(grid, v):
    grid.check(v, ranks=(1,))
    return ifft(grid, leray_hat(grid, fft(grid, v)))


def pressure_poisson(grid, v, stress):
    """Mean-zero ``p`` with ``lap p = -d_i d_j (v^i v^j + stress[j, i])``.

    ``stress[j, i]`` is the elastic stress whose negative divergence over
    ``j`` forces the momentum equation.
    """
    grid.check(v, ranks=(1,))
    grid.check(stress, ranks=(2,))
    src = np.einsum("i...,j...->ij...", v, v) + np.swapaxes(stress, 0, 1)
    return ifft(grid, pressure_poisson_hat(grid, fft(grid, src) * grid.dealias_mask))


def pressure_poisson_hat(grid, srch):
    k = grid.wavenumbers
    rhs = np.zeros(grid.spectral_shape, dtype=complex)
    for i in range(grid.dim):
        for j in range(grid.dim):
            rhs += k[i] * k[j] * srch[i, j]
    return -rhs * grid.inv_k2


def integrate(grid, f):
    """Exact integral of the trigonometric interpolant (mean times volume)."""
    f = np.asarray(f)
    return grid.volume * np.mean(f, axis=grid.axes)


def l2_norm(grid, f):
    f = np.asarray(f)
    return math.sqrt(grid.volume * np.mean(f * f) * (f.size // math.prod(grid.shape)))


def l2_norm_spectral(grid, f):
    """L2 norm through Parseval on the half spectrum."""
    fh = fft(grid, f)
    npts = math.prod(grid.shape)
    power = np.sum(grid.rfft_weights * (fh.real**2 + fh.imag**2))
    return math.sqrt(grid.volume * power / npts**2)

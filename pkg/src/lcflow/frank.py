"""Oseen-Frank elasticity: energy density, its variations, stress and forces.

The gradient tensor is ``P[i, a] = d_a u^i``.  The density is evaluated as

    W(z, P) = a |P|^2 + V(z, P) + (k4 - a) * (tr(P P) - (tr P)^2),
    V(z, P) = (k1 - a)(tr P)^2 + (k2 - a)(z . curl)^2 + (k3 - a)|z x curl|^2,

with ``a = min(k1, k2, k3)`` and ``curl_m = eps_{m a i} P[i, a]``.  For
unit-length ``z`` this coincides with the four-constant formula
``k1 (div)^2 + k2 (z.curl)^2 + k3 |z x curl|^2 + k4 [tr(P P) - (div)^2]``;
off the sphere the ``k2, k3`` terms are split as ``a|P|^2 + V`` so that the
one-constant case is exactly the Dirichlet energy.  The last term is a null
Lagrangian: it never reaches the molecular field and adds only a gradient
to the stress divergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import grid as sg
from .errors import ConstraintViolationError, ParameterError

__all__ = [
    "FrankConstants",
    "EnergyBreakdown",
    "density_terms",
    "energy_density",
    "reduced_density",
    "w_p",
    "w_u",
    "stress_tensor",
    "elastic_force",
    "molecular_field",
    "director_rhs_el",
    "director_rhs_gl",
    "q_epsilon",
    "total_energy",
]


@dataclass(frozen=True)
class FrankConstants:
    """Splay, twist, bend and saddle-splay moduli."""

    k1: float
    k2: float
    k3: float
    k4: float

    def __post_init__(self):
        for name in ("k1", "k2", "k3", "k4"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float, np.floating)) and math.isfinite(val) and val > 0):
                raise ParameterError(f"{name} must be a positive finite number, got {val!r}")

    @property
    def a(self):
        return min(self.k1, self.k2, self.k3)

    @property
    def max_gap(self):
        """Largest coefficient of the reduced density, ``max(k1, k2, k3) - a``."""
        return max(self.k1, self.k2, self.k3) - self.a


@dataclass(frozen=True)
class EnergyBreakdown:
    kinetic: float
    elastic: float
    penalty: float

    @property
    def total(self):
        return self.kinetic + self.elastic + self.penalty


def _curl_of(P):
    return np.stack([P[2, 1] - P[1, 2], P[0, 2] - P[2, 0], P[1, 0] - P[0, 1]])


def _levi_civita_lift(g):
    # E[i, a] = eps_{i m a} g_m, i.e. d(g . curl)/dP[i, a]
    z = np.zeros_like(g[0])
    return np.stack([
        np.stack([z, -g[2], g[1]]),
        np.stack([g[2], z, -g[0]]),
        np.stack([-g[1], g[0], z]),
    ])


def density_terms(u, P, k, derivatives=True):
    """Pointwise density pieces for director values ``u`` and gradients ``P``.

    Returns a dict with ``W``, ``V``, ``null`` (the saddle-splay invariant
    ``tr(P P) - (tr P)^2``) and, when ``derivatives`` is set, ``Wp``
    (indexed ``[i, a]``) and ``Wu``.
    """
    a = k.a
    tr = P[0, 0] + P[1, 1] + P[2, 2]
    c = _curl_of(P)
    uc = np.sum(u * c, axis=0)
    s = np.cross(u, c, axis=0)
    trPP = np.einsum("ia...,ai...->...", P, P)
    null = trPP - tr * tr
    V = (k.k1 - a) * tr * tr + (k.k2 - a) * uc * uc + (k.k3 - a) * np.sum(s * s, axis=0)
    W = a * np.sum(P * P, axis=(0, 1)) + V + (k.k4 - a) * null
    out = {"W": W, "V": V, "null": null}
    if not derivatives:
        return out
    g = 2.0 * (k.k2 - a) * uc * u + 2.0 * (k.k3 - a) * np.cross(s, u, axis=0)
    Vp = _levi_civita_lift(g)
    eye_tr = np.zeros_like(P)
    for i in range(3):
        eye_tr[i, i] = tr
    Vp = Vp + 2.0 * (k.k1 - a) * eye_tr
    Wp = 2.0 * a * P + Vp + 2.0 * (k.k4 - a) * (np.swapaxes(P, 0, 1) - eye_tr)
    Wu = 2.0 * (k.k2 - a) * uc * c + 2.0 * (k.k3 - a) * np.cross(c, s, axis=0)
    out.update(Vp=Vp, Wp=Wp, Wu=Wu)
    return out


def energy_density(grid, u, k):
    grid.check(u, ranks=(1,))
    return density_terms(u, sg.grad_tensor(grid, u), k, derivatives=False)["W"]


def reduced_density(grid, u, k):
    grid.check(u, ranks=(1,))
    return density_terms(u, sg.grad_tensor(grid, u), k, derivatives=False)["V"]


def w_p(grid, u, k):
    """``dW/dP[i, a]`` evaluated on ``u``; shape ``(3, 3) + grid.shape``."""
    grid.check(u, ranks=(1,))
    return density_terms(u, sg.grad_tensor(grid, u), k)["Wp"]


def w_u(grid, u, k):
    grid.check(u, ranks=(1,))
    return density_terms(u, sg.grad_tensor(grid, u), k)["Wu"]


def stress_tensor(grid, u, k):
    """Ericksen stress ``S[j, i] = d_i u^m W_{P[m, j]}``.

    The momentum equation is forced by ``-d_j S[j, i]``.
    """
    grid.check(u, ranks=(1,))
    P = sg.grad_tensor(grid, u)
    Wp = density_terms(u, P, k)["Wp"]
    return np.einsum("mj...,mi...->ji...", Wp, P)


def elastic_force(grid, u, k):
    """``-div`` of the stress, with the stress dealiased before differentiation."""
    S = stress_tensor(grid, u, k)
    Sh = sg.fft(grid, S[: grid.dim]) * grid.dealias_mask
    return -sg.ifft(grid, sg.div_hat(grid, Sh))


def elastic_terms(grid, uh):
    """Shared evaluation used by the solver: works from the spectrum of ``u``.

    The input spectrum is dealiased, products are formed in physical space,
    and ``Wp`` is dealiased again before its divergence is taken.
    """
    uhd = uh * grid.dealias_mask
    u = sg.ifft(grid, uhd)
    P = sg.grad_tensor_hat(grid, uhd)
    return u, uhd, P


def _molecular_hat(grid, u, P, terms):
    # only the in-plane derivative columns are ever differentiated
    Wph = sg.fft(grid, terms["Wp"][:, : grid.dim]) * grid.dealias_mask
    divWp = 1j * grid.wavenumbers[0] * Wph[:, 0]
    for a in range(1, grid.dim):
        divWp = divWp + 1j * grid.wavenumbers[a] * Wph[:, a]
    return divWp - sg.fft(grid, terms["Wu"]) * grid.dealias_mask


def molecular_field(grid, u, k):
    """``h^i = d_a W_{P[i, a]} - W_{u^i}``, dealiased."""
    grid.check(u, ranks=(1,))
    ud, _, P = elastic_terms(grid, sg.fft(grid, u))
    terms = density_terms(ud, P, k)
    return sg.ifft(grid, _molecular_hat(grid, ud, P, terms))


def advection(grid, v, P):
    """``(v . grad) u`` from the director gradient ``P``."""
    return np.einsum("k...,ik...->i...", v, P)


def _penalty(u, eps):
    return u * (1.0 - np.sum(u * u, axis=0)) / eps**2


def director_rhs_gl(grid, u, v, k, eps):
    """Semi-discrete ``du/dt`` of the penalized flow, dealiased."""
    if not eps > 0:
        raise ParameterError(f"epsilon must be positive, got {eps}")
    grid.check(u, ranks=(1,))
    grid.check(v, ranks=(1,))
    ud, _, P = elastic_terms(grid, sg.fft(grid, u))
    vd = sg.ifft(grid, sg.fft(grid, v) * grid.dealias_mask)
    terms = density_terms(ud, P, k)
    rhs = _molecular_hat(grid, ud, P, terms) + sg.fft(grid, _penalty(ud, eps) - advection(grid, vd, P))
    return sg.ifft(grid, rhs * grid.dealias_mask)


def q_epsilon(grid, u, v, k, eps):
    """Initial-data size functional field: the full penalized director tendency."""
    return director_rhs_gl(grid, u, v, k, eps)


def tangential_part(u, w):
    """``w - (w . u) u`` for unit ``u``; equals ``-(w x u) x u``."""
    return w - np.sum(w * u, axis=0) * u


def director_rhs_el(grid, u, v, k, elastic_only=False, tol=1e-3):
    """Semi-discrete ``du/dt`` of the constrained flow.

    The elastic part is the molecular field projected on the tangent plane of
    the sphere, ``-(h x u) x u``; for unit ``u`` this is the explicit
    constrained right-hand side.  Advection is added unless ``elastic_only``.
    """
    grid.check(u, ranks=(1,))
    grid.check(v, ranks=(1,))
    dev = np.max(np.abs(np.sqrt(np.sum(u * u, axis=0)) - 1.0))
    if dev > tol:
        raise ConstraintViolationError(f"director deviates from unit length by {dev:.3e} > {tol:g}")
    uh = sg.fft(grid, u)
    ud, _, P = elastic_terms(grid, uh)
    terms = density_terms(ud, P, k)
    h = sg.ifft(grid, _molecular_hat(grid, ud, P, terms))
    rhs = tangential_part(u, h)
    if elastic_only:
        return rhs
    vd = sg.ifft(grid, sg.fft(grid, v) * grid.dealias_mask)
    adv = sg.ifft(grid, sg.fft(grid, advection(grid, vd, P)) * grid.dealias_mask)
    return rhs - adv


def penalty_density(u, eps):
    if eps is None:
        return np.zeros(u.shape[1:])
    return (1.0 - np.sum(u * u, axis=0)) ** 2 / (4.0 * eps**2)


def total_energy(state, k):
    g = state.grid
    kinetic = 0.5 * sg.integrate(g, np.sum(state.v * state.v, axis=0))
    elastic = sg.integrate(g, energy_density(g, state.u, k))
    penalty = sg.integrate(g, penalty_density(state.u, state.epsilon)) if state.epsilon else 0.0
    return EnergyBreakdown(float(kinetic), float(elastic), float(penalty))

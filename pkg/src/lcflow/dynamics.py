"""Time integration of the penalized (GL) and constrained (EL) flows.

Both systems are advanced with a first-order IMEX Euler scheme in
integrating-factor form.  The stiff linear parts (viscosity ``lap v`` and
the leading elastic term ``2a lap u``) are integrated exactly in Fourier
space; the anisotropic remainder, the penalty, advection and the elastic
stress are explicit.  In EL mode the director is renormalized pointwise
after every step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.fft as sfft

from . import grid as sg
from .errors import BlowupSuspected, ParameterError, StepError
from .frank import (
    _molecular_hat,
    advection,
    density_terms,
    elastic_terms,
    tangential_part,
)
from .state import State

log = logging.getLogger(__name__)

__all__ = [
    "SchemeConfig",
    "Tendencies",
    "StepInfo",
    "evaluate",
    "advance",
    "step",
    "stable_dt",
    "solve_pressure",
    "run",
]

SCHEMES = ("imex_euler",)
GL_BAND = (0.75, 1.25)
DIV_TOL = 1e-10
UNIT_TOL = 1e-8


@dataclass(frozen=True)
class SchemeConfig:
    dt: float
    dt_safety: float = 0.5
    penalty_cap_beta: float = 0.1
    scheme: str = "imex_euler"

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if not 0 < self.dt_safety <= 1:
            raise ParameterError(f"dt_safety must lie in (0, 1], got {self.dt_safety}")
        if not self.penalty_cap_beta > 0:
            raise ParameterError(f"penalty_cap_beta must be positive, got {self.penalty_cap_beta}")
        if self.scheme not in SCHEMES:
            raise ParameterError(f"unknown scheme {self.scheme!r}; available: {SCHEMES}")

    def check_penalty_cap(self, eps):
        if eps is not None and self.dt > self.penalty_cap_beta * eps**2 * (1 + 1e-12):
            raise ParameterError(
                f"dt={self.dt:g} exceeds the penalty cap beta*eps^2={self.penalty_cap_beta * eps**2:g}"
            )


@dataclass
class Tendencies:
    """Everything evaluated from one state that the stepper and the
    diagnostics both need."""

    u_rhs: np.ndarray          # full du/dt
    drive: np.ndarray          # du/dt + (v . grad)u
    u_explicit_hat: np.ndarray  # du/dt minus the implicit 2a lap u, spectral
    v_explicit_hat: np.ndarray  # projected nonlinear + elastic forcing, spectral
    grad_u: np.ndarray
    grad_v: np.ndarray
    lap_u: np.ndarray
    density: np.ndarray
    stress: np.ndarray
    pressure: Optional[np.ndarray]  # only when requested
    grad_v_sq: float           # integral of |grad v|^2
    u_hat: np.ndarray
    v_hat: np.ndarray


@dataclass(frozen=True)
class StepInfo:
    renorm_drift: float
    min_abs_u: float
    max_abs_u: float
    div_v_inf: float


def evaluate(state, k, pressure=True):
    """Evaluate the semi-discrete right-hand sides at ``state``.

    The pressure is diagnostic only; ``pressure=False`` skips its solve.
    """
    g = state.grid
    mask = g.dealias_mask
    uh = sg.fft(g, state.u)
    ud, uhd, P = elastic_terms(g, uh)
    terms = density_terms(ud, P, k)
    hh = _molecular_hat(g, ud, P, terms)

    vh = sg.fft(g, state.v)
    vhd = vh * mask
    vd = sg.ifft(g, vhd)
    Gv = sg.grad_tensor_hat(g, vhd)
    adv_uh = sg.fft(g, advection(g, vd, P)) * mask

    if state.epsilon is None:
        drive = tangential_part(state.u, sg.ifft(g, hh))
        u_rhs = drive - sg.ifft(g, adv_uh)
        u_rhs_h = sg.fft(g, u_rhs)
    else:
        pen = ud * (1.0 - np.sum(ud * ud, axis=0)) / state.epsilon**2
        drive_h = hh + sg.fft(g, pen) * mask
        drive = sg.ifft(g, drive_h)
        u_rhs_h = drive_h - adv_uh
        u_rhs = sg.ifft(g, u_rhs_h)
    u_explicit_hat = u_rhs_h + 2.0 * k.a * g.k2 * uhd

    S = np.einsum("mj...,mi...->ji...", terms["Wp"], P)
    Sh = sg.fft(g, S[: g.dim]) * mask
    force_h = -sg.div_hat(g, Sh)
    adv_vh = sg.fft(g, np.einsum("k...,ik...->i...", vd, Gv)) * mask
    v_explicit_hat = sg.leray_hat(g, force_h - adv_vh)

    p = None
    if pressure:
        d = g.dim
        src = np.einsum("i...,j...->ij...", vd[:d], vd[:d]) + np.swapaxes(S[:d, :d], 0, 1)
        p = sg.ifft(g, sg.pressure_poisson_hat(g, sg.fft(g, src) * mask))
    lap_u = sg.ifft(g, -g.k2 * uhd)

    npts = math.prod(g.shape)
    power = np.sum(g.rfft_weights * g.k2 * (vh.real**2 + vh.imag**2))
    grad_v_sq = float(g.volume * power / npts**2)

    return Tendencies(
        u_rhs=u_rhs,
        drive=drive,
        u_explicit_hat=u_explicit_hat,
        v_explicit_hat=v_explicit_hat,
        grad_u=P,
        grad_v=Gv,
        lap_u=lap_u,
        density=terms["W"],
        stress=S,
        pressure=p,
        grad_v_sq=grad_v_sq,
        u_hat=uh,
        v_hat=vh,
    )


@lru_cache(maxsize=32)
def _decay(grid, coef, dt):
    return np.exp(-coef * dt * grid.k2)


def advance(state, k, cfg, tend=None):
    """One IMEX Euler step; returns the new state (without pressure) and
    step statistics.  Raises :class:`BlowupSuspected` on non-finite output
    or a GL modulus outside ``[3/4, 5/4]``."""
    g = state.grid
    if tend is None:
        tend = evaluate(state, k, pressure=False)
    dt = cfg.dt
    uh_new = _decay(g, 2.0 * k.a, dt) * (tend.u_hat + dt * tend.u_explicit_hat)
    vh_new = sg.leray_hat(g, _decay(g, 1.0, dt) * (tend.v_hat + dt * tend.v_explicit_hat))
    u_new = sg.ifft(g, uh_new)
    v_new = sg.ifft(g, vh_new)
    if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(v_new))):
        raise BlowupSuspected(f"non-finite field at t={state.t + dt:.6g}", state=state, details={"t": state.t + dt})

    modulus = np.sqrt(np.sum(u_new * u_new, axis=0))
    drift = 0.0
    if state.epsilon is None:
        drift = float(np.max(np.abs(modulus - 1.0)))
        u_new = u_new / modulus
        modulus = np.sqrt(np.sum(u_new * u_new, axis=0))
    lo, hi = float(modulus.min()), float(modulus.max())
    div_inf = float(np.max(np.abs(sg.ifft(g, sg.div_hat(g, vh_new)))))
    details = {"t": state.t + dt, "min_abs_u": lo, "max_abs_u": hi, "div_v_inf": div_inf, "renorm_drift": drift}
    if state.epsilon is not None and not (GL_BAND[0] <= lo and hi <= GL_BAND[1]):
        raise BlowupSuspected(f"|u| left [3/4, 5/4] at t={state.t + dt:.6g}: [{lo:.4f}, {hi:.4f}]",
                              state=state, details=details)
    if state.epsilon is None and np.max(np.abs(modulus - 1.0)) > UNIT_TOL:
        raise StepError("renormalized director is not unit length", state=state, details=details)
    if div_inf > DIV_TOL * max(1.0, float(np.max(np.abs(v_new)))):
        raise StepError(f"velocity divergence {div_inf:.3e} above tolerance", state=state, details=details)

    new = State(grid=g, t=state.t + dt, u=u_new, v=v_new, p=None, epsilon=state.epsilon)
    return new, StepInfo(drift, lo, hi, div_inf)


def solve_pressure(state, k):
    """Mean-zero pressure of ``state`` from the Poisson equation with the
    Reynolds and Ericksen stresses as source."""
    g = state.grid
    if math.prod(g.shape) == 0:  # pragma: no cover - Grid rejects this already
        from .errors import DegenerateGridError

        raise DegenerateGridError("empty grid")
    uhd = sg.fft(g, state.u) * g.dealias_mask
    ud = sg.ifft(g, uhd)
    P = sg.grad_tensor_hat(g, uhd)
    S = np.einsum("mj...,mi...->ji...", density_terms(ud, P, k)["Wp"], P)
    vd = sg.ifft(g, sg.fft(g, state.v) * g.dealias_mask)
    return sg.pressure_poisson(g, vd, S)


def step(state, k, cfg):
    """Advance ``state`` by ``cfg.dt`` and recover its pressure."""
    cfg.check_penalty_cap(state.epsilon)
    new, _ = advance(state, k, cfg)
    return new.replace(p=solve_pressure(new, k))


def stable_dt(state, k, cfg):
    """Advisory step size: ``dt_safety`` times the smallest of the advective
    CFL limit, the explicit anisotropic-diffusion limit and the GL penalty
    cap ``beta * eps^2``."""
    h = state.grid.spacing
    vmax = float(np.max(np.sqrt(np.sum(state.v * state.v, axis=0))))
    if not math.isfinite(vmax):
        raise BlowupSuspected("non-finite velocity", state=state)
    caps = [h / vmax if vmax > 0 else math.inf]
    gap = k.max_gap
    # isotropic constants leave no explicit diffusion; fall back to the leading modulus
    caps.append(h * h / (4.0 * (gap if gap > 0 else k.a)))
    if state.epsilon is not None:
        caps.append(cfg.penalty_cap_beta * state.epsilon**2)
    return cfg.dt_safety * min(caps)


def run(config, state=None, progress=None):
    """Integrate ``config`` from its initial condition to ``config.t_end``.

    Returns a :class:`~lcflow.diagnostics.Trajectory`.  Step errors are
    re-raised with the trajectory recorded so far attached as
    ``err.trajectory``.
    """
    from .diagnostics import Trajectory, make_record
    from .initial import initial_condition

    k = config.constants
    cfg = config.scheme
    cfg.check_penalty_cap(config.epsilon)
    if state is None:
        state = initial_condition(config.ic, config.grid, config.epsilon, seed=config.seed)
    settings = config.diagnostics
    traj = Trajectory(grid=config.grid, constants=k, epsilon=config.epsilon, settings=settings)
    nsteps = int(math.ceil(config.t_end / cfg.dt - 1e-9)) if config.t_end > 0 else 0
    t0 = state.t
    adv_limit = stable_dt(state, k, cfg) / cfg.dt_safety
    if cfg.dt > adv_limit:
        log.warning("dt=%g exceeds the advisory stable step %g", cfg.dt, adv_limit)

    drift = 0.0
    with sfft.set_workers(config.workers):
        for n in range(nsteps + 1):
            last = n == nsteps
            snap = bool(config.snapshot_every) and (n % config.snapshot_every == 0 or last)
            tend = evaluate(state, k, pressure=snap or last)
            if tend.pressure is not None:
                state = state.replace(p=tend.pressure)
            if n % config.sample_every == 0 or last:
                traj.records.append(make_record(state, tend, k, settings, renorm_drift=drift))
            if snap:
                traj.snapshots.append(state)
            if last:
                break
            try:
                new, info = advance(state, k, cfg, tend)
            except StepError as err:
                err.trajectory = traj
                traj.blowup = {"t": state.t, "reason": str(err), **err.details}
                raise
            state = new.replace(t=t0 + (n + 1) * cfg.dt)
            drift = info.renorm_drift
            if progress is not None:
                progress(n + 1, nsteps)
    traj.final_state = state
    return traj

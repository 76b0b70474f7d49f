"""Penalized-to-constrained convergence experiment.

An epsilon ladder of penalized runs is compared with one constrained
reference run that shares the grid, time step and initial data.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import grid as sg
from .diagnostics import blowup_indicators, time_integral
from .dynamics import run
from .errors import AlignmentError, BlowupSuspected, ParameterError

log = logging.getLogger(__name__)

__all__ = ["SweepReport", "error_norms", "h1_norm", "epsilon_sweep"]


def _pair_field(g, s):
    """Stack ``(grad u, v)`` into one 12-component field."""
    P = sg.grad_tensor(g, s.u).reshape((9,) + g.shape)
    return np.concatenate([P, s.v])


def h1_norm(g, f):
    """``sqrt(||f||^2 + ||grad f||^2)`` computed spectrally, any leading axes."""
    fh = sg.fft(g, f)
    npts = math.prod(g.shape)
    power = np.sum(g.rfft_weights * (1.0 + g.k2) * (fh.real**2 + fh.imag**2))
    return math.sqrt(g.volume * power / npts**2)


def _l2(g, f):
    return math.sqrt(g.volume * float(np.mean(np.sum(f * f, axis=0))))


def _aligned(snaps_a, snaps_b):
    ta = np.array([s.t for s in snaps_a])
    tb = np.array([s.t for s in snaps_b])
    tol = 1e-12 * max(1.0, float(np.max(np.abs(np.concatenate([ta, tb])))) if ta.size + tb.size else 1.0)
    if ta.size != tb.size or np.any(np.abs(ta - tb) > tol):
        bad = sorted(set(np.round(ta, 12)) ^ set(np.round(tb, 12)))
        raise AlignmentError(f"snapshot times differ: {bad}", bad)
    return ta


def error_norms(traj_gl, traj_el):
    """``(sup_t ||e||_{L2}, (int ||e||_{H1}^2 dt)^(1/2))`` for
    ``e = (grad u_gl - grad u_el, v_gl - v_el)`` over shared snapshots."""
    if traj_gl.grid != traj_el.grid:
        raise AlignmentError("trajectories live on different grids")
    times = _aligned(traj_gl.snapshots, traj_el.snapshots)
    if times.size == 0:
        raise AlignmentError("no snapshots to compare")
    g = traj_gl.grid
    linf, h1sq = 0.0, []
    for a, b in zip(traj_gl.snapshots, traj_el.snapshots):
        e = _pair_field(g, a) - _pair_field(g, b)
        linf = max(linf, _l2(g, e))
        h1sq.append(h1_norm(g, e) ** 2)
    l2h1 = math.sqrt(time_integral(times, h1sq)) if times.size > 1 else 0.0
    return linf, l2h1


@dataclass
class SweepReport:
    epsilons: list
    err_linf_l2: list
    err_l2_h1: list
    penalty_sup: list
    serrin_gl: list
    h1_sup: list
    uniform_h1_bound: float
    horizons: list = field(default_factory=list)
    truncated: list = field(default_factory=list)
    reference_h1_sup: Optional[float] = None

    def rows(self):
        for i, eps in enumerate(self.epsilons):
            yield {
                "epsilon": eps,
                "err_linf_l2": self.err_linf_l2[i],
                "err_l2_h1": self.err_l2_h1[i],
                "penalty_sup": self.penalty_sup[i],
                "serrin_gl": self.serrin_gl[i],
                "h1_sup": self.h1_sup[i],
                "horizon": self.horizons[i],
                "truncated": int(self.truncated[i]),
            }


def _penalty_sup(traj):
    lo = traj.series("min_abs_u")
    hi = traj.series("max_abs_u")
    return float(max(np.max(np.abs(1.0 - lo**2)), np.max(np.abs(hi**2 - 1.0))))


def _restrict(traj, horizon):
    keep = [s for s in traj.snapshots if s.t <= horizon * (1 + 1e-12)]
    return type(traj)(grid=traj.grid, constants=traj.constants, epsilon=traj.epsilon,
                      settings=traj.settings, records=[r for r in traj.records if r.t <= horizon * (1 + 1e-12)],
                      snapshots=keep)


def epsilon_sweep(config, eps_ladder, progress=None):
    """Run the constrained reference and one penalized run per ``eps``.

    All runs share ``config``'s grid, step and initial data.  Snapshots are
    taken every ``snapshot_every`` steps (``sample_every`` if unset).  A
    penalized run that is stopped by :class:`BlowupSuspected` is reported
    as truncated, with its errors measured up to the last valid time.
    """
    eps_ladder = [float(e) for e in eps_ladder]
    if not eps_ladder:
        raise ParameterError("epsilon ladder is empty")
    if any(e <= 0 for e in eps_ladder) or any(b >= a for a, b in zip(eps_ladder, eps_ladder[1:])):
        raise ParameterError(f"epsilon ladder must be positive and strictly decreasing, got {eps_ladder}")
    for e in eps_ladder:
        config.scheme.check_penalty_cap(e)
    base = config.replace(snapshot_every=config.snapshot_every or config.sample_every)

    ref = run(base.replace(epsilon=None))
    ref_h1 = max(h1_norm(base.grid, _pair_field(base.grid, s)) for s in ref.snapshots)
    if progress:
        progress("EL", ref)

    out = {k: [] for k in ("linf", "l2h1", "pen", "serrin", "h1", "horizon", "trunc")}
    for eps in eps_ladder:
        try:
            traj = run(base.replace(epsilon=eps))
            truncated = False
        except BlowupSuspected as err:
            traj = err.trajectory
            truncated = True
            log.warning("eps=%g stopped at t=%g: %s", eps, traj.records[-1].t if traj.records else 0.0, err)
        horizon = traj.snapshots[-1].t if traj.snapshots else 0.0
        linf, l2h1 = error_norms(traj, _restrict(ref, horizon))
        out["linf"].append(linf)
        out["l2h1"].append(l2h1)
        out["pen"].append(_penalty_sup(traj))
        out["serrin"].append(blowup_indicators(traj, window=(0.0, traj.times[-1])).j1
                             if len(traj.records) > 1 else math.nan)
        out["h1"].append(max(h1_norm(base.grid, _pair_field(base.grid, s)) for s in traj.snapshots))
        out["horizon"].append(horizon)
        out["trunc"].append(truncated)
        if progress:
            progress(eps, traj)

    return SweepReport(
        epsilons=eps_ladder,
        err_linf_l2=out["linf"],
        err_l2_h1=out["l2h1"],
        penalty_sup=out["pen"],
        serrin_gl=out["serrin"],
        h1_sup=out["h1"],
        uniform_h1_bound=max(out["h1"]),
        horizons=out["horizon"],
        truncated=out["trunc"],
        reference_h1_sup=ref_h1,
    )

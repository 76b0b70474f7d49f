"""Monitored quantities: Lebesgue and Serrin norms, a dyadic BMO surrogate,
the blow-up functionals J1-J4, energy-balance residuals, identity
residuals, localized energies and the log-Sobolev ratio."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from . import grid as sg
from .errors import (
    GeometryError,
    IncompleteTrajectoryError,
    ParameterError,
    RangeError,
)
from .frank import EnergyBreakdown, _curl_of, density_terms, penalty_density

__all__ = [
    "SerrinPair",
    "DEFAULT_PAIRS",
    "DiagnosticSettings",
    "IdentityResiduals",
    "DiagnosticsRecord",
    "Trajectory",
    "BlowupIndicators",
    "TailEnergy",
    "LogSobolevResult",
    "lebesgue_norm",
    "time_integral",
    "serrin_norm",
    "bmo_seminorm",
    "blowup_indicators",
    "energy_balance_residual",
    "decomposition_residual",
    "identity_checks",
    "smooth_cutoff",
    "tail_energy",
    "log_sobolev_ratio",
    "make_record",
    "r_label",
]


@dataclass(frozen=True)
class SerrinPair:
    """Exponents with ``2/q + 3/r = 1``, ``q`` in [2, inf), ``r`` in (3, inf]."""

    q: float
    r: float

    def __post_init__(self):
        if not (2 <= self.q < math.inf):
            raise ParameterError(f"Serrin exponent q must lie in [2, inf), got {self.q}")
        if not self.r > 3:
            raise ParameterError(f"Serrin exponent r must lie in (3, inf], got {self.r}")
        if abs(2.0 / self.q + 3.0 / self.r - 1.0) > 1e-12:
            raise ParameterError(f"(q, r) = ({self.q}, {self.r}) violates 2/q + 3/r = 1")

    @classmethod
    def from_q(cls, q):
        q = float(q)
        return cls(q, math.inf if q == 2 else 3.0 * q / (q - 2.0))


DEFAULT_PAIRS = tuple(SerrinPair.from_q(q) for q in (2, 3, 4, 6, 10))


def r_label(r):
    return "inf" if math.isinf(r) else f"{r:g}"


@dataclass(frozen=True)
class DiagnosticSettings:
    pairs: tuple = DEFAULT_PAIRS
    bmo_scales: Optional[tuple] = None
    tail_radius: Optional[float] = None

    @property
    def r_values(self):
        return tuple(sorted({p.r for p in self.pairs}, key=lambda r: -r))

    def scales_for(self, grid):
        if self.bmo_scales is not None:
            return tuple(self.bmo_scales)
        return tuple(grid.n // d for d in (2, 4, 8))


@dataclass(frozen=True)
class IdentityResiduals:
    unit_length: float
    laplacian_identity: float
    decomposition: float
    divergence: float

    def as_dict(self):
        return {
            "unit_length": self.unit_length,
            "laplacian_identity": self.laplacian_identity,
            "decomposition": self.decomposition,
            "divergence": self.divergence,
        }


@dataclass
class DiagnosticsRecord:
    t: float
    energies: EnergyBreakdown
    dissipation_rate: float
    min_abs_u: float
    max_abs_u: float
    div_v_inf: float
    penalty_l2_over_eps2: float
    q_eps_l2: float
    identity_residuals: IdentityResiduals
    renorm_drift: float = 0.0
    norms: dict = field(default_factory=dict)

    def values(self):
        """Flat ``name -> float`` view used for CSV output and series lookup."""
        e = self.energies
        out = {
            "t": self.t,
            "kinetic": e.kinetic,
            "elastic": e.elastic,
            "penalty": e.penalty,
            "total": e.total,
            "dissipation": self.dissipation_rate,
            "min_abs_u": self.min_abs_u,
            "max_abs_u": self.max_abs_u,
            "div_v_inf": self.div_v_inf,
            "penalty_l2_over_eps2": self.penalty_l2_over_eps2,
            "q_eps_l2": self.q_eps_l2,
            "res_unit_length": self.identity_residuals.unit_length,
            "res_laplacian_identity": self.identity_residuals.laplacian_identity,
            "res_decomposition": self.identity_residuals.decomposition,
            "res_divergence": self.identity_residuals.divergence,
            "renorm_drift": self.renorm_drift,
        }
        out.update(self.norms)
        return out


@dataclass
class Trajectory:
    grid: sg.Grid
    constants: object
    epsilon: Optional[float]
    settings: DiagnosticSettings = DiagnosticSettings()
    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    blowup: Optional[dict] = None
    final_state: object = None

    @property
    def times(self):
        return np.array([r.t for r in self.records])

    def series(self, channel):
        if not self.records:
            raise IncompleteTrajectoryError(channel)
        out = []
        for rec in self.records:
            vals = rec.values()
            if channel not in vals:
                raise IncompleteTrajectoryError(channel)
            out.append(vals[channel])
        return np.array(out, dtype=float)

    def snapshot_times(self):
        return np.array([s.t for s in self.snapshots])


def _magnitude(grid, f):
    f = np.asarray(f, dtype=float)
    rank = grid.check(f)
    if rank == 0:
        return np.abs(f)
    flat = f.reshape((-1,) + grid.shape)
    mag = np.sqrt(np.sum(flat * flat, axis=0))
    top = float(mag.max()) if mag.size else 0.0
    if 1e-150 < top < 1e150 or top == 0.0 and not np.any(flat):
        return mag
    # squares under- or overflowed; hypot is slower but exact in range
    return np.hypot.reduce(flat, axis=0)


def lebesgue_norm(grid, f, r):
    """``(int |f|^r)^(1/r)`` with ``|f|`` the pointwise Euclidean magnitude;
    ``r = inf`` gives the grid maximum."""
    if not r >= 1:
        raise ParameterError(f"Lebesgue exponent must be >= 1, got {r}")
    return _norm_of_magnitude(grid, _magnitude(grid, f), r)


def _norm_of_magnitude(grid, mag, r):
    if math.isinf(r):
        return float(mag.max())
    peak = float(mag.max())
    if peak == 0.0:
        return 0.0
    # scale by the peak so large exponents do not overflow
    return peak * float(grid.volume * np.mean((mag / peak) ** r)) ** (1.0 / r)


def time_integral(times, values, window=None):
    """Trapezoidal integral of the piecewise-linear interpolant over ``window``."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size < 2:
        raise RangeError("need at least two samples to integrate in time")
    if window is None:
        window = (times[0], times[-1])
    a, b = float(window[0]), float(window[1])
    tol = 1e-9 * max(1.0, abs(times[-1]))
    if a < times[0] - tol or b > times[-1] + tol or b < a:
        raise RangeError(f"window [{a}, {b}] not covered by samples on [{times[0]}, {times[-1]}]")
    if b == a:
        return 0.0
    inner = (times > a) & (times < b)
    t = np.concatenate([[a], times[inner], [b]])
    y = np.concatenate([[np.interp(a, times, values)], values[inner], [np.interp(b, times, values)]])
    return float(trapezoid(y, t))


def serrin_norm(times, norms, pair, window=None):
    """``(int_window ||f(t)||_{L^r}^q dt)^(1/q)`` from sampled spatial norms.

    ``pair`` is a :class:`SerrinPair` (its ``q`` is used) or a bare ``q``.
    """
    q = pair.q if isinstance(pair, SerrinPair) else float(pair)
    norms = np.asarray(norms, dtype=float)
    return time_integral(times, norms**q, window) ** (1.0 / q)


def bmo_seminorm(grid, f, scales):
    """Largest mean oscillation over aligned cubes of ``scales`` grid cells.

    For vector or tensor fields the maximum is taken over components.
    """
    f = np.asarray(f, dtype=float)
    rank = grid.check(f)
    comps = f.reshape((-1,) + grid.shape) if rank else f[None]
    best = 0.0
    for s in scales:
        s = int(s)
        if s <= 0 or grid.n % s:
            raise ParameterError(f"block size {s} does not divide n={grid.n}")
        nb = grid.n // s
        blocked = comps.reshape((comps.shape[0],) + (nb, s) * grid.dim)
        inner = tuple(range(2, 2 + 2 * grid.dim, 2))
        means = blocked.mean(axis=inner, keepdims=True)
        osc = np.abs(blocked - means).mean(axis=inner)
        best = max(best, float(osc.max()))
    return best


@dataclass(frozen=True)
class BlowupIndicators:
    j1: float
    j2: float
    j3: float
    j4: float
    window: tuple
    pairs_used: tuple
    serrin_grad_u: dict = field(default_factory=dict)
    serrin_v: dict = field(default_factory=dict)
    omega_bmo_integral: float = 0.0
    lap_u_inf_integral: float = 0.0

    def as_dict(self):
        return {"j1": self.j1, "j2": self.j2, "j3": self.j3, "j4": self.j4,
                "window": list(self.window)}


def blowup_indicators(traj, window=None, pairs=None):
    """Discrete J1-J4 over ``window`` (default ``[T/2, T]``).

    Infima over admissible exponent pairs are minima over ``pairs``
    (default: the pairs the trajectory was sampled with).
    """
    pairs = tuple(pairs if pairs is not None else traj.settings.pairs)
    times = traj.times
    if times.size < 2:
        raise RangeError("blow-up indicators need at least two records")
    if window is None:
        T = times[-1]
        window = (T / 2.0, T) if times[0] <= T / 2.0 else (times[0], T)
    sg_u, sg_v = {}, {}
    for p in pairs:
        lab = r_label(p.r)
        sg_u[(p.q, p.r)] = serrin_norm(times, traj.series(f"grad_u_L{lab}"), p, window)
        sg_v[(p.q, p.r)] = serrin_norm(times, traj.series(f"v_L{lab}"), p, window)
    bmo = time_integral(times, traj.series("omega_bmo"), window)
    lap = time_integral(times, traj.series("lap_u_inf"), window)
    su, sv = min(sg_u.values()), min(sg_v.values())
    return BlowupIndicators(
        j1=su + sv,
        j2=bmo + lap,
        j3=sv + lap,
        j4=bmo + su,
        window=(float(window[0]), float(window[1])),
        pairs_used=pairs,
        serrin_grad_u=sg_u,
        serrin_v=sg_v,
        omega_bmo_integral=bmo,
        lap_u_inf_integral=lap,
    )


def energy_balance_residual(traj):
    """Normalized discrete energy-law defect between consecutive records:
    ``((E[n+1] - E[n]) / dt + (D[n] + D[n+1]) / 2) / (E[0] + 1)``."""
    if len(traj.records) < 2:
        raise RangeError("energy balance needs at least two records")
    t = traj.times
    E = traj.series("total")
    D = traj.series("dissipation")
    return (np.diff(E) / np.diff(t) + 0.5 * (D[1:] + D[:-1])) / (E[0] + 1.0)


def decomposition_residual(u, w):
    """Max defect of ``w = |u|^-2 (w.u) u - |u|^-2 (w x u) x u``."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    uu = np.sum(u * u, axis=0)
    normal = np.sum(w * u, axis=0) * u
    tangential = -np.cross(np.cross(w, u, axis=0), u, axis=0)
    return float(np.max(np.abs(w - (normal + tangential) / uu)))


def identity_checks(state, dudt=None, k=None):
    """Residuals of the pointwise identities that hold along solutions.

    ``dudt`` defaults to the semi-discrete tendency of ``state`` (requires
    the elastic constants ``k``).
    """
    g = state.grid
    u = state.u
    if dudt is None:
        if k is None:
            raise ParameterError("identity_checks needs either dudt or the elastic constants")
        from .frank import director_rhs_el, director_rhs_gl

        if state.epsilon is None:
            dudt = director_rhs_el(g, u, state.v, k, tol=np.inf)
        else:
            dudt = director_rhs_gl(g, u, state.v, k, state.epsilon)
    uh = sg.fft(g, u)
    P = sg.grad_tensor_hat(g, uh)
    lap = sg.ifft(g, -g.k2 * uh)
    return _identity_residuals(g, u, P, lap, dudt, state.v)


def _identity_residuals(g, u, P, lap, dudt, v, grad_v=None):
    modulus = np.sqrt(np.sum(u * u, axis=0))
    lap_id = np.sum(lap * u, axis=0) + np.sum(P * P, axis=(0, 1))
    divv = sg.div(g, v) if grad_v is None else grad_v[0, 0] + grad_v[1, 1] + grad_v[2, 2]
    return IdentityResiduals(
        unit_length=float(np.max(np.abs(modulus - 1.0))),
        laplacian_identity=float(np.max(np.abs(lap_id))),
        decomposition=decomposition_residual(u, dudt),
        divergence=float(np.max(np.abs(divv))),
    )


def _bump(s):
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def smooth_cutoff(s):
    """C-infinity step: 0 for ``s <= 0``, 1 for ``s >= 1``."""
    s = np.asarray(s, dtype=float)
    a, b = _bump(s), _bump(1.0 - s)
    return a / (a + b)


def periodic_distance(grid, center=None):
    if center is None:
        center = (grid.box_length / 2.0,) * grid.dim
    L = grid.box_length
    d2 = np.zeros(grid.shape)
    for x, c in zip(grid.coords, center):
        dx = np.abs(x - c) % L
        dx = np.minimum(dx, L - dx)
        d2 = d2 + dx * dx
    return np.sqrt(d2)


@dataclass(frozen=True)
class TailEnergy:
    tail: float
    local_l3_max: float
    local_l3_center: tuple


def tail_energy(state, k, radius, center=None, ball_radius=None):
    """Energy outside a ball and the largest local L3 mass.

    The first number integrates
    ``(|v|^2 + (1 - |u|^2)^2 / (2 eps^2) + 2 W) * phi^2`` where ``phi``
    vanishes on ``B_radius(center)`` and equals one outside
    ``B_2radius(center)``.  The second is the maximum over balls of radius
    ``ball_radius`` (default ``radius``) centred on grid points of
    ``int |grad u|^3 + |v|^3``.
    """
    g = state.grid
    if not radius > 0:
        raise GeometryError(f"radius must be positive, got {radius}")
    if 2 * radius >= g.box_length / 2:
        raise GeometryError(f"cutoff annulus 2*radius={2 * radius:g} does not fit in half the box {g.box_length / 2:g}")
    u, v = state.u, state.v
    P = sg.grad_tensor(g, u)
    W = density_terms(u, P, k, derivatives=False)["W"]
    pen = 2.0 * penalty_density(u, state.epsilon)  # (1-|u|^2)^2/(2 eps^2)
    integrand = np.sum(v * v, axis=0) + pen + 2.0 * W
    phi = smooth_cutoff(periodic_distance(g, center) / radius - 1.0)
    tail = float(sg.integrate(g, integrand * phi * phi))

    rb = radius if ball_radius is None else ball_radius
    dens = np.sum(P * P, axis=(0, 1)) ** 1.5 + np.sum(v * v, axis=0) ** 1.5
    ball = (periodic_distance(g, (0.0,) * g.dim) <= rb).astype(float)
    local = sg.ifft(g, sg.fft(g, dens) * np.conj(sg.fft(g, ball))) * g.cell_volume
    idx = np.unravel_index(int(np.argmax(local)), g.shape)
    center_pt = tuple(float(c[idx]) for c in g.coords)
    return TailEnergy(tail, float(local[idx]), center_pt)


@dataclass(frozen=True)
class LogSobolevResult:
    lhs: float
    bmo_integral: float
    grad_integral: float
    lq_integral: float
    rhs: float

    @property
    def ratio(self):
        return self.lhs / self.rhs


def log_sobolev_ratio(grid, times, fields, p, q_int, window=None, scales=None):
    """Ratio of ``int ||f||_inf`` to
    ``int [f]_BMO * ln(1 + int ||grad f||_p) + int ||f||_q + 1`` (no constant)."""
    if not (3 < p < math.inf):
        raise ParameterError(f"p must lie in (3, inf), got {p}")
    if not q_int >= 1:
        raise ParameterError(f"q must be >= 1, got {q_int}")
    scales = scales if scales is not None else tuple(grid.n // d for d in (2, 4, 8))
    sup, bmo, gradp, lq = [], [], [], []
    for f in fields:
        rank = grid.check(f, ranks=(0, 1))
        sup.append(lebesgue_norm(grid, f, math.inf))
        bmo.append(bmo_seminorm(grid, f, scales))
        gf = sg.grad(grid, f) if rank == 0 else sg.grad_tensor(grid, f)
        gradp.append(lebesgue_norm(grid, gf, p))
        lq.append(lebesgue_norm(grid, f, q_int))
    lhs = time_integral(times, sup, window)
    ib = time_integral(times, bmo, window)
    ig = time_integral(times, gradp, window)
    iq = time_integral(times, lq, window)
    return LogSobolevResult(lhs, ib, ig, iq, ib * math.log1p(ig) + iq + 1.0)


def make_record(state, tend, k, settings, renorm_drift=0.0):
    """Assemble a :class:`DiagnosticsRecord` from a state and its tendencies."""
    g = state.grid
    u, v = state.u, state.v
    eps = state.epsilon
    kinetic = 0.5 * sg.integrate(g, np.sum(v * v, axis=0))
    elastic = sg.integrate(g, tend.density)
    modsq = np.sum(u * u, axis=0)
    penalty = sg.integrate(g, (1.0 - modsq) ** 2) / (4.0 * eps**2) if eps else 0.0
    energies = EnergyBreakdown(float(kinetic), float(elastic), float(penalty))
    dissipation = tend.grad_v_sq + float(sg.integrate(g, np.sum(tend.drive**2, axis=0)))
    modulus = np.sqrt(modsq)
    res = _identity_residuals(g, u, tend.grad_u, tend.lap_u, tend.u_rhs, v, tend.grad_v)
    pen_l2 = sg.l2_norm(g, 1.0 - modsq) / eps**2 if eps else 0.0

    norms = {}
    gmag, vmag = _magnitude(g, tend.grad_u), _magnitude(g, v)
    for r in settings.r_values:
        lab = r_label(r)
        norms[f"grad_u_L{lab}"] = _norm_of_magnitude(g, gmag, r)
        norms[f"v_L{lab}"] = _norm_of_magnitude(g, vmag, r)
    norms["lap_u_inf"] = lebesgue_norm(g, tend.lap_u, math.inf)
    omega = _curl_of(tend.grad_v)
    norms["omega_bmo"] = bmo_seminorm(g, omega, settings.scales_for(g))
    if settings.tail_radius:
        norms["tail_energy"] = tail_energy(state, k, settings.tail_radius).tail

    return DiagnosticsRecord(
        t=float(state.t),
        energies=energies,
        dissipation_rate=float(dissipation),
        min_abs_u=float(modulus.min()),
        max_abs_u=float(modulus.max()),
        div_v_inf=res.divergence,
        penalty_l2_over_eps2=float(pen_l2),
        q_eps_l2=float(sg.l2_norm(g, tend.u_rhs)),
        identity_residuals=res,
        renorm_drift=float(renorm_drift),
        norms=norms,
    )

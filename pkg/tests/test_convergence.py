import math

import numpy as np
import pytest
from scipy.integrate import quad

from lcflow.config import RunConfig
from lcflow.convergence import epsilon_sweep, error_norms, h1_norm
from lcflow.diagnostics import Trajectory
from lcflow.dynamics import SchemeConfig
from lcflow.errors import AlignmentError, ParameterError
from lcflow.frank import FrankConstants
from lcflow.grid import Grid
from lcflow.initial import InitialConditionSpec
from lcflow.state import State

from conftest import solenoidal, unit_field

K = FrankConstants(1.5, 1.0, 2.0, 0.7)


def _traj(g, snaps, eps=None):
    return Trajectory(grid=g, constants=K, epsilon=eps, snapshots=list(snaps))


def _series(g, times, u, vfun):
    return [State(g, float(t), u, vfun(t)) for t in times]


def test_identical_trajectories(rng):
    g = Grid(dim=2, n=16)
    u, v = unit_field(g, rng, modes=1), solenoidal(g, rng)
    snaps = _series(g, np.linspace(0, 1, 5), u, lambda t: (1 + t) * v)
    assert error_norms(_traj(g, snaps, 0.1), _traj(g, snaps)) == (0.0, 0.0)


def test_constant_velocity_offset(rng):
    g = Grid(dim=3, n=8)
    u, v = unit_field(g, rng, modes=1), solenoidal(g, rng)
    c = np.array([0.3, -1.2, 0.4])
    times = np.linspace(0, 0.5, 6)
    a = _series(g, times, u, lambda t: v + c[:, None, None, None])
    b = _series(g, times, u, lambda t: v)
    linf, l2h1 = error_norms(_traj(g, a, 0.1), _traj(g, b))
    assert linf == pytest.approx(np.linalg.norm(c) * math.sqrt(g.volume), rel=1e-13)
    assert l2h1 == pytest.approx(np.linalg.norm(c) * math.sqrt(g.volume * 0.5), rel=1e-13)


def test_separable_difference_matches_quadrature(rng):
    g = Grid(dim=2, n=16)
    u = unit_field(g, rng, modes=1)
    shape = np.stack([np.sin(g.coords[1]), np.zeros(g.shape), np.zeros(g.shape)])

    def amp(t):
        return math.exp(-t) * math.cos(3 * t)

    times = np.linspace(0, 1, 2001)
    a = _series(g, times, u, lambda t: amp(t) * shape)
    b = _series(g, times, u, lambda t: 0 * shape)
    linf, l2h1 = error_norms(_traj(g, a, 0.1), _traj(g, b))
    # ||sin x2||^2 = vol/2, plus the same again from its gradient
    assert linf == pytest.approx(math.sqrt(g.volume / 2), rel=1e-12)
    ora = math.sqrt(g.volume * quad(lambda t: amp(t) ** 2, 0, 1)[0])
    assert l2h1 == pytest.approx(ora, rel=1e-6)


def test_h1_norm_of_mode():
    g = Grid(dim=2, n=16)
    f = np.sin(2 * g.coords[0])
    assert h1_norm(g, f) == pytest.approx(math.sqrt(5 * g.volume / 2), rel=1e-13)


def test_misaligned_snapshots(rng):
    g = Grid(dim=2, n=8)
    u, v = unit_field(g, rng, modes=1), solenoidal(g, rng)
    a = _series(g, [0.0, 0.1, 0.2], u, lambda t: v)
    b = _series(g, [0.0, 0.1, 0.25], u, lambda t: v)
    with pytest.raises(AlignmentError) as info:
        error_norms(_traj(g, a, 0.1), _traj(g, b))
    assert 0.2 in info.value.times and 0.25 in info.value.times
    with pytest.raises(AlignmentError):
        error_norms(_traj(g, a, 0.1), _traj(g, a[:2]))


def _config(**kw):
    base = dict(grid=Grid(dim=2, n=16), constants=K, scheme=SchemeConfig(dt=1e-3), t_end=0.004,
                ic=InitialConditionSpec("constant_b"), sample_every=2)
    base.update(kw)
    return RunConfig(**base)


def test_sweep_on_equilibrium_is_exact():
    rep = epsilon_sweep(_config(), [10.0])
    assert rep.err_linf_l2 == [0.0] and rep.err_l2_h1 == [0.0]
    assert rep.penalty_sup == [0.0]
    assert rep.truncated == [False]
    row = next(rep.rows())
    assert row["epsilon"] == 10.0 and row["horizon"] == pytest.approx(0.004)


def test_sweep_ladder_validation():
    with pytest.raises(ParameterError):
        epsilon_sweep(_config(), [0.1, 0.2])
    with pytest.raises(ParameterError):
        epsilon_sweep(_config(), [0.2, 0.2])
    with pytest.raises(ParameterError):
        epsilon_sweep(_config(), [])
    # dt = 1e-3 needs eps >= 0.1 under the penalty step cap
    with pytest.raises(ParameterError):
        epsilon_sweep(_config(), [0.2, 0.05])


def test_sweep_runs_share_initial_data():
    cfg = _config(ic=InitialConditionSpec("perturbed_b", amplitude=0.3), t_end=0.002, sample_every=1)
    seen = {}
    rep = epsilon_sweep(cfg, [0.5, 0.2], progress=lambda key, traj: seen.setdefault(key, traj))
    ref = seen["EL"]
    for eps in (0.5, 0.2):
        first = _traj(cfg.grid, seen[eps].snapshots[:1], eps)
        assert error_norms(first, _traj(cfg.grid, ref.snapshots[:1])) == (0.0, 0.0)
    assert all(np.isfinite(rep.err_linf_l2)) and all(np.isfinite(rep.serrin_gl))
    assert rep.penalty_sup[0] > 0
    assert rep.uniform_h1_bound == max(rep.h1_sup)

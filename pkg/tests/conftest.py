import math

import numpy as np
import pytest

from lcflow import grid as sg
from lcflow.frank import FrankConstants
from lcflow.grid import Grid

ACCEPTANCE_LINES = []


def smooth_scalar(g, rng, modes=2, amp=1.0):
    """Random trigonometric polynomial with ``|m_i| <= modes``, max-normalized to ``amp``
    (left unnormalized when ``amp`` is None)."""
    out = np.zeros(g.shape)
    kap = 2.0 * math.pi / g.box_length
    for m in np.ndindex(*(2 * modes + 1,) * g.dim):
        m = np.array(m) - modes
        if not m.any():
            continue
        ph = kap * sum(mi * x for mi, x in zip(m, g.coords))
        out += rng.standard_normal() * np.cos(ph) + rng.standard_normal() * np.sin(ph)
    return out if amp is None else amp * out / np.abs(out).max()


def smooth_vector(g, rng, modes=2, amp=1.0):
    return np.stack([smooth_scalar(g, rng, modes, amp) for _ in range(3)])


def unit_field(g, rng, modes=2, theta_amp=0.5, phi_amp=1.0):
    """Smooth unit director built from band-limited polar angles."""
    th = smooth_scalar(g, rng, modes, theta_amp) + 0.3
    ph = smooth_scalar(g, rng, modes, phi_amp)
    return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])


def solenoidal(g, rng, modes=2, amp=1.0):
    return sg.leray_project(g, smooth_vector(g, rng, modes, amp))


def random_constants(rng):
    k = rng.uniform(0.5, 3.0, size=4)
    return FrankConstants(*map(float, k))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def g2():
    return Grid(dim=2, n=64)


@pytest.fixture
def g3():
    return Grid(dim=3, n=16)


@pytest.fixture
def generic_k():
    return FrankConstants(1.5, 1.0, 2.0, 0.7)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

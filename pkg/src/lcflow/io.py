"""Binary snapshots and CSV tables.

Snapshot layout (little-endian)::

    magic     4 bytes  b"ELGL"
    version   u32
    dim       u32
    n         u32
    box       f64
    mode      u8       0 = GL, 1 = EL
    epsilon   f64      0 for EL
    t         f64
    payload   f64[7 * n**dim]  u1 u2 u3 v1 v2 v3 p, each with x1 fastest

CSV files use ``%.17g`` numbers, ``.`` as decimal separator and ``\\n`` line ends.
"""

from __future__ import annotations

import math
import struct
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .errors import SnapshotFormatError
from .grid import Grid
from .state import State

__all__ = [
    "MAGIC",
    "VERSION",
    "write_snapshot",
    "read_snapshot",
    "DIAGNOSTIC_COLUMNS",
    "diagnostic_columns",
    "write_diagnostics",
    "write_sweep",
    "format_row",
]

MAGIC = b"ELGL"
VERSION = 1
_HEADER = struct.Struct("<4sIIIdBdd")
_FIELDS = ("u1", "u2", "u3", "v1", "v2", "v3", "p")

DIAGNOSTIC_COLUMNS = (
    "t",
    "kinetic",
    "elastic",
    "penalty",
    "total",
    "dissipation",
    "min_abs_u",
    "max_abs_u",
    "div_v_inf",
    "penalty_l2_over_eps2",
    "q_eps_l2",
    "res_unit_length",
    "res_laplacian_identity",
    "res_decomposition",
    "res_divergence",
    "renorm_drift",
)


@contextmanager
def _io_errors(path, action):
    try:
        yield
    except OSError as exc:
        raise OSError(exc.errno, f"cannot {action} {path}: {exc.strerror or exc}") from exc


def write_snapshot(state, path):
    g = state.grid
    eps = 0.0 if state.epsilon is None else float(state.epsilon)
    header = _HEADER.pack(MAGIC, VERSION, g.dim, g.n, g.box_length, 1 if state.epsilon is None else 0, eps, state.t)
    data = np.concatenate([state.u, state.v, state.pressure_or_zero()[None]])
    # x1 fastest: Fortran order over the spatial axes of each component
    payload = np.stack([c.ravel(order="F") for c in data]).astype("<f8").tobytes()
    with _io_errors(path, "write snapshot"), open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_snapshot(path, grid=None):
    """Read a snapshot; if ``grid`` is given the stored grid must match it."""
    path = Path(path)
    with _io_errors(path, "read snapshot"), open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise SnapshotFormatError(f"{path}: truncated header ({len(raw)} bytes)", "header")
    magic, version, dim, n, box, mode, eps, t = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {magic!r}", "magic")
    if version != VERSION:
        raise SnapshotFormatError(f"{path}: unsupported format version {version}", "version")
    if mode not in (0, 1):
        raise SnapshotFormatError(f"{path}: unknown mode byte {mode}", "mode")
    try:
        stored = Grid(dim=dim, n=n, box_length=box)
    except ValueError as exc:
        raise SnapshotFormatError(f"{path}: invalid grid header: {exc}", "grid") from exc
    if grid is not None and (grid.dim, grid.n, grid.box_length) != (dim, n, box):
        raise SnapshotFormatError(
            f"{path}: snapshot grid dim={dim}, n={n}, L={box:g} does not match expected "
            f"dim={grid.dim}, n={grid.n}, L={grid.box_length:g}",
            "shape",
        )
    g = grid if grid is not None else stored
    npts = math.prod(g.shape)
    expected = _HEADER.size + 8 * len(_FIELDS) * npts
    if len(raw) != expected:
        raise SnapshotFormatError(f"{path}: payload has {len(raw) - _HEADER.size} bytes, expected "
                                  f"{expected - _HEADER.size}", "payload")
    flat = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(len(_FIELDS), npts)
    comps = np.stack([c.reshape(g.shape, order="F") for c in flat]).astype(float)
    return State(grid=g, t=t, u=comps[:3], v=comps[3:6], p=comps[6],
                 epsilon=None if mode == 1 else eps)


def format_row(values):
    return ",".join("%.17g" % v for v in values) + "\n"


def diagnostic_columns(traj):
    """Fixed columns followed by the sampled norms in a settings-defined order."""
    from .diagnostics import r_label

    extra = []
    for r in traj.settings.r_values:
        extra.append(f"grad_u_L{r_label(r)}")
    for r in traj.settings.r_values:
        extra.append(f"v_L{r_label(r)}")
    extra += ["lap_u_inf", "omega_bmo"]
    if traj.settings.tail_radius:
        extra.append("tail_energy")
    return DIAGNOSTIC_COLUMNS + tuple(extra)


def write_diagnostics(traj, path):
    cols = diagnostic_columns(traj)
    lines = [",".join(cols) + "\n"]
    for rec in traj.records:
        vals = rec.values()
        lines.append(format_row(vals[c] for c in cols))
    with _io_errors(path, "write diagnostics"), open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(lines)


SWEEP_COLUMNS = ("epsilon", "err_linf_l2", "err_l2_h1", "penalty_sup", "serrin_gl", "h1_sup", "horizon", "truncated")


def write_sweep(report, path):
    lines = [",".join(SWEEP_COLUMNS) + "\n"]
    for row in report.rows():
        lines.append(format_row(row[c] for c in SWEEP_COLUMNS))
    with _io_errors(path, "write sweep table"), open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(lines)

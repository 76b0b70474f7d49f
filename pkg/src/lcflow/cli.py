"""Command-line entry points.

Exit codes: 0 success, 1 a ``check`` found a failing invariant,
2 invalid configuration or arguments, 3 blow-up suspected (the partial
trajectory is still written), 4 I/O or snapshot-format error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import grid as sg
from .config import load_config, serialize_config
from .convergence import epsilon_sweep
from .diagnostics import (
    DiagnosticSettings,
    SerrinPair,
    blowup_indicators,
    bmo_seminorm,
    energy_balance_residual,
    identity_checks,
    lebesgue_norm,
    r_label,
)
from .dynamics import run
from .errors import LCFlowError, SnapshotFormatError, StepError
from .frank import _curl_of, total_energy
from .initial import initial_condition
from .io import read_snapshot, write_diagnostics, write_snapshot, write_sweep

log = logging.getLogger("lcflow")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_BLOWUP, EXIT_IO = 0, 1, 2, 3, 4


def _output_dir(cfg, override):
    out = Path(override or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_run(traj, out, cfg):
    write_diagnostics(traj, out / "diagnostics.csv")
    for i, snap in enumerate(traj.snapshots):
        write_snapshot(snap, out / f"snapshot_{i:05d}.elgl")
    (out / "config.yaml").write_text(serialize_config(cfg), encoding="utf-8")
    summary = {"mode": cfg.mode, "records": len(traj.records), "blowup": traj.blowup}
    if len(traj.records) > 1:
        res = energy_balance_residual(traj)
        summary["max_energy_residual"] = float(np.max(np.abs(res)))
        summary["indicators"] = blowup_indicators(traj).as_dict()
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=str) + "\n",
                                      encoding="utf-8")
    return summary


def cmd_run(args):
    cfg = load_config(args.config)
    if args.workers:
        cfg = cfg.replace(workers=args.workers)
    out = _output_dir(cfg, args.output_dir)
    try:
        traj = run(cfg)
    except StepError as err:
        if err.trajectory is not None:
            _write_run(err.trajectory, out, cfg)
        print(f"blow-up suspected: {err}", file=sys.stderr)
        return EXIT_BLOWUP
    summary = _write_run(traj, out, cfg)
    print(json.dumps(summary, sort_keys=True, default=str))
    return EXIT_OK


def _parse_floats(text):
    return [float(x) for x in text.replace(",", " ").split()]


def cmd_sweep(args):
    cfg = load_config(args.config)
    out = _output_dir(cfg, args.output_dir)
    report = epsilon_sweep(cfg, _parse_floats(args.eps))
    write_sweep(report, out / "sweep.csv")
    for row in report.rows():
        print(" ".join(f"{k}={v:.6g}" for k, v in row.items()))
    return EXIT_BLOWUP if any(report.truncated) else EXIT_OK


def _check_suite(cfg):
    """Invariants evaluated on the configured initial state; no stepping."""
    g, k = cfg.grid, cfg.constants
    state = initial_condition(cfg.ic, g, cfg.epsilon, seed=cfg.seed)
    res = identity_checks(state, k=k)
    vh = sg.fft(g, state.v)
    once = sg.dealias(g, state.u)
    checks = {
        "unit_length": (res.unit_length, 1e-12),
        "laplacian_identity": (res.laplacian_identity, 1e-8),
        "decomposition": (res.decomposition, 1e-13),
        "divergence": (res.divergence, 1e-12),
        "leray_idempotence": (float(np.max(np.abs(sg.leray_hat(g, sg.leray_hat(g, vh)) - sg.leray_hat(g, vh)))), 1e-12),
        "curl_grad": (float(np.max(np.abs(sg.curl(g, sg.grad(g, state.u[0]))))), 1e-10),
        "parseval": (abs(sg.l2_norm(g, state.u) - sg.l2_norm_spectral(g, state.u)) / max(sg.l2_norm(g, state.u), 1.0), 1e-12),
        "dealias_idempotence": (float(np.max(np.abs(sg.dealias(g, once) - once))), 0.0),
    }
    return {name: (val, tol, val <= tol) for name, (val, tol) in checks.items()}


def cmd_check(args):
    cfg = load_config(args.config)
    results = _check_suite(cfg)
    ok = True
    for name, (val, tol, passed) in results.items():
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {name}: {val:.3e} (tol {tol:g})")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _parse_pairs(text):
    pairs = []
    for item in text.split(";"):
        q, r = (float(x) for x in item.split(","))
        pairs.append(SerrinPair(q, r))
    return tuple(pairs)


def cmd_norms(args):
    state = read_snapshot(args.snapshot)
    g = state.grid
    settings = DiagnosticSettings(pairs=_parse_pairs(args.pairs)) if args.pairs else DiagnosticSettings()
    P = sg.grad_tensor(g, state.u)
    Gv = sg.grad_tensor(g, state.v)
    out = {"t": state.t, "mode": state.mode, "n": g.n, "dim": g.dim}
    for r in settings.r_values:
        out[f"grad_u_L{r_label(r)}"] = lebesgue_norm(g, P, r)
        out[f"v_L{r_label(r)}"] = lebesgue_norm(g, state.v, r)
    out["lap_u_inf"] = lebesgue_norm(g, sg.laplacian(g, state.u), math.inf)
    out["omega_bmo"] = bmo_seminorm(g, _curl_of(Gv), settings.scales_for(g))
    out["div_v_inf"] = float(np.max(np.abs(sg.div(g, state.v))))
    if args.config:
        e = total_energy(state, load_config(args.config).constants)
        out.update(kinetic=e.kinetic, elastic=e.elastic, penalty=e.penalty, total=e.total)
    print(json.dumps(out, indent=2))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="lcflow", description="Nematic liquid-crystal flow solver")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate one trajectory")
    r.add_argument("config")
    r.add_argument("-o", "--output-dir")
    r.add_argument("--workers", type=int)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="penalized runs over an epsilon ladder against the constrained reference")
    s.add_argument("config")
    s.add_argument("--eps", required=True, help="comma separated, strictly decreasing")
    s.add_argument("-o", "--output-dir")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("check", help="invariant suite on the initial state")
    c.add_argument("config")
    c.set_defaults(func=cmd_check)

    n = sub.add_parser("norms", help="diagnostics of a stored snapshot")
    n.add_argument("snapshot")
    n.add_argument("--pairs", help='Serrin pairs as "q,r;q,r" (r may be inf)')
    n.add_argument("--config", help="config providing the elastic constants for energies")
    n.set_defaults(func=cmd_norms)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SnapshotFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except StepError as exc:
        print(f"blow-up suspected: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except (LCFlowError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

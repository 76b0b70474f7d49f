"""Run configuration: YAML schema, validation and conversion to solver objects.

A minimal document::

    grid: {dim: 2, n: 64}
    constants: {k1: 1.5, k2: 1.0, k3: 2.0, k4: 0.7}
    mode: GL
    epsilon: 0.1
    scheme: {dt: 1.0e-4}
    t_end: 0.5
    ic: {kind: perturbed_b, amplitude: 0.5, mode_count: 2}

Omitted keys take the defaults of the models below.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import List, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .diagnostics import DEFAULT_PAIRS, DiagnosticSettings, SerrinPair
from .dynamics import SchemeConfig
from .errors import ConfigValidationError, LCFlowError
from .frank import FrankConstants
from .grid import Grid
from .initial import InitialConditionSpec

__all__ = ["RunConfig", "parse_config", "serialize_config", "load_config", "config_to_document"]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridModel(_Model):
    dim: Literal[2, 3]
    n: int
    box_length: float = 2.0 * math.pi
    dealias_fraction: float = 2.0 / 3.0


class ConstantsModel(_Model):
    k1: float = Field(gt=0)
    k2: float = Field(gt=0)
    k3: float = Field(gt=0)
    k4: float = Field(gt=0)


class SchemeModel(_Model):
    dt: float = Field(gt=0)
    dt_safety: float = Field(default=0.5, gt=0, le=1)
    penalty_cap_beta: float = Field(default=0.1, gt=0)
    scheme: Literal["imex_euler"] = "imex_euler"


class ICModel(_Model):
    kind: Literal["constant_b", "perturbed_b", "planar_twist", "taylor_green_velocity", "composite"] = "constant_b"
    b: Tuple[float, float, float] = (0.0, 0.0, 1.0)
    amplitude: float = Field(default=0.1, ge=0)
    mode_count: int = Field(default=2, ge=1)
    m: int = 1
    parts: List["ICModel"] = Field(default_factory=list)


class DiagnosticsModel(_Model):
    serrin_pairs: List[Tuple[float, float]] = Field(default_factory=lambda: [(p.q, p.r) for p in DEFAULT_PAIRS])
    bmo_scales: Optional[List[int]] = None
    tail_radius: Optional[float] = Field(default=None, gt=0)


class RunConfigModel(_Model):
    grid: GridModel
    constants: ConstantsModel
    mode: Literal["GL", "EL"]
    epsilon: Optional[float] = Field(default=None, gt=0)
    scheme: SchemeModel
    t_end: float = Field(ge=0)
    sample_every: int = Field(default=1, ge=1)
    snapshot_every: int = Field(default=0, ge=0)
    ic: ICModel = Field(default_factory=ICModel)
    output_dir: str = "output"
    diagnostics: DiagnosticsModel = Field(default_factory=DiagnosticsModel)
    seed: int = 0
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _mode_epsilon(self):
        if self.mode == "GL" and self.epsilon is None:
            raise ValueError("GL mode requires epsilon")
        if self.mode == "EL" and self.epsilon is not None:
            raise ValueError("EL mode takes no epsilon")
        return self


@dataclass(frozen=True)
class RunConfig:
    grid: Grid
    constants: FrankConstants
    scheme: SchemeConfig
    t_end: float
    epsilon: Optional[float] = None
    ic: InitialConditionSpec = InitialConditionSpec()
    sample_every: int = 1
    snapshot_every: int = 0
    output_dir: str = "output"
    diagnostics: DiagnosticSettings = DiagnosticSettings()
    seed: int = 0
    workers: int = 1

    @property
    def mode(self):
        return "EL" if self.epsilon is None else "GL"

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def _location(loc):
    return ".".join(str(p) for p in loc)


def _convert(loc, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except LCFlowError as exc:
        raise ConfigValidationError(f"{_location(loc)}: {exc}", loc) from exc


def _ic(model, loc):
    parts = tuple(_ic(p, loc + ("parts", i)) for i, p in enumerate(model.parts))
    return _convert(loc, InitialConditionSpec, kind=model.kind, b=tuple(model.b), amplitude=model.amplitude,
                    mode_count=model.mode_count, m=model.m, parts=parts)


def _from_model(m):
    grid = _convert(("grid",), Grid, dim=m.grid.dim, n=m.grid.n, box_length=m.grid.box_length,
                    dealias_fraction=m.grid.dealias_fraction)
    constants = FrankConstants(m.constants.k1, m.constants.k2, m.constants.k3, m.constants.k4)
    scheme = _convert(("scheme",), SchemeConfig, **m.scheme.model_dump())
    eps = m.epsilon if m.mode == "GL" else None
    if eps is not None:
        _convert(("scheme", "dt"), scheme.check_penalty_cap, eps)
    pairs = tuple(_convert(("diagnostics", "serrin_pairs", i), SerrinPair, float(q), float(r))
                  for i, (q, r) in enumerate(m.diagnostics.serrin_pairs))
    if not pairs:
        raise ConfigValidationError("diagnostics.serrin_pairs: at least one pair required", ("diagnostics", "serrin_pairs"))
    scales = m.diagnostics.bmo_scales
    if scales is not None:
        bad = [s for s in scales if s <= 0 or grid.n % s]
        if bad or not scales:
            raise ConfigValidationError(f"diagnostics.bmo_scales: {bad or scales} must divide n={grid.n}",
                                        ("diagnostics", "bmo_scales"))
    diag = DiagnosticSettings(pairs=pairs, bmo_scales=None if scales is None else tuple(scales),
                              tail_radius=m.diagnostics.tail_radius)
    return RunConfig(grid=grid, constants=constants, scheme=scheme, t_end=m.t_end, epsilon=eps,
                     ic=_ic(m.ic, ("ic",)), sample_every=m.sample_every, snapshot_every=m.snapshot_every,
                     output_dir=m.output_dir, diagnostics=diag, seed=m.seed, workers=m.workers)


def parse_config(text):
    """Validate a YAML document and return a :class:`RunConfig`.

    Raises :class:`ConfigValidationError` whose ``location`` names the
    offending key.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigValidationError(f"not a valid YAML document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigValidationError("configuration must be a mapping of keys to values")
    try:
        model = RunConfigModel.model_validate(doc)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = tuple(err["loc"])
        what = "unknown key" if err["type"] == "extra_forbidden" else err["msg"]
        raise ConfigValidationError(f"{_location(loc) or '<root>'}: {what}", loc) from exc
    return _from_model(model)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _ic_document(spec):
    return {
        "kind": spec.kind,
        "b": list(spec.b),
        "amplitude": spec.amplitude,
        "mode_count": spec.mode_count,
        "m": spec.m,
        "parts": [_ic_document(p) for p in spec.parts],
    }


def config_to_document(cfg):
    g, k, s, d = cfg.grid, cfg.constants, cfg.scheme, cfg.diagnostics
    doc = {
        "grid": {"dim": g.dim, "n": g.n, "box_length": g.box_length, "dealias_fraction": g.dealias_fraction},
        "constants": {"k1": k.k1, "k2": k.k2, "k3": k.k3, "k4": k.k4},
        "mode": cfg.mode,
        "scheme": {"dt": s.dt, "dt_safety": s.dt_safety, "penalty_cap_beta": s.penalty_cap_beta, "scheme": s.scheme},
        "t_end": cfg.t_end,
        "sample_every": cfg.sample_every,
        "snapshot_every": cfg.snapshot_every,
        "ic": _ic_document(cfg.ic),
        "output_dir": cfg.output_dir,
        "diagnostics": {
            "serrin_pairs": [[p.q, p.r] for p in d.pairs],
            "bmo_scales": None if d.bmo_scales is None else list(d.bmo_scales),
            "tail_radius": d.tail_radius,
        },
        "seed": cfg.seed,
        "workers": cfg.workers,
    }
    if cfg.epsilon is not None:
        doc["epsilon"] = cfg.epsilon
    return doc


def serialize_config(cfg):
    return yaml.safe_dump(config_to_document(cfg), sort_keys=False)

"""Command-line entry point: ``comtomo <command> [options]``.

Every command reads its options from the command line, from a JSON config
file (``--config``), or both; explicit flags win. The merged options are
validated (unknown keys are rejected), all defaults are filled in, and the
resulting effective config is written next to the outputs as
``<out stem>.config.json``.

Exit codes: 0 success, 1 a check failed, 2 invalid config or input, 3 a grid
does not cover the function it samples (CoverageError) or a truncation is too
small (TruncationError).

The human summary goes to stderr. Stdout stays empty unless ``--stdout`` is
given, in which case the JSON report is printed there.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

SCHEMA_VERSION = 1
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")
# frames x X points (or grid points) above which a request is refused
MAX_VALUES = 20_000_000


class ConfigError(Exception):
    """Invalid configuration or input file (exit code 2)."""


# ----------------------------------------------------------------------------
# config schema


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


def _split_opts(text: str) -> dict:
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        if "=" not in part:
            raise ValueError(f"expected key=value, got {part!r}")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


class GridSpec(_Strict):
    """Uniform axis ``min..max`` with ``n`` points; also written as ``"min,max,n"``."""

    min: float
    max: float
    n: int = Field(ge=2)

    @field_validator("max")
    @classmethod
    def _ordered(cls, v, info):
        if "min" in info.data and not info.data["min"] < v:
            raise ValueError("grid needs min < max")
        return v

    @classmethod
    def parse(cls, v):
        if isinstance(v, str):
            parts = [p.strip() for p in v.split(",")]
            if len(parts) != 3:
                raise ValueError(f"grid {v!r} is not of the form min,max,n")
            return {"min": float(parts[0]), "max": float(parts[1]), "n": int(parts[2])}
        if isinstance(v, (list, tuple)):
            return dict(zip(("min", "max", "n"), v))
        return v

    def axis(self):
        from .core import AxisGrid

        return AxisGrid(self.min, self.max, self.n)


class FrameSpec(_Strict):
    """Frame block.

    String forms: ``cartesian:half=2,n=33[,momentum=false]`` (``msize`` is an
    alias of ``n``), ``random:count=20,scale=1``, ``sphere:angles=12`` (angle
    counts separated by ``x`` for several modes, e.g. ``6x6x12``) and
    ``explicit:frames.json`` (a list of ``[mu..., nu...]`` vectors).
    """

    kind: Literal["cartesian", "random", "sphere", "explicit"] = "cartesian"
    half: float = Field(2.0, gt=0)
    n: int = Field(33, ge=2)
    momentum: bool = True
    count: int = Field(20, ge=1)
    scale: float = Field(1.0, gt=0)
    angles: list[int] = [12]
    radius: float = Field(1.0, gt=0)
    vectors: Optional[list[list[float]]] = None

    @classmethod
    def parse(cls, v):
        if not isinstance(v, str):
            return v
        kind, _, rest = v.partition(":")
        kind = kind.strip()
        if kind == "explicit":
            data = load_json_file(rest.strip(), "frame file")
            return {"kind": "explicit", "vectors": data.get("vectors") if isinstance(data, dict) else data}
        opts = _split_opts(rest)
        if "msize" in opts:
            opts["n"] = opts.pop("msize")
        if "momentum" in opts:
            opts["momentum"] = opts["momentum"].lower() in ("1", "true", "yes")
        if "angles" in opts:
            opts["angles"] = [int(a) for a in opts["angles"].split("x")]
        return {"kind": kind, **opts}


class _Base(_Strict):
    schema_version: Literal[1] = SCHEMA_VERSION
    command: str
    out: Optional[str] = None
    tol: Optional[float] = Field(None, gt=0)
    seed: int = 0
    threads: Optional[int] = Field(None, ge=1)
    stdout: bool = False

    @field_validator("*", mode="before")
    @classmethod
    def _parse_blocks(cls, v, info):
        ann = cls.model_fields[info.field_name].annotation
        if _mentions(ann, GridSpec):
            return GridSpec.parse(v)
        if _mentions(ann, FrameSpec):
            return FrameSpec.parse(v)
        return v


def _mentions(ann, typ) -> bool:
    return ann is typ or typ in getattr(ann, "__args__", ())


StateField = Union[str, dict]


class GenConfig(_Base):
    command: Literal["gen"] = "gen"
    tol: Optional[float] = Field(1e-6, gt=0)
    state: StateField
    frames: FrameSpec = FrameSpec()
    xgrid: GridSpec = GridSpec(min=-12.0, max=12.0, n=481)


class TransformConfig(_Base):
    command: Literal["transform"] = "transform"
    tol: Optional[float] = Field(1e-4, gt=0)
    source: Literal["density", "wigner", "symplectic", "com"] = Field(alias="from")
    target: Literal["density", "wigner", "symplectic", "com"] = Field(alias="to")
    state: Optional[StateField] = None
    input: Optional[str] = None
    qgrid: GridSpec = GridSpec(min=-6.0, max=6.0, n=49)
    pgrid: Optional[GridSpec] = None
    frames: FrameSpec = FrameSpec(kind="cartesian", half=8.0, n=65)
    xgrid: GridSpec = GridSpec(min=-56.0, max=56.0, n=1121)
    symplectic_frames: FrameSpec = FrameSpec(kind="sphere", angles=[4])
    ygrid: GridSpec = GridSpec(min=-8.0, max=8.0, n=129)
    kgrid: GridSpec = GridSpec(min=-12.0, max=12.0, n=97)
    allow_composed: bool = False
    roundtrip: bool = False


class EvolveConfig(_Base):
    command: Literal["evolve"] = "evolve"
    tol: Optional[float] = Field(1e-3, gt=0)
    state: StateField
    potential: Union[str, dict] = "harmonic"
    masses: Optional[list[float]] = None
    t: float = 0.7
    h: float = Field(1e-3, gt=0)
    qgrid: GridSpec = GridSpec(min=-8.0, max=8.0, n=129)
    frames: FrameSpec = FrameSpec(kind="cartesian", half=3.0, n=121)
    k_max: float = Field(1.0, gt=0)
    k_count: int = Field(4, ge=1)


class AverageConfig(_Base):
    command: Literal["average"] = "average"
    tol: Optional[float] = Field(1e-4, gt=0)
    state: Optional[StateField] = None
    input: Optional[str] = None
    observables: list[str] = ["q", "p", "q2", "p2", "qp", "energy:harmonic"]
    mode: int = Field(0, ge=0)
    frames: FrameSpec = FrameSpec(kind="cartesian", half=0.3, n=25)
    qgrid: Optional[GridSpec] = None


class TransitionConfig(_Base):
    command: Literal["transition"] = "transition"
    tol: Optional[float] = Field(1e-5, gt=0)
    state_a: Optional[StateField] = None
    state_b: Optional[StateField] = None
    input_a: Optional[str] = None
    input_b: Optional[str] = None
    frames: FrameSpec = FrameSpec(kind="cartesian", half=8.0, n=65)
    expect: Optional[float] = None


class PermuteConfig(_Base):
    command: Literal["permute"] = "permute"
    statistics: Literal["fermi", "bose"] = "fermi"
    orbitals: list[int] = [0, 1]
    mode: Literal["entire", "partial-q", "partial-mu"] = "entire"
    qgrid: GridSpec = GridSpec(min=-5.4, max=5.4, n=37)
    frames: Optional[FrameSpec] = None
    xgrid: GridSpec = GridSpec(min=-10.0, max=10.0, n=401)
    epsilon: list[float] = [0.1, 0.05, 0.025]


class ReconstructConfig(_Base):
    command: Literal["reconstruct"] = "reconstruct"
    tol: Optional[float] = Field(1e-4, gt=0)
    state: Optional[StateField] = None
    input: Optional[str] = None
    truncation: int = Field(32, ge=2)
    frames: FrameSpec = FrameSpec(kind="cartesian", half=10.0, n=81)
    xgrid: GridSpec = GridSpec(min=-60.0, max=60.0, n=2401)


class VerifyConfig(_Base):
    command: Literal["verify"] = "verify"
    suite: Literal["core", "transforms", "dynamics", "observables", "symmetry", "starprod", "all"] = "all"
    potential: Optional[Union[str, dict]] = None


CONFIGS = {
    "gen": GenConfig,
    "transform": TransformConfig,
    "evolve": EvolveConfig,
    "average": AverageConfig,
    "transition": TransitionConfig,
    "permute": PermuteConfig,
    "reconstruct": ReconstructConfig,
    "verify": VerifyConfig,
}


# ----------------------------------------------------------------------------
# input helpers


def load_json_file(path, what: str = "config"):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} {path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise ConfigError(f"{what} {path}: {exc.strerror}") from None


def load_state(spec):
    from .states import state_from_dict

    data = load_json_file(spec, "state file") if isinstance(spec, str) else spec
    try:
        return state_from_dict(data)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"invalid state descriptor: {exc}") from None


def load_potential(spec, nd: int):
    from .dynamics import PolynomialPotential

    if spec == "harmonic":
        return PolynomialPotential.harmonic([1.0] * nd)
    if spec == "free":
        return PolynomialPotential.free(nd)
    data = load_json_file(spec, "potential file") if isinstance(spec, str) else spec
    if not isinstance(data, dict):
        raise ConfigError("a potential is an object with 'coefficients' and optional 'nd'")
    unknown = set(data) - {"coefficients", "nd"}
    if unknown:
        raise ConfigError(f"unknown potential keys {sorted(unknown)}")
    try:
        return PolynomialPotential.from_dict(data.get("coefficients", {}), int(data.get("nd", nd)))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid potential: {exc}") from None


def sphere_frames(nd: int, angles, radius: float = 1.0) -> list:
    """Frames on the radius-``radius`` sphere in R^2Nd from hyperspherical angle counts.

    The last angle runs over [0, 2 pi) and the others over midpoints of [0, pi].
    """
    import numpy as np

    from .core import Frame

    dim = 2 * nd
    counts = list(angles)
    if len(counts) == 1:
        counts = counts * (dim - 1)
    if len(counts) != dim - 1:
        raise ConfigError(f"a sphere in {dim} dimensions needs {dim - 1} angle counts")
    axes = [(np.arange(c) + 0.5) * np.pi / c for c in counts[:-1]]
    axes.append(2 * np.pi * np.arange(counts[-1]) / counts[-1])
    mesh = np.meshgrid(*axes, indexing="ij")
    phis = np.stack([m.ravel() for m in mesh], axis=1)
    out = []
    for phi in phis:
        v = np.empty(dim)
        s = 1.0
        for i, a in enumerate(phi):
            v[i] = s * np.cos(a)
            s *= np.sin(a)
        v[-1] = s
        out.append(Frame.from_vector(radius * v))
    return out


def build_frames(spec: FrameSpec, nd: int, seed: int):
    """CartesianFrames for Cartesian specs, otherwise a list of Frame."""
    import numpy as np

    from .core import CartesianFrames, frames_from_vectors, random_frames

    if spec.kind == "cartesian":
        return CartesianFrames.square(nd, spec.half, spec.n, spec.momentum)
    if spec.kind == "random":
        return random_frames(nd, spec.count, np.random.default_rng(seed), spec.scale)
    if spec.kind == "sphere":
        return sphere_frames(nd, spec.angles, spec.radius)
    if not spec.vectors:
        raise ConfigError("explicit frames need a non-empty vector list")
    if any(len(v) != 2 * nd for v in spec.vectors):
        raise ConfigError(f"explicit frame vectors need {2 * nd} components")
    return list(frames_from_vectors(spec.vectors))


def _frame_count(frames) -> int:
    from .core import CartesianFrames

    if isinstance(frames, CartesianFrames):
        return len(frames.frame_list())
    return len(frames)


def _guard(count: int, what: str):
    if count > MAX_VALUES:
        raise ConfigError(f"{what} needs {count:.3g} values (limit {MAX_VALUES:.3g}); use coarser or fewer-dimensional grids")


def _frame_label(frame) -> str:
    return f"mu={list(map(float, frame.mu))}, nu={list(map(float, frame.nu))}"


# ----------------------------------------------------------------------------
# output helpers


def _out_paths(cfg: _Base, default: str) -> dict:
    out = Path(cfg.out or default)
    stem = out.with_suffix("")
    return {
        "out": out,
        "config": Path(f"{stem}.config.json"),
        "report": Path(f"{stem}.report.json") if out.suffix == ".csv" or cfg.command == "reconstruct" else out,
        "stem": stem,
    }


_INPUT_FIELDS = ("state", "input", "state_a", "state_b", "input_a", "input_b", "potential")


def _check_clobber(cfg: _Base, config_path) -> None:
    """Refuse runs whose outputs would overwrite one of their own inputs.

    A dataset ``t.csv`` also writes ``t.json``, which is easy to collide
    with a state file of the same stem.
    """
    paths = _out_paths(cfg, _REPORT_DEFAULTS[cfg.command] or f"{cfg.target}.csv")
    outputs = {paths["config"], paths["report"], paths["out"]}
    if paths["out"].suffix == ".csv":
        outputs.add(paths["out"].with_suffix(".json"))
    inputs = [getattr(cfg, f, None) for f in _INPUT_FIELDS] + [config_path]
    for spec in inputs:
        if not isinstance(spec, str):
            continue
        for dst in outputs:
            if Path(spec).resolve() == dst.resolve():
                raise ConfigError(f"output {dst} would overwrite the input {spec}; choose another --out")


def effective_config(cfg: _Base) -> dict:
    return cfg.model_dump(mode="json", by_alias=True)


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _checks_summary(checks) -> tuple[list, bool]:
    rows = [c.to_dict() for c in checks]
    return rows, all(c.passed for c in checks)


def _check(name: str, value: float, tolerance: float):
    from .verify import Check

    return Check("cli", name, value, tolerance)


def _print_checks(checks) -> None:
    for c in checks:
        mark = "PASS" if c.passed else "FAIL"
        _say(f"  [{mark}] {c.suite}:{c.name} value={c.value:.3e} tol={c.tolerance:.1e}")


# ----------------------------------------------------------------------------
# gen


def _gaussian_extent(state, frames, xgrid, tol: float):
    """Raise CoverageError when mean +- z sigma of a Gaussian-family row leaves the X grid.

    z is the two-sided normal quantile of ``tol``, so the mass outside the
    grid would exceed the normalization tolerance.
    """
    import numpy as np
    from scipy.special import erfcinv

    from .core import CoverageError
    from .states import CoherentStateParams, GaussianStateParams, ThermalStateParams

    if isinstance(state, (CoherentStateParams, ThermalStateParams)):
        state = state.as_gaussian()
    if not isinstance(state, GaussianStateParams):
        return
    z = np.sqrt(2.0) * erfcinv(tol)
    A, B = np.array(state.A), np.array(state.B)
    for f in frames:
        mu, nu = np.array(f.mu), np.array(f.nu)
        var = np.sum(mu**2 / (2 * A) + nu**2 / (2 * B))
        c = float(mu @ np.array(state.x) + nu @ np.array(state.y))
        s = float(np.sqrt(var))
        if c - z * s < xgrid.min or c + z * s > xgrid.max:
            raise CoverageError(
                f"frame {_frame_label(f)}: row mean {c:.3g}, variance D/2 = {var:.3g}; "
                f"+-{z:.2f} sigma spans [{c - z * s:.3g}, {c + z * s:.3g}], outside the X grid "
                f"[{xgrid.min:.3g}, {xgrid.max:.3g}]"
            )


def cmd_gen(cfg: GenConfig) -> tuple[dict, int]:
    from .core import CartesianFrames, CoverageError, check_normalization
    from .io import write_tomogram
    from .transforms import analytic_com

    state = load_state(cfg.state)
    frames = build_frames(cfg.frames, state.nd, cfg.seed)
    xgrid = cfg.xgrid.axis()
    _guard(_frame_count(frames) * xgrid.n, "the tomogram")
    frame_list = frames.frame_list() if isinstance(frames, CartesianFrames) else frames
    tol = cfg.tol or 1e-6
    _gaussian_extent(state, frame_list, xgrid, tol)
    t = analytic_com(state, frames, xgrid)
    rep = check_normalization(t, tol)
    if rep.flagged:
        i = rep.flagged[0]
        raise CoverageError(
            f"frame {_frame_label(t.frames[i])} integrates to 1 - {rep.deviations[i]:.2e} "
            f"(tol {tol:.1e}) on X in [{xgrid.min}, {xgrid.max}]; {len(rep.flagged)} frames flagged"
        )
    paths = _out_paths(cfg, "tomogram.csv")
    write_tomogram(t, paths["out"])
    report = {
        "command": "gen",
        "frames": len(t.frames),
        "x_points": xgrid.n,
        "normalization_max_deviation": rep.max_deviation,
        "normalization_tolerance": tol,
        "outputs": [str(paths["out"]), str(paths["out"].with_suffix(".json"))],
    }
    _say(f"gen: {len(t.frames)} frames x {xgrid.n} X points -> {paths['out']}")
    _say(f"normalization: max deviation {rep.max_deviation:.2e} (tol {tol:.1e})")
    return report, EXIT_OK


# ----------------------------------------------------------------------------
# transform

# one-step transforms; longer routes are composed
_EDGES = {
    ("density", "wigner"),
    ("wigner", "density"),
    ("wigner", "com"),
    ("com", "wigner"),
    ("com", "symplectic"),
    ("symplectic", "com"),
}


def plan_route(source: str, target: str) -> list:
    """Shortest chain of representations from ``source`` to ``target``."""
    if source == target:
        return [source]
    paths = [[source]]
    seen = {source}
    while paths:
        nxt = []
        for p in paths:
            for a, b in sorted(_EDGES):
                if a == p[-1] and b not in seen:
                    if b == target:
                        return p + [b]
                    seen.add(b)
                    nxt.append(p + [b])
        paths = nxt
    raise ConfigError(f"no route from {source} to {target}")


def _mode_state(state, j: int):
    """Single-mode factor of a product state."""
    from .states import CoherentStateParams, FockStateParams, GaussianStateParams, ThermalStateParams

    if isinstance(state, FockStateParams):
        return FockStateParams([state.n[j]])
    if isinstance(state, CoherentStateParams):
        return CoherentStateParams([state.alpha[j]])
    if isinstance(state, ThermalStateParams):
        return ThermalStateParams([state.omega[j]], state.beta, state.mass)
    return GaussianStateParams([state.x[j]], [state.y[j]], [state.A[j]], [state.B[j]])


def _symplectic_targets(cfg: TransformConfig, nd: int) -> list:
    frames = build_frames(cfg.symplectic_frames, nd, cfg.seed)
    return frames if isinstance(frames, list) else frames.frame_list()


def _ray_cover(cfg: TransformConfig, nd: int, ctx: dict) -> list:
    """Every frame (k o mu, k o nu) needed to reach the symplectic target frames."""
    from .transforms import symplectic_ray_frames

    seen, out = set(), []
    for f in _symplectic_targets(cfg, nd):
        for r in symplectic_ray_frames(f, (ctx["kgrid"],) * nd):
            key = tuple(round(v, 12) for v in r.vector)
            if key not in seen:
                seen.add(key)
                out.append(r)
    return out


def _source(cfg: TransformConfig, ctx: dict):
    """The source representation, read from ``input`` or sampled from the state in closed form."""
    import numpy as np

    from .core import Frame, ModeLayout, SymplecticTomogram, WignerGrid
    from .io import READERS
    from .states import analytic_density, analytic_tomogram, analytic_wigner
    from .transforms import analytic_com

    if cfg.input:
        try:
            return READERS[cfg.source](cfg.input)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot read {cfg.source} dataset {cfg.input}: {exc}") from None
    if cfg.state is None:
        raise ConfigError("give a state or an input dataset")
    state = load_state(cfg.state)
    nd = state.nd
    layout = ModeLayout.modes(nd)
    if cfg.source == "density":
        _guard(cfg.qgrid.n ** (2 * nd), "the density grid")
        return analytic_density(state, (ctx["qgrid"],) * nd)
    if cfg.source == "wigner":
        _guard(cfg.qgrid.n ** (2 * nd), "the Wigner grid")
        return WignerGrid.from_function(
            layout, (ctx["qgrid"],) * nd, (ctx["pgrid"],) * nd,
            lambda q, p: analytic_wigner(state, np.stack(q, -1), np.stack(p, -1)),
        )
    if cfg.source == "com":
        frames = build_frames(cfg.frames, nd, cfg.seed)
        if cfg.target == "symplectic":
            frames = _ray_cover(cfg, nd, ctx)
        _guard(_frame_count(frames) * ctx["xgrid"].n, "the tomogram")
        return analytic_com(state, frames, ctx["xgrid"])
    frames = _symplectic_targets(cfg, nd)
    ygrids = (ctx["ygrid"],) * nd
    mesh = np.meshgrid(*[g.points for g in ygrids], indexing="ij")
    vals = []
    for f in frames:
        v = np.ones(mesh[0].shape)
        for j in range(nd):
            v = v * analytic_tomogram(_mode_state(state, j), Frame([f.mu[j]], [f.nu[j]]), mesh[j])
        vals.append(v)
    return SymplecticTomogram(layout, frames, ygrids, np.array(vals))


def _step(obj, a: str, b: str, cfg: TransformConfig, ctx: dict):
    from .transforms import (
        com_to_symplectic,
        com_to_wigner,
        density_to_wigner,
        symplectic_to_com,
        wigner_to_com,
        wigner_to_density,
    )

    nd = obj.layout.nd
    if (a, b) == ("density", "wigner"):
        return density_to_wigner(obj, (ctx["pgrid"],) * nd)
    if (a, b) == ("wigner", "density"):
        return wigner_to_density(obj)
    if (a, b) == ("wigner", "com"):
        frames = ctx.get("com_frames") or build_frames(cfg.frames, nd, cfg.seed)
        return wigner_to_com(obj, frames, ctx["xgrid"], signed=ctx.get("signed", False))
    if (a, b) == ("com", "wigner"):
        return com_to_wigner(obj, (ctx["qgrid"],) * nd, (ctx["pgrid"],) * nd)
    if (a, b) == ("symplectic", "com"):
        return symplectic_to_com(obj, ctx["xgrid"])
    frames = _symplectic_targets(cfg, nd)
    return com_to_symplectic(obj, frames, (ctx["kgrid"],) * nd, (ctx["ygrid"],) * nd)


def _compare(a, b) -> float:
    """Max-norm difference of two datasets of one representation on shared samples."""
    import numpy as np

    from .core import ComTomogram

    if isinstance(a, ComTomogram):
        index = {tuple(np.round(f.vector, 12)): i for i, f in enumerate(a.frames)}
        rows = [(index[tuple(np.round(f.vector, 12))], j) for j, f in enumerate(b.frames) if tuple(np.round(f.vector, 12)) in index]
        if not rows or a.xgrid != b.xgrid:
            raise ConfigError("round trip does not return to comparable samples")
        return float(max(np.abs(a.values[i] - b.values[j]).max() for i, j in rows))
    if a.values.shape != b.values.shape:
        raise ConfigError("round trip does not return to the source grid")
    return float(np.abs(a.values - b.values).max())


def cmd_transform(cfg: TransformConfig) -> tuple[dict, int]:
    from .io import WRITERS

    route = plan_route(cfg.source, cfg.target)
    composed = len(route) > 2
    if composed and not cfg.allow_composed:
        raise ConfigError(f"route {' -> '.join(route)} is composed and loses accuracy at each step; pass --allow-composed")
    ctx = {
        "qgrid": cfg.qgrid.axis(),
        "pgrid": (cfg.pgrid or cfg.qgrid).axis(),
        "xgrid": cfg.xgrid.axis(),
        "ygrid": cfg.ygrid.axis(),
        "kgrid": cfg.kgrid.axis(),
    }
    src = _source(cfg, ctx)
    if cfg.source == "com" and src.cartesian is not None:
        ctx["com_frames"] = src.cartesian
    obj = src
    for a, b in zip(route, route[1:]):
        obj = _step(obj, a, b, cfg, ctx)
    paths = _out_paths(cfg, f"{cfg.target}.csv")
    WRITERS[cfg.target](obj, paths["out"])
    report = {"command": "transform", "route": route, "composed": composed, "outputs": [str(paths["out"])]}
    _say(f"transform: {' -> '.join(route)} -> {paths['out']}")
    code = EXIT_OK
    if cfg.roundtrip:
        back = plan_route(cfg.target, cfg.source)
        # round-trip noise may dip below zero; keep it so the difference is honest
        ctx["signed"] = True
        res = obj
        for a, b in zip(back, back[1:]):
            res = _step(res, a, b, cfg, ctx)
        diff = _compare(src, res)
        tol = cfg.tol or 1e-4
        report["roundtrip"] = {"route": back, "max_diff": diff, "tolerance": tol, "pass": diff <= tol}
        _say(f"round trip {' -> '.join(route + back[1:])}: max diff {diff:.2e} (tol {tol:.1e})")
        code = EXIT_OK if diff <= tol else EXIT_FAILED
    return report, code


# ----------------------------------------------------------------------------
# evolve, average, transition


def _wigner_of(state, qgrid, nd):
    import numpy as np

    from .core import ModeLayout, WignerGrid
    from .states import analytic_wigner

    from .core import CoverageError

    _guard(qgrid.n ** (2 * nd), "the Wigner grid")
    W = WignerGrid.from_function(
        ModeLayout.modes(nd), (qgrid,) * nd, (qgrid,) * nd,
        lambda q, p: analytic_wigner(state, np.stack(q, -1), np.stack(p, -1)),
    )
    v = np.abs(W.values)
    edge = max(float(np.moveaxis(v, a, 0)[[0, -1]].max()) for a in range(v.ndim))
    if edge > 1e-8 * float(v.max()):
        raise CoverageError(f"the Wigner function is {edge:.2e} on the edge of [{qgrid.min}, {qgrid.max}]; widen the q grid")
    return W


def cmd_evolve(cfg: EvolveConfig) -> tuple[dict, int]:
    from .core import CartesianFrames
    from .dynamics import TomogramField, default_kgrid, evolution_residual, moyal_consistency, moyal_propagate_quadratic
    from .io import write_wigner

    state = load_state(cfg.state)
    nd = state.nd
    V = load_potential(cfg.potential, nd)
    if V.nd != nd:
        raise ConfigError("potential and state have different numbers of modes")
    frames = build_frames(cfg.frames, nd, cfg.seed)
    if not isinstance(frames, CartesianFrames) or not cfg.frames.momentum:
        raise ConfigError("evolve needs Cartesian frames with momentum components")
    _guard(len(frames.frame_list()) * 2 * cfg.k_count, "the tomogram field")
    k = default_kgrid(cfg.k_max, cfg.k_count)
    W = _wigner_of(state, cfg.qgrid.axis(), nd)
    tol = cfg.tol or 1e-3
    checks = [_check(f"evolution_moyal:degree{V.degree}", moyal_consistency(W, V, frames, k, cfg.masses).residual_real, tol)]
    paths = _out_paths(cfg, "evolve.json")
    outputs = [str(paths["out"])]
    if V.degree <= 2:
        h = cfg.h
        slices = [moyal_propagate_quadratic(W, V, cfg.t + s, cfg.masses) for s in (-h, 0.0, h)]
        fs = [TomogramField.from_wigner(w, frames, k) for w in slices]
        checks.append(_check(f"evolution:t={cfg.t}", evolution_residual(fs, V, h, cfg.masses).residual_real, tol))
        wpath = Path(f"{paths['stem']}.wigner.csv")
        write_wigner(slices[1], wpath)
        outputs.append(str(wpath))
    rows, ok = _checks_summary(checks)
    _say(f"evolve: degree-{V.degree} potential, {nd} mode(s)")
    _print_checks(checks)
    return {"command": "evolve", "potential": V.to_dict(), "checks": rows, "passed": ok, "outputs": outputs}, EXIT_OK if ok else EXIT_FAILED


def _characteristic(cfg, state_spec, input_path, nd_hint=None):
    from .io import read_tomogram
    from .states import analytic_characteristic
    from .transforms import characteristic_on_grid, com_to_characteristic

    if input_path:
        try:
            t = read_tomogram(input_path)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot read tomogram {input_path}: {exc}") from None
        if t.cartesian is None:
            raise ConfigError(f"{input_path} is not sampled on Cartesian frames")
        return com_to_characteristic(t), None
    if state_spec is None:
        raise ConfigError("give a state or an input tomogram")
    state = load_state(state_spec)
    frames = build_frames(cfg.frames, state.nd, cfg.seed)
    from .core import CartesianFrames, ModeLayout

    if not isinstance(frames, CartesianFrames):
        raise ConfigError(f"{cfg.command} needs Cartesian frames")
    _guard(len(frames.frame_list()), "the characteristic grid")
    chi = characteristic_on_grid(ModeLayout.modes(state.nd), frames, lambda m, n: analytic_characteristic(state, m, n))
    return chi, state


def cmd_average(cfg: AverageConfig) -> tuple[dict, int]:
    from .core import AxisGrid
    from .observables import average_via_tomogram, average_via_wigner, named_observable

    chi, state = _characteristic(cfg, cfg.state, cfg.input)
    layout = chi.layout
    if cfg.mode >= layout.nd:
        raise ConfigError(f"mode {cfg.mode} does not exist for {layout.nd} mode(s)")
    try:
        symbols = {n: named_observable(n, layout, cfg.mode) for n in cfg.observables}
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    W = None
    if state is not None:
        qg = cfg.qgrid.axis() if cfg.qgrid else AxisGrid.symmetric(8.0, 161 if layout.nd == 1 else 41)
        W = _wigner_of(state, qg, layout.nd)
    tol = cfg.tol or 1e-4
    values, checks = {}, []
    for name, A in symbols.items():
        entry = {"tomogram": average_via_tomogram(A, chi)}
        if W is not None:
            entry["wigner"] = average_via_wigner(A, W)
            checks.append(_check(f"wigner_vs_tomogram:{name}", abs(entry["wigner"] - entry["tomogram"]), tol))
        values[name] = entry
        _say(f"<{name}> = {entry['tomogram']:.10g}" + (f" (Wigner route {entry['wigner']:.10g})" if "wigner" in entry else ""))
    rows, ok = _checks_summary(checks)
    _print_checks(checks)
    return {"command": "average", "mode": cfg.mode, "averages": values, "checks": rows, "passed": ok}, EXIT_OK if ok else EXIT_FAILED


def cmd_transition(cfg: TransitionConfig) -> tuple[dict, int]:
    from .dynamics import transition_probability

    a, _ = _characteristic(cfg, cfg.state_a, cfg.input_a)
    b, _ = _characteristic(cfg, cfg.state_b, cfg.input_b)
    if a.cartesian != b.cartesian:
        raise ConfigError("both states must be sampled on the same frame grid")
    P = transition_probability(a, b)
    _say(f"transition probability P = {P:.12g}")
    report = {"command": "transition", "probability": P, "checks": [], "passed": True}
    if cfg.expect is not None:
        c = _check("transition_vs_expected", abs(P - cfg.expect), cfg.tol or 1e-5)
        report["checks"], report["passed"] = _checks_summary([c])
        _print_checks([c])
    return report, EXIT_OK if report["passed"] else EXIT_FAILED


# ----------------------------------------------------------------------------
# permute, reconstruct, verify


def cmd_permute(cfg: PermuteConfig) -> tuple[dict, int]:
    import numpy as np

    from .core import AxisGrid, CartesianFrames, DensityMatrixGrid
    from .io import write_wigner
    from .symmetry import (
        TwoParticleState,
        entire_permutation_check,
        epsilon_sweep,
        mixed_swap_check,
        permute_density,
        wigner_partial_permutation,
    )
    from .transforms import density_to_wigner

    if len(cfg.orbitals) != 2:
        raise ConfigError("two orbital indices expected")
    try:
        st = TwoParticleState(tuple(cfg.orbitals), cfg.statistics)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    g = cfg.qgrid.axis()
    checks = []
    paths = _out_paths(cfg, "permute.json")
    outputs = [str(paths["out"])]
    extra = {}
    if cfg.mode in ("entire", "partial-q"):
        _guard(g.n**4, "the two-particle grid")
        rho = st.density(g)
        W = density_to_wigner(rho, (g, g))
    if cfg.mode == "entire":
        tol = cfg.tol or 1e-10
        checks += [
            _check("entire:density", entire_permutation_check(rho), tol),
            _check("entire:wigner", entire_permutation_check(W), tol),
            _check("mixed:wigner", mixed_swap_check(W), tol),
        ]
        frames = build_frames(cfg.frames or FrameSpec(kind="cartesian", half=1.2, n=5), 2, cfg.seed)
        if isinstance(frames, CartesianFrames):
            t = st.tomogram(frames, cfg.xgrid.axis())
            checks.append(_check("entire:tomogram", entire_permutation_check(t), tol))
            checks.append(_check("mixed:tomogram", mixed_swap_check(t), tol))
    elif cfg.mode == "partial-q":
        img = wigner_partial_permutation(W, cfg.statistics)
        perm = DensityMatrixGrid(rho.layout, rho.qgrids, st.sign * permute_density(rho), check=False)
        oracle = density_to_wigner(perm, (g, g))
        checks.append(_check("partial_kernel_vs_wavefunction_oracle", float(np.abs(img.values - oracle.values).max()), cfg.tol or 1e-3))
        wpath = Path(f"{paths['stem']}.wigner.csv")
        write_wigner(img, wpath)
        outputs.append(str(wpath))
    else:
        frames = build_frames(cfg.frames or FrameSpec(kind="random", count=3), 2, cfg.seed)
        if isinstance(frames, CartesianFrames):
            frames = frames.frame_list()
        ref = st.tomogram(frames, cfg.xgrid.axis())
        if len(cfg.epsilon) < 2:
            raise ConfigError("an epsilon sweep needs at least two values")
        sweep = epsilon_sweep(st.characteristic, cfg.statistics, ref, epsilons=cfg.epsilon, n_ab=97, half_width=12.0)
        extra = {"epsilons": list(map(float, sweep["epsilons"])), "deviations": list(map(float, sweep["deviations"]))}
        for e, d in zip(extra["epsilons"], extra["deviations"]):
            _say(f"  epsilon={e:g}: max deviation from the Wigner route {d:.3e}")
        checks.append(_check("epsilon_monotone", 0.0 if sweep["monotone"] else 1.0, 0.0))
        if sweep.get("extrapolated") is not None:
            extra["richardson"] = float(sweep["extrapolated"])
            checks.append(_check("richardson_extrapolated", sweep["extrapolated"], cfg.tol or 5e-2))
    rows, ok = _checks_summary(checks)
    _say(f"permute: {cfg.statistics} pair {tuple(cfg.orbitals)}, mode {cfg.mode}")
    _print_checks(checks)
    return {"command": "permute", "mode": cfg.mode, **extra, "checks": rows, "passed": ok, "outputs": outputs}, EXIT_OK if ok else EXIT_FAILED


def cmd_reconstruct(cfg: ReconstructConfig) -> tuple[dict, int]:
    from .core import CartesianFrames
    from .io import fock_matrix_to_dict, read_tomogram, write_json
    from .starprod import QuantizerContext, operator_from_symbol, reconstruction_report
    from .states import analytic_density
    from .transforms import analytic_com

    ctx = QuantizerContext(cfg.truncation)
    target = None
    if cfg.input:
        try:
            t = read_tomogram(cfg.input)
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot read tomogram {cfg.input}: {exc}") from None
    elif cfg.state is not None:
        state = load_state(cfg.state)
        if state.nd != 1:
            raise ConfigError("reconstruction is single-mode")
        frames = build_frames(cfg.frames, 1, cfg.seed)
        if not isinstance(frames, CartesianFrames) or not cfg.frames.momentum:
            raise ConfigError("reconstruction needs a Cartesian (mu, nu) frame grid")
        _guard(len(frames.frame_list()) * cfg.xgrid.n, "the tomogram")
        t = analytic_com(state, frames, cfg.xgrid.axis())
        target = analytic_density(state, truncation=cfg.truncation)
    else:
        raise ConfigError("give a state or an input tomogram")
    if t.layout.nd != 1 or t.cartesian is None:
        raise ConfigError("reconstruction needs a single-mode tomogram on a Cartesian (mu, nu) grid")
    rho = operator_from_symbol(t, ctx)
    diag = reconstruction_report(t, ctx, target)
    paths = _out_paths(cfg, "rho.json")
    write_json(paths["out"], fock_matrix_to_dict(rho))
    checks = []
    if target is not None:
        checks.append(_check("fidelity_defect", 1.0 - diag["fidelity"], cfg.tol or 1e-4))
    rows, ok = _checks_summary(checks)
    _say(f"reconstruct: truncation {cfg.truncation}, trace {diag['trace']:.10f}, purity {diag['purity']:.10f} -> {paths['out']}")
    _print_checks(checks)
    return {"command": "reconstruct", "diagnostics": diag, "checks": rows, "passed": ok, "outputs": [str(paths["out"])]}, EXIT_OK if ok else EXIT_FAILED


def cmd_verify(cfg: VerifyConfig) -> tuple[dict, int]:
    from .verify import run_suite

    V = None if cfg.potential is None else load_potential(cfg.potential, 1)
    try:
        checks = run_suite(cfg.suite, cfg.tol, V)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    rows, ok = _checks_summary(checks)
    failed = sum(not c.passed for c in checks)
    _print_checks(checks)
    _say(f"verify {cfg.suite}: {len(checks) - failed}/{len(checks)} checks passed")
    return {"command": "verify", "suite": cfg.suite, "checks": rows, "passed": ok}, EXIT_OK if ok else EXIT_FAILED


COMMANDS = {
    "gen": cmd_gen,
    "transform": cmd_transform,
    "evolve": cmd_evolve,
    "average": cmd_average,
    "transition": cmd_transition,
    "permute": cmd_permute,
    "reconstruct": cmd_reconstruct,
    "verify": cmd_verify,
}

_REPORT_DEFAULTS = {"gen": "tomogram.csv", "transform": None, "evolve": "evolve.json", "average": "average.json",
                    "transition": "transition.json", "permute": "permute.json", "reconstruct": "rho.json", "verify": "verify.json"}


# ----------------------------------------------------------------------------
# argument parsing


def _add_global(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; explicit flags override its values")
    p.add_argument("--out", help="output path (dataset CSV or report JSON)")
    p.add_argument("--tol", type=float, help="replace the default tolerance(s)")
    p.add_argument("--threads", type=int, help="thread count for numerical libraries")
    p.add_argument("--seed", type=int, help="seed for random frame sets")
    p.add_argument("--stdout", action="store_true", help="print the JSON report on stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="comtomo", description="Center-of-mass tomography toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text, argument_default=argparse.SUPPRESS)
        _add_global(p)
        return p

    p = command("gen", "sample a closed-form tomogram")
    p.add_argument("--state", help="state JSON file")
    p.add_argument("--frames", help="frame spec, e.g. cartesian:msize=65 or random:count=20")
    p.add_argument("--xgrid", help="X grid min,max,n")

    p = command("transform", "convert between representations")
    p.add_argument("--from", dest="from", choices=["density", "wigner", "symplectic", "com"])
    p.add_argument("--to", dest="to", choices=["density", "wigner", "symplectic", "com"])
    p.add_argument("--state")
    p.add_argument("--input", help="source dataset (CSV with JSON header)")
    for g in ("qgrid", "pgrid", "xgrid", "ygrid", "kgrid"):
        p.add_argument(f"--{g}")
    p.add_argument("--frames")
    p.add_argument("--symplectic-frames", dest="symplectic_frames")
    p.add_argument("--allow-composed", dest="allow_composed", action="store_true")
    p.add_argument("--roundtrip", action="store_true")

    p = command("evolve", "evolution residuals for a potential")
    p.add_argument("--state")
    p.add_argument("--potential", help="harmonic, free, or a potential JSON file")
    p.add_argument("--masses", type=float, nargs="+")
    p.add_argument("--t", type=float)
    p.add_argument("--h", type=float)
    p.add_argument("--qgrid")
    p.add_argument("--frames")
    p.add_argument("--k-max", dest="k_max", type=float)
    p.add_argument("--k-count", dest="k_count", type=int)

    p = command("average", "averages of Weyl-symbol observables")
    p.add_argument("--state")
    p.add_argument("--input")
    p.add_argument("--observables", nargs="+")
    p.add_argument("--mode", type=int)
    p.add_argument("--frames")
    p.add_argument("--qgrid")

    p = command("transition", "transition probability between two states")
    p.add_argument("--state-a", dest="state_a")
    p.add_argument("--state-b", dest="state_b")
    p.add_argument("--input-a", dest="input_a")
    p.add_argument("--input-b", dest="input_b")
    p.add_argument("--frames")
    p.add_argument("--expect", type=float)

    p = command("permute", "permutation symmetry checks for two particles")
    p.add_argument("--statistics", choices=["fermi", "bose"])
    p.add_argument("--orbitals", type=int, nargs=2)
    p.add_argument("--mode", choices=["entire", "partial-q", "partial-mu"])
    p.add_argument("--qgrid")
    p.add_argument("--frames")
    p.add_argument("--xgrid")
    p.add_argument("--epsilon", type=float, nargs="+")

    p = command("reconstruct", "number-basis density matrix from a tomogram")
    p.add_argument("--state")
    p.add_argument("--input")
    p.add_argument("--truncation", type=int)
    p.add_argument("--frames")
    p.add_argument("--xgrid")

    p = command("verify", "run invariant suites")
    p.add_argument("--suite", choices=["core", "transforms", "dynamics", "observables", "symmetry", "starprod", "all"])
    p.add_argument("--potential", help="single-mode potential JSON for the dynamics suite")
    return parser


def resolve_config(command: str, explicit: dict) -> _Base:
    """Merge the config file (if any) with explicit flags and validate."""
    explicit = dict(explicit)
    path = explicit.pop("config", None)
    data = {}
    if path is not None:
        data = load_json_file(path)
        if not isinstance(data, dict):
            raise ConfigError(f"config {path}: top level must be an object")
        if data.get("command", command) != command:
            raise ConfigError(f"config {path} is for command {data['command']!r}, not {command!r}")
    data.update(explicit)
    data["command"] = command
    try:
        return CONFIGS[command].model_validate(data)
    except ValidationError as exc:
        lines = [f"{'.'.join(map(str, e['loc'])) or '<root>'}: {e['msg']}" for e in exc.errors()]
        raise ConfigError("invalid config:\n  " + "\n  ".join(lines)) from None


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    config_path = args.get("config")
    if args.get("threads"):
        for var in THREAD_VARS:
            os.environ[var] = str(args["threads"])
    try:
        cfg = resolve_config(command, args)
        _check_clobber(cfg, config_path)
    except ConfigError as exc:
        _say(f"error: {exc}")
        return EXIT_CONFIG

    from .core import CoverageError, DegenerateFrameError, InconsistentInputError
    from .io import write_json
    from .starprod import TruncationError

    try:
        report, code = COMMANDS[command](cfg)
    except ConfigError as exc:
        _say(f"error: {exc}")
        return EXIT_CONFIG
    except (CoverageError, TruncationError) as exc:
        _say(f"coverage error: {exc}")
        return EXIT_NUMERICAL
    except (DegenerateFrameError, InconsistentInputError) as exc:
        _say(f"input error: {exc}")
        return EXIT_CONFIG
    except ValueError as exc:
        # option combinations the numerical layer cannot serve
        _say(f"error: {exc}")
        return EXIT_CONFIG
    paths = _out_paths(cfg, _REPORT_DEFAULTS[command] or f"{cfg.target}.csv")
    report["effective_config"] = str(paths["config"])
    write_json(paths["config"], effective_config(cfg))
    write_json(paths["report"], report)
    if cfg.stdout:
        print(json.dumps(report, indent=2, sort_keys=True, default=float))
    return code


if __name__ == "__main__":
    sys.exit(main())

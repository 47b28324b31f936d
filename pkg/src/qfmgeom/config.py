"""Experiment configuration: JSON on disk, validated dataclasses in memory."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from . import expr as ex
from .feature_map import BUILTIN, MAX_ORDER, DEFAULT_ORDER, FeatureMapSpec, SpecError, spec_from_dict
from .manifold import PAPER_PATCH, ManifoldError, ManifoldSpec
from .pauli import PauliString, SkewHermitianOp

JOBS = ("validate", "closure", "distances", "curvature", "nearest", "report")
FRAMES = ("coordinate", "lie-basis")

# The rational closed form printed alongside computed IQP curvatures.
IQP_REFERENCE = "4*(p1^2*p2^2 + p1^2 + p2^4 + p2^2)/(p1^2 + p2^2 + 1)"
REPORT_POINTS = ((0.5, 0.5), (1.0, 0.1), (-1.0, 1.1))


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class NearestTarget:
    """A target unitary ``exp(op)`` or, when ``t`` is set, the path point ``U(path(t))``."""

    op: SkewHermitianOp | None = None
    t: float | None = None


@dataclass(frozen=True)
class NearestConfig:
    path: tuple[tuple[float, ...], tuple[float, ...]]
    targets: tuple[NearestTarget, ...]
    samples: int = 32
    maps: tuple[str, ...] | None = None


@dataclass(frozen=True)
class ReportConfig:
    map: str | None = None
    points: tuple[tuple[float, ...], ...] = REPORT_POINTS
    orders: tuple[int, ...] = (0, 1, 2, 3)
    reference: str | None = IQP_REFERENCE


@dataclass(frozen=True)
class ExperimentConfig:
    feature_maps: dict[str, FeatureMapSpec]
    manifold: ManifoldSpec = PAPER_PATCH
    order: int = DEFAULT_ORDER
    frame: str = "coordinate"
    out: Path = Path("out")
    jobs: tuple[str, ...] = ("validate",)
    workers: int = 1
    segments: int = 64
    expected_closure: dict[str, tuple[PauliString, ...]] = field(default_factory=dict)
    nearest: NearestConfig | None = None
    report: ReportConfig = ReportConfig()

    def __post_init__(self):
        if not self.feature_maps:
            raise ConfigError("at least one feature map is required")
        if not self.jobs:
            raise ConfigError("job list is empty")
        bad = [j for j in self.jobs if j not in JOBS]
        if bad:
            raise ConfigError(f"unknown jobs {bad}; choose from {list(JOBS)}")
        if not (isinstance(self.order, int) and 0 <= self.order <= MAX_ORDER):
            raise ConfigError(f"order must be an integer in 0..{MAX_ORDER}, got {self.order!r}")
        if self.frame not in FRAMES:
            raise ConfigError(f"frame must be one of {list(FRAMES)}, got {self.frame!r}")
        if not (isinstance(self.workers, int) and self.workers >= 1):
            raise ConfigError("workers must be a positive integer")
        if not (isinstance(self.segments, int) and self.segments >= 2):
            raise ConfigError("segments must be an integer >= 2")
        for name, spec in self.feature_maps.items():
            if spec.m != self.manifold.dim:
                raise ConfigError(f"feature map {name!r} has {spec.m} coordinates but the "
                                  f"manifold has {self.manifold.dim}")
        for name in self.expected_closure:
            if name not in self.feature_maps:
                raise ConfigError(f"expected_closure names unknown feature map {name!r}")
        if "nearest" in self.jobs and self.nearest is None:
            raise ConfigError("the nearest job needs a 'nearest' section")
        if self.nearest is not None:
            for name in self.nearest.maps or ():
                if name not in self.feature_maps:
                    raise ConfigError(f"nearest names unknown feature map {name!r}")
        if self.report.map is not None and self.report.map not in self.feature_maps:
            raise ConfigError(f"report names unknown feature map {self.report.map!r}")

    def with_overrides(self, **kw: Any) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


# -- parsing ---------------------------------------------------------------

def _resolve(base_dir: Path, ref: str) -> Path:
    path = Path(ref)
    if not path.is_absolute():
        path = base_dir / path
    if not path.is_file():
        raise ConfigError(f"referenced file does not exist: {path}")
    return path


def _feature_map(ref: Any, name: str, base_dir: Path) -> FeatureMapSpec:
    try:
        if isinstance(ref, str) and ref.startswith("builtin:"):
            key = ref.split(":", 1)[1]
            if key not in BUILTIN:
                raise ConfigError(f"unknown builtin feature map {key!r}")
            return BUILTIN[key]()
        if isinstance(ref, str):
            path = _resolve(base_dir, ref)
            data = json.loads(path.read_text())
            return spec_from_dict(data, name=name, validate=False)
        if isinstance(ref, dict):
            return spec_from_dict(ref, name=name, validate=False)
    except (SpecError, ex.ExprSyntaxError, ex.UndeclaredVariableError, json.JSONDecodeError) as err:
        raise ConfigError(f"feature map {name!r}: {err}") from None
    except (KeyError, TypeError, ValueError) as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(f"feature map {name!r}: malformed spec ({err})") from None
    raise ConfigError(f"feature map {name!r}: expected a builtin name, file path or object")


def _manifold(raw: Any) -> ManifoldSpec:
    if raw is None or raw == "paper":
        return PAPER_PATCH
    try:
        bounds = tuple((float(lo), float(hi)) for lo, hi in raw["bounds"])
        return ManifoldSpec(raw.get("kind", "poincare_half_plane"), bounds, float(raw["step"]))
    except ManifoldError as err:
        raise ConfigError(f"manifold: {err}") from None
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"manifold: malformed section ({err})") from None


def _operator(raw: Any) -> SkewHermitianOp:
    if isinstance(raw, str):
        return SkewHermitianOp.from_text(raw)
    if isinstance(raw, dict):
        if not raw:
            raise ConfigError("empty target operator")
        n = len(next(iter(raw)))
        return SkewHermitianOp(n, {k: float(v) for k, v in raw.items()})
    if isinstance(raw, list):
        n = len(raw[0]["p"])
        terms: dict[str, float] = {}
        for entry in raw:
            terms[entry["p"]] = terms.get(entry["p"], 0.0) + float(entry["c"])
        return SkewHermitianOp(n, terms)
    raise ConfigError(f"cannot read target operator {raw!r}")


def _nearest(raw: Any, maps: dict[str, FeatureMapSpec]) -> NearestConfig | None:
    if raw is None:
        return None
    try:
        p1, p2 = raw["path"]
        path = (tuple(float(v) for v in p1), tuple(float(v) for v in p2))
        targets = []
        for t in raw["targets"]:
            if isinstance(t, dict) and "t" in t:
                targets.append(NearestTarget(t=float(t["t"])))
            else:
                op = _operator(t["op"] if isinstance(t, dict) and "op" in t else t)
                targets.append(NearestTarget(op=op))
        names = tuple(raw["maps"]) if "maps" in raw else None
        cfg = NearestConfig(path, tuple(targets), int(raw.get("samples", 32)), names)
    except ConfigError:
        raise
    except Exception as err:  # malformed JSON structure of any kind
        raise ConfigError(f"nearest: malformed section ({err})") from None
    if not cfg.targets:
        raise ConfigError("nearest: no targets")
    if cfg.samples < 3:
        raise ConfigError("nearest: samples must be >= 3")
    if path[0] == path[1]:
        raise ConfigError("nearest: path endpoints coincide")
    for name in cfg.maps or tuple(maps):
        spec = maps.get(name)
        for t in cfg.targets:
            if spec is not None and t.op is not None and t.op.n_qubits != spec.n_qubits:
                raise ConfigError(f"nearest: target acts on {t.op.n_qubits} qubits, "
                                  f"feature map {name!r} on {spec.n_qubits}")
    return cfg


def _report(raw: Any) -> ReportConfig:
    if raw is None:
        return ReportConfig()
    try:
        return ReportConfig(
            map=raw.get("map"),
            points=tuple(tuple(float(v) for v in p) for p in raw.get("points", REPORT_POINTS)),
            orders=tuple(int(q) for q in raw.get("orders", (0, 1, 2, 3))),
            reference=raw.get("reference", IQP_REFERENCE),
        )
    except (TypeError, ValueError, AttributeError) as err:
        raise ConfigError(f"report: malformed section ({err})") from None


def config_from_dict(data: dict, base_dir: Path | str = ".") -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    base_dir = Path(base_dir)
    known = {"feature_map", "feature_maps", "manifold", "order", "frame", "out", "jobs",
             "workers", "segments", "expected_closure", "nearest", "report"}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys {unknown}")
    if "feature_maps" in data:
        raw_maps = data["feature_maps"]
        if not isinstance(raw_maps, dict):
            raise ConfigError("feature_maps must map names to specs")
    elif "feature_map" in data:
        ref = data["feature_map"]
        default = ref.split(":", 1)[1] if isinstance(ref, str) and ref.startswith("builtin:") \
            else Path(ref).stem if isinstance(ref, str) else (ref.get("name") or "map")
        raw_maps = {default: ref}
    else:
        raise ConfigError("config needs 'feature_map' or 'feature_maps'")
    maps = {name: _feature_map(ref, name, base_dir) for name, ref in raw_maps.items()}
    for name in maps:
        if not name or any(c in name for c in "/\\ "):
            raise ConfigError(f"feature map name {name!r} is not usable in file names")

    expected = {}
    for name, strings in (data.get("expected_closure") or {}).items():
        try:
            expected[name] = tuple(PauliString(s) for s in strings)
        except (ValueError, TypeError) as err:
            raise ConfigError(f"expected_closure: {err}") from None

    jobs = data.get("jobs", ())
    if not isinstance(jobs, list) or not all(isinstance(j, str) for j in jobs):
        raise ConfigError("jobs must be a list of job names")
    out = Path(data.get("out", "out"))
    if not out.is_absolute():
        out = base_dir / out
    return ExperimentConfig(
        feature_maps=maps,
        manifold=_manifold(data.get("manifold")),
        order=data.get("order", DEFAULT_ORDER),
        frame=data.get("frame", "coordinate"),
        out=out,
        jobs=tuple(jobs),
        workers=data.get("workers", 1),
        segments=data.get("segments", 64),
        expected_closure=expected,
        nearest=_nearest(data.get("nearest"), maps),
        report=_report(data.get("report")),
    )


def load_config(path: Path | str) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file does not exist: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from None
    return config_from_dict(data, base_dir=path.parent)

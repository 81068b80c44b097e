"""Strict parsing of scenario and measurement JSON documents.

Unknown keys, missing required keys and wrong types raise
:class:`SchemaError` carrying a pointer such as ``/bodies/1/h_m``. Units are
fixed by the key suffix.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .calibration import LandmarkMeasurement, SizeBounds
from .diffraction_full import DEFAULT_SPEC, QuadratureSpec
from .exceptions import ScenarioError, SchemaError
from .scenario import Body, ScenarioGeometry, effective_width
from .statistical import StatParams


@dataclass(frozen=True)
class SweepSpec:
    name: str
    body_index: int
    axis: str
    start: float
    stop: float
    step: float

    def positions(self) -> list[float]:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9))
        return [self.start + i * self.step for i in range(max(n, 0) + 1)]


@dataclass(frozen=True)
class CalibrationConfig:
    shared: bool = False
    engine: str = "mbm"
    bounds: SizeBounds = SizeBounds()
    init: tuple[tuple[float, float], ...] | None = None


@dataclass(frozen=True)
class Scenario:
    geometry: ScenarioGeometry
    bodies: tuple[Body, ...]
    stats: StatParams | None = None
    sweeps: tuple[SweepSpec, ...] = ()
    quadrature: QuadratureSpec = DEFAULT_SPEC
    calibration: CalibrationConfig = field(default_factory=CalibrationConfig)

    def sweep(self, name: str) -> SweepSpec:
        for s in self.sweeps:
            if s.name == name:
                return s
        known = ", ".join(s.name for s in self.sweeps) or "none"
        raise SchemaError("/sweeps", f"no sweep named {name!r} (known: {known})")

    def initial_sizes(self) -> list[tuple[float, float]]:
        if self.calibration.init is not None:
            return list(self.calibration.init)
        return [(effective_width(b), b.h) for b in self.bodies]


@dataclass(frozen=True)
class Measurements:
    landmarks: tuple[LandmarkMeasurement, ...]
    mu0: float
    sigma0_sq: float


def _obj(value, ptr: str, required: set[str], optional: set[str] = frozenset()) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(ptr or "/", "expected an object")
    for key in value:
        if key not in required and key not in optional:
            raise SchemaError(f"{ptr}/{key}", "unknown key")
    for key in sorted(required):
        if key not in value:
            raise SchemaError(f"{ptr}/{key}", "missing required key")
    return value


def _num(value, ptr: str, *, positive=False, nonneg=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(ptr, f"expected a number, got {type(value).__name__}")
    v = float(value)
    if not math.isfinite(v):
        raise SchemaError(ptr, "must be finite")
    if positive and not v > 0:
        raise SchemaError(ptr, f"must be > 0, got {v}")
    if nonneg and v < 0:
        raise SchemaError(ptr, f"must be >= 0, got {v}")
    return v


def _int(value, ptr: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(ptr, f"expected an integer, got {type(value).__name__}")
    if minimum is not None and value < minimum:
        raise SchemaError(ptr, f"must be >= {minimum}, got {value}")
    return value


def _list(value, ptr: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(ptr, "expected an array")
    return value


def _pair(value, ptr: str) -> tuple[float, float]:
    items = _list(value, ptr)
    if len(items) != 2:
        raise SchemaError(ptr, "expected [low, high]")
    lo, hi = (_num(v, f"{ptr}/{i}", positive=True) for i, v in enumerate(items))
    if not lo < hi:
        raise SchemaError(ptr, "low must be below high")
    return lo, hi


def _link(doc) -> ScenarioGeometry:
    link = _obj(doc, "/link", {"d_m", "H_m"}, {"freq_hz", "lambda_m"})
    if ("freq_hz" in link) == ("lambda_m" in link):
        raise SchemaError("/link", "give exactly one of freq_hz or lambda_m")
    d = _num(link["d_m"], "/link/d_m", positive=True)
    H = _num(link["H_m"], "/link/H_m", positive=True)
    if "freq_hz" in link:
        return ScenarioGeometry.from_frequency(d, H, _num(link["freq_hz"], "/link/freq_hz", positive=True))
    return ScenarioGeometry(d, H, _num(link["lambda_m"], "/link/lambda_m", positive=True))


_BODY_KEYS = {"a_m", "b_m", "h_m", "x_m"}
_BODY_OPTIONAL = {"y_m", "chi_rad", "B_m"}


def _body(doc, ptr: str) -> Body:
    b = _obj(doc, ptr, _BODY_KEYS, _BODY_OPTIONAL)
    try:
        return Body(
            a=_num(b["a_m"], f"{ptr}/a_m", positive=True),
            b=_num(b["b_m"], f"{ptr}/b_m", positive=True),
            h=_num(b["h_m"], f"{ptr}/h_m", positive=True),
            x=_num(b["x_m"], f"{ptr}/x_m"),
            y=_num(b.get("y_m", 0.0), f"{ptr}/y_m"),
            chi=_num(b.get("chi_rad", 0.0), f"{ptr}/chi_rad"),
            B=_num(b.get("B_m", 0.0), f"{ptr}/B_m", nonneg=True),
        )
    except ScenarioError as exc:
        raise SchemaError(ptr, str(exc)) from exc


def _stats(doc) -> StatParams:
    s = _obj(
        doc, "/stats", {"P_L_dbm", "seed"},
        {"sigma0_sq", "dmu_C", "dsigma_C_sq", "B_m", "n_samples"},
    )
    return StatParams(
        P_L=_num(s["P_L_dbm"], "/stats/P_L_dbm"),
        seed=_int(s["seed"], "/stats/seed", 0),
        sigma0_sq=_num(s.get("sigma0_sq", 0.0), "/stats/sigma0_sq", nonneg=True),
        delta_mu_C=_num(s.get("dmu_C", 0.0), "/stats/dmu_C"),
        delta_sigma_C_sq=_num(s.get("dsigma_C_sq", 0.0), "/stats/dsigma_C_sq", nonneg=True),
        B=_num(s["B_m"], "/stats/B_m", nonneg=True) if "B_m" in s else None,
        n_samples=_int(s.get("n_samples", 1000), "/stats/n_samples", 1),
    )


def _sweep(doc, ptr: str, n_bodies: int) -> SweepSpec:
    s = _obj(doc, ptr, {"name", "body_index", "axis", "start_m", "stop_m", "step_m"})
    if not isinstance(s["name"], str) or not s["name"]:
        raise SchemaError(f"{ptr}/name", "expected a non-empty string")
    idx = _int(s["body_index"], f"{ptr}/body_index", 0)
    if idx >= n_bodies:
        raise SchemaError(f"{ptr}/body_index", f"no body {idx} (scenario has {n_bodies})")
    if s["axis"] not in ("along", "across"):
        raise SchemaError(f"{ptr}/axis", "must be 'along' or 'across'")
    start = _num(s["start_m"], f"{ptr}/start_m")
    stop = _num(s["stop_m"], f"{ptr}/stop_m")
    if stop < start:
        raise SchemaError(f"{ptr}/stop_m", "must be >= start_m")
    step = _num(s["step_m"], f"{ptr}/step_m", positive=True)
    return SweepSpec(s["name"], idx, s["axis"], start, stop, step)


def _quadrature(doc) -> QuadratureSpec:
    q = _obj(doc, "/quadrature", set(), {"rel_tol", "max_panels_per_dim", "phase_step"})
    kw: dict[str, Any] = {}
    if "rel_tol" in q:
        kw["rel_tol"] = _num(q["rel_tol"], "/quadrature/rel_tol", positive=True)
    if "max_panels_per_dim" in q:
        kw["max_panels_per_dim"] = _int(q["max_panels_per_dim"], "/quadrature/max_panels_per_dim", 1)
    if "phase_step" in q:
        kw["phase_step"] = _num(q["phase_step"], "/quadrature/phase_step", positive=True)
    try:
        return QuadratureSpec(**kw)
    except ValueError as exc:
        raise SchemaError("/quadrature", str(exc)) from exc


def _calibration(doc, n_bodies: int) -> CalibrationConfig:
    c = _obj(doc, "/calibration", set(), {"shared", "engine", "c_bounds_m", "h_bounds_m", "init"})
    shared = c.get("shared", False)
    if not isinstance(shared, bool):
        raise SchemaError("/calibration/shared", "expected true or false")
    engine = c.get("engine", "mbm")
    if engine not in ("mbm", "pmbm"):
        raise SchemaError("/calibration/engine", "must be 'mbm' or 'pmbm'")
    default = SizeBounds()
    bounds = SizeBounds(
        c=_pair(c["c_bounds_m"], "/calibration/c_bounds_m") if "c_bounds_m" in c else default.c,
        h=_pair(c["h_bounds_m"], "/calibration/h_bounds_m") if "h_bounds_m" in c else default.h,
    )
    init = None
    if "init" in c:
        items = _list(c["init"], "/calibration/init")
        if len(items) != n_bodies:
            raise SchemaError("/calibration/init", f"expected {n_bodies} entries, one per body")
        init = tuple(
            (
                _num(_obj(v, f"/calibration/init/{i}", {"c_m", "h_m"})["c_m"], f"/calibration/init/{i}/c_m", positive=True),
                _num(v["h_m"], f"/calibration/init/{i}/h_m", positive=True),
            )
            for i, v in enumerate(items)
        )
    return CalibrationConfig(shared, engine, bounds, init)


def parse_scenario(doc: Any) -> Scenario:
    top = _obj(doc, "", {"link", "bodies"}, {"stats", "sweeps", "quadrature", "calibration"})
    try:
        geometry = _link(top["link"])
    except ScenarioError as exc:
        raise SchemaError("/link", str(exc)) from exc
    bodies = tuple(_body(b, f"/bodies/{i}") for i, b in enumerate(_list(top["bodies"], "/bodies")))
    stats = _stats(top["stats"]) if "stats" in top else None
    sweeps = tuple(
        _sweep(s, f"/sweeps/{i}", len(bodies))
        for i, s in enumerate(_list(top.get("sweeps", []), "/sweeps"))
    )
    names = [s.name for s in sweeps]
    if len(set(names)) != len(names):
        raise SchemaError("/sweeps", "sweep names must be unique")
    quad = _quadrature(top["quadrature"]) if "quadrature" in top else DEFAULT_SPEC
    calib = _calibration(top["calibration"], len(bodies)) if "calibration" in top else CalibrationConfig()
    return Scenario(geometry, bodies, stats, sweeps, quad, calib)


def parse_measurements(doc: Any) -> Measurements:
    top = _obj(doc, "", {"landmarks", "reference"})
    ref = _obj(top["reference"], "/reference", {"mu0_dbm"}, {"sigma0_sq"})
    mu0 = _num(ref["mu0_dbm"], "/reference/mu0_dbm")
    sigma0_sq = _num(ref.get("sigma0_sq", 0.0), "/reference/sigma0_sq", nonneg=True)
    items = _list(top["landmarks"], "/landmarks")
    if not items:
        raise SchemaError("/landmarks", "at least one landmark is required")
    landmarks = []
    for i, item in enumerate(items):
        ptr = f"/landmarks/{i}"
        lm = _obj(item, ptr, {"bodies", "rss_mean_dbm"}, {"rss_var_db2", "n_samples"})
        positions = []
        for j, b in enumerate(_list(lm["bodies"], f"{ptr}/bodies")):
            bp = f"{ptr}/bodies/{j}"
            b = _obj(b, bp, {"x_m"}, {"y_m"})
            positions.append((_num(b["x_m"], f"{bp}/x_m"), _num(b.get("y_m", 0.0), f"{bp}/y_m")))
        landmarks.append(
            LandmarkMeasurement(
                positions=tuple(positions),
                rss_mean=_num(lm["rss_mean_dbm"], f"{ptr}/rss_mean_dbm"),
                rss_var=_num(lm.get("rss_var_db2", 0.0), f"{ptr}/rss_var_db2", nonneg=True),
                n_samples=_int(lm["n_samples"], f"{ptr}/n_samples", 1) if "n_samples" in lm else None,
            )
        )
    return Measurements(tuple(landmarks), mu0, sigma0_sq)


def _load(path: str | Path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError("/", f"cannot read {path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("/", f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario(_load(path))


def load_measurements(path: str | Path) -> Measurements:
    return parse_measurements(_load(path))

"""RSS mean and variance with bodies that turn and sway.

With at least one body near the link the received power (dB) is

    P = P_L - A_dB(X + dX, chi) + w,   w ~ N(dmu_C, sigma0^2 + dsigma_C^2)

and otherwise P = P_L + w0 with w0 ~ N(0, sigma0^2). Orientation and small
displacements are uniform; the mean and variance of A_dB over them are
estimated by Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from ._parallel import parallel_map
from .diffraction_full import (
    DEFAULT_SPEC,
    QuadratureSpec,
    attenuation_db,
    field_ratio_multi,
    field_ratio_single,
)
from .diffraction_paraxial import field_ratio_multi_paraxial, field_ratio_single_paraxial
from .scenario import Body, KnifeEdge, ScenarioGeometry, effective_width, in_link_region, knife_edge

ENGINES = ("mbm", "pmbm")
SINGLE_ENGINES = ("sbm", "psbm")
# Bodies whose near side is further than this many R_max from the axis are
# treated as outside the link region.
Y_CUTOFF_FACTOR = 5.0


@dataclass(frozen=True)
class StatParams:
    P_L: float
    seed: int
    sigma0_sq: float = 0.0
    delta_mu_C: float = 0.0
    delta_sigma_C_sq: float = 0.0
    B: float | None = None
    n_samples: int = 1000

    def __post_init__(self):
        if self.sigma0_sq < 0 or self.delta_sigma_C_sq < 0:
            raise ValueError("variances must be >= 0")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.B is not None and self.B < 0:
            raise ValueError("B must be >= 0")


@dataclass(frozen=True)
class AttenuationStats:
    delta_mu: float
    delta_sigma_sq: float
    mu1: float
    sigma1_sq: float
    mc_stderr: float
    mean_attenuation: float
    var_attenuation: float
    n_samples: int
    seed: int


def rss_empty(params: StatParams) -> tuple[float, float]:
    return params.P_L, params.sigma0_sq


def field_ratio(geometry, edges, engine: str, spec: QuadratureSpec = DEFAULT_SPEC):
    if engine == "mbm":
        return field_ratio_multi(geometry, edges, spec)
    if engine == "pmbm":
        return field_ratio_multi_paraxial(geometry, edges, spec)
    if engine == "sbm":
        (edge,) = edges
        return field_ratio_single(geometry, edge, spec)
    if engine == "psbm":
        (edge,) = edges
        return field_ratio_single_paraxial(geometry, edge)
    raise ValueError(f"unknown engine {engine!r}")


def attenuation(geometry, edges: Sequence[KnifeEdge], engine: str = "mbm", spec=DEFAULT_SPEC) -> float:
    """A_dB for the screens inside (0, d); 0 when there are none."""
    inside = [e for e in edges if in_link_region(geometry, e.x)]
    if not inside:
        return 0.0
    return attenuation_db(field_ratio(geometry, inside, engine, spec))


def y_cutoff(geometry: ScenarioGeometry, factor: float | None = Y_CUTOFF_FACTOR) -> float:
    return math.inf if factor is None else factor * geometry.r_max


def active_bodies(
    geometry: ScenarioGeometry, bodies: Sequence[Body], factor: float | None = Y_CUTOFF_FACTOR
) -> list[Body]:
    """Bodies inside the link region, dropping those far off the axis."""
    limit = y_cutoff(geometry, factor)
    return [
        b for b in bodies if in_link_region(geometry, b.x) and abs(b.y) - b.b / 2 <= limit
    ]


def _draws(n_bodies: int, params: StatParams):
    # Philox is counter based: the draws depend only on the seed, never on
    # how samples are later scheduled.
    rng = np.random.Generator(np.random.Philox(params.seed))
    u = rng.random((params.n_samples, n_bodies, 3))
    chi = np.pi * (2 * u[..., 0] - 1)
    return chi, 2 * u[..., 1] - 1, 2 * u[..., 2] - 1


def sample_attenuations(
    geometry: ScenarioGeometry,
    bodies: Sequence[Body],
    params: StatParams,
    engine: str = "mbm",
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> np.ndarray:
    """A_dB for each Monte Carlo draw of orientation and displacement.

    A body displaced out of (0, d) casts no shadow in that draw.
    """
    if engine not in ENGINES:
        raise ValueError(f"engine must be one of {ENGINES}, got {engine!r}")
    chi, ux, uy = _draws(len(bodies), params)
    spans = np.array([b.B if params.B is None else params.B for b in bodies])
    dx = ux * spans
    dy = uy * spans

    configs = []
    for s in range(params.n_samples):
        edges = []
        for n, body in enumerate(bodies):
            x = body.x + dx[s, n]
            if not in_link_region(geometry, x):
                continue
            moved = replace(body, x=x, y=body.y + dy[s, n])
            edges.append(knife_edge(geometry, moved, chi[s, n]))
        edges.sort(key=lambda e: e.x)
        configs.append(tuple(edges))

    unique = list(dict.fromkeys(configs))
    values = parallel_map(lambda edges: attenuation(geometry, edges, engine, spec), unique)
    table = dict(zip(unique, values))
    return np.array([table[c] for c in configs])


def attenuation_stats(
    geometry: ScenarioGeometry,
    bodies: Sequence[Body],
    params: StatParams,
    engine: str = "mbm",
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> AttenuationStats:
    if not any(in_link_region(geometry, b.x) for b in bodies):
        raise ValueError("attenuation_stats needs at least one body inside (0, d)")
    A = sample_attenuations(geometry, bodies, params, engine, spec)
    # Shifted moments: identical samples give exactly their value and zero variance.
    shift = A[0]
    dev = A - shift
    mean = shift + dev.mean()
    var = float(np.var(dev, ddof=1)) if A.size > 1 else 0.0
    delta_mu = params.delta_mu_C - mean
    delta_sigma_sq = params.delta_sigma_C_sq + var
    return AttenuationStats(
        delta_mu=float(delta_mu),
        delta_sigma_sq=float(delta_sigma_sq),
        mu1=float(params.P_L + delta_mu),
        sigma1_sq=float(params.sigma0_sq + delta_sigma_sq),
        mc_stderr=math.sqrt(var / A.size),
        mean_attenuation=float(mean),
        var_attenuation=var,
        n_samples=int(A.size),
        seed=params.seed,
    )


def additive_attenuation(
    geometry: ScenarioGeometry,
    bodies: Sequence[Body | KnifeEdge],
    engine: str = "sbm",
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> float:
    """Sum of single-body attenuations, each computed with the others absent."""
    if engine not in SINGLE_ENGINES:
        raise ValueError(f"engine must be one of {SINGLE_ENGINES}, got {engine!r}")
    edges = [knife_edge(geometry, b) if isinstance(b, Body) else b for b in bodies]
    edges = [e for e in edges if in_link_region(geometry, e.x)]
    if not edges:
        raise ValueError("additive_attenuation needs at least one body inside (0, d)")
    return float(sum(attenuation_db(field_ratio(geometry, [e], engine, spec)) for e in edges))


def predict_rss(
    geometry: ScenarioGeometry,
    bodies: Sequence[Body],
    params: StatParams,
    engine: str = "mbm",
    spec: QuadratureSpec = DEFAULT_SPEC,
    cutoff_factor: float | None = Y_CUTOFF_FACTOR,
) -> tuple[float, float]:
    """(mean dBm, variance dB^2) of the received power."""
    active = active_bodies(geometry, bodies, cutoff_factor)
    if not active:
        return rss_empty(params)
    stats = attenuation_stats(geometry, active, params, engine, spec)
    return stats.mu1, stats.sigma1_sq

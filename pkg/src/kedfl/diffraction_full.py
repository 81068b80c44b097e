"""Non-paraxial scalar diffraction by absorbing knife-edges.

The field behind a set of screens is expanded over subsets: every subset T of
screens contributes a coupled Huygens integral Psi(T) over the screens of T
alone, and

    E^(T)/E0 = sum_{U subset of T} (-1)^|U| Psi(U),   Psi(empty) = 1.

Psi is evaluated as a cascade: the TX field is sampled on the first screen,
propagated screen to screen with the exact 3D kernel exp(-jkr)/r, and
collected at the RX. Each screen carries a tensor Gauss-Legendre grid whose
panels are sized from a bound on the local phase rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from ._parallel import get_threads, parallel_map
from .exceptions import CapabilityError, QuadratureError
from .scenario import KnifeEdge, ScenarioGeometry, check_separation, in_link_region

GAUSS_ORDER = 8
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GAUSS_ORDER)
# Psi values smaller than this are judged on absolute rather than relative change.
ABS_FLOOR = 1e-3
SATURATION_FLOOR = 1e-9
DEFAULT_CAP = 3


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-4
    max_panels_per_dim: int = 4096
    phase_step: float = math.pi / 4

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if not 0 < self.phase_step <= math.pi / 2:
            raise ValueError(f"phase_step must be in (0, pi/2], got {self.phase_step}")
        if self.max_panels_per_dim < 1:
            raise ValueError("max_panels_per_dim must be >= 1")


DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class FieldRatio:
    """E/E0 with the quadrature error bound carried along."""

    value: complex
    err_estimate: float = 0.0

    @property
    def attenuation_db(self) -> float:
        return attenuation_db(self)


def attenuation_db(ratio) -> float:
    """-10 log10 |E/E0|^2, saturating at 180 dB for vanishing fields."""
    value = ratio.value if isinstance(ratio, FieldRatio) else ratio
    mag = max(abs(value), SATURATION_FLOOR)
    return -20.0 * math.log10(mag)


def _panel_rule(lo: float, hi: float, panels: int):
    cuts = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(cuts)
    mid = 0.5 * (cuts[:-1] + cuts[1:])
    x = (mid[:, None] + half[:, None] * _GL_X).ravel()
    w = (half[:, None] * _GL_W).ravel()
    return x, w


def _slope(lo, hi, nlo, nhi, sep):
    """Bound on |d r / d coordinate| between an interval and its neighbour."""
    reach = max(abs(hi - nlo), abs(nhi - lo))
    return reach / math.hypot(sep, reach)


def _phase_rates(geometry: ScenarioGeometry, edges: Sequence[KnifeEdge]):
    """Per screen, bounds on the phase rate (rad/m) along y and along z."""
    k = 2 * math.pi / geometry.wavelength
    xs = [0.0] + [e.x for e in edges] + [geometry.d]
    y_iv = [(0.0, 0.0)] + [(e.y_lo, e.y_hi) for e in edges] + [(0.0, 0.0)]
    z_iv = [(0.0, 0.0)] + [(e.z_lo, e.z_hi) for e in edges] + [(0.0, 0.0)]
    rates = []
    for n in range(1, len(edges) + 1):
        sl, sr = xs[n] - xs[n - 1], xs[n + 1] - xs[n]
        ry = k * (_slope(*y_iv[n], *y_iv[n - 1], sl) + _slope(*y_iv[n], *y_iv[n + 1], sr))
        rz = k * (_slope(*z_iv[n], *z_iv[n - 1], sl) + _slope(*z_iv[n], *z_iv[n + 1], sr))
        rates.append((ry, rz))
    return rates


def _panels_for(width: float, rate: float, step: float) -> int:
    nodes = width * rate / step
    return max(1, math.ceil(nodes / GAUSS_ORDER))


def _propagate(amp, src, dst, sep, k):
    ys, zs = src
    yd, zd = dst
    total = yd.size * zd.size
    out = np.empty(total, dtype=np.complex128)
    nthreads = get_threads()
    chunks = max(1, min(nthreads * 4, total // 64))
    bounds = np.linspace(0, total, chunks + 1).astype(int)

    def work(i):
        _kernels.propagate(amp, ys, zs, yd, zd, sep, k, bounds[i], bounds[i + 1], out)

    parallel_map(work, range(chunks))
    return out.reshape(yd.size, zd.size)


def _cascade(geometry: ScenarioGeometry, edges: Sequence[KnifeEdge], panels) -> complex:
    lam = geometry.wavelength
    k = 2 * math.pi / lam
    grids = []
    for e, (py, pz) in zip(edges, panels):
        y, wy = _panel_rule(e.y_lo, e.y_hi, py)
        z, wz = _panel_rule(e.z_lo, e.z_hi, pz)
        grids.append((y, z, np.outer(wy, wz)))

    y, z, w = grids[0]
    amp = w * _kernels.point_kernel(y, z, edges[0].x, k)
    for n in range(1, len(edges)):
        sep = edges[n].x - edges[n - 1].x
        yn, zn, wn = grids[n]
        amp = wn * _propagate(amp, (y, z), (yn, zn), sep, k)
        y, z = yn, zn
    tail = geometry.d - edges[-1].x
    total = np.sum(amp * _kernels.point_kernel(y, z, tail, k))
    m = len(edges)
    return complex((1j**m) * geometry.d / lam**m * total)


def psi_subset(
    geometry: ScenarioGeometry,
    edges: Sequence[KnifeEdge],
    spec: QuadratureSpec = DEFAULT_SPEC,
    cap: int = DEFAULT_CAP,
) -> tuple[complex, float]:
    """Coupled integral over the screens in ``edges`` (sorted by x).

    Returns ``(psi, err)`` where ``err`` is the change over the last grid
    refinement. For a single screen, 1 - psi is the field ratio.
    """
    m = len(edges)
    if m == 0:
        return 1.0 + 0j, 0.0
    if m > cap:
        raise CapabilityError(f"{m} screens exceed the full-model cap of {cap}")
    if any(b.x <= a.x for a, b in zip(edges, edges[1:])):
        raise ValueError("edges must be sorted by strictly increasing x")
    if any(e.empty for e in edges):
        return 0j, 0.0

    rates = _phase_rates(geometry, edges)
    widths = [(e.c, e.z_hi - e.z_lo) for e in edges]
    prev = None
    level = 0
    while True:
        step = spec.phase_step * 2.0 ** (1 - level)
        panels = [
            (_panels_for(wy, ry, step), _panels_for(wz, rz, step))
            for (wy, wz), (ry, rz) in zip(widths, rates)
        ]
        if max(max(p) for p in panels) > spec.max_panels_per_dim:
            raise QuadratureError(
                f"no convergence within {spec.max_panels_per_dim} panels per dimension"
                + (f" (last change {abs(cur - prev):.3g})" if prev is not None else "")
            )
        cur = _cascade(geometry, edges, panels)
        if prev is not None:
            delta = abs(cur - prev)
            if delta <= spec.rel_tol * max(abs(cur), ABS_FLOOR):
                return cur, delta
        prev = cur
        level += 1


def combine_subsets(n: int, psi: Callable[[tuple[int, ...]], tuple[complex, float]]):
    """Field ratios of every subset of ``n`` screens from their Psi terms.

    Subsets are processed by increasing size with

        E^(T) = (-1)^|T| [ sum_{U proper subset of T} (-1)^(|U|+1) E^(U) + Psi(T) ]

    Returns ``(fields, psis)`` keyed by index tuples; ``fields[()] == 1``.
    Psi evaluations run through :func:`parallel_map`.
    """
    keys = [s for size in range(1, n + 1) for s in combinations(range(n), size)]
    results = parallel_map(psi, keys)
    psis = dict(zip(keys, results))
    fields: dict[tuple[int, ...], FieldRatio] = {(): FieldRatio(1.0 + 0j, 0.0)}
    for key in keys:
        size = len(key)
        acc = 0j
        err = 0.0
        for sub_size in range(size):
            sign = (-1) ** (sub_size + 1)
            for sub in combinations(key, sub_size):
                acc += sign * fields[sub].value
                if sub:
                    err += psis[sub][1]
        p, perr = psis[key]
        value = (-1) ** size * (acc + p)
        fields[key] = FieldRatio(complex(value), err + perr)
    return fields, psis


def _active_sorted(geometry: ScenarioGeometry, edges: Sequence[KnifeEdge]) -> list[KnifeEdge]:
    inside = [e for e in edges if in_link_region(geometry, e.x)]
    inside.sort(key=lambda e: e.x)
    check_separation(geometry, inside)
    return inside


def field_ratio_single(
    geometry: ScenarioGeometry, edge: KnifeEdge, spec: QuadratureSpec = DEFAULT_SPEC
) -> FieldRatio:
    if not in_link_region(geometry, edge.x):
        raise ValueError(f"edge at x={edge.x} is outside (0, d)")
    psi, err = psi_subset(geometry, [edge], spec)
    return FieldRatio(1.0 - psi, err)


def expand(
    geometry: ScenarioGeometry,
    edges: Sequence[KnifeEdge],
    spec: QuadratureSpec = DEFAULT_SPEC,
    cap: int = DEFAULT_CAP,
):
    """Full subset expansion for the screens inside the link region.

    Returns ``(sorted_edges, fields, psis)`` as from :func:`combine_subsets`.
    """
    active = _active_sorted(geometry, edges)
    if len(active) > cap:
        raise CapabilityError(f"{len(active)} bodies exceed the full-model cap of {cap}")

    def psi(key):
        return psi_subset(geometry, [active[i] for i in key], spec, cap)

    fields, psis = combine_subsets(len(active), psi)
    return active, fields, psis


def field_ratio_multi(
    geometry: ScenarioGeometry,
    edges: Sequence[KnifeEdge],
    spec: QuadratureSpec = DEFAULT_SPEC,
    cap: int = DEFAULT_CAP,
) -> FieldRatio:
    """E/E0 with every screen present; screens outside (0, d) are ignored."""
    active, fields, _ = expand(geometry, edges, spec, cap)
    return fields[tuple(range(len(active)))]


def mixed_term(psis, n: int) -> complex:
    """Psi over all n screens, the part of the field an additive model misses."""
    if n == 0:
        return 0j
    return psis[tuple(range(n))][0]

"""Paraxial knife-edge models.

In the small-angle limit every path-length excess is quadratic in the screen
coordinates, so each Psi term factors into a horizontal (u) and a vertical
(v) block:

    Psi~(S_1..S_k) = (j/2)^k * D * I_u * I_v,
    I = int_box exp(-j pi/2 (sum u_n^2 - 2 sum alpha_n u_n u_{n+1})) du

with coordinates scaled by sqrt(2)/R_n on screen n. The quadratic form is a
chain, so each block is integrated edge to edge: a sampled amplitude is
carried through the first k-1 screens with composite Gauss-Legendre rules
and the last screen is done in closed form with Fresnel integrals.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy import integrate

from .diffraction_full import (
    DEFAULT_SPEC,
    GAUSS_ORDER,
    FieldRatio,
    QuadratureSpec,
    combine_subsets,
)
from .exceptions import CapabilityError, QuadratureError
from .scenario import (
    KnifeEdge,
    LinkPartition,
    ScenarioGeometry,
    check_separation,
    fresnel_radius,
    generalized_radii_and_couplings,
    in_link_region,
)
from .special import fresnel_segment

DEFAULT_CAP = 6
START_NODES = 129
# Absolute accuracy claimed for a single Fresnel integral evaluation.
FRESNEL_ERR = 1e-12
_SQRT2 = math.sqrt(2.0)
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GAUSS_ORDER)


def _scaled_bounds(edge: KnifeEdge, radius: float):
    u = (_SQRT2 * edge.y_lo / radius, _SQRT2 * edge.y_hi / radius)
    v = (_SQRT2 * edge.z_lo / radius, _SQRT2 * edge.z_hi / radius)
    return u, v


def field_ratio_single_paraxial(geometry: ScenarioGeometry, edge: KnifeEdge) -> FieldRatio:
    """Closed-form single-screen field ratio, 1 - (j/2) U V."""
    R = fresnel_radius(geometry, edge.x)
    if edge.empty:
        return FieldRatio(1.0 + 0j, 0.0)
    (ulo, uhi), (vlo, vhi) = _scaled_bounds(edge, R)
    U = fresnel_segment(ulo, uhi)
    V = fresnel_segment(vlo, vhi)
    err = 2 * FRESNEL_ERR * (abs(U) + abs(V))
    return FieldRatio(complex(1.0 - 0.5j * U * V), err)


def _rule(lo, hi, panels):
    cuts = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(cuts)
    mid = 0.5 * (cuts[:-1] + cuts[1:])
    return (mid[:, None] + half[:, None] * _GL_X).ravel(), (half[:, None] * _GL_W).ravel()


def _chain(bounds, alphas, panels: int) -> complex:
    """Coupled chirp integral over a box; the last dimension is exact."""
    u, w = _rule(*bounds[0], panels)
    amp = w * np.exp(-0.5j * np.pi * u * u)
    for n in range(1, len(bounds) - 1):
        un, wn = _rule(*bounds[n], panels)
        coupling = np.exp(1j * np.pi * alphas[n - 1] * np.outer(u, un))
        amp = wn * np.exp(-0.5j * np.pi * un * un) * (amp[:, None] * coupling).sum(axis=0)
        u = un
    a = alphas[-1]
    lo, hi = bounds[-1]
    tail = np.exp(0.5j * np.pi * a * a * u * u) * fresnel_segment(lo - a * u, hi - a * u)
    return complex(np.sum(amp * tail))


def _block(bounds, alphas, spec: QuadratureSpec) -> tuple[complex, float]:
    for lo, hi in bounds[:-1]:
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError("only the last screen of a paraxial chain may be unbounded")
    panels = math.ceil(START_NODES / GAUSS_ORDER)
    prev = _chain(bounds, alphas, panels)
    while True:
        panels *= 2
        if panels > spec.max_panels_per_dim:
            raise QuadratureError(
                f"paraxial chain did not converge within {spec.max_panels_per_dim} panels"
            )
        cur = _chain(bounds, alphas, panels)
        delta = abs(cur - prev)
        if delta <= spec.rel_tol * abs(cur) or delta <= 1e-15:
            return cur, delta
        prev = cur


def segment_prefactor(segments: np.ndarray) -> float:
    """d * prod(d_{n,n+1}) / prod(d_left + d_right); equals 1 for one screen."""
    d = float(np.sum(segments))
    num = d * float(np.prod(segments[1:-1]))
    den = float(np.prod(segments[:-1] + segments[1:]))
    return num / den


def psi_tilde_subset(
    geometry: ScenarioGeometry,
    edges: Sequence[KnifeEdge],
    spec: QuadratureSpec = DEFAULT_SPEC,
) -> tuple[complex, float]:
    """Paraxial coupled term over ``edges`` (sorted by x) and its error bound."""
    k = len(edges)
    if k == 0:
        return 1.0 + 0j, 0.0
    if any(e.empty for e in edges):
        return 0j, 0.0
    if k == 1:
        ratio = field_ratio_single_paraxial(geometry, edges[0])
        return 1.0 - ratio.value, ratio.err_estimate

    part = LinkPartition(tuple(e.x for e in edges), geometry.d)
    radii, alphas = generalized_radii_and_couplings(part, geometry.wavelength)
    D = segment_prefactor(part.segments)
    scaled = [_scaled_bounds(e, R) for e, R in zip(edges, radii)]
    Iu, eu = _block([s[0] for s in scaled], alphas, spec)
    Iv, ev = _block([s[1] for s in scaled], alphas, spec)
    scale = abs(0.5**k * D)
    err = scale * (abs(Iu) * ev + abs(Iv) * eu + eu * ev)
    return complex((0.5j) ** k * D * Iu * Iv), err


def field_ratio_multi_paraxial(
    geometry: ScenarioGeometry,
    edges: Sequence[KnifeEdge],
    spec: QuadratureSpec = DEFAULT_SPEC,
    cap: int = DEFAULT_CAP,
) -> FieldRatio:
    """Paraxial E/E0 for all screens inside (0, d) via the subset expansion."""
    active, fields, _ = expand_paraxial(geometry, edges, spec, cap)
    return fields[tuple(range(len(active)))]


def expand_paraxial(
    geometry: ScenarioGeometry,
    edges: Sequence[KnifeEdge],
    spec: QuadratureSpec = DEFAULT_SPEC,
    cap: int = DEFAULT_CAP,
):
    active = sorted((e for e in edges if in_link_region(geometry, e.x)), key=lambda e: e.x)
    check_separation(geometry, active)
    if len(active) > cap:
        raise CapabilityError(f"{len(active)} bodies exceed the paraxial cap of {cap}")

    def psi(key):
        return psi_tilde_subset(geometry, [active[i] for i in key], spec)

    fields, psis = combine_subsets(len(active), psi)
    return active, fields, psis


def _pair_block(b1, b2, alpha, epsabs=1e-11, epsrel=1e-10) -> complex:
    """Two-screen chirp integral, first variable exact, second by adaptive quadrature."""
    lo1, hi1 = b1

    def f(u2):
        return np.exp(-0.5j * np.pi * (1 - alpha * alpha) * u2 * u2) * fresnel_segment(
            lo1 - alpha * u2, hi1 - alpha * u2
        )

    opts = dict(epsabs=epsabs, epsrel=epsrel, limit=2000)
    re, _ = integrate.quad(lambda t: f(t).real, *b2, **opts)
    im, _ = integrate.quad(lambda t: f(t).imag, *b2, **opts)
    return complex(re, im)


def field_ratio_dual_paraxial(
    geometry: ScenarioGeometry, e1: KnifeEdge, e2: KnifeEdge
) -> FieldRatio:
    """Two-screen paraxial field ratio written out directly.

    -1 + E1/E0 + E2/E0 - (1/4) D J_v J_u, where the mixed double integrals
    are computed with adaptive quadrature (a route independent of the
    chained Gauss rules in :func:`field_ratio_multi_paraxial`).
    """
    e1, e2 = sorted((e1, e2), key=lambda e: e.x)
    E1 = field_ratio_single_paraxial(geometry, e1)
    E2 = field_ratio_single_paraxial(geometry, e2)
    if e1.empty or e2.empty:
        mixed = 0j
    else:
        part = LinkPartition((e1.x, e2.x), geometry.d)
        (R1, R2), (alpha,) = generalized_radii_and_couplings(part, geometry.wavelength)
        D = segment_prefactor(part.segments)
        (u1, v1), (u2, v2) = _scaled_bounds(e1, R1), _scaled_bounds(e2, R2)
        mixed = -0.25 * D * _pair_block(v1, v2, alpha) * _pair_block(u1, u2, alpha)
    value = -1.0 + E1.value + E2.value + mixed
    return FieldRatio(complex(value), E1.err_estimate + E2.err_estimate)

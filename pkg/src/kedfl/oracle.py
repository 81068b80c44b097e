"""Brute-force reference for the knife-edge field ratio.

Each screen is cut into square-ish cells and the Huygens cascade is summed
cell by cell with the midpoint rule, with exact 3D distances throughout. The
screens block the wave, so the field is the cascade over the complement of
every screen; expanding the product of (whole plane - screen) terms, and
using the fact that a whole plane passes the wave unchanged, gives a signed
sum over subsets of screens. Nothing here is shared with the production
engines: no Gauss rules, no panel sizing, no compiled kernels.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import Sequence

import numpy as np

from .diffraction_full import FieldRatio
from .exceptions import CapabilityError
from .scenario import KnifeEdge, ScenarioGeometry

MAX_BODIES = 2
MAX_KERNEL_EVALS = 3e9
_CHUNK = 200_000


def _cells(edge: KnifeEdge, step: float):
    ny = max(1, math.ceil(edge.c / step - 1e-9))
    nz = max(1, math.ceil((edge.z_hi - edge.z_lo) / step - 1e-9))
    hy = edge.c / ny
    hz = (edge.z_hi - edge.z_lo) / nz
    y = edge.y_lo + (np.arange(ny) + 0.5) * hy
    z = edge.z_lo + (np.arange(nz) + 0.5) * hz
    Y, Z = np.meshgrid(y, z, indexing="ij")
    return Y.ravel(), Z.ravel(), hy * hz


def _midpoint_psi(geometry: ScenarioGeometry, edges: Sequence[KnifeEdge], step: float) -> complex:
    lam = geometry.wavelength
    k = 2 * np.pi / lam
    d = geometry.d
    if any(e.c == 0 for e in edges):
        return 0j
    cells = [_cells(e, step) for e in edges]

    y, z, dS = cells[0]
    x = edges[0].x
    r = np.sqrt(x * x + y * y + z * z)
    field = np.exp(-1j * k * (r - x)) / r * dS
    for n in range(1, len(edges)):
        yn, zn, dSn = cells[n]
        sep = edges[n].x - edges[n - 1].x
        nxt = np.empty(yn.size, dtype=complex)
        rows = max(1, _CHUNK // y.size)
        for s in range(0, yn.size, rows):
            dy = yn[None, s:s + rows] - y[:, None]
            dz = zn[None, s:s + rows] - z[:, None]
            rr = np.sqrt(sep * sep + dy * dy + dz * dz)
            g = np.exp(-1j * k * (rr - sep)) / rr
            nxt[s:s + rows] = (field[:, None] * g).sum(axis=0)
        field = nxt * dSn
        y, z = yn, zn
    tail = d - edges[-1].x
    r = np.sqrt(tail * tail + y * y + z * z)
    total = (field * np.exp(-1j * k * (r - tail)) / r).sum()
    m = len(edges)
    return (1j**m) * d / lam**m * total


def _field(geometry: ScenarioGeometry, edges: Sequence[KnifeEdge], step: float) -> complex:
    value = 0j
    for size in range(len(edges) + 1):
        for subset in combinations(edges, size):
            term = 1.0 if size == 0 else _midpoint_psi(geometry, subset, step)
            value += (-1) ** size * term
    return value


def _cost(edges: Sequence[KnifeEdge], step: float) -> float:
    counts = [math.ceil(e.c / step) * math.ceil((e.z_hi - e.z_lo) / step) for e in edges]
    return float(np.prod(counts)) if len(counts) == 2 else float(sum(counts))


def oracle_field_ratio(
    geometry: ScenarioGeometry, edges: Sequence[KnifeEdge], grid_step: float | None = None
) -> FieldRatio:
    """Midpoint-rule E/E0 for at most two screens.

    ``grid_step`` defaults to lambda/8 and may not exceed lambda/6. The error
    estimate is the change against a grid twice as coarse.
    """
    lam = geometry.wavelength
    if grid_step is None:
        grid_step = lam / 8
    if not 0 < grid_step <= lam / 6 * (1 + 1e-12):
        raise ValueError(f"grid_step must be in (0, lambda/6]; got {grid_step}")
    inside = sorted((e for e in edges if 0 < e.x < geometry.d), key=lambda e: e.x)
    if len(inside) > MAX_BODIES:
        raise CapabilityError(f"oracle handles at most {MAX_BODIES} bodies, got {len(inside)}")
    if _cost(inside, grid_step) > MAX_KERNEL_EVALS:
        raise CapabilityError(
            f"grid step {grid_step:.4g} m needs more than {MAX_KERNEL_EVALS:.0e} kernel evaluations"
        )
    fine = _field(geometry, inside, grid_step)
    coarse = _field(geometry, inside, 2 * grid_step)
    return FieldRatio(complex(fine), float(abs(fine - coarse)))

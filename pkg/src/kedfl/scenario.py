"""Link geometry, bodies and their knife-edge screens.

Coordinates: TX at the origin, RX at (d, 0, 0), the link axis along x at
height H above the floor. Knife-edges are vertical rectangles orthogonal to
the axis; their vertical extent is measured from the link axis, so a body of
height h standing on the floor spans z in [-H, h - H].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .exceptions import ScenarioError

C0 = 299_792_458.0


@dataclass(frozen=True)
class ScenarioGeometry:
    d: float
    H: float
    wavelength: float

    def __post_init__(self):
        for name in ("d", "H", "wavelength"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ScenarioError(f"{name} must be positive and finite, got {v!r}")

    @classmethod
    def from_frequency(cls, d: float, H: float, freq_hz: float) -> "ScenarioGeometry":
        if not freq_hz > 0:
            raise ScenarioError(f"frequency must be positive, got {freq_hz!r}")
        return cls(d=d, H=H, wavelength=C0 / freq_hz)

    @property
    def r_max(self) -> float:
        """Largest first-Fresnel-zone radius, reached at mid-link."""
        return math.sqrt(self.wavelength * self.d) / 2

    @property
    def clearance_ok(self) -> bool:
        return 2 * self.H > math.sqrt(self.wavelength * self.d)


@dataclass(frozen=True)
class Body:
    """Elliptical-cylinder target standing on the floor.

    ``a``/``b`` are the minor/major widths (m), ``chi`` the angle between the
    major axis and the link direction, ``B`` the half-range of the random
    displacement around the nominal position (x, y).
    """

    a: float
    b: float
    h: float
    x: float
    y: float = 0.0
    chi: float = 0.0
    B: float = 0.0

    def __post_init__(self):
        if not (0 < self.a <= self.b):
            raise ScenarioError(f"need 0 < a <= b, got a={self.a}, b={self.b}")
        if not self.h > 0:
            raise ScenarioError(f"body height must be positive, got {self.h}")
        if not self.B >= 0:
            raise ScenarioError(f"movement range B must be >= 0, got {self.B}")


@dataclass(frozen=True)
class KnifeEdge:
    x: float
    y_center: float
    c: float
    z_lo: float
    z_hi: float

    def __post_init__(self):
        if not self.c >= 0:
            raise ScenarioError(f"edge width must be >= 0, got {self.c}")
        if not self.z_lo < self.z_hi:
            raise ScenarioError(f"need z_lo < z_hi, got {self.z_lo}, {self.z_hi}")

    @property
    def y_lo(self) -> float:
        return self.y_center - self.c / 2

    @property
    def y_hi(self) -> float:
        return self.y_center + self.c / 2

    @property
    def empty(self) -> bool:
        return self.c == 0

    def mirrored(self, d: float) -> "KnifeEdge":
        """Same screen seen with TX and RX swapped."""
        return replace(self, x=d - self.x)


@dataclass(frozen=True)
class LinkPartition:
    positions: tuple[float, ...]
    d: float

    @property
    def segments(self) -> np.ndarray:
        """d_1, d_{1,2}, ..., d_{N-1,N}, d_N."""
        pts = np.concatenate(([0.0], self.positions, [self.d]))
        return np.diff(pts)


@dataclass
class ValidationReport:
    warnings: list[str] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    clearance_violation: bool = False
    inactive: list[int] = field(default_factory=list)
    degenerate_pairs: list[tuple[int, int]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def in_link_region(geometry: ScenarioGeometry, x: float) -> bool:
    return 0 < x < geometry.d


def validate(geometry: ScenarioGeometry, bodies: Sequence[Body]) -> ValidationReport:
    report = ValidationReport()
    if not geometry.clearance_ok:
        report.clearance_violation = True
        report.warnings.append(
            f"clearance violated: 2H={2 * geometry.H:.4g} <= "
            f"sqrt(lambda d)={math.sqrt(geometry.wavelength * geometry.d):.4g}; "
            "floor effects are not negligible"
        )
    active = []
    for i, body in enumerate(bodies):
        if in_link_region(geometry, body.x):
            active.append(i)
        else:
            report.inactive.append(i)
            report.warnings.append(f"body {i} at x={body.x} is outside (0, d) and is ignored")
    min_sep = geometry.wavelength / 10
    for ii, i in enumerate(active):
        for j in active[ii + 1:]:
            if abs(bodies[i].x - bodies[j].x) < min_sep:
                report.degenerate_pairs.append((i, j))
                report.errors.append(
                    f"bodies {i} and {j} are closer than lambda/10 along the link "
                    f"(x={bodies[i].x}, x={bodies[j].x})"
                )
    return report


def effective_width(body: Body, chi: float | None = None) -> float:
    """Width of the body's shadow on the plane orthogonal to the link.

    Silhouette width of an elliptical cylinder: b when the major axis is
    broadside to the link (chi = 0), a when it points along it.
    """
    if chi is None:
        chi = body.chi
    s, c = math.sin(chi), math.cos(chi)
    w = math.sqrt(body.a**2 * s * s + body.b**2 * c * c)
    return min(max(w, body.a), body.b)


def knife_edge(geometry: ScenarioGeometry, body: Body, chi: float | None = None) -> KnifeEdge:
    return KnifeEdge(
        x=body.x,
        y_center=body.y,
        c=effective_width(body, chi),
        z_lo=-geometry.H,
        z_hi=body.h - geometry.H,
    )


def sized_edge(geometry: ScenarioGeometry, x: float, y: float, c: float, h: float) -> KnifeEdge:
    """Knife-edge for a body given directly by its width and height."""
    return KnifeEdge(x=x, y_center=y, c=c, z_lo=-geometry.H, z_hi=h - geometry.H)


def check_separation(geometry: ScenarioGeometry, edges: Sequence[KnifeEdge]) -> None:
    xs = sorted(e.x for e in edges)
    min_sep = geometry.wavelength / 10
    for x0, x1 in zip(xs, xs[1:]):
        if x1 - x0 < min_sep:
            raise ScenarioError(
                f"degenerate separation: edges at x={x0} and x={x1} are closer than lambda/10"
            )


def partition(geometry: ScenarioGeometry, edges: Sequence[KnifeEdge]) -> LinkPartition:
    """Split the link at the (sorted, strictly increasing) edge positions."""
    xs = tuple(e.x for e in edges)
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ScenarioError(f"edge positions must be strictly increasing, got {xs}")
    for x in xs:
        if not in_link_region(geometry, x):
            raise ScenarioError(f"edge at x={x} is outside (0, d)")
    check_separation(geometry, edges)
    return LinkPartition(positions=xs, d=geometry.d)


def fresnel_radius(geometry: ScenarioGeometry, x: float) -> float:
    if not in_link_region(geometry, x):
        raise ScenarioError(f"x={x} is outside (0, d)")
    d = geometry.d
    return math.sqrt(geometry.wavelength * x * (d - x) / d)


def generalized_radii_and_couplings(part: LinkPartition, wavelength: float):
    """Per-edge radii R_n and neighbour couplings alpha_{n,n+1}.

    1/R_n^2 = (1/d_left + 1/d_right)/lambda with d_left, d_right the segments
    adjacent to edge n; alpha_{n,n+1} = R_n R_{n+1} / (lambda d_{n,n+1}).
    """
    seg = part.segments
    if len(seg) < 2:
        raise ScenarioError("partition has no edges")
    if np.any(seg <= 0):
        raise ScenarioError(f"zero-length segment in partition {seg.tolist()}")
    inv = 1.0 / seg
    radii = np.sqrt(wavelength / (inv[:-1] + inv[1:]))
    alphas = radii[:-1] * radii[1:] / (wavelength * seg[1:-1])
    return radii, alphas

"""Fit EM-equivalent body widths and heights to landmark RSS means.

The fit is a box-constrained Levenberg-Marquardt on the mean RSS shift
dmu(X) = dmu_C - A_dB(X | c, h), with a forward-difference Jacobian: the
diffraction model has no analytic derivatives and each evaluation is costly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._parallel import parallel_map
from .diffraction_full import DEFAULT_SPEC, QuadratureSpec
from .exceptions import CalibrationError
from .scenario import ScenarioGeometry, in_link_region, sized_edge
from .statistical import ENGINES, Y_CUTOFF_FACTOR, attenuation, y_cutoff

FD_STEP = 0.01


@dataclass(frozen=True)
class LandmarkMeasurement:
    positions: tuple[tuple[float, float], ...]
    rss_mean: float
    rss_var: float = 0.0
    n_samples: int | None = None

    def __post_init__(self):
        if self.rss_var < 0:
            raise ValueError("rss_var must be >= 0")


@dataclass(frozen=True)
class SizeBounds:
    c: tuple[float, float] = (0.05, 1.0)
    h: tuple[float, float] = (0.5, 2.2)


@dataclass(frozen=True)
class CalibrationResult:
    c: tuple[float, ...]
    h: tuple[float, ...]
    rss: float
    iterations: int
    converged: bool
    residuals: tuple[float, ...] = ()
    history: tuple[float, ...] = ()
    shrinkage_c: tuple[float, ...] = ()
    shrinkage_h: tuple[float, ...] = ()
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "c_m": list(self.c),
            "h_m": list(self.h),
            "residual_ss_db2": self.rss,
            "iterations": self.iterations,
            "converged": self.converged,
            "residuals_db": list(self.residuals),
            "shrinkage_c": list(self.shrinkage_c),
            "shrinkage_h": list(self.shrinkage_h),
            "message": self.message,
        }


def _landmark_edges(geometry, landmark, sizes, limit):
    edges = []
    for (x, y), (c, h) in zip(landmark.positions, sizes):
        if in_link_region(geometry, x) and abs(y) - c / 2 <= limit:
            edges.append(sized_edge(geometry, x, y, c, h))
    return edges


def predicted_shift(
    geometry: ScenarioGeometry,
    landmarks: Sequence[LandmarkMeasurement],
    sizes: Sequence[tuple[float, float]],
    engine: str = "mbm",
    delta_mu_C: float = 0.0,
    spec: QuadratureSpec = DEFAULT_SPEC,
    cutoff_factor: float | None = Y_CUTOFF_FACTOR,
) -> np.ndarray:
    """Model dmu at every landmark for the given per-body (c, h)."""
    limit = y_cutoff(geometry, cutoff_factor)

    def one(lm):
        edges = _landmark_edges(geometry, lm, sizes, limit)
        return delta_mu_C - attenuation(geometry, edges, engine, spec)

    return np.array(parallel_map(one, landmarks))


def residuals(
    geometry: ScenarioGeometry,
    landmarks: Sequence[LandmarkMeasurement],
    sizes: Sequence[tuple[float, float]],
    engine: str = "mbm",
    mu0: float = 0.0,
    delta_mu_C: float = 0.0,
    spec: QuadratureSpec = DEFAULT_SPEC,
    cutoff_factor: float | None = Y_CUTOFF_FACTOR,
) -> np.ndarray:
    """measured dmu - predicted dmu per landmark (dB)."""
    measured = np.array([lm.rss_mean - mu0 for lm in landmarks])
    return measured - predicted_shift(
        geometry, landmarks, sizes, engine, delta_mu_C, spec, cutoff_factor
    )


@dataclass
class _Problem:
    geometry: ScenarioGeometry
    landmarks: Sequence[LandmarkMeasurement]
    n_bodies: int
    shared: bool
    engine: str
    mu0: float
    delta_mu_C: float
    spec: QuadratureSpec
    fd_step: float = FD_STEP
    lower: np.ndarray = field(init=False)
    upper: np.ndarray = field(init=False)
    bounds: SizeBounds = field(default_factory=SizeBounds)

    def __post_init__(self):
        n = 1 if self.shared else self.n_bodies
        self.lower = np.array([self.bounds.c[0]] * n + [self.bounds.h[0]] * n)
        self.upper = np.array([self.bounds.c[1]] * n + [self.bounds.h[1]] * n)

    def sizes(self, p):
        n = len(p) // 2
        c, h = p[:n], p[n:]
        if self.shared:
            return [(float(c[0]), float(h[0]))] * self.n_bodies
        return list(zip(map(float, c), map(float, h)))

    def pack(self, sizes):
        if self.shared:
            return np.array([sizes[0][0], sizes[0][1]], dtype=float)
        return np.array([s[0] for s in sizes] + [s[1] for s in sizes], dtype=float)

    def residuals(self, p):
        return residuals(
            self.geometry, self.landmarks, self.sizes(p), self.engine,
            self.mu0, self.delta_mu_C, self.spec,
        )

    def jacobian(self, p, r):
        cols = []
        for i in range(len(p)):
            h = self.fd_step
            step = h if p[i] + h <= self.upper[i] else -h
            q = p.copy()
            q[i] += step
            cols.append((self.residuals(q) - r) / step)
        return np.column_stack(cols)

    def result(self, p, r, iterations, converged, history, init, message=""):
        sizes = self.sizes(p)
        return CalibrationResult(
            c=tuple(s[0] for s in sizes),
            h=tuple(s[1] for s in sizes),
            rss=float(r @ r),
            iterations=iterations,
            converged=converged,
            residuals=tuple(float(v) for v in r),
            history=tuple(history),
            shrinkage_c=tuple(1 - s[0] / i[0] for s, i in zip(sizes, init)),
            shrinkage_h=tuple(1 - s[1] / i[1] for s, i in zip(sizes, init)),
            message=message,
        )


def calibrate(
    geometry: ScenarioGeometry,
    landmarks: Sequence[LandmarkMeasurement],
    init: Sequence[tuple[float, float]],
    engine: str = "mbm",
    mu0: float = 0.0,
    delta_mu_C: float = 0.0,
    bounds: SizeBounds = SizeBounds(),
    shared: bool = False,
    spec: QuadratureSpec = DEFAULT_SPEC,
    max_iter: int = 200,
    cost_tol: float = 1e-14,
    xtol: float = 1e-10,
    ftol: float = 1e-12,
    fd_step: float = FD_STEP,
) -> CalibrationResult:
    """Least-squares (c_n, h_n) per body, starting from ``init``.

    ``shared=True`` fits one (c, h) pair used by every body. Steps are
    projected onto ``bounds`` so iterates never leave the size box.
    Raises :class:`CalibrationError` when there is nothing to fit or the
    iteration cap is reached; the error carries the last iterate.

    ``fd_step`` is the forward-difference step (m). With strongly coupled
    parameters a step below 1 cm sharpens the Jacobian and speeds up the
    final approach considerably.
    """
    if not fd_step > 0:
        raise ValueError(f"fd_step must be positive, got {fd_step}")
    if engine not in ENGINES:
        raise ValueError(f"engine must be one of {ENGINES}, got {engine!r}")
    if not landmarks:
        raise ValueError("at least one landmark is required")
    n_bodies = len(init)
    for lm in landmarks:
        if len(lm.positions) != n_bodies:
            raise ValueError(
                f"landmark lists {len(lm.positions)} bodies but {n_bodies} sizes were given"
            )
    limit = y_cutoff(geometry)
    if all(not _landmark_edges(geometry, lm, init, limit) for lm in landmarks):
        raise CalibrationError("no gradient signal: every landmark is background")

    prob = _Problem(
        geometry, landmarks, n_bodies, shared, engine, mu0, delta_mu_C, spec, fd_step, bounds=bounds
    )
    p = np.clip(prob.pack(init), prob.lower, prob.upper)
    r = prob.residuals(p)
    cost = float(r @ r)
    history = [cost]
    damping = 1e-3
    for it in range(1, max_iter + 1):
        if cost <= cost_tol:
            return prob.result(p, r, it - 1, True, history, init, "residual below tolerance")
        J = prob.jacobian(p, r)
        if not np.any(np.abs(J) > 1e-12):
            raise CalibrationError(
                "no gradient signal: model output does not depend on the sizes",
                prob.result(p, r, it - 1, False, history, init),
            )
        JtJ = J.T @ J
        g = J.T @ r
        scale = np.maximum(np.diag(JtJ), 1e-12)
        accepted = False
        for _ in range(40):
            step = np.linalg.solve(JtJ + damping * np.diag(scale), -g)
            trial = np.clip(p + step, prob.lower, prob.upper)
            moved = trial - p
            if np.linalg.norm(moved) <= xtol * (np.linalg.norm(p) + xtol):
                break
            r_trial = prob.residuals(trial)
            cost_trial = float(r_trial @ r_trial)
            if cost_trial < cost:
                accepted = True
                break
            damping *= 4.0
        if not accepted:
            return prob.result(p, r, it, True, history, init, "step below tolerance")
        drop = cost - cost_trial
        p, r, cost = trial, r_trial, cost_trial
        history.append(cost)
        damping = max(damping / 3.0, 1e-12)
        if cost <= cost_tol or drop <= ftol * cost or np.linalg.norm(moved) <= xtol * np.linalg.norm(p):
            return prob.result(p, r, it, True, history, init, "converged")
    raise CalibrationError(
        f"no convergence within {max_iter} iterations",
        prob.result(p, r, max_iter, False, history, init, "iteration cap reached"),
    )

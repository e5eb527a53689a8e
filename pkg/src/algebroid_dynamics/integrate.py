"""Explicit Runge-Kutta time stepping with per-sample diagnostics.

Two schemes are provided: classical fixed-step RK4 and the adaptive
Runge-Kutta-Fehlberg 4(5) pair.  The adaptive scheme advances with the fifth
order solution (local extrapolation) and controls the step with the embedded
difference.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import BlowUpError, ComparisonError, StiffnessError

Rhs = Callable[[float, np.ndarray], np.ndarray]

# Fehlberg tableau
_C = np.array([0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2])
_A = [
    [],
    [1 / 4],
    [3 / 32, 9 / 32],
    [1932 / 2197, -7200 / 2197, 7296 / 2197],
    [439 / 216, -8.0, 3680 / 513, -845 / 4104],
    [-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40],
]
_B4 = np.array([25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0])
_B5 = np.array([16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55])


@dataclass(frozen=True)
class IntegratorOptions:
    method: str = "rk45"
    step: float | None = None
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_step: float | None = None
    sample_stride: int = 1

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "rk4" and (self.step is None or self.step <= 0):
            raise ValueError("rk4 needs a positive step")
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_step is not None and self.max_step <= 0:
            raise ValueError("max_step must be positive")
        if self.sample_stride < 1:
            raise ValueError("sample_stride must be >= 1")


@dataclass
class Trajectory:
    """Accepted samples of an integration.  ``states[j]`` is the state at ``times[j]``."""

    times: np.ndarray
    states: np.ndarray
    diagnostics: dict[str, np.ndarray] = field(default_factory=dict)
    layout: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def column(self, name: str) -> np.ndarray:
        if name in self.diagnostics:
            return self.diagnostics[name]
        return self.states[:, self.layout.index(name)]

    def interpolate(self, t) -> np.ndarray:
        """Piecewise-linear dense output between accepted samples."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.stack([np.interp(t, self.times, self.states[:, j])
                         for j in range(self.states.shape[1])], axis=-1)


class _Recorder:
    def __init__(self, diagnostics, stride):
        self.diagnostics = dict(diagnostics or {})
        self.stride = stride
        self.times: list[float] = []
        self.states: list[np.ndarray] = []
        self.diag: dict[str, list[float]] = {k: [] for k in self.diagnostics}
        self.count = 0

    def emit(self, t, y, force=False):
        if force or self.count % self.stride == 0:
            if self.times and t == self.times[-1]:
                return
            self.times.append(float(t))
            self.states.append(np.array(y, dtype=float))
            for k, fn in self.diagnostics.items():
                self.diag[k].append(float(fn(t, y)))
        self.count += 1

    def trajectory(self, layout=()):
        states = np.array(self.states) if self.states else np.zeros((0, 0))
        return Trajectory(np.array(self.times), states,
                          {k: np.array(v) for k, v in self.diag.items()}, tuple(layout))


def rk4_step(rhs: Rhs, t: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(t, y)
    k2 = rhs(t + h / 2, y + h / 2 * k1)
    k3 = rhs(t + h / 2, y + h / 2 * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def rkf45_step(rhs: Rhs, t: float, y: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """One Fehlberg step; returns the fifth-order solution and the embedded error."""
    k = []
    for s in range(6):
        ys = y + h * sum((a * kj for a, kj in zip(_A[s], k)), np.zeros_like(y))
        k.append(rhs(t + _C[s] * h, ys))
    K = np.array(k)
    y5 = y + h * (_B5 @ K)
    err = h * ((_B5 - _B4) @ K)
    return y5, err


def integrate(rhs: Rhs, s0, t_span: tuple[float, float],
              opts: IntegratorOptions = IntegratorOptions(),
              diagnostics: Mapping[str, Callable[[float, np.ndarray], float]] | None = None,
              layout: Sequence[str] = ()) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from ``t_span[0]`` to ``t_span[1]``.

    Diagnostics are evaluated on every emitted sample, always including both
    end points.  Raises :class:`StiffnessError` if the adaptive step drops
    below ``1e-14`` times the span and :class:`BlowUpError` on a non-finite
    state; both carry the partial trajectory.
    """
    t0, t1 = map(float, t_span)
    if not t1 > t0:
        raise ValueError("t_span must satisfy t1 > t0")
    y = np.array(s0, dtype=float)
    rec = _Recorder(diagnostics, opts.sample_stride)
    rec.emit(t0, y, force=True)
    span = t1 - t0

    if opts.method == "rk4":
        nsteps = max(1, math.ceil(span / opts.step - 1e-12))
        h = span / nsteps
        t = t0
        for j in range(1, nsteps + 1):
            y_new = rk4_step(rhs, t, y, h)
            t_new = t0 + j * h if j < nsteps else t1
            if not np.all(np.isfinite(y_new)):
                raise BlowUpError(f"non-finite state after t={t}", t, rec.trajectory(layout))
            t, y = t_new, y_new
            rec.emit(t, y, force=(j == nsteps))
        return rec.trajectory(layout)

    max_step = opts.max_step if opts.max_step is not None else span / 100
    h_min = 1e-14 * span
    h = min(max_step, opts.step if opts.step else max_step / 10)
    t = t0
    while t < t1:
        h = min(h, t1 - t)
        if h < h_min:
            if t1 - t < h_min:
                break
            raise StiffnessError(f"step size underflow at t={t}", t, rec.trajectory(layout))
        y_new, err = rkf45_step(rhs, t, y, h)
        if not np.all(np.isfinite(y_new)):
            if h <= h_min * 2:
                raise BlowUpError(f"non-finite state after t={t}", t, rec.trajectory(layout))
            h *= 0.25
            continue
        scale = opts.abs_tol + opts.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        ratio = float(np.max(np.abs(err) / scale)) if y.size else 0.0
        if ratio <= 1.0:
            t = t + h if t1 - (t + h) > h_min else t1
            y = y_new
            rec.emit(t, y, force=(t == t1))
            factor = 5.0 if ratio == 0.0 else min(5.0, max(0.2, 0.9 * ratio ** -0.2))
            h = min(max_step, h * factor)
        else:
            h *= max(0.1, 0.9 * ratio ** -0.25)
    if rec.times[-1] != t1:
        rec.emit(t1, y, force=True)
    return rec.trajectory(layout)


def convergence_order(rhs: Rhs, s0, t_span, steps: Sequence[float],
                      reference: np.ndarray | None = None) -> float:
    """Least-squares slope of log(final error) against log(step) for RK4.

    Without an analytic ``reference`` the solution with step ``min(steps)/8``
    is used.  Errors at the roundoff floor are flagged with a warning since the
    slope is then meaningless.
    """
    steps = sorted(float(h) for h in steps)
    if reference is None:
        reference = integrate(rhs, s0, t_span, IntegratorOptions("rk4", step=steps[0] / 8)).final
    errs = []
    for h in steps:
        yf = integrate(rhs, s0, t_span, IntegratorOptions("rk4", step=h)).final
        errs.append(float(np.max(np.abs(yf - reference))))
    errs_a = np.array(errs)
    floor = 1e3 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(reference))))
    if np.any(errs_a <= floor):
        warnings.warn("convergence errors at the roundoff floor; order estimate unreliable",
                      RuntimeWarning, stacklevel=2)
        errs_a = np.maximum(errs_a, floor)
    slope = np.polyfit(np.log(steps), np.log(errs_a), 1)[0]
    return float(slope)


def trajectory_compare(a: Trajectory, b: Trajectory,
                       projection: Callable[[np.ndarray], np.ndarray] | None = None,
                       projection_b: Callable[[np.ndarray], np.ndarray] | None = None
                       ) -> tuple[float, float]:
    """Worst infinity-norm deviation of ``b`` from ``a`` over ``a``'s samples in the overlap.

    ``projection`` maps states of ``a`` (and of ``b`` unless ``projection_b`` is
    given) into a common space.  ``b`` is interpolated with a not-a-knot cubic
    spline through its accepted samples.
    """
    from scipy.interpolate import CubicSpline

    pa = projection or (lambda s: s)
    pb = projection_b or pa
    lo, hi = max(a.times[0], b.times[0]), min(a.times[-1], b.times[-1])
    if not hi >= lo:
        raise ComparisonError("trajectories do not overlap in time")
    mask = (a.times >= lo) & (a.times <= hi)
    ta = a.times[mask]
    ya = np.array([pa(s) for s in a.states[mask]])
    yb_nodes = np.array([pb(s) for s in b.states])
    if len(b.times) >= 4:
        yb = CubicSpline(b.times, yb_nodes, axis=0)(ta)
    else:
        yb = np.stack([np.interp(ta, b.times, yb_nodes[:, j]) for j in range(yb_nodes.shape[1])], -1)
    dev = np.max(np.abs(ya - yb), axis=1)
    j = int(np.argmax(dev))
    return float(dev[j]), float(ta[j])

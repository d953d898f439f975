"""Explicit time integration with monitoring and breaking detection."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NonFiniteField
from .model import FluxVariant, ModelParams, breaking_indicator, rhs_direct, rhs_split
from .spectral import Field, sobolev_norm

log = logging.getLogger(__name__)

Rhs = Callable[[Field], Field]

SNAPSHOT_CAP = 10_000
MONOTONE_WINDOW = 10


class Method(enum.Enum):
    RK4_FIXED = "rk4"
    ADAPTIVE = "adaptive"


class Termination(enum.Enum):
    REACHED_T_END = "ReachedTEnd"
    BREAKING_DETECTED = "BreakingDetected"
    NON_FINITE = "NonFinite"
    STEP_UNDERFLOW = "StepUnderflow"


class RhsChoice(enum.Enum):
    DIRECT = "direct"
    SPLIT_AS_PRINTED = "split_as_printed"
    SPLIT_REDERIVED = "split_rederived"

    def build(self, p: ModelParams) -> Rhs:
        if self is RhsChoice.DIRECT:
            return lambda u: rhs_direct(u, p)
        v = FluxVariant.AS_PRINTED if self is RhsChoice.SPLIT_AS_PRINTED else FluxVariant.REDERIVED
        return lambda u: rhs_split(u, p, v)


@dataclass(frozen=True)
class StepperConfig:
    method: Method = Method.RK4_FIXED
    dt: float = 1e-3
    t_end: float = 1.0
    atol: float = 1e-9
    rtol: float = 1e-7
    safety: float = 0.9
    dt_min: float = 1e-10
    cfl: float = 0.5
    snapshot_stride: int = 10
    # None means 50 * (initial max|u_x| + 1)
    slope_threshold: float | None = None

    def __post_init__(self):
        if not isinstance(self.method, Method):
            object.__setattr__(self, "method", Method(self.method))
        if not (0 < self.dt_min < self.dt <= self.t_end):
            raise ValueError(
                f"need 0 < dt_min < dt <= t_end, got dt_min={self.dt_min}, "
                f"dt={self.dt}, t_end={self.t_end}")
        if not 0 < self.safety <= 1:
            raise ValueError(f"safety must be in (0, 1], got {self.safety}")
        if not (self.atol > 0 and self.rtol > 0):
            raise ValueError("atol and rtol must be positive")
        if not self.cfl > 0:
            raise ValueError(f"cfl must be positive, got {self.cfl}")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ValueError(f"snapshot_stride must be a positive integer, got {self.snapshot_stride}")
        if self.slope_threshold is not None and not self.slope_threshold > 0:
            raise ValueError(f"slope_threshold must be positive, got {self.slope_threshold}")


@dataclass(frozen=True)
class MonitorRecord:
    t: float
    dt: float
    mass: float
    l2: float
    hs: float
    min_ux: float
    max_abs_u: float
    max_abs_ux: float


@dataclass
class Trajectory:
    times: list[float] = field(default_factory=list)
    snapshots: list[Field] = field(default_factory=list)
    monitors: list[MonitorRecord] = field(default_factory=list)
    termination: Termination | None = None
    snapshot_stride: int = 1
    n_rejected: int = 0

    @property
    def final(self) -> Field:
        return self.snapshots[-1]

    @property
    def t_final(self) -> float:
        return self.times[-1]

    @property
    def breaking_time(self) -> float | None:
        if self.termination is Termination.BREAKING_DETECTED:
            return self.t_final
        return None

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(m, name) for m in self.monitors])


def step_rk4(u: Field, dt: float, rhs: Rhs) -> Field:
    k1 = rhs(u)
    k2 = rhs(u + (0.5 * dt) * k1)
    k3 = rhs(u + (0.5 * dt) * k2)
    k4 = rhs(u + dt * k3)
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# Dormand-Prince 5(4); the fifth-order solution is propagated.
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                   187 / 2100, 1 / 40])


def step_adaptive(u: Field, dt: float, rhs: Rhs, atol: float, rtol: float,
                  safety: float = 0.9) -> tuple[Field, float, float, bool]:
    """One Dormand-Prince attempt.

    Returns ``(u_next, dt_next, err_est, accepted)``; on rejection ``u_next``
    is ``u`` itself. ``err_est`` is the RMS of the embedded difference
    weighted by ``atol + rtol*|u|``.
    """
    grid = u.grid
    y = u.values
    ks = []
    for row in _DP_A:
        stage = y.copy()
        for a, k in zip(row, ks):
            if a:
                stage += dt * a * k
        ks.append(rhs(Field(grid, stage)).values)
    K = np.array(ks)
    y5 = y + dt * (_DP_B5 @ K)
    diff = dt * ((_DP_B5 - _DP_B4) @ K)
    u_next = Field(grid, y5)
    scale = atol + rtol * np.abs(y)
    err = float(np.sqrt(np.mean((diff / scale) ** 2)))
    factor = 5.0 if err == 0 else min(5.0, max(0.2, safety * err ** (-0.2)))
    accepted = err <= 1.0
    return (u_next if accepted else u), dt * factor, err, accepted


def _monitor(u: Field, t: float, dt: float, s: float) -> MonitorRecord:
    bi = breaking_indicator(u)
    return MonitorRecord(t=t, dt=dt, mass=u.integral(), l2=sobolev_norm(u, 0),
                         hs=sobolev_norm(u, s), min_ux=bi.min_ux,
                         max_abs_u=bi.max_abs_u, max_abs_ux=bi.max_abs_ux)


def cfl_limit(u: Field, p: ModelParams, cfl: float) -> float:
    speed = abs(p.alpha / p.beta) + abs(p.epsilon * p.gamma / p.beta) * float(np.max(np.abs(u.values)))
    return cfl * u.grid.spacing / speed if speed > 0 else np.inf


def _monotone_tail(traj: Trajectory) -> bool:
    tail = [m.max_abs_ux for m in traj.monitors[-MONOTONE_WINDOW:]]
    return len(tail) == MONOTONE_WINDOW and all(b > a for a, b in zip(tail, tail[1:]))


def integrate(u0: Field, p: ModelParams, cfg: StepperConfig,
              rhs_choice: RhsChoice | str = RhsChoice.DIRECT, monitor_s: float = 2.0,
              rhs: Rhs | None = None) -> Trajectory:
    """March ``u0`` to ``cfg.t_end`` or until a termination condition fires.

    Breaking is declared once max|u_x| exceeds the slope threshold and has
    grown over each of the last ten accepted steps. Non-finite states and
    step-size underflow end the run; neither raises.
    """
    rhs_choice = RhsChoice(rhs_choice)
    f = rhs if rhs is not None else rhs_choice.build(p)
    threshold = cfg.slope_threshold
    if threshold is None:
        threshold = 50.0 * (breaking_indicator(u0).max_abs_ux + 1.0)

    traj = Trajectory(snapshot_stride=cfg.snapshot_stride)
    stride = cfg.snapshot_stride
    u, t, dt = u0, 0.0, cfg.dt
    traj.times.append(0.0)
    traj.snapshots.append(u0)
    traj.monitors.append(_monitor(u0, 0.0, 0.0, monitor_s))
    n_accepted = 0
    last_saved = 0

    while True:
        remaining = cfg.t_end - t
        if remaining <= 1e-13 * max(1.0, cfg.t_end):
            traj.termination = Termination.REACHED_T_END
            break
        h = cfg.dt if cfg.method is Method.RK4_FIXED else dt
        h = min(h, cfl_limit(u, p, cfg.cfl))
        if h < cfg.dt_min and h < remaining:
            traj.termination = Termination.STEP_UNDERFLOW
            break
        last = h >= remaining
        if last:
            h = remaining
        try:
            if cfg.method is Method.RK4_FIXED:
                u_new, accepted = step_rk4(u, h, f), True
            else:
                u_new, dt, _, accepted = step_adaptive(u, h, f, cfg.atol, cfg.rtol, cfg.safety)
        except NonFiniteField:
            traj.termination = Termination.NON_FINITE
            break
        if not accepted:
            traj.n_rejected += 1
            continue
        u = u_new
        t = cfg.t_end if last else t + h
        n_accepted += 1
        rec = _monitor(u, t, h, monitor_s)
        traj.monitors.append(rec)
        if n_accepted % stride == 0:
            traj.times.append(t)
            traj.snapshots.append(u)
            last_saved = n_accepted
            if len(traj.snapshots) > SNAPSHOT_CAP:
                traj.times = traj.times[::2]
                traj.snapshots = traj.snapshots[::2]
                stride *= 2
                traj.snapshot_stride = stride
        if rec.max_abs_ux > threshold and _monotone_tail(traj):
            traj.termination = Termination.BREAKING_DETECTED
            break

    if last_saved != n_accepted:
        traj.times.append(t)
        traj.snapshots.append(u)
    log.debug("integrate: %s at t=%g after %d steps (%d rejected)",
              traj.termination.value, t, n_accepted, traj.n_rejected)
    return traj


@dataclass(frozen=True)
class OrderResult:
    dts: tuple[float, ...]
    errors: tuple[float, ...]
    slope: float
    degenerate: bool


def _fit_order(dts, errors) -> OrderResult:
    dts = tuple(float(d) for d in dts)
    errors = tuple(float(e) for e in errors)
    if min(errors) <= 0.0:
        return OrderResult(dts, errors, float("nan"), True)
    slope = float(np.polyfit(np.log(dts), np.log(errors), 1)[0])
    return OrderResult(dts, errors, slope, False)


def _check_ladder(dts):
    dts = sorted(dts, reverse=True)
    if len(dts) < 3:
        raise ValueError("need at least three step sizes")
    ratios = np.array(dts[:-1]) / np.array(dts[1:])
    if not np.allclose(ratios, ratios[0], rtol=1e-9):
        raise ValueError("step sizes must form a geometric progression")
    return dts


def observed_order_rhs(u0: Field, rhs: Rhs, t_end: float, dts: Sequence[float],
                       exact: Field | None = None) -> OrderResult:
    """Observed order of fixed-step RK4 for a bare right-hand side."""
    dts = _check_ladder(dts)

    def run(h):
        n_steps = int(round(t_end / h))
        u = u0
        for _ in range(n_steps):
            u = step_rk4(u, h, rhs)
        return u

    ref = exact if exact is not None else run(dts[-1] / 4)
    errors = [sobolev_norm(run(h) - ref, 0) for h in dts]
    return _fit_order(dts, errors)


def observed_order(u0: Field, p: ModelParams, cfg: StepperConfig, dts: Sequence[float],
                   rhs_choice: RhsChoice | str = RhsChoice.DIRECT) -> OrderResult:
    """Self-convergence slope of fixed-step RK4 on the model.

    The reference run uses a quarter of the smallest step. All runs go
    through ``integrate`` and therefore obey the same CFL cap.
    """
    if cfg.method is not Method.RK4_FIXED:
        raise ValueError("observed_order needs the fixed-step method")
    dts = _check_ladder(dts)

    def run(h):
        c = StepperConfig(method=Method.RK4_FIXED, dt=h, t_end=cfg.t_end,
                          dt_min=min(cfg.dt_min, h / 10), cfl=cfg.cfl,
                          snapshot_stride=10**9, slope_threshold=np.inf)
        return integrate(u0, p, c, rhs_choice).final

    ref = run(dts[-1] / 4)
    errors = [sobolev_norm(run(h) - ref, 0) for h in dts]
    return _fit_order(dts, errors)

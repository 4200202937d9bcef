"""IMEX time integration and run orchestration.

One step advances the signal first with backward Euler (a Helmholtz solve
with the zero-flux Laplacian), then the density explicitly against the fresh
signal, with the quadratic sink treated semi-implicitly so the update can
never produce a negative density on its own. Step size comes from explicit
stability limits; blow-up is detected, never resolved.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import solve_banded

from .grid import (Domain, Field, _axis_diff, _face_pad, chemotactic_divergence,
                   diffusive_divergence, integrate)
from .model import ModelParams, phi


class HelmholtzError(RuntimeError):
    """Iterative solve failed to meet its residual target."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (final residual {residual:.3e})")
        self.residual = residual


class RunStatus(str, enum.Enum):
    RUNNING = "Running"
    FINISHED = "Finished"
    BLOWUP = "BlowUp"
    STALLED_DT = "StalledDt"


@dataclass(frozen=True)
class StepperConfig:
    """Time-integration controls.

    blowup_threshold: sup-norm level that flags blow-up. None means
    "resolve from the initial data": run() replaces it with
    1e6 * max(1, sup u0).

    stall_patience: consecutive steps pinned below dt_min with a growing
    sup-norm before the run is declared stalled.
    """

    dt_init: float = 1.0e-3
    dt_min: float = 1.0e-9
    dt_max: float = 1.0e-1
    safety: float = 0.9
    blowup_threshold: float | None = None
    t_end: float = 1.0
    observer_stride: int = 10
    series_gamma: float = 3.0
    stall_patience: int = 50
    max_steps: int = 5_000_000
    helmholtz_tol: float = 1.0e-10
    helmholtz_maxiter: int = 20_000

    def __post_init__(self):
        if not (0.0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ValueError(
                f"need 0 < dt_min <= dt_init <= dt_max, got "
                f"({self.dt_min}, {self.dt_init}, {self.dt_max})"
            )
        if not (0.0 < self.safety <= 1.0):
            raise ValueError(f"safety must lie in (0, 1], got {self.safety}")
        if self.blowup_threshold is not None and not self.blowup_threshold > 1.0:
            raise ValueError(f"blowup_threshold must exceed 1, got {self.blowup_threshold}")
        if not self.t_end > 0.0:
            raise ValueError(f"t_end must be positive, got {self.t_end}")
        if self.observer_stride < 1:
            raise ValueError(f"observer_stride must be >= 1, got {self.observer_stride}")
        if not self.series_gamma >= 1.0:
            raise ValueError(f"series_gamma must be >= 1, got {self.series_gamma}")


@dataclass(frozen=True)
class SimState:
    """Snapshot of a simulation: time, both fields, bookkeeping."""

    t: float
    u: Field
    v: Field
    steps: int = 0
    status: RunStatus = RunStatus.RUNNING
    stall_steps: int = 0   # consecutive dt-pinned steps with growing sup-norm

    @property
    def domain(self) -> Domain:
        return self.u.domain


@dataclass(frozen=True)
class ObserverSample:
    """One diagnostics row of a run's time series."""

    t: float
    dt: float
    mass: float
    sup_u: float
    sup_v: float
    l2_u: float
    lgamma_u: float
    status: str


@dataclass(frozen=True)
class RunResult:
    final: SimState
    series: list[ObserverSample]
    snapshots: list[tuple[float, Field, Field]] = field(default_factory=list)


def solve_helmholtz(rhs: Field, alpha: float, d: Domain,
                    tol: float = 1.0e-10, maxiter: int = 20_000,
                    x0: Field | None = None) -> Field:
    """Solve (alpha*I - lap) w = rhs with the zero-flux Laplacian.

    1D uses direct banded elimination; 2D runs conjugate gradients on the
    symmetric positive-definite operator, matrix-free, warm-started from
    ``x0`` when given (time steppers pass the previous signal). Either way
    the result satisfies ||(alpha*I - lap) w - rhs||_inf <= tol * ||rhs||_inf.
    """
    if not alpha > 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if rhs.domain != d:
        raise ValueError("rhs does not live on the given domain")
    if d.dim == 1:
        w = _helmholtz_1d_direct(rhs.values, alpha, d)
    else:
        w = _helmholtz_cg(rhs.values, alpha, d, tol, maxiter,
                          None if x0 is None else x0.values)
    with np.errstate(over="ignore", invalid="ignore"):
        res = float(np.max(np.abs(alpha * w - _lap_values(w, d) - rhs.values)))
        scale = max(float(np.max(np.abs(rhs.values))), 1.0e-300)
    if not res <= tol * scale:  # also trips on a non-finite residual
        raise HelmholtzError("Helmholtz solve missed its residual target", res / scale)
    return Field(w, d)


def _lap_values(vals: np.ndarray, d: Domain) -> np.ndarray:
    out = np.zeros(d.shape)
    # near-overflow fields pass through here on the way to blow-up
    # detection; let the non-finite values propagate silently
    with np.errstate(over="ignore", invalid="ignore"):
        for axis, h in enumerate(d.spacing):
            grad = _axis_diff(vals, axis) / h
            out += _axis_diff(_face_pad(grad, axis), axis) / h
    return out


def _helmholtz_1d_direct(rhs: np.ndarray, alpha: float, d: Domain) -> np.ndarray:
    n = d.cells[0]
    inv_h2 = 1.0 / d.spacing[0] ** 2
    diag = np.full(n, alpha + 2.0 * inv_h2)
    diag[0] = diag[-1] = alpha + inv_h2
    off = np.full(n - 1, -inv_h2)
    ab = np.zeros((3, n))
    ab[0, 1:] = off
    ab[1, :] = diag
    ab[2, :-1] = off
    return solve_banded((1, 1), ab, rhs, check_finite=False)


def _helmholtz_cg(rhs: np.ndarray, alpha: float, d: Domain,
                  tol: float, maxiter: int,
                  x0: np.ndarray | None = None) -> np.ndarray:
    scale = np.max(np.abs(rhs))
    if scale == 0.0:
        return np.zeros(d.shape)
    target = tol * scale
    x = (rhs / alpha) if x0 is None else x0.copy()  # rhs/alpha: exact for constants
    r = rhs - (alpha * x - _lap_values(x, d))
    if np.max(np.abs(r)) <= target:
        return x
    p = r.copy()
    rs = float(np.vdot(r, r))
    res = math.inf
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(maxiter):
            ap = alpha * p - _lap_values(p, d)
            a = rs / float(np.vdot(p, ap))
            x += a * p
            r -= a * ap
            res = float(np.max(np.abs(r)))
            if res <= target:
                return x
            rs_new = float(np.vdot(r, r))
            if not math.isfinite(rs_new):
                raise HelmholtzError("conjugate gradients hit non-finite values",
                                     res / scale)
            p = r + (rs_new / rs) * p
            rs = rs_new
    raise HelmholtzError(f"conjugate gradients did not converge in {maxiter} iterations",
                         res / scale)


def _rate_total(u: Field, v: Field, params: ModelParams, d: Domain) -> float:
    """Combined explicit stability rate (inverse time), all terms summed.

    Diffusion contributes 2*max(phi)/h^2 per axis, advection the largest
    face speed over h per axis, the growth law a + 2*mu*max(u). Summing the
    rates (rather than taking the smallest individual limit) is what makes
    the donor-cell update provably nonnegative when several mechanisms act
    at once; with a single active mechanism it reduces to the familiar
    per-term limits, e.g. h^2/(2*dim*max phi) for isotropic diffusion.
    """
    u_max = max(float(u.values.max()), 0.0)
    # accepted diffusivity families are nondecreasing, so the face maximum
    # is bounded by phi at the largest cell value
    phi_max = float(phi(u_max, params))
    rate = 0.0
    for axis, h in enumerate(d.spacing):
        rate += 2.0 * phi_max / h**2
        w_max = float(np.abs(_axis_diff(v.values, axis)).max()) * params.chi / h
        rate += w_max / h
    if params.reaction_on:
        rate += params.a + 2.0 * params.mu * u_max
    return rate


def stable_dt(u: Field, v: Field, params: ModelParams, d: Domain,
              cfg: StepperConfig) -> float:
    """Safety-scaled explicit stability limit, clipped to [dt_min, dt_max]."""
    dt = cfg.safety / _rate_total(u, v, params, d)
    return min(cfg.dt_max, max(cfg.dt_min, dt))


def _resolve_threshold(cfg: StepperConfig, u: Field) -> float:
    if cfg.blowup_threshold is not None:
        return cfg.blowup_threshold
    return 1.0e6 * max(1.0, float(np.max(u.values)))


def step(state: SimState, params: ModelParams, cfg: StepperConfig) -> SimState:
    """Advance one IMEX step; returns a new state (inputs untouched).

    Signal first: (tau/dt + 1 - lap) v_new = (tau/dt) v_old + u_old.
    Density second, explicit fluxes against v_new with the quadratic sink
    folded into the denominator:
        u_new = (u_old + dt*(fluxes + a*u_old)) / (1 + dt*mu*u_old).
    The constant state (a/mu, a/mu) is a fixed point of this update for
    every dt. Solver round-off may leave fields a hair below zero; values
    within -1e-13 of the field scale are clamped back to zero.
    """
    if state.status is not RunStatus.RUNNING:
        raise ValueError(f"cannot step a state with status {state.status.value}")
    d = state.domain
    u_old, v_old = state.u, state.v

    dt_raw = cfg.safety / _rate_total(u_old, v_old, params, d)
    dt = min(cfg.dt_max, max(cfg.dt_min, dt_raw))
    if state.steps == 0:
        dt = min(dt, cfg.dt_init)
    remaining = cfg.t_end - state.t
    if remaining <= 0.0:
        return replace(state, status=RunStatus.FINISHED)
    dt = min(dt, remaining)

    # The advective CFL must hold against the signal the fluxes will see,
    # which only exists after the implicit solve; re-solve with a smaller dt
    # in the rare steps where the fresh signal steepened past the margin.
    # Shrinking dt pulls v_new toward v_old, so the iteration settles fast.
    attempts = 0
    while True:
        alpha = params.tau / dt + 1.0
        with np.errstate(over="ignore", invalid="ignore"):
            rhs = Field._wrap((params.tau / dt) * v_old.values + u_old.values, d)
        try:
            v_new = solve_helmholtz(rhs, alpha, d, cfg.helmholtz_tol,
                                    cfg.helmholtz_maxiter, x0=v_old).values
        except HelmholtzError as exc:
            if not math.isfinite(exc.residual):
                # arithmetic overflow from astronomically large fields:
                # that is blow-up territory, not a solver defect
                return replace(state, t=state.t + dt, steps=state.steps + 1,
                               status=RunStatus.BLOWUP)
            raise
        # the exact solve maps nonnegative data to a nonnegative signal;
        # iterative residual noise may undershoot by up to the solve tolerance
        v_new = _clamp_roundoff(v_new, band=max(1.0e-13, 10.0 * cfg.helmholtz_tol))
        dt_pos = cfg.safety / _rate_total(u_old, Field._wrap(v_new, d), params, d)
        attempts += 1
        if dt <= dt_pos or dt <= cfg.dt_min or attempts >= 5:
            break
        dt = max(cfg.dt_min, dt_pos)
    # stepping outside the provable-positivity region (dt floored at dt_min)
    pinned = dt > dt_pos * (1.0 + 1e-9)

    with np.errstate(over="ignore", invalid="ignore"):
        # overflow here is legitimate: it surfaces as a BlowUp status below
        flux = (diffusive_divergence(u_old, params, d).values
                - chemotactic_divergence(u_old, Field._wrap(v_new, d), params.chi, d).values)
        if params.reaction_on:
            u_new = ((u_old.values + dt * (flux + params.a * u_old.values))
                     / (1.0 + dt * params.mu * u_old.values))
        else:
            u_new = u_old.values + dt * flux
    if pinned:
        # out of the stability region: detection mode, keep the state usable
        u_new = np.maximum(u_new, 0.0)
    else:
        u_new = _clamp_roundoff(u_new)

    t_new = state.t + dt
    status = RunStatus.RUNNING
    stall = 0
    sup_u_new = float(np.max(u_new)) if u_new.size else 0.0
    if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(v_new))):
        status = RunStatus.BLOWUP
    elif sup_u_new > _resolve_threshold(cfg, u_old):
        status = RunStatus.BLOWUP
    else:
        if pinned and sup_u_new > float(np.max(u_old.values)):
            stall = state.stall_steps + 1
        if stall >= cfg.stall_patience:
            status = RunStatus.STALLED_DT
        elif t_new >= cfg.t_end - 1.0e-12 * cfg.t_end:
            status = RunStatus.FINISHED
    return SimState(
        t=t_new,
        u=Field._wrap(u_new, d),
        v=Field._wrap(v_new, d),
        steps=state.steps + 1,
        status=status,
        stall_steps=stall,
    )


def _clamp_roundoff(vals: np.ndarray, band: float = 1.0e-13) -> np.ndarray:
    """Zero out negatives attributable to numerical noise within ``band``
    (relative to the field scale); leave anything larger alone."""
    lo = float(np.min(vals))
    if lo >= 0.0:
        return vals
    scale = max(1.0, float(np.max(np.abs(vals))))
    if lo >= -band * scale:
        return np.maximum(vals, 0.0)
    return vals


def _sample(state: SimState, dt: float, gamma: float) -> ObserverSample:
    from .diagnostics import lgamma_norm

    d = state.domain
    u_safe = Field(np.maximum(state.u.values, 0.0), d)
    return ObserverSample(
        t=state.t,
        dt=dt,
        mass=integrate(state.u, d),
        sup_u=float(np.max(state.u.values)),
        sup_v=float(np.max(state.v.values)),
        l2_u=lgamma_norm(u_safe, 2.0, d),
        lgamma_u=lgamma_norm(u_safe, gamma, d),
        status=state.status.value,
    )


def run(u0: Field, v0: Field, params: ModelParams, cfg: StepperConfig,
        capture_fields: bool = False) -> RunResult:
    """Step from (u0, v0) at t=0 until the status leaves Running.

    The series holds one row for the initial state and one every
    ``observer_stride`` steps plus the final state. With ``capture_fields``
    the same sampling instants also keep full (t, u, v) copies, which the
    regularity-constant estimator consumes.
    """
    if np.min(u0.values) < 0.0 or np.min(v0.values) < 0.0:
        raise ValueError("initial data must be nonnegative")
    return run_state(SimState(t=0.0, u=u0.copy(), v=v0.copy()), params, cfg,
                     capture_fields)


def run_state(state: SimState, params: ModelParams, cfg: StepperConfig,
              capture_fields: bool = False) -> RunResult:
    """Continue stepping an existing state (checkpoint resume path)."""
    cfg = replace(cfg, blowup_threshold=_resolve_threshold(cfg, state.u))
    start_steps = state.steps
    series = [_sample(state, 0.0, cfg.series_gamma)]
    snapshots: list[tuple[float, Field, Field]] = []
    if capture_fields:
        snapshots.append((state.t, state.u.copy(), state.v.copy()))
    while state.status is RunStatus.RUNNING:
        if state.steps - start_steps >= cfg.max_steps:
            state = replace(state, status=RunStatus.STALLED_DT)
            break
        prev_t = state.t
        state = step(state, params, cfg)
        dt = state.t - prev_t
        if state.steps % cfg.observer_stride == 0 or state.status is not RunStatus.RUNNING:
            series.append(_sample(state, dt, cfg.series_gamma))
            if capture_fields:
                snapshots.append((state.t, state.u.copy(), state.v.copy()))
    if series[-1].t != state.t or series[-1].status != state.status.value:
        series.append(_sample(state, 0.0, cfg.series_gamma))
        if capture_fields:
            snapshots.append((state.t, state.u.copy(), state.v.copy()))
    return RunResult(final=state, series=series, snapshots=snapshots)

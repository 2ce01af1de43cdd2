"""Semi-discrete upwind scheme, time integrators, and a priori bound monitors.

The spatial operator on a field ``u`` is

    rhs(u)_a = - sum_i D-_i F^i(u_a, u_{a+e_i}) + sum_i D-_i D+_i A_eff(u_a),

with split monotone fluxes ``F^i(u, v) = F1_i(u) + F2_i(v)`` and effective
diffusion ``A_eff = A + eta*u``.  Ghost reads follow the grid boundary rule
applied to the *state*: a zero-extension ghost cell holds ``u = 0``, so
shifted flux and diffusion arrays are filled with ``F1(0)``, ``F2(0)``,
``A_eff(0)`` rather than raw zeros.  With that convention the finite window
is exactly the infinite-lattice operator restricted to fields supported in
the window, which is what makes the discrete well-posedness bounds
(l1 contraction, maximum principle, lattice-variation decay, time
Lipschitz bound) hold up to integrator tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import BlowupError, IntegratorError, MonitorError
from .grid import Boundary, Field, GridSpec, l1_norm, shift_values
from .model import Model

__all__ = [
    "EXPLICIT_EULER",
    "SSP_RK2",
    "SSP_RK3",
    "IMPLICIT_EULER",
    "IntegratorConfig",
    "SemiDiscreteOp",
    "MonitorRecord",
    "MonitorReport",
    "stable_dt",
    "step",
    "evolve",
    "accretivity_probe",
    "contraction_test",
    "lattice_bv",
]

EXPLICIT_EULER = "explicit-euler"
SSP_RK2 = "ssp-rk2"
SSP_RK3 = "ssp-rk3"
IMPLICIT_EULER = "implicit-euler"

_METHODS = (EXPLICIT_EULER, SSP_RK2, SSP_RK3, IMPLICIT_EULER)


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = SSP_RK2
    cfl_safety: float = 0.45
    dt_override: float | None = None
    newton_tol: float = 1e-12
    newton_max_iter: int = 50

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {_METHODS}")
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError(f"cfl_safety must be in (0, 1], got {self.cfl_safety}")
        if self.dt_override is not None and self.dt_override <= 0:
            raise ValueError("dt_override must be positive")

    @property
    def is_explicit(self) -> bool:
        return self.method != IMPLICIT_EULER

    @property
    def monitor_tolerance(self) -> float:
        # bounds are exact for the semi-discrete flow; the slack only absorbs
        # roundoff (explicit SSP) or accumulated Newton residuals (implicit)
        return 1e-8 if self.method == IMPLICIT_EULER else 1e-6


class SemiDiscreteOp:
    """The scheme's right-hand side for a fixed model and grid."""

    def __init__(self, model: Model, spec: GridSpec):
        if model.dim != spec.dim:
            raise ValueError(f"model dim {model.dim} != grid dim {spec.dim}")
        self.model = model
        self.spec = spec
        self.aeff = model.effective_diffusion()
        self._f1_ghost = [float(fl.f1(0.0)) for fl in model.fluxes]
        self._f2_ghost = [float(fl.f2(0.0)) for fl in model.fluxes]
        self._a_ghost = float(self.aeff(0.0))
        # l1 -> l1 Lipschitz bound of the operator on unit-range data,
        # recorded for step-size fallbacks and damping factors
        self.lipschitz_bound = self.field_lipschitz(-1.0, 1.0)

    def field_lipschitz(self, lo: float, hi: float) -> float:
        """Upper bound for the l1 Lipschitz constant of the operator."""
        dx = self.spec.dx
        conv = sum(2.0 * fl.lipschitz_on(lo, hi) / dx for fl in self.model.fluxes)
        diff = 4.0 * self.spec.dim * self.aeff.lipschitz_on(lo, hi) / dx**2
        return conv + diff

    def rhs_values(self, u: np.ndarray) -> np.ndarray:
        """du/dt as a raw array; no finiteness checks (hot path)."""
        spec = self.spec
        dx = spec.dx
        out = np.zeros_like(u)
        a_vals = np.asarray(self.aeff(u), dtype=float)
        f1_cache: dict[int, np.ndarray] = {}
        f2_cache: dict[int, np.ndarray] = {}
        for axis, flux in enumerate(self.model.fluxes):
            w1 = f1_cache.get(id(flux.f1))
            if w1 is None:
                w1 = np.asarray(flux.f1(u), dtype=float)
                f1_cache[id(flux.f1)] = w1
            w2 = f2_cache.get(id(flux.f2))
            if w2 is None:
                w2 = np.asarray(flux.f2(u), dtype=float)
                f2_cache[id(flux.f2)] = w2
            w1m = shift_values(w1, axis, -1, spec.boundary, self._f1_ghost[axis])
            w2p = shift_values(w2, axis, +1, spec.boundary, self._f2_ghost[axis])
            a_up = shift_values(a_vals, axis, +1, spec.boundary, self._a_ghost)
            a_dn = shift_values(a_vals, axis, -1, spec.boundary, self._a_ghost)
            out += (w1m - w1 + w2 - w2p) / dx
            out += (a_up - 2.0 * a_vals + a_dn) / dx**2
        return out

    def spatial_operator_values(self, u: np.ndarray) -> np.ndarray:
        """The accretive operator: flux divergence minus discrete diffusion."""
        return -self.rhs_values(u)

    def rhs(self, u: Field) -> Field:
        if u.spec != self.spec:
            raise ValueError("field lives on a different grid")
        vals = self.rhs_values(u.values)
        if not np.all(np.isfinite(vals)):
            bad = np.argwhere(~np.isfinite(vals))[0]
            raise BlowupError(
                f"non-finite right-hand side at multi-index {tuple(bad)}",
                multi_index=tuple(bad),
                time=u.time,
            )
        return u.with_values(vals)


def stable_dt(
    op: SemiDiscreteOp,
    u: Field | np.ndarray,
    safety: float = 0.45,
    horizon: float = math.inf,
) -> float:
    """Explicit step size: ``c / (sum_i Lip(F^i)/dx + 2 d max A_eff' / dx^2)``.

    Lipschitz constants are taken over the data range ``[min u, max u]``;
    with no dynamics at all (zero denominator) the horizon is returned.
    """
    if not 0.0 < safety <= 1.0:
        raise ValueError(f"safety must be in (0, 1], got {safety}")
    vals = u.values if isinstance(u, Field) else np.asarray(u)
    lo, hi = float(vals.min()), float(vals.max())
    dx = op.spec.dx
    denom = sum(fl.lipschitz_on(lo, hi) for fl in op.model.fluxes) / dx
    denom += 2.0 * op.spec.dim * op.aeff.lipschitz_on(lo, hi) / dx**2
    if denom == 0.0:
        return horizon
    return safety / denom


def _explicit_stage(op: SemiDiscreteOp, u: np.ndarray, dt: float) -> np.ndarray:
    return u + dt * op.rhs_values(u)


def _step_values(op: SemiDiscreteOp, u: np.ndarray, dt: float, cfg: IntegratorConfig) -> np.ndarray:
    if cfg.method == EXPLICIT_EULER:
        return _explicit_stage(op, u, dt)
    if cfg.method == SSP_RK2:
        u1 = _explicit_stage(op, u, dt)
        return 0.5 * u + 0.5 * _explicit_stage(op, u1, dt)
    if cfg.method == SSP_RK3:
        u1 = _explicit_stage(op, u, dt)
        u2 = 0.75 * u + 0.25 * _explicit_stage(op, u1, dt)
        return u / 3.0 + (2.0 / 3.0) * _explicit_stage(op, u2, dt)
    return _implicit_euler_values(op, u, dt, cfg)


def _implicit_euler_values(
    op: SemiDiscreteOp, u: np.ndarray, dt: float, cfg: IntegratorConfig
) -> np.ndarray:
    """Backward Euler via damped Newton-Krylov, fixed-point fallback.

    Convergence criterion: l1 residual <= newton_tol * (1 + ||u||_1).
    """
    shape = u.shape
    vol = op.spec.cell_volume
    tol_l1 = cfg.newton_tol * (1.0 + vol * np.abs(u).sum())
    f_tol = tol_l1 / (vol * u.size)

    def residual(w_flat: np.ndarray) -> np.ndarray:
        w = w_flat.reshape(shape)
        return (w - u - dt * op.rhs_values(w)).ravel()

    history: list[float] = []
    try:
        sol = optimize.newton_krylov(
            residual,
            u.ravel().copy(),
            f_tol=f_tol,
            f_rtol=1e-16,
            maxiter=cfg.newton_max_iter,
        )
        res_l1 = vol * np.abs(residual(sol)).sum()
        history.append(res_l1)
        if res_l1 <= tol_l1 and np.all(np.isfinite(sol)):
            return sol.reshape(shape)
    except (optimize.NoConvergence, ValueError, np.linalg.LinAlgError):
        pass

    # damped fixed-point: w <- w - omega * G(w); omega sized from the
    # operator's Lipschitz bound so the iteration is a contraction
    lo, hi = float(u.min()) - 1.0, float(u.max()) + 1.0
    omega = 1.0 / (1.0 + dt * op.field_lipschitz(lo, hi))
    w = u.ravel().copy()
    for _ in range(200 * max(1, cfg.newton_max_iter)):
        g = residual(w)
        res_l1 = vol * np.abs(g).sum()
        history.append(res_l1)
        if not np.isfinite(res_l1):
            break
        if res_l1 <= tol_l1:
            return w.reshape(shape)
        w = w - omega * g
    raise IntegratorError(
        f"implicit Euler failed to reach residual {tol_l1:.3e}",
        residual_history=history,
    )


def step(op: SemiDiscreteOp, u: Field, dt: float, cfg: IntegratorConfig = IntegratorConfig()) -> Field:
    """Advance the field by one time step."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    vals = _step_values(op, u.values, dt, cfg)
    if not np.all(np.isfinite(vals)):
        bad = np.argwhere(~np.isfinite(vals))[0]
        raise BlowupError(
            f"non-finite state at multi-index {tuple(bad)}",
            multi_index=tuple(bad),
            time=u.time + dt,
        )
    return u.with_values(vals, time=u.time + dt)


def lattice_bv(values: np.ndarray, spec: GridSpec) -> float:
    """Total variation of the field as a function on the infinite lattice.

    For zero extension this counts the boundary faces of the embedded field
    (the jumps against the surrounding zeros); the a priori variation bound
    holds in exactly this seminorm.  Periodic grids wrap.
    """
    total = 0.0
    for axis in range(spec.dim):
        if spec.boundary is Boundary.PERIODIC:
            total += np.abs(np.roll(values, -1, axis=axis) - values).sum()
        else:
            up = shift_values(values, axis, +1, spec.boundary, 0.0)
            total += np.abs(up - values).sum()
            lower = np.take(values, 0, axis=axis)
            total += np.abs(lower).sum()
    return float(total)


@dataclass(frozen=True)
class MonitorRecord:
    name: str
    time: float
    value: float
    bound: float
    passed: bool

    def as_line(self) -> str:
        return (
            f"{self.name},{self.time:.17g},{self.value:.17g},"
            f"{self.bound:.17g},{'pass' if self.passed else 'FAIL'}"
        )


@dataclass
class MonitorReport:
    """Per-checkpoint records of the discrete a priori bounds."""

    tolerance: float
    method: str
    records: list[MonitorRecord] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def failures(self) -> list[MonitorRecord]:
        return [r for r in self.records if not r.passed]

    def lines(self) -> list[str]:
        return ["name,time,value,bound,pass"] + [r.as_line() for r in self.records]

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self.lines()) + "\n")


def _plan_segments(
    t0: float, t_end: float, dt_nominal: float, n_checkpoints: int
) -> list[tuple[float, int, float]]:
    """(checkpoint time, step count, step size) per checkpoint segment."""
    times = np.linspace(t0, t_end, n_checkpoints + 1)
    plan = []
    for t_prev, t_next in zip(times[:-1], times[1:]):
        seg = float(t_next - t_prev)
        m = max(1, math.ceil(seg / dt_nominal - 1e-12))
        plan.append((float(t_next), m, seg / m))
    return plan


def _nominal_dt(op: SemiDiscreteOp, u0: Field, t_end: float, cfg: IntegratorConfig) -> float:
    if cfg.dt_override is not None:
        return cfg.dt_override
    horizon = max(t_end - u0.time, 1e-300)
    dt = stable_dt(op, u0, cfg.cfl_safety, horizon=horizon)
    if cfg.is_explicit:
        return dt
    # implicit Euler has no CFL coupling; take a coarser default step
    return min(10.0 * dt, horizon)


def evolve(
    op: SemiDiscreteOp,
    u0: Field,
    t_end: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    n_checkpoints: int = 10,
    monitors: bool = True,
) -> tuple[list[Field], MonitorReport]:
    """Integrate to ``t_end`` recording checkpoints and a priori bounds.

    Monitored quantities at every checkpoint: l1 norm against the initial
    norm, max/min against the initial data range, lattice variation against
    the initial variation, and the time-Lipschitz quotient
    ``||u(t+h) - u(t)||_1 / h`` against ``||A(u0)||_1``.  A violation beyond
    10x the integrator tolerance aborts with a diagnostic snapshot.
    """
    if t_end <= u0.time:
        raise ValueError(f"t_end {t_end} must exceed the initial time {u0.time}")
    report = MonitorReport(tolerance=cfg.monitor_tolerance, method=cfg.method)
    dt_nominal = _nominal_dt(op, u0, t_end, cfg)
    plan = _plan_segments(u0.time, t_end, dt_nominal, n_checkpoints)

    vol = op.spec.cell_volume
    l1_0 = l1_norm(u0)
    min_0, max_0 = float(u0.values.min()), float(u0.values.max())
    bv_0 = lattice_bv(u0.values, op.spec)
    a0_l1 = vol * np.abs(op.spatial_operator_values(u0.values)).sum()
    tol = cfg.monitor_tolerance

    trajectory = [u0]
    u = u0.values.copy()
    t_prev = u0.time
    prev_vals = u0.values

    for t_check, m, dt in plan:
        for _ in range(m):
            u = _step_values(op, u, dt, cfg)
        if not np.all(np.isfinite(u)):
            bad = np.argwhere(~np.isfinite(u))[0]
            raise BlowupError(
                f"solution blew up by t = {t_check}",
                multi_index=tuple(bad),
                time=t_check,
            )
        snapshot = Field(op.spec, u, time=t_check)
        trajectory.append(snapshot)
        if monitors:
            quotient = vol * np.abs(u - prev_vals).sum() / (t_check - t_prev)
            checks = [
                ("l1", l1_norm(snapshot), l1_0 + tol, l1_norm(snapshot) <= l1_0 + tol),
                ("max-principle-upper", float(u.max()), max_0 + tol, float(u.max()) <= max_0 + tol),
                ("max-principle-lower", float(u.min()), min_0 - tol, float(u.min()) >= min_0 - tol),
                ("bv", lattice_bv(u, op.spec), bv_0 + tol, lattice_bv(u, op.spec) <= bv_0 + tol),
                ("time-lipschitz", quotient, a0_l1 + tol, quotient <= a0_l1 + tol),
            ]
            for name, value, bound, ok in checks:
                record = MonitorRecord(name, t_check, value, bound, ok)
                report.records.append(record)
                hard = abs(value - bound) > 10.0 * tol if not ok else False
                if hard:
                    raise MonitorError(
                        f"{name} bound violated by {abs(value - bound):.3e} at t = {t_check}",
                        record=record,
                        field=snapshot,
                    )
        t_prev = t_check
        prev_vals = u.copy()
    return trajectory, report


def accretivity_probe(op: SemiDiscreteOp, u: Field, v: Field) -> float:
    """``sum_a sign(u_a - v_a) (A(u) - A(v))_a`` with sign(0) = 0.

    Nonnegative (up to roundoff) for monotone fluxes and nondecreasing
    diffusion: the discrete operator is l1 accretive.
    """
    if u.spec != v.spec or u.spec != op.spec:
        raise ValueError("fields must share the operator's grid")
    sgn = np.sign(u.values - v.values)
    diff = op.spatial_operator_values(u.values) - op.spatial_operator_values(v.values)
    return float((sgn * diff).sum())


def accretivity_scale(op: SemiDiscreteOp, u: Field, v: Field) -> float:
    """Roundoff scale for the probe: ``||A(u)||_1 + ||A(v)||_1 + 1``."""
    vol = op.spec.cell_volume
    return float(
        vol * np.abs(op.spatial_operator_values(u.values)).sum()
        + vol * np.abs(op.spatial_operator_values(v.values)).sum()
        + 1.0
    )


def contraction_test(
    op: SemiDiscreteOp,
    u0: Field,
    v0: Field,
    t_end: float,
    cfg: IntegratorConfig = IntegratorConfig(),
    n_checkpoints: int = 10,
) -> float:
    """Co-evolve two fields with an identical step sequence.

    Returns the largest checkpoint value of ``||u - v||_1 - ||u0 - v0||_1``;
    nonpositive up to integrator tolerance by the contraction property.
    """
    if u0.spec != v0.spec:
        raise ValueError("fields must share a grid")
    # step size from the joint data range so both runs share the schedule
    lo = min(u0.values.min(), v0.values.min())
    hi = max(u0.values.max(), v0.values.max())
    probe = np.array([lo, hi], dtype=float)
    if cfg.dt_override is not None:
        dt_nominal = cfg.dt_override
    else:
        horizon = max(t_end - u0.time, 1e-300)
        dt_nominal = stable_dt(op, probe, cfg.cfl_safety, horizon=horizon)
        if not cfg.is_explicit:
            dt_nominal = min(10.0 * dt_nominal, horizon)
    plan = _plan_segments(u0.time, t_end, dt_nominal, n_checkpoints)
    vol = op.spec.cell_volume
    base = vol * np.abs(u0.values - v0.values).sum()
    u, v = u0.values.copy(), v0.values.copy()
    gap = 0.0
    for _, m, dt in plan:
        for _ in range(m):
            u = _step_values(op, u, dt, cfg)
            v = _step_values(op, v, dt, cfg)
        gap = max(gap, vol * np.abs(u - v).sum() - base)
    return float(gap)

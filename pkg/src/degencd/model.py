"""Problem definitions: fluxes, monotone flux splittings, diffusion, catalog.

A problem couples a flux vector ``f = (f^1, ..., f^d)`` with a nondecreasing
diffusion function ``A`` (``A(0) = 0``), optionally regularized by a vanishing
viscosity ``eta`` through ``A_eff(u) = A(u) + eta * u``.  Each axis carries a
two-point numerical flux that splits as ``F(u, v) = F1(u) + F2(v)`` with
``F1' >= 0`` and ``F2' <= 0``; the scheme module consumes only this split
form.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .errors import ConstructionError
from .grid import Boundary, Field, GridSpec, cell_average_init

__all__ = [
    "ScalarFn",
    "SplitFlux",
    "Model",
    "TestProblem",
    "MonotonicityReport",
    "eo_split",
    "lax_friedrichs_split",
    "monotonicity_check",
    "effective_diffusion",
    "catalog",
    "problem_by_name",
    "build_model",
]


@dataclass(frozen=True)
class ScalarFn:
    """A real function bundled with its derivative.

    Both callables must accept floats and numpy arrays.  ``lipschitz_on``
    bounds the Lipschitz constant by dense sampling of ``|deriv|``.
    """

    fn: Callable
    deriv: Callable
    name: str = ""

    def __call__(self, u):
        return self.fn(u)

    def lipschitz_on(self, lo: float, hi: float, n: int = 1025) -> float:
        xs = np.linspace(lo, hi, n)
        return float(np.max(np.abs(self.deriv(xs))))

    def derivative_mismatch(self, lo: float, hi: float, n: int = 33) -> float:
        """Max relative gap between ``deriv`` and a central finite difference.

        Sampled away from kinks this should sit well below 1e-6; functions
        with isolated kinks are checked at points between the samples.
        """
        xs = np.linspace(lo, hi, n)
        h = 1e-6 * max(1.0, hi - lo)
        fd = (self.fn(xs + h) - self.fn(xs - h)) / (2 * h)
        scale = 1.0 + np.max(np.abs(fd))
        return float(np.max(np.abs(fd - self.deriv(xs))) / scale)


def scalar_fn(fn, deriv, name=""):
    return ScalarFn(fn=fn, deriv=deriv, name=name)


ZERO_FN = ScalarFn(
    fn=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
    deriv=lambda u: np.zeros_like(np.asarray(u, dtype=float)),
    name="0",
)

IDENTITY_FN = ScalarFn(
    fn=lambda u: np.asarray(u, dtype=float) + 0.0,
    deriv=lambda u: np.ones_like(np.asarray(u, dtype=float)),
    name="u",
)

BURGERS_FN = ScalarFn(
    fn=lambda u: 0.5 * np.asarray(u, dtype=float) ** 2,
    deriv=lambda u: np.asarray(u, dtype=float) + 0.0,
    name="u^2/2",
)


def linear_diffusion(c: float = 1.0) -> ScalarFn:
    return ScalarFn(
        fn=lambda u: c * np.asarray(u, dtype=float),
        deriv=lambda u: np.full_like(np.asarray(u, dtype=float), c),
        name=f"{c}*u",
    )


def cubic_diffusion(c: float = 1.0) -> ScalarFn:
    return ScalarFn(
        fn=lambda u: c * np.asarray(u, dtype=float) ** 3 / 3.0,
        deriv=lambda u: c * np.asarray(u, dtype=float) ** 2,
        name=f"{c}*u^3/3",
    )


def threshold_diffusion(scale: float = 0.1, threshold: float = 0.5) -> ScalarFn:
    """Strongly degenerate diffusion: flat up to ``threshold``, linear above."""
    return ScalarFn(
        fn=lambda u: scale * np.maximum(np.asarray(u, dtype=float) - threshold, 0.0),
        deriv=lambda u: scale * (np.asarray(u, dtype=float) > threshold).astype(float),
        name=f"{scale}*max(u-{threshold},0)",
    )


def square_diffusion() -> ScalarFn:
    """Porous-medium diffusion ``A(u) = u^2``, nondecreasing for u >= 0 data."""
    return ScalarFn(
        fn=lambda u: np.asarray(u, dtype=float) ** 2,
        deriv=lambda u: 2.0 * np.asarray(u, dtype=float),
        name="u^2",
    )


@dataclass(frozen=True)
class SplitFlux:
    """Two-point numerical flux ``F(u, v) = f1(u) + f2(v)``."""

    f1: ScalarFn
    f2: ScalarFn

    def __call__(self, u, v):
        return self.f1(u) + self.f2(v)

    def combined(self) -> ScalarFn:
        """The consistent physical flux ``f(u) = F(u, u)``."""
        f1, f2 = self.f1, self.f2
        return ScalarFn(
            fn=lambda u: f1(u) + f2(u),
            deriv=lambda u: f1.deriv(u) + f2.deriv(u),
            name="f",
        )

    def lipschitz_on(self, lo: float, hi: float) -> float:
        return self.f1.lipschitz_on(lo, hi) + self.f2.lipschitz_on(lo, hi)


def _derivative_sign_roots(f: ScalarFn, lo: float, hi: float, n: int = 4097) -> np.ndarray:
    """Points in (lo, hi) where f' changes sign, refined by root bracketing.

    Sign changes that happen across a plateau of exact zeros pick any point
    inside the plateau; the flux is constant there, so the variation sum is
    unaffected by the choice.
    """
    xs = np.linspace(lo, hi, n)
    d = np.asarray(f.deriv(xs), dtype=float)
    if not np.all(np.isfinite(d)):
        raise ConstructionError("flux derivative is non-finite on the splitting interval")
    sign = np.sign(d)
    nonzero = np.nonzero(sign)[0]
    roots = []
    for k in range(len(nonzero) - 1):
        i, j = nonzero[k], nonzero[k + 1]
        if sign[i] * sign[j] < 0:
            if j == i + 1:
                roots.append(float(optimize.brentq(f.deriv, xs[i], xs[j], xtol=1e-15)))
            else:
                roots.append(float(xs[(i + j) // 2]))
    return np.unique(np.asarray(roots, dtype=float))


def eo_split(f: ScalarFn, interval: Sequence[float]) -> SplitFlux:
    """Engquist-Osher splitting of ``f`` on an interval containing the data.

    ``F1(u) = f(0) + int_0^u max(f'(s), 0) ds`` and
    ``F2(v) = int_0^v min(f'(s), 0) ds``.  Writing ``max(f', 0) =
    (f' + |f'|) / 2`` reduces both integrals to the total variation of ``f``,
    which is a finite sum of |f(b) - f(a)| over the monotone segments between
    sign changes of ``f'``.  Those segments are located once at construction,
    so evaluation is exact (up to root-finding tolerance) and vectorized.
    """
    lo = min(float(min(interval)), 0.0)
    hi = max(float(max(interval)), 0.0)
    if not lo < hi:
        lo, hi = lo - 0.5, hi + 0.5
    roots = _derivative_sign_roots(f, lo, hi)
    knots = np.unique(np.concatenate(([lo], roots, [hi])))
    f_knots = np.asarray(f(knots), dtype=float)
    cum = np.concatenate(([0.0], np.cumsum(np.abs(np.diff(f_knots)))))

    def variation(x):
        x = np.asarray(x, dtype=float)
        j = np.clip(np.searchsorted(knots, x, side="right") - 1, 0, len(knots) - 2)
        v = cum[j] + np.abs(np.asarray(f(x), dtype=float) - f_knots[j])
        below = x < lo
        if np.any(below):
            v = np.where(below, -np.abs(np.asarray(f(x), dtype=float) - f_knots[0]), v)
        return v

    f0 = float(f(0.0))
    v0 = float(variation(0.0))

    def f1_fn(u):
        u = np.asarray(u, dtype=float)
        return f0 + 0.5 * (np.asarray(f(u), dtype=float) - f0 + variation(u) - v0)

    def f2_fn(v):
        v = np.asarray(v, dtype=float)
        return 0.5 * (np.asarray(f(v), dtype=float) - f0 - (variation(v) - v0))

    split = SplitFlux(
        f1=ScalarFn(fn=f1_fn, deriv=lambda u: np.maximum(f.deriv(u), 0.0), name="F1"),
        f2=ScalarFn(fn=f2_fn, deriv=lambda v: np.minimum(f.deriv(v), 0.0), name="F2"),
    )
    samples = np.linspace(lo, hi, 257)
    gap = np.max(np.abs(split(samples, samples) - np.asarray(f(samples), dtype=float)))
    if not gap < 1e-10:
        raise ConstructionError(f"EO splitting inconsistent with flux: max gap {gap:.3e}")
    return split


def lax_friedrichs_split(f: ScalarFn, interval: Sequence[float], lam: float | None = None) -> SplitFlux:
    """Global Lax-Friedrichs splitting ``((f(u) + lam*u)/2, (f(v) - lam*v)/2)``."""
    lo, hi = float(min(interval)), float(max(interval))
    if lam is None:
        lam = 1.000001 * f.lipschitz_on(lo, hi)
    lam = float(lam)
    return SplitFlux(
        f1=ScalarFn(
            fn=lambda u: 0.5 * (np.asarray(f(u), dtype=float) + lam * np.asarray(u, dtype=float)),
            deriv=lambda u: 0.5 * (np.asarray(f.deriv(u), dtype=float) + lam),
            name="F1-LF",
        ),
        f2=ScalarFn(
            fn=lambda v: 0.5 * (np.asarray(f(v), dtype=float) - lam * np.asarray(v, dtype=float)),
            deriv=lambda v: 0.5 * (np.asarray(f.deriv(v), dtype=float) - lam),
            name="F2-LF",
        ),
    )


@dataclass(frozen=True)
class MonotonicityReport:
    passed: bool
    min_f1_deriv: float
    max_f2_deriv: float
    interval: tuple[float, float]
    n_samples: int


def monotonicity_check(
    flux: SplitFlux, interval: Sequence[float], n_samples: int = 1000
) -> MonotonicityReport:
    """Sampled check that ``F1' >= 0`` and ``F2' <= 0`` on the interval."""
    if n_samples < 2:
        raise ValueError("need at least two samples")
    lo, hi = float(min(interval)), float(max(interval))
    xs = np.linspace(lo, hi, n_samples)
    d1 = float(np.min(flux.f1.deriv(xs)))
    d2 = float(np.max(flux.f2.deriv(xs)))
    return MonotonicityReport(
        passed=bool(d1 >= -1e-12 and d2 <= 1e-12),
        min_f1_deriv=d1,
        max_f2_deriv=d2,
        interval=(lo, hi),
        n_samples=n_samples,
    )


@dataclass(frozen=True)
class Model:
    """Flux splittings per axis, diffusion, and viscosity regularization."""

    dim: int
    fluxes: tuple[SplitFlux, ...]
    diffusion: ScalarFn
    eta: float = 0.0

    def __post_init__(self):
        if len(self.fluxes) != self.dim:
            raise ValueError("one split flux per axis is required")
        if self.eta < 0:
            raise ValueError(f"viscosity must be >= 0, got {self.eta}")
        a0 = float(self.diffusion(0.0))
        if abs(a0) > 1e-12:
            raise ValueError(f"diffusion must vanish at 0, got A(0) = {a0}")

    def effective_diffusion(self) -> ScalarFn:
        return effective_diffusion(self)

    def flux(self, axis: int) -> ScalarFn:
        return self.fluxes[axis].combined()

    def with_eta(self, eta: float) -> "Model":
        return replace(self, eta=eta)


def effective_diffusion(model: Model) -> ScalarFn:
    """``A_eff(u) = A(u) + eta * u`` with derivative ``A'(u) + eta``."""
    a, eta = model.diffusion, model.eta
    if eta == 0.0:
        return a
    return ScalarFn(
        fn=lambda u: np.asarray(a(u), dtype=float) + eta * np.asarray(u, dtype=float),
        deriv=lambda u: np.asarray(a.deriv(u), dtype=float) + eta,
        name=f"{a.name}+{eta}*u",
    )


REFERENCE_EXACT = "exact"
REFERENCE_FINE_GRID = "fine-grid"


@dataclass(frozen=True)
class TestProblem:
    """A named model with initial data, domain box, horizon, and reference."""

    name: str
    model: Model
    u0: Callable
    box: tuple[tuple[float, float], ...]
    horizon: float
    exact: Callable | None = None
    reference: str = REFERENCE_EXACT
    refinement: int = 8
    data_range: tuple[float, float] = (0.0, 1.0)
    description: str = ""

    def __post_init__(self):
        if len(self.box) != self.model.dim:
            raise ValueError("box must have one (lo, hi) per axis")
        widths = {round(hi - lo, 12) for lo, hi in self.box}
        if len(widths) != 1:
            raise ValueError("anisotropic boxes are not supported (dx uniform per axis)")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.reference not in (REFERENCE_EXACT, REFERENCE_FINE_GRID):
            raise ValueError(f"unknown reference policy {self.reference!r}")

    @property
    def dim(self) -> int:
        return self.model.dim

    def grid(self, n: int, boundary: Boundary = Boundary.ZERO_EXTENSION) -> GridSpec:
        width = self.box[0][1] - self.box[0][0]
        return GridSpec(
            dim=self.dim,
            cells=(n,) * self.dim,
            dx=width / n,
            origin=tuple(lo for lo, _ in self.box),
            boundary=boundary,
        )

    def initial_field(self, n: int, boundary: Boundary = Boundary.ZERO_EXTENSION) -> Field:
        return cell_average_init(self.u0, self.grid(n, boundary))

    def with_eta(self, eta: float) -> "TestProblem":
        return replace(self, model=self.model.with_eta(eta))


def _smoothstep(y):
    """Quintic smoothstep: 0 at 0, 1 at 1, C^2 at both ends."""
    y = np.clip(y, 0.0, 1.0)
    return y**3 * (10.0 + y * (-15.0 + 6.0 * y))


def smoothed_box(plateau: float = 0.25, ramp: float = 0.3):
    """Box-like profile with C^2 ramps: 1 on |x| <= plateau, 0 outside."""

    def u0(x):
        r = np.abs(np.asarray(x, dtype=float))
        return _smoothstep((plateau + ramp - r) / ramp)

    return u0


def radial_bump(radius: float = 0.8):
    """Smooth compactly supported bump with unit peak, any dimension."""

    def u0(*coords):
        r2 = sum(np.asarray(c, dtype=float) ** 2 for c in coords) / radius**2
        inside = r2 < 1.0
        r2 = np.where(inside, r2, 0.0)
        with np.errstate(divide="ignore", over="ignore"):
            vals = np.exp(1.0 - 1.0 / (1.0 - r2))
        return np.where(inside, vals, 0.0)

    return u0


def heat_kernel(dim: int):
    def kernel(t, *coords):
        r2 = sum(np.asarray(c, dtype=float) ** 2 for c in coords)
        return (4.0 * np.pi * t) ** (-dim / 2.0) * np.exp(-r2 / (4.0 * t))

    return kernel


def _advection_problem() -> TestProblem:
    u0 = smoothed_box(plateau=0.25, ramp=0.3)
    flux = eo_split(IDENTITY_FN, (-0.1, 1.1))
    model = Model(dim=1, fluxes=(flux,), diffusion=ZERO_FN)

    def exact(t, x):
        return u0(np.asarray(x, dtype=float) - t)

    return TestProblem(
        name="advection",
        model=model,
        u0=u0,
        box=((-1.5, 2.0),),
        horizon=1.0,
        exact=exact,
        reference=REFERENCE_EXACT,
        data_range=(0.0, 1.0),
        description="linear transport of a smoothed box profile; exact translate",
    )


def _heat_problem(dim: int) -> TestProblem:
    t0 = 0.1
    kernel = heat_kernel(dim)

    def u0(*coords):
        return kernel(t0, *coords)

    def exact(t, *coords):
        return kernel(t0 + t, *coords)

    model = Model(
        dim=dim,
        fluxes=tuple(SplitFlux(ZERO_FN, ZERO_FN) for _ in range(dim)),
        diffusion=linear_diffusion(1.0),
    )
    peak = float(kernel(t0, *([0.0] * dim)))
    return TestProblem(
        name=f"heat-{dim}d",
        model=model,
        u0=u0,
        box=((-6.0, 6.0),) * dim,
        horizon=0.2,
        exact=exact,
        reference=REFERENCE_EXACT,
        data_range=(0.0, peak),
        description="pure diffusion of a Gaussian; exact kernel evolution",
    )


def _burgers_riemann_problem() -> TestProblem:
    flux = eo_split(BURGERS_FN, (-0.1, 1.1))
    model = Model(dim=1, fluxes=(flux,), diffusion=ZERO_FN)

    def u0(x):
        x = np.asarray(x, dtype=float)
        return ((x >= -1.0) & (x < 0.0)).astype(float)

    def exact(t, x):
        # Entropy solution of the boxed Riemann datum for t <= 2: a
        # rarefaction fan opens at x = -1 while the downward jump at 0
        # travels as a shock with speed 1/2.
        x = np.asarray(x, dtype=float)
        if t <= 0.0:
            return u0(x)
        fan = np.clip((x + 1.0) / t, 0.0, 1.0)
        return np.where(x < 0.5 * t, fan, 0.0)

    return TestProblem(
        name="burgers-riemann",
        model=model,
        u0=u0,
        box=((-2.0, 1.5),),
        horizon=1.0,
        exact=exact,
        reference=REFERENCE_FINE_GRID,
        refinement=8,
        data_range=(0.0, 1.0),
        description="inviscid Burgers with a boxed Riemann datum; shock at x = t/2",
    )


def _degenerate_problem(dim: int) -> TestProblem:
    diffusion = threshold_diffusion(scale=0.1, threshold=0.5)
    flux = eo_split(BURGERS_FN, (-0.1, 1.1))
    model = Model(dim=dim, fluxes=(flux,) * dim, diffusion=diffusion)
    if dim == 1:
        u0 = radial_bump(radius=0.8)
        box = ((-1.5, 2.5),)
        refinement = 8
    else:
        u0 = radial_bump(radius=0.8)
        box = ((-2.0, 2.0),) * dim
        refinement = 4
    return TestProblem(
        name=f"degenerate-burgers-{dim}d",
        model=model,
        u0=u0,
        box=box,
        horizon=0.3,
        exact=None,
        reference=REFERENCE_FINE_GRID,
        refinement=refinement,
        data_range=(0.0, 1.0),
        description="Burgers convection with diffusion degenerate below u = 0.5",
    )


def _porous_medium_problem() -> TestProblem:
    t0 = 1.0

    def profile(s, x):
        x = np.asarray(x, dtype=float)
        return s ** (-1.0 / 3.0) * np.maximum(1.0 - x**2 / (12.0 * s ** (2.0 / 3.0)), 0.0)

    def u0(x):
        return profile(t0, x)

    def exact(t, x):
        return profile(t0 + t, x)

    model = Model(
        dim=1,
        fluxes=(SplitFlux(ZERO_FN, ZERO_FN),),
        diffusion=square_diffusion(),
    )
    return TestProblem(
        name="porous-medium",
        model=model,
        u0=u0,
        box=((-6.0, 6.0),),
        horizon=1.0,
        exact=exact,
        reference=REFERENCE_FINE_GRID,
        refinement=8,
        data_range=(0.0, 1.0),
        description="porous-medium diffusion of a self-similar source profile",
    )


def catalog() -> list[TestProblem]:
    """All built-in test problems."""
    return [
        _advection_problem(),
        _heat_problem(1),
        _heat_problem(2),
        _burgers_riemann_problem(),
        _degenerate_problem(1),
        _degenerate_problem(2),
        _porous_medium_problem(),
    ]


def problem_by_name(name: str) -> TestProblem:
    for problem in catalog():
        if problem.name == name:
            return problem
    known = ", ".join(p.name for p in catalog())
    raise KeyError(f"unknown problem {name!r}; known problems: {known}")


_FLUX_BUILDERS = {
    "linear": IDENTITY_FN,
    "burgers": BURGERS_FN,
}

_DIFFUSION_BUILDERS = {
    "none": lambda params: ZERO_FN,
    "linear": lambda params: linear_diffusion(params.get("diffusion_scale", 1.0)),
    "cubic": lambda params: cubic_diffusion(params.get("diffusion_scale", 1.0)),
    "degenerate-threshold": lambda params: threshold_diffusion(
        params.get("diffusion_scale", 0.1), params.get("threshold", 0.5)
    ),
}


def build_model(
    flux: str,
    diffusion: str,
    dim: int,
    eta: float = 0.0,
    data_range: Sequence[float] = (-1.0, 1.0),
    **params,
) -> Model:
    """Assemble a model from named flux/diffusion choices (config frontend)."""
    if flux not in _FLUX_BUILDERS:
        raise ConstructionError(f"unknown flux {flux!r}; choose from {sorted(_FLUX_BUILDERS)}")
    if diffusion not in _DIFFUSION_BUILDERS:
        raise ConstructionError(
            f"unknown diffusion {diffusion!r}; choose from {sorted(_DIFFUSION_BUILDERS)}"
        )
    split = eo_split(_FLUX_BUILDERS[flux], data_range)
    return Model(
        dim=dim,
        fluxes=(split,) * dim,
        diffusion=_DIFFUSION_BUILDERS[diffusion](params),
        eta=eta,
    )

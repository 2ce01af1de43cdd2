"""Executable kinetic-formulation machinery.

The indicator-like function

    chi(u; xi) = 1 on 0 < xi <= u,  -1 on u <= xi < 0,  0 otherwise

and its mollification against a symmetric kernel supported in [-1, 1] turn
entropy arguments into quadrature-checkable identities: smoothed sign and
chi functions, the microscopic contraction functional

    Q_eps(u, v; xi) = sign_eps(xi) chi_eps(u; xi) + sign_eps(xi) chi_eps(v; xi)
                      - 2 chi_eps(u; xi) chi_eps(v; xi),

commutator remainders of mollification against nonlinear functions,
mean-value kernel values that substitute for the missing discrete chain
rule, and the parabolic / convective dissipation densities of the scheme.

Everything that reduces to kernel antiderivatives is evaluated through
tabulated CDF / first-moment tables refined by in-panel Gauss quadrature,
which keeps identities exact to near machine precision; genuinely
two-dimensional integrals go through adaptive Gauss-Kronrod quadrature.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import integrate

from .errors import ConstructionError, DomainError, QuadratureError
from .grid import Field, shift_values
from .model import Model, ScalarFn

__all__ = [
    "MollifierKernel",
    "KineticContext",
    "chi",
    "chi_eps",
    "sign_eps",
    "q_eps",
    "integral_q_eps",
    "r_f_eps",
    "theta_tau_kernel_values",
    "discrete_diss_density",
    "flux_diss_density",
    "continuous_diss_density",
    "entropy_pair",
    "entropy_residual",
    "EntropyResidual",
    "SpaceTimeBump",
]

_G7 = np.polynomial.legendre.leggauss(7)
_G12 = np.polynomial.legendre.leggauss(12)
_G15 = np.polynomial.legendre.leggauss(15)

BUMP_NORMALIZATION = 0.4439938161680794  # integral of exp(-1/(1-x^2)) over (-1, 1)


def _bump_raw(x: np.ndarray) -> np.ndarray:
    inside = np.abs(x) < 1.0
    xs = np.where(inside, x, 0.0)
    with np.errstate(divide="ignore", over="ignore"):
        vals = np.exp(-1.0 / (1.0 - xs * xs))
    return np.where(inside, vals, 0.0)


def _quartic_raw(x: np.ndarray) -> np.ndarray:
    inside = np.abs(x) < 1.0
    return np.where(inside, (1.0 - x * x) ** 2, 0.0)


class MollifierKernel:
    """Symmetric mollifier on [-1, 1] with tabulated antiderivatives.

    ``cdf`` is built from a cumulative table on a uniform grid plus an
    in-panel Gauss correction, so evaluations carry quadrature accuracy (far
    below 1e-12) rather than interpolation accuracy; the same table backs the
    first-moment antiderivative needed by the mean-value kernel identities.
    """

    def __init__(self, shape: str = "bump", table_panels: int = 2048):
        if shape == "bump":
            raw, norm = _bump_raw, BUMP_NORMALIZATION
        elif shape == "quartic":
            raw, norm = _quartic_raw, 16.0 / 15.0
        else:
            raise ValueError(f"unknown kernel shape {shape!r}")
        self.shape = shape
        self.normalization = norm
        self._raw = raw
        # cumulative integrals of J and t*J over [0, s], s in [0, 1]
        nodes = np.linspace(0.0, 1.0, table_panels + 1)
        g_nodes, g_weights = _G15
        mid = 0.5 * (nodes[:-1] + nodes[1:])
        half = 0.5 * np.diff(nodes)
        pts = mid[:, None] + half[:, None] * g_nodes[None, :]
        pj = self.pdf(pts)
        panel_j = half * (pj @ g_weights)
        panel_tj = half * ((pts * pj) @ g_weights)
        self._nodes = nodes
        self._cum_j = np.concatenate(([0.0], np.cumsum(panel_j)))
        self._cum_tj = np.concatenate(([0.0], np.cumsum(panel_tj)))
        # half-mass exactly 1/2: absorbs the last bits of quadrature error
        self._cum_j *= 0.5 / self._cum_j[-1]
        self._half_tj = self._cum_tj[-1]

    def pdf(self, x) -> np.ndarray:
        return self._raw(np.asarray(x, dtype=float)) / self.normalization

    def _cumulative(self, x: np.ndarray, table: np.ndarray, moment: bool) -> np.ndarray:
        """Integral of J (or t*J) from 0 to x for x in [0, 1]."""
        n_panels = len(self._nodes) - 1
        j = np.minimum((x * n_panels).astype(int), n_panels - 1)
        a = self._nodes[j]
        half = 0.5 * (x - a)
        mid = 0.5 * (x + a)
        g_nodes, g_weights = _G7
        pts = mid[..., None] + half[..., None] * g_nodes
        vals = self.pdf(pts)
        if moment:
            vals = pts * vals
        return table[j] + half * (vals @ g_weights)

    def cdf(self, s) -> np.ndarray:
        """K(s) = integral of J over (-inf, s]; exactly 1/2 at 0."""
        s = np.asarray(s, dtype=float)
        mag = np.minimum(np.abs(s), 1.0)
        h = self._cumulative(mag, self._cum_j, moment=False)
        return 0.5 + np.sign(s) * h

    def moment_cdf(self, s) -> np.ndarray:
        """M(s) = integral of t J(t) over (-inf, s]; even, zero at +-1."""
        s = np.asarray(s, dtype=float)
        mag = np.minimum(np.abs(s), 1.0)
        return self._cumulative(mag, self._cum_tj, moment=True) - self._half_tj

    def pdf_scaled(self, y, eps: float) -> np.ndarray:
        return self.pdf(np.asarray(y, dtype=float) / eps) / eps

    def cdf_scaled(self, y, eps: float) -> np.ndarray:
        return self.cdf(np.asarray(y, dtype=float) / eps)

    def box_integrals(self, a, b, zeta, eps: float):
        """Signed pair ``(I0, I1)`` of kernel integrals over [a, b]:

        ``I0 = int_a^b J_eps(zeta - xi) dxi`` and
        ``I1 = int_a^b J_eps(zeta - xi) (b - xi) dxi``.

        Short intervals (|b - a| <= eps/4) are integrated directly by Gauss
        quadrature in the kernel variable, which avoids the catastrophic
        cancellation of differencing the CDF at nearly equal arguments.
        """
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        zeta = np.asarray(zeta, dtype=float)
        a, b, zeta = np.broadcast_arrays(a, b, zeta)
        ta = (zeta - a) / eps
        tb = (zeta - b) / eps
        i0_tab = self.cdf(ta) - self.cdf(tb)
        m_diff = self.moment_cdf(ta) - self.moment_cdf(tb)
        i1_tab = (b - zeta) * i0_tab + eps * m_diff

        lo = np.minimum(ta, tb)
        hi = np.maximum(ta, tb)
        lo_c = np.maximum(lo, -1.0)
        hi_c = np.minimum(hi, 1.0)
        halfd = np.maximum(0.5 * (hi_c - lo_c), 0.0)
        midd = 0.5 * (lo_c + hi_c)
        g_nodes, g_weights = _G12
        pts = midd[..., None] + halfd[..., None] * g_nodes
        pj = self.pdf(pts)
        g0 = halfd * (pj @ g_weights)
        g1 = halfd * ((pts * pj) @ g_weights)
        sgn = np.sign(ta - tb)
        i0_dir = sgn * g0
        i1_dir = (b - zeta) * i0_dir + eps * sgn * g1

        small = np.abs(b - a) <= 0.25 * eps
        i0 = np.where(small, i0_dir, i0_tab)
        i1 = np.where(small, i1_dir, i1_tab)
        return i0, i1


@lru_cache(maxsize=4)
def default_kernel(shape: str = "bump") -> MollifierKernel:
    return MollifierKernel(shape)


class KineticContext:
    """Transformed quantities for a uniformly parabolic effective diffusion.

    Bundles a model, a mollifier kernel, and a smoothing radius ``eps``.
    When the effective diffusion slope has a positive floor ``eta`` on the
    data interval, the context also provides the inverse ``B = A_eff^{-1}``
    (bracketing bisection, tolerance 1e-13 of the bracket width) and the
    transformed fluxes ``g = f o B`` and ``G_j = F_j o B``.  Contexts over
    degenerate models remain usable for the kernel-only operations.
    """

    def __init__(
        self,
        model: Model,
        kernel: MollifierKernel | None = None,
        eps: float = 1e-3,
        data_interval: tuple[float, float] = (-1.0, 1.0),
    ):
        if eps <= 0:
            raise ValueError(f"eps must be positive, got {eps}")
        self.model = model
        self.kernel = kernel if kernel is not None else default_kernel()
        self.eps = float(eps)
        lo, hi = float(data_interval[0]), float(data_interval[1])
        if not lo < hi:
            raise ValueError("data interval must be nondegenerate")
        self.data_interval = (lo, hi)
        self.aeff = model.effective_diffusion()
        xs = np.linspace(lo, hi, 2049)
        self.eta_min = float(np.min(self.aeff.deriv(xs)))

    def _require_uniformly_parabolic(self) -> None:
        if self.eta_min <= 0.0:
            raise ConstructionError(
                "transform machinery needs min A_eff' > 0 on the data interval; "
                f"found {self.eta_min}"
            )

    def inverse_diffusion(self, zeta):
        """B(zeta): the unique u with A_eff(u) = zeta, by bisection."""
        self._require_uniformly_parabolic()
        z = np.asarray(zeta, dtype=float)
        scalar = z.ndim == 0
        z = np.atleast_1d(z)
        lo = np.full(z.shape, self.data_interval[0])
        hi = np.full(z.shape, self.data_interval[1])
        step = max(1.0, self.data_interval[1] - self.data_interval[0])
        for _ in range(200):
            too_high = np.asarray(self.aeff(lo), dtype=float) > z
            too_low = np.asarray(self.aeff(hi), dtype=float) < z
            if not (too_high.any() or too_low.any()):
                break
            lo = np.where(too_high, lo - step, lo)
            hi = np.where(too_low, hi + step, hi)
            step *= 2.0
        else:
            raise ConstructionError("could not bracket the diffusion inverse")
        tol = 1e-13 * max(1.0, float((hi - lo).max()))
        while float((hi - lo).max()) > tol:
            mid = 0.5 * (lo + hi)
            above = np.asarray(self.aeff(mid), dtype=float) >= z
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        mid = 0.5 * (lo + hi)
        return float(mid[0]) if scalar else mid

    def inverse_diffusion_deriv(self, zeta):
        """B'(zeta) = 1 / A_eff'(B(zeta)); bounded by 1/eta."""
        b = self.inverse_diffusion(zeta)
        return 1.0 / np.asarray(self.aeff.deriv(b), dtype=float)

    def transformed_flux(self, axis: int, zeta):
        """g_i(zeta) with g_i o A_eff = f_i, evaluated as f_i(B(zeta))."""
        return self.model.flux(axis)(self.inverse_diffusion(zeta))

    def transformed_flux_deriv(self, axis: int, zeta):
        b = self.inverse_diffusion(zeta)
        return np.asarray(self.model.flux(axis).deriv(b), dtype=float) / np.asarray(
            self.aeff.deriv(b), dtype=float
        )

    def transformed_split(self, axis: int, part: int, zeta):
        """G_j(zeta) with G_j o A_eff = F_j for j in {1, 2}."""
        flux = self.model.fluxes[axis]
        fn = flux.f1 if part == 1 else flux.f2
        return fn(self.inverse_diffusion(zeta))


def chi(u, xi):
    """The indicator-like density of the interval between 0 and u."""
    u = np.asarray(u, dtype=float)
    xi = np.asarray(xi, dtype=float)
    pos = (xi > 0) & (xi <= u)
    neg = (u <= xi) & (xi < 0)
    out = np.where(pos, 1.0, np.where(neg, -1.0, 0.0))
    if out.ndim == 0:
        return float(out)
    return out


def sign_eps(xi, ctx: KineticContext):
    """Smoothed sign: ``2 * int_0^xi J_eps``; saturates to +-1 at |xi| >= eps."""
    return 2.0 * ctx.kernel.cdf_scaled(xi, ctx.eps) - 1.0


def chi_eps(u, xi, ctx: KineticContext):
    """Mollified chi: ``K_eps(xi) - K_eps(xi - u)`` via the kernel CDF."""
    k = ctx.kernel
    return k.cdf_scaled(xi, ctx.eps) - k.cdf_scaled(np.asarray(xi) - np.asarray(u), ctx.eps)


def q_eps(u, v, xi, ctx: KineticContext):
    """Mollified microscopic contraction functional at one point."""
    cu = chi_eps(u, xi, ctx)
    cv = chi_eps(v, xi, ctx)
    s = sign_eps(xi, ctx)
    return s * cu + s * cv - 2.0 * cu * cv


def _quad(fn, lo, hi, points=None, epsrel=1e-10, epsabs=1e-14, limit=400):
    if points is not None:
        points = sorted({float(p) for p in points if lo < p < hi})
        if not points:
            points = None
    val, abserr = integrate.quad(
        fn, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=limit, points=points
    )
    if abserr > 1e-7 * (1.0 + abs(val)):
        raise QuadratureError(f"quadrature achieved only {abserr:.3e} absolute error")
    return val


def integral_q_eps(u, v, ctx: KineticContext, weight: Callable | None = None) -> float:
    """``int Q_eps(u, v; xi) w(xi) dxi`` over the compact support.

    With ``w = B'`` and transformed arguments this approximates |u - v|;
    unweighted it approximates |A(u) - A(v)|, with errors of order eps/eta.
    """
    u, v, eps = float(u), float(v), ctx.eps
    lo = min(0.0, u, v) - eps
    hi = max(0.0, u, v) + eps
    if weight is None:
        fn = lambda xi: q_eps(u, v, xi, ctx)
    else:
        fn = lambda xi: q_eps(u, v, xi, ctx) * float(weight(xi))
    pts = [0.0, u, v, -eps, eps, u - eps, u + eps, v - eps, v + eps]
    return _quad(fn, lo, hi, points=pts)


def r_f_eps(f, u, zeta, ctx: KineticContext) -> float:
    """Commutator remainder ``int_0^u (f(s) - f(zeta)) J_eps(s - zeta) ds``.

    Measures how mollification fails to commute with multiplication by
    ``f``; vanishes for constant ``f`` and for ``zeta`` outside an eps
    neighborhood of the interval between 0 and u.
    """
    u, zeta, eps = float(u), float(zeta), ctx.eps
    fn = f.fn if isinstance(f, ScalarFn) else f
    f_z = float(fn(zeta))
    lo = max(min(0.0, u), zeta - eps)
    hi = min(max(0.0, u), zeta + eps)
    if lo >= hi:
        return 0.0
    sign = 1.0 if u >= 0 else -1.0
    kernel = ctx.kernel

    def integrand(s):
        return (float(fn(s)) - f_z) * float(kernel.pdf_scaled(s - zeta, eps))

    return sign * _quad(integrand, lo, hi)


def theta_tau_kernel_values(a, b, zeta, ctx: KineticContext):
    """Kernel values at the mean-value points of the discrete chain rule.

    Returns ``(J_eps(zeta - theta), J_eps(zeta - tau))`` where theta and tau
    are the (possibly non-unique) points between ``a`` and ``b`` satisfying

        J_eps(zeta - theta) = (1/(b-a)) int_a^b J_eps(zeta - xi) dxi,
        J_eps(zeta - tau)   = (2/(b-a)^2) int_a^b J_eps(zeta - xi)(b - xi) dxi.

    Only these kernel values are exposed; they are uniquely defined even
    where the points themselves are not, and they are all the downstream
    formulas consume.  ``a == b`` returns the limit ``J_eps(zeta - a)``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    a, b, zeta = np.broadcast_arrays(a, b, zeta)
    scalar = a.ndim == 0
    a, b, zeta = np.atleast_1d(a, b, zeta)
    eq = a == b
    b_safe = np.where(eq, a + 1.0, b)
    i0, i1 = ctx.kernel.box_integrals(a, b_safe, zeta, ctx.eps)
    diff = b_safe - a
    j_theta = i0 / diff
    j_tau = 2.0 * i1 / diff**2
    j_limit = ctx.kernel.pdf_scaled(zeta - a, ctx.eps)
    j_theta = np.where(eq, j_limit, j_theta)
    j_tau = np.where(eq, j_limit, j_tau)
    if scalar:
        return float(j_theta[0]), float(j_tau[0])
    return j_theta, j_tau


def discrete_diss_density(u: Field, ctx: KineticContext, zeta: float) -> Field:
    """Mollified parabolic dissipation density of the scheme, cellwise:

        1/2 sum_i [ J_eps(zeta - tau_i^+) (D+_i A(u))^2
                  + J_eps(zeta - tau_i^-) (D-_i A(u))^2 ]  >= 0.
    """
    spec = u.spec
    a_vals = np.asarray(ctx.aeff(u.values), dtype=float)
    a_ghost = float(ctx.aeff(0.0))
    out = np.zeros(spec.shape)
    for axis in range(spec.dim):
        up = shift_values(a_vals, axis, +1, spec.boundary, a_ghost)
        dn = shift_values(a_vals, axis, -1, spec.boundary, a_ghost)
        _, j_tau_up = theta_tau_kernel_values(a_vals, up, zeta, ctx)
        _, j_tau_dn = theta_tau_kernel_values(a_vals, dn, zeta, ctx)
        d_up = (up - a_vals) / spec.dx
        d_dn = (a_vals - dn) / spec.dx
        out += 0.5 * (j_tau_up * d_up**2 + j_tau_dn * d_dn**2)
    return u.with_values(out)


def flux_diss_density(u: Field, ctx: KineticContext, xi: float) -> Field:
    """Convective dissipation density of the scheme at level ``xi``:

        sum_i [ (F1_i(xi) - F1_i(u_{a-e_i})) D-_i chi(u; xi)
              + (F2_i(xi) - F2_i(u_{a+e_i})) D+_i chi(u; xi) ]  >= 0

    by the monotonicity of the split fluxes.
    """
    spec = u.spec
    chi_vals = np.asarray(chi(u.values, xi), dtype=float)
    out = np.zeros(spec.shape)
    for axis, flux in enumerate(ctx.model.fluxes):
        f1_vals = np.asarray(flux.f1(u.values), dtype=float)
        f2_vals = np.asarray(flux.f2(u.values), dtype=float)
        f1_dn = shift_values(f1_vals, axis, -1, spec.boundary, float(flux.f1(0.0)))
        f2_up = shift_values(f2_vals, axis, +1, spec.boundary, float(flux.f2(0.0)))
        chi_dn = shift_values(chi_vals, axis, -1, spec.boundary, 0.0)
        chi_up = shift_values(chi_vals, axis, +1, spec.boundary, 0.0)
        f1_xi = float(flux.f1(xi))
        f2_xi = float(flux.f2(xi))
        out += (f1_xi - f1_dn) * (chi_vals - chi_dn) / spec.dx
        out += (f2_xi - f2_up) * (chi_up - chi_vals) / spec.dx
    return u.with_values(out)


def continuous_diss_density(u: Field, ctx: KineticContext, zeta: float) -> Field:
    """Mollified continuous-form dissipation density on the grid:

        J_eps(zeta - A(u)) * |D+ A(u)|^2  (forward differences as gradient).
    """
    spec = u.spec
    a_vals = np.asarray(ctx.aeff(u.values), dtype=float)
    a_ghost = float(ctx.aeff(0.0))
    grad2 = np.zeros(spec.shape)
    for axis in range(spec.dim):
        up = shift_values(a_vals, axis, +1, spec.boundary, a_ghost)
        grad2 += ((up - a_vals) / spec.dx) ** 2
    dens = ctx.kernel.pdf_scaled(zeta - a_vals, ctx.eps) * grad2
    return u.with_values(dens)


def entropy_pair(S: ScalarFn, ctx: KineticContext) -> tuple[ScalarFn, tuple[ScalarFn, ...]]:
    """Entropy pair transported through the diffusion transform.

    Returns ``psi_A`` with ``psi_A(u) = int_0^u S'(A_eff(s)) ds`` and one
    ``q_A`` per axis with ``q_A(u) = int_0^u S'(A_eff(s)) f_i'(s) ds``;
    their derivatives are ``S'(A_eff(u))`` and ``S'(A_eff(u)) f_i'(u)``.
    The flux derivative relation is verified by finite differences.
    """
    aeff = ctx.aeff

    def psi_scalar(u):
        return _quad(lambda s: float(S.deriv(aeff(s))), 0.0, float(u)) if u >= 0 else -_quad(
            lambda s: float(S.deriv(aeff(s))), float(u), 0.0
        )

    psi_a = ScalarFn(
        fn=np.vectorize(psi_scalar, otypes=[float]),
        deriv=lambda u: np.asarray(S.deriv(aeff(u)), dtype=float),
        name="psi_A",
    )

    q_fns = []
    for axis in range(ctx.model.dim):
        f_i = ctx.model.flux(axis)

        def q_scalar(u, f_i=f_i):
            fn = lambda s: float(S.deriv(aeff(s))) * float(f_i.deriv(s))
            return _quad(fn, 0.0, float(u)) if u >= 0 else -_quad(fn, float(u), 0.0)

        q_a = ScalarFn(
            fn=np.vectorize(q_scalar, otypes=[float]),
            deriv=lambda u, f_i=f_i: np.asarray(S.deriv(aeff(u)), dtype=float)
            * np.asarray(f_i.deriv(u), dtype=float),
            name=f"q_A[{axis}]",
        )
        q_fns.append(q_a)

    lo, hi = ctx.data_interval
    xs = np.linspace(lo + 0.01 * (hi - lo), hi - 0.01 * (hi - lo), 17)
    h = 1e-6 * max(1.0, hi - lo)
    for q_a in q_fns:
        fd = (q_a(xs + h) - q_a(xs - h)) / (2 * h)
        scale = 1.0 + float(np.max(np.abs(fd)))
        if float(np.max(np.abs(fd - q_a.deriv(xs)))) / scale > 1e-6:
            raise ConstructionError("entropy flux derivative check failed")
    return psi_a, tuple(q_fns)


class SpaceTimeBump:
    """Smooth, compactly supported space-time test function.

    Product of scaled bump profiles ``exp(-1/(1-y^2))`` in time and in each
    space coordinate; provides the derivatives the entropy functional needs
    and sup bounds used for its quadrature-tolerance estimate.
    """

    def __init__(self, t_center: float, t_radius: float, x_center: Sequence[float], x_radius: Sequence[float]):
        self.t_center = float(t_center)
        self.t_radius = float(t_radius)
        self.x_center = tuple(float(c) for c in x_center)
        self.x_radius = tuple(float(r) for r in x_radius)
        if self.t_radius <= 0 or any(r <= 0 for r in self.x_radius):
            raise ValueError("radii must be positive")
        ys = np.linspace(-1, 1, 20001)
        self._sup_b = float(np.max(_bump_raw(ys)))
        self._sup_db = float(np.max(np.abs(_bump_d1(ys))))
        self._sup_d2b = float(np.max(np.abs(_bump_d2(ys))))

    @property
    def dim(self) -> int:
        return len(self.x_center)

    def support_box(self) -> tuple[tuple[float, float], ...]:
        t = (self.t_center - self.t_radius, self.t_center + self.t_radius)
        xs = tuple(
            (c - r, c + r) for c, r in zip(self.x_center, self.x_radius)
        )
        return (t,) + xs

    def _factors(self, t, coords):
        tau = (np.asarray(t, dtype=float) - self.t_center) / self.t_radius
        chis = [
            (np.asarray(x, dtype=float) - c) / r
            for x, c, r in zip(coords, self.x_center, self.x_radius)
        ]
        return tau, chis

    def value(self, t, *coords):
        tau, chis = self._factors(t, coords)
        out = _bump_raw(tau)
        for y in chis:
            out = out * _bump_raw(y)
        return out

    def dt(self, t, *coords):
        tau, chis = self._factors(t, coords)
        out = _bump_d1(tau) / self.t_radius
        for y in chis:
            out = out * _bump_raw(y)
        return out

    def grad(self, axis: int, t, *coords):
        tau, chis = self._factors(t, coords)
        out = _bump_raw(tau)
        for i, y in enumerate(chis):
            if i == axis:
                out = out * _bump_d1(y) / self.x_radius[i]
            else:
                out = out * _bump_raw(y)
        return out

    def laplacian(self, t, *coords):
        tau, chis = self._factors(t, coords)
        base = _bump_raw(tau)
        total = np.zeros(np.broadcast(*([tau] + chis)).shape)
        for i in range(len(chis)):
            term = base * _bump_d2(chis[i]) / self.x_radius[i] ** 2
            for j, y in enumerate(chis):
                if j != i:
                    term = term * _bump_raw(y)
            total = total + term
        return total

    def derivative_bounds(self) -> dict[str, float]:
        b, db, d2b = self._sup_b, self._sup_db, self._sup_d2b
        d = self.dim
        return {
            "value": b ** (1 + d),
            "dt": db * b**d / self.t_radius,
            "dt2": d2b * b**d / self.t_radius**2,
            "grad": db * b**d / min(self.x_radius),
            "laplacian": d * d2b * b**d / min(self.x_radius) ** 2,
        }


def _bump_d1(y):
    y = np.asarray(y, dtype=float)
    inside = np.abs(y) < 1.0
    ys = np.where(inside, y, 0.0)
    with np.errstate(divide="ignore", over="ignore"):
        one = 1.0 - ys * ys
        vals = np.exp(-1.0 / one) * (-2.0 * ys / one**2)
    return np.where(inside, vals, 0.0)


def _bump_d2(y):
    y = np.asarray(y, dtype=float)
    inside = np.abs(y) < 1.0
    ys = np.where(inside, y, 0.0)
    with np.errstate(divide="ignore", over="ignore"):
        one = 1.0 - ys * ys
        w = -2.0 * ys / one**2
        dw = (-2.0 - 6.0 * ys * ys) / one**3
        vals = np.exp(-1.0 / one) * (w * w + dw)
    return np.where(inside, vals, 0.0)


class EntropyResidual(NamedTuple):
    value: float
    tolerance: float


def entropy_residual(
    trajectory: Sequence[Field],
    c: float,
    phi: SpaceTimeBump,
    ctx: KineticContext,
) -> EntropyResidual:
    """Kruzkov entropy functional of a discrete trajectory.

    Evaluates, by midpoint-in-space / trapezoid-in-time quadrature over the
    stored checkpoints,

        iint |u-c| dphi/dt + sign(u-c)(f(u)-f(c)) . grad phi
             + |A(u)-A(c)| lap phi  dx dt  +  int |u0-c| phi(0, .) dx.

    For an entropy solution this is nonnegative for every constant ``c``
    and nonnegative test function; the discrete trajectory satisfies it up
    to a quadrature tolerance reported alongside the value.
    """
    if len(trajectory) < 2:
        raise ValueError("need at least two checkpoints")
    spec = trajectory[0].spec
    model = ctx.model
    if phi.dim != spec.dim:
        raise ValueError("test function dimension mismatch")
    t_end = trajectory[-1].time
    support = phi.support_box()
    if support[0][0] < 0.0 or support[0][1] > t_end:
        raise DomainError("test function support leaves [0, T)")
    for (lo, hi), (blo, bhi) in zip(support[1:], zip(spec.origin, spec.upper())):
        if lo < blo or hi > bhi:
            raise DomainError("test function support leaves the domain box")

    aeff = ctx.aeff
    mesh = spec.center_mesh()
    vol = spec.cell_volume
    c = float(c)
    f_c = [float(model.flux(i)(c)) for i in range(spec.dim)]
    a_c = float(aeff(c))

    def space_integral(field: Field) -> float:
        t = field.time
        u = field.values
        acc = np.abs(u - c) * phi.dt(t, *mesh)
        sgn = np.sign(u - c)
        for axis in range(spec.dim):
            flux_gap = np.asarray(model.flux(axis)(u), dtype=float) - f_c[axis]
            acc = acc + sgn * flux_gap * phi.grad(axis, t, *mesh)
        acc = acc + np.abs(np.asarray(aeff(u), dtype=float) - a_c) * phi.laplacian(t, *mesh)
        return float(vol * acc.sum())

    times = np.array([f.time for f in trajectory])
    g_vals = np.array([space_integral(f) for f in trajectory])
    value = float(np.trapezoid(g_vals, times))
    u0 = trajectory[0]
    value += float(vol * (np.abs(u0.values - c) * phi.value(u0.time, *mesh)).sum())

    bounds = phi.derivative_bounds()
    u_max = max(float(np.abs(f.values).max()) for f in trajectory)
    lip_f = max(
        model.flux(i).lipschitz_on(-u_max - abs(c), u_max + abs(c)) for i in range(spec.dim)
    )
    lip_a = aeff.lipschitz_on(-u_max - abs(c), u_max + abs(c))
    measure = 2 * phi.t_radius * float(np.prod([2 * r for r in phi.x_radius]))
    dt_max = float(np.max(np.diff(times)))
    c_phi = (
        (1.0 + u_max + abs(c))
        * measure
        * (bounds["dt2"] + bounds["dt"] + (1.0 + lip_f) * bounds["grad"] + (1.0 + lip_a) * bounds["laplacian"])
    )
    tolerance = c_phi * (spec.dx + dt_max)
    return EntropyResidual(value=value, tolerance=float(tolerance))

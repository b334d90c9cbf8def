"""Numerical verification experiments for the operator inequalities and
decompositions: each check produces (lhs, rhs_shape, ratio) triples across a
parameter axis, with the unknown constant fitted rather than assumed.

Conventions: rhs_shape is the right-hand side with the unnamed constant
stripped; ratio = lhs / rhs_shape; a check with lhs = 0 passes with ratio 0.
The verdict is boundedness of the ratio across the axis (max/min under a
configured factor among points with lhs > 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as gamma_fn

from .dynamics import EvolutionConfig, KernelSpec, exchange_operator, vlasov_step
from .errors import ExponentError, QuadratureError
from .phasespace import PhaseSpaceField, lorentz_norm
from .quantize import (
    DensityOperator,
    apply_p_function,
    apply_x_function,
    diag_abs,
    quantum_grad_xi,
    weyl_quantize,
)
from .schatten import schatten_norm, semiclassical_factor
from .spectral import derivative, wavenumbers


@dataclass(frozen=True)
class BoundPoint:
    param: object
    lhs: float
    rhs_shape: float

    @property
    def ratio(self) -> float:
        if self.lhs == 0.0:
            return 0.0
        return self.lhs / self.rhs_shape

    def to_json(self) -> dict:
        return {"param": self.param, "lhs": self.lhs, "rhs_shape": self.rhs_shape, "ratio": self.ratio}


@dataclass
class BoundCheck:
    """One inequality experiment: named points along an axis plus a boundedness verdict."""

    name: str
    ladder_axis: str
    points: list
    bound_factor: float = 10.0
    extras: dict = field(default_factory=dict)

    @property
    def ratios(self) -> list:
        return [pt.ratio for pt in self.points if pt.lhs > 0.0]

    @property
    def fitted_C(self) -> float:
        rs = self.ratios
        return rs[0] if rs else 0.0

    @property
    def ratio_max(self) -> float:
        rs = self.ratios
        return max(rs) if rs else 0.0

    @property
    def ratio_min(self) -> float:
        rs = self.ratios
        return min(rs) if rs else 0.0

    @property
    def verdict(self) -> bool:
        rs = self.ratios
        if not rs:
            return True
        if min(rs) <= 0.0 or not all(np.isfinite(rs)):
            return False
        return max(rs) / min(rs) < self.bound_factor

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "axis": self.ladder_axis,
            "points": [pt.to_json() for pt in self.points],
            "fitted_C": self.fitted_C,
            "verdict": self.verdict,
            "ratio_max": self.ratio_max,
            "ratio_min": self.ratio_min,
        }
        if self.extras:
            out["extras"] = self.extras
        return out


def merge_checks(name: str, checks, ladder_axis: str, bound_factor: float = 10.0) -> BoundCheck:
    """Concatenate the points of per-state checks into one ladder-wide check."""
    points = [pt for c in checks for pt in c.points]
    extras = {}
    for c in checks:
        for k, v in c.extras.items():
            extras.setdefault(k, []).append(v)
    return BoundCheck(name, ladder_axis, points, bound_factor=bound_factor, extras=extras)


# ---------------------------------------------------------------------------
# Gaussian decomposition of power-law kernels
# ---------------------------------------------------------------------------

def _gaussian_superposition(a: float, r: float, log_flag: bool, tol: float) -> float:
    """Evaluate the Gaussian-superposition integral reproducing r^{-a} (or -ln r).

    Uses the substitution t = e^s so the endpoint singularity t^{a/2-1}
    becomes a plain exponential decay.
    """
    rr = r * r
    if log_flag:
        integrand = lambda s: math.exp(-math.pi * rr * math.exp(s)) - math.exp(-math.pi * math.exp(s))
    elif a > 0:
        integrand = lambda s: math.exp(0.5 * a * s) * math.exp(-math.pi * rr * math.exp(s))
    else:  # a in (-2, 0): subtracted variant
        integrand = lambda s: math.exp(0.5 * a * s) * (math.exp(-math.pi * rr * math.exp(s)) - 1.0)
    val, err = quad(integrand, -60.0, 60.0, limit=400, epsabs=1e-13, epsrel=1e-12)
    if not np.isfinite(val) or err > max(tol * abs(val), 1e-9):
        raise QuadratureError(f"gaussian superposition quadrature stalled: value {val}, abserr {err}")
    return 0.5 * val


def gaussian_weight_constant(a: float) -> float:
    """Normalization 2 pi^{a/2} / Gamma(a/2) of the superposition (1 for the log case)."""
    if a == 0.0:
        return 1.0
    return 2.0 * math.pi ** (a / 2.0) / gamma_fn(a / 2.0)


def gaussian_decomposition_check(K: KernelSpec, radii, tol: float = 1e-6) -> BoundCheck:
    """Reconstruct the unsoftened kernel from its Gaussian superposition at each radius."""
    if not K.log_flag and not (-2.0 < K.a):
        raise ValueError("decomposition requires a > -2")
    points = []
    residuals = []
    omega = gaussian_weight_constant(K.a)
    for r in radii:
        integral = _gaussian_superposition(K.a, float(r), K.log_flag, tol)
        if K.log_flag:
            recon = K.sign * (-integral)          # superposition equals -ln r
            target = K.sign * math.log(r)
        else:
            recon = K.sign * omega * integral
            target = K.sign * float(r) ** -K.a
        scale = max(abs(target), 1.0)
        residuals.append(abs(recon - target) / scale)
        points.append(BoundPoint(param=float(r), lhs=recon, rhs_shape=target if target != 0 else 1.0))
    check = BoundCheck("gaussian_decomposition", "radius", points, bound_factor=1.0 + 10 * tol)
    check.extras["residuals"] = residuals
    check.extras["max_residual"] = max(residuals)
    check.extras["omega"] = omega
    check.extras["pass"] = bool(max(residuals) <= tol)
    return check


# ---------------------------------------------------------------------------
# Commutator bounds
# ---------------------------------------------------------------------------

def _translated_kernel_diag(K: KernelSpec, grid, z: float) -> np.ndarray:
    x = grid.points
    L = grid.length
    d = (x - z + L / 2) % L - L / 2
    return K.value(np.abs(d))


def _lp(values: np.ndarray, p: float, cell: float) -> float:
    if math.isinf(p):
        return float(np.max(np.abs(values)))
    return float((np.sum(np.abs(values) ** p) * cell) ** (1.0 / p))


def commutator_trace_check(
    rho: DensityOperator,
    K: KernelSpec,
    z_list,
    hbar: float,
    eps: float | None = None,
    eps_tilde: float | None = None,
    bound_factor: float = 10.0,
) -> BoundCheck:
    """Trace norm of [K(.-z), rho] against h times Lebesgue norms of diag|grad_xi rho|."""
    bc = K.b_conjugate  # raises for b <= 1 (hypothesis a < d-1 violated)
    if eps is None:
        eps = (bc - 1.0) / 2.0
    if not (0.0 < eps <= bc - 1.0):
        raise ExponentError(f"eps must lie in (0, b'-1] = (0, {bc - 1.0:.3f}]")
    if eps_tilde is None:
        eps_tilde = eps / (4.0 * bc)
    if not (0.0 < eps_tilde < eps / (2.0 * bc)):
        raise ExponentError("eps_tilde must lie in (0, eps/(2 b'))")

    dx = rho.grid_x.spacing
    rho1 = diag_abs(quantum_grad_xi(rho), dx)
    norm_lo = _lp(rho1, bc - eps, dx)
    norm_hi = _lp(rho1, bc + eps, dx)
    rhs = rho.h * norm_lo ** (0.5 + eps_tilde) * norm_hi ** (0.5 - eps_tilde)

    points = []
    for z in z_list:
        Kz = _translated_kernel_diag(K, rho.grid_x, float(z))
        comm = Kz[:, None] * rho.matrix - rho.matrix * Kz[None, :]
        lhs = float(np.abs(np.linalg.eigvalsh(1j * comm)).sum())
        points.append(BoundPoint(param={"hbar": hbar, "z": float(z)}, lhs=lhs, rhs_shape=rhs))
    return BoundCheck("commutator_trace", "z", points, bound_factor=bound_factor)


def commutator_lp_check(
    rho: DensityOperator,
    K: KernelSpec,
    z_list,
    hbar: float,
    p: float,
    n_weight: float = 2.0,
    eps: float | None = None,
    bound_factor: float = 10.0,
) -> BoundCheck:
    """Semiclassical p-norm of [K(.-z), rho] against weighted norms of grad_xi rho."""
    b = K.b_exponent
    if p >= b:
        raise ExponentError(f"requires p < b = {b:.3f}")
    if n_weight <= K.a + 1.0:
        raise ExponentError(f"weight power must exceed a+1 = {K.a + 1.0:.3f}")
    q = 1.0 / (1.0 / p - 1.0 / b)
    if q <= 1.0:
        raise ExponentError(f"derived q = {q:.3f} <= 1")
    if eps is None:
        eps = (q - 1.0) / 2.0
    if not (0.0 < eps < q - 1.0 + 1e-12):
        raise ExponentError(f"eps must lie in (0, q-1) = (0, {q - 1.0:.3f})")
    eps_tilde = eps / q

    grad = quantum_grad_xi(rho)
    weighted = grad + apply_p_function(grad, rho.grid_x, rho.hbar, lambda pp: np.abs(pp) ** n_weight, "right")
    lo = schatten_norm(weighted, q - eps) * semiclassical_factor(rho.hbar, q - eps)
    hi = schatten_norm(weighted, q + eps) * semiclassical_factor(rho.hbar, q + eps)
    rhs = rho.h * hi ** (0.5 + eps_tilde) * lo ** (0.5 - eps_tilde)

    points = []
    for z in z_list:
        Kz = _translated_kernel_diag(K, rho.grid_x, float(z))
        comm = Kz[:, None] * rho.matrix - rho.matrix * Kz[None, :]
        lhs = schatten_norm(comm, p) * semiclassical_factor(rho.hbar, p)
        points.append(BoundPoint(param={"hbar": hbar, "z": float(z)}, lhs=lhs, rhs_shape=rhs))
    return BoundCheck("commutator_lp", "z", points, bound_factor=bound_factor)


# ---------------------------------------------------------------------------
# Kinetic interpolation
# ---------------------------------------------------------------------------

def _trace_abs_with_p_weight(A: np.ndarray, grid, hbar: float, power: float) -> float:
    """Tr(|A| |p_hat|^power) for Hermitian A, momentum weight applied spectrally."""
    lam, vec = np.linalg.eigh(A)
    k = wavenumbers(grid.n_points, grid.length)
    weights = np.abs(hbar * k) ** power if power else np.ones_like(k)
    spec = np.fft.fft(vec, axis=0)
    per_vec = (weights[:, None] * np.abs(spec) ** 2).sum(axis=0) / grid.n_points
    return float((np.abs(lam) * per_vec).sum())


def kinetic_interpolation_check(rho: DensityOperator, hbar: float, n1: int, bound_factor: float = 10.0) -> BoundCheck:
    """diag|grad_xi rho| in L^p against the momentum-moment / sup-norm product.

    p = 1 + n1/d and theta = 1/p; the sup side uses the h^{-d}-prefactored
    operator norm (the hbar-uniform convention).
    """
    if n1 % 2 != 0 or n1 < 0:
        raise ValueError("n1 must be a nonnegative even integer")
    d = 1
    p = 1.0 + n1 / d
    theta = 1.0 / p
    grad = quantum_grad_xi(rho)
    dx = rho.grid_x.spacing
    rho1 = diag_abs(grad, dx)
    lhs = _lp(rho1, p, dx)
    moment = _trace_abs_with_p_weight(grad, rho.grid_x, rho.hbar, float(n1))
    sup = float(np.linalg.norm(grad, ord=2)) / rho.h
    rhs = moment ** theta * sup ** (1.0 - theta)
    pt = BoundPoint(param=hbar, lhs=lhs, rhs_shape=rhs)
    return BoundCheck("kinetic_interpolation", "hbar", [pt], bound_factor=bound_factor)


# ---------------------------------------------------------------------------
# Weighted quantization bounds
# ---------------------------------------------------------------------------

def _field_l2(values: np.ndarray, cell: float) -> float:
    return float(np.sqrt(np.sum(np.abs(values) ** 2) * cell))


def weighted_weyl_bound_check(f: PhaseSpaceField, hbar: float, n: int, n1: int) -> list:
    """Weighted L2 and trace bounds for op(f) against classical Sobolev norms of f.

    Returns one BoundCheck per inequality: momentum weight (prefactor (4d)^n),
    position weight (prefactor (9d/4)^n), mixed weight, and the momentum-
    moment trace bound. Single-point checks; ladders are merged by the caller.
    """
    if n not in (0, 2) or n1 not in (0, 2):
        raise ValueError("desk scale supports n, n1 in {0, 2}")
    grid = f.grid
    d = grid.dim
    if d != 1:
        raise ValueError("operator bounds are d=1 only")
    cell = grid.cell_volume
    h = 2.0 * math.pi * hbar
    x = grid.axis_points(0)
    xi = grid.axis_points(1)
    rho = weyl_quantize(f, hbar)
    checks = []

    def dnx(vals, order):
        return derivative(vals, 0, grid.x.length, order=order) if order else vals

    def dnxi(vals, order):
        return derivative(vals, 1, grid.xi.length, order=order) if order else vals

    # momentum weight
    lhs = h ** -0.5 * np.linalg.norm(apply_p_function(rho.matrix, grid.x, hbar, lambda pp: np.abs(pp) ** n, "right"))
    rhs = (4.0 * d) ** n * (_field_l2(xi ** n * f.values, cell) + (hbar / 2.0) ** n * _field_l2(dnx(f.values, n), cell))
    checks.append(BoundCheck("weyl_weight_p", "hbar", [BoundPoint(hbar, float(lhs), rhs)], bound_factor=10.0))

    # position weight
    lhs = h ** -0.5 * np.linalg.norm(apply_x_function(rho.matrix, grid.x, lambda xx: np.abs(xx) ** n, "right"))
    rhs = (2.25 * d) ** n * (_field_l2(np.abs(x) ** n * f.values, cell) + hbar ** n * _field_l2(dnxi(f.values, n), cell))
    checks.append(BoundCheck("weyl_weight_x", "hbar", [BoundPoint(hbar, float(lhs), rhs)], bound_factor=10.0))

    # mixed weight, constant unknown
    mixed = apply_x_function(
        apply_p_function(rho.matrix, grid.x, hbar, lambda pp: np.abs(pp) ** n1, "right"),
        grid.x,
        lambda xx: np.abs(xx) ** n,
        "right",
    )
    lhs = h ** -0.5 * np.linalg.norm(mixed)
    rhs = (
        _field_l2((1.0 + np.abs(x) ** n * np.abs(xi) ** n1) * f.values, cell)
        + hbar ** n1 * _field_l2(np.abs(x) ** n * dnx(f.values, n1), cell)
        + hbar ** n * _field_l2(np.abs(xi) ** n1 * dnxi(f.values, n), cell)
        + hbar ** (n + n1) * _field_l2(dnx(dnxi(f.values, n), n1), cell)
    )
    checks.append(BoundCheck("weyl_weight_xp", "hbar", [BoundPoint(hbar, float(lhs), rhs)], bound_factor=10.0))

    # momentum-moment trace bound, k = n + n1
    k = n + n1
    wx = (1.0 + x ** 2) ** (n / 2.0)
    wxi = (1.0 + xi ** 2) ** (k / 2.0)
    lhs = _trace_abs_with_p_weight(rho.matrix, grid.x, hbar, float(n1))
    rhs = (
        _field_l2(wxi * wx * f.values, cell)
        + hbar ** k * _field_l2(wx * dnx(f.values, k), cell)
        + hbar ** n * _field_l2(wxi * dnxi(f.values, n), cell)
        + hbar ** (k + n) * _field_l2(dnx(dnxi(f.values, n), k), cell)
    )
    checks.append(BoundCheck("weyl_moment_trace", "hbar", [BoundPoint(hbar, float(lhs), rhs)], bound_factor=10.0))
    return checks


# ---------------------------------------------------------------------------
# Exchange-term bounds
# ---------------------------------------------------------------------------

def exchange_bound_check(rho: DensityOperator, K: KernelSpec, hbar: float, bound_factor: float = 10.0) -> BoundCheck:
    """Tr(X rho) against h^s times the weighted semiclassical L2 norm squared.

    Momentum weight |p|^{a/2} for a >= 0 (s = d - a); position weight
    |x|^{|a|/2} with prefactor h^d for a < 0. Also evaluates the moment-control
    inequality relating the weighted L2 norm to the operator norm and the
    momentum moment (reported in extras, slack in the verdict of the caller).
    """
    d = 1
    a = K.a
    M = rho.matrix
    X = exchange_operator(rho, K)
    lhs = float(np.trace(X @ M).real)
    h = rho.h
    if a >= 0:
        s = d - a
        weighted = apply_p_function(M, rho.grid_x, rho.hbar, lambda pp: np.abs(pp) ** (a / 2.0), "left")
        rhs = h ** s * (h ** (-d) * np.linalg.norm(weighted) ** 2)
    else:
        s = float(d)
        weighted = apply_x_function(M, rho.grid_x, lambda xx: np.abs(xx) ** (abs(a) / 2.0), "left")
        rhs = h ** d * (h ** (-d) * np.linalg.norm(weighted) ** 2)
    pt = BoundPoint(param=hbar, lhs=lhs, rhs_shape=float(rhs))
    check = BoundCheck("exchange_bound", "hbar", [pt], bound_factor=bound_factor)

    if a >= 0:
        l2m_lhs = float(np.linalg.norm(weighted) ** 2)
        op_norm = float(np.linalg.norm(M, ord=2))
        moment = _trace_psd_p_weight(M, rho.grid_x, rho.hbar, a)
        check.extras["l2m"] = {"lhs": l2m_lhs, "rhs": op_norm * moment}
    check.extras["s_exponent"] = s
    return check


def _trace_psd_p_weight(M: np.ndarray, grid, hbar: float, power: float) -> float:
    """Tr(|p|^power rho) for Hermitian rho (no absolute value on the eigenvalues)."""
    k = wavenumbers(grid.n_points, grid.length)
    lam, vec = np.linalg.eigh(M)
    weights = np.abs(hbar * k) ** power
    per_vec = (weights[:, None] * np.abs(np.fft.fft(vec, axis=0)) ** 2).sum(axis=0) / grid.n_points
    return float((lam * per_vec).sum())


# ---------------------------------------------------------------------------
# Classical weak-strong stability
# ---------------------------------------------------------------------------

@dataclass
class StabilityReport:
    """Measured L^1 / L^p separation of two transported states with Gronwall envelopes."""

    times: np.ndarray
    l1_distance: np.ndarray
    l1_envelope: np.ndarray
    fitted_C: float
    lp_order: float
    lp_distance: np.ndarray
    lp_envelope: np.ndarray
    lp_fitted_C: float
    softening: float

    def verdict(self, slack: float = 1e-9) -> bool:
        ok1 = np.all(self.l1_distance <= self.l1_envelope * (1.0 + slack))
        okp = np.all(self.lp_distance <= self.lp_envelope * (1.0 + slack))
        return bool(ok1 and okp)

    def to_boundcheck(self) -> BoundCheck:
        points = [
            BoundPoint(param=float(t), lhs=float(d1), rhs_shape=float(e1) if e1 > 0 else 1.0)
            for t, d1, e1 in zip(self.times, self.l1_distance, self.l1_envelope)
        ]
        chk = BoundCheck("classical_stability", "time", points, bound_factor=math.inf)
        chk.extras["fitted_C"] = self.fitted_C
        chk.extras["lp_fitted_C"] = self.lp_fitted_C
        chk.extras["lp_order"] = self.lp_order
        chk.extras["softening"] = self.softening
        chk.extras["verdict_below_envelope"] = self.verdict()
        return chk


def _xi_marginal_lorentz(f: PhaseSpaceField, lp_xi: float, lorentz_p: float) -> float:
    """|| ||grad_xi f||_{L^p_xi} ||_{L^{q,1}_x} for the Gronwall rates."""
    grid = f.grid
    g = derivative(f.values, 1, grid.xi.length)
    if math.isinf(lp_xi):
        marg = np.max(np.abs(g), axis=1)
    else:
        marg = (np.sum(np.abs(g) ** lp_xi, axis=1) * grid.xi.spacing) ** (1.0 / lp_xi)
    return lorentz_norm(marg, lorentz_p, 1.0, grid.x.spacing)


def classical_stability_check(
    f1: PhaseSpaceField,
    f2: PhaseSpaceField,
    K: KernelSpec | None,
    cfg: EvolutionConfig,
    lp_order: float = 1.5,
) -> StabilityReport:
    """Transport both states and compare their separation with Gronwall envelopes.

    The L^1 envelope is ||f1-f2||(0) exp(C int ||grad_xi f2||_{L^{b',1}_x L^1_xi});
    the L^p variant uses the Lorentz index q with 1/q = 1/p - 1/b. The rate
    constants C are fitted on the first recorded interval, so the check is
    that growth never beats its early-time rate.
    """
    if f1.grid != f2.grid:
        raise ValueError("states must share a grid")
    if K is not None:
        b = K.b_exponent
        if b <= 1.0:
            raise ExponentError("stability exponents need b > 1 (a < d-1)")
        bc = K.b_conjugate
        q_lp = 1.0 / (1.0 / lp_order - 1.0 / b)
    else:
        bc = 2.0
        q_lp = lp_order

    cell = f1.grid.cell_volume
    n_steps = cfg.n_steps()
    times = [0.0]
    d1 = [float(np.abs(f1.values - f2.values).sum() * cell)]
    dp = [float((np.abs(f1.values - f2.values) ** lp_order).sum() * cell) ** (1.0 / lp_order)]
    rate1 = [_xi_marginal_lorentz(f2, 1.0, bc)]
    ratep = [_xi_marginal_lorentz(f2, lp_order, q_lp)]

    g1, g2 = f1, f2
    for step in range(1, n_steps + 1):
        g1 = vlasov_step(g1, K, cfg.dt)
        g2 = vlasov_step(g2, K, cfg.dt)
        if step % cfg.record_every == 0 or step == n_steps:
            times.append(step * cfg.dt)
            d1.append(float(np.abs(g1.values - g2.values).sum() * cell))
            dp.append(float((np.abs(g1.values - g2.values) ** lp_order).sum() * cell) ** (1.0 / lp_order))
            rate1.append(_xi_marginal_lorentz(g2, 1.0, bc))
            ratep.append(_xi_marginal_lorentz(g2, lp_order, q_lp))

    times = np.array(times)
    d1 = np.array(d1)
    dp = np.array(dp)
    int1 = _cumtrapz(np.array(rate1), times)
    intp = _cumtrapz(np.array(ratep), times)

    C1 = _fit_rate(d1, int1)
    Cp = _fit_rate(dp, intp)
    env1 = d1[0] * np.exp(C1 * int1)
    envp = dp[0] * np.exp(Cp * intp)
    delta = K.softening if K is not None else 0.0
    return StabilityReport(times, d1, env1, C1, lp_order, dp, envp, Cp, delta)


def _cumtrapz(y: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    if len(t) > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def _fit_rate(dist: np.ndarray, integral: np.ndarray) -> float:
    """Gronwall rate from the first recorded interval (zero for flat or shrinking runs)."""
    if len(dist) < 2 or dist[0] <= 0.0 or integral[1] <= 0.0:
        return 0.0
    growth = math.log(max(dist[1], 1e-300) / dist[0])
    return max(growth / integral[1], 0.0)


# ---------------------------------------------------------------------------
# Moment-propagation envelope
# ---------------------------------------------------------------------------

def moment_envelope_check(monitor, fit_fraction: float = 0.25) -> BoundCheck:
    """Gronwall envelope for log(M_x + M_xi) against p (1+n) int J.

    The constant is fitted as the max growth ratio over the leading fraction
    of checkpoints; the verdict is that later checkpoints stay below the
    fitted envelope.
    """
    t = monitor.times()
    logm = monitor.log_m()
    integral = monitor.j_integral() * monitor.p * (1.0 + monitor.weight_power)
    n_fit = max(2, int(math.ceil(fit_fraction * len(t))))
    ratios = []
    for j in range(1, min(n_fit, len(t))):
        if integral[j] > 0:
            ratios.append((logm[j] - logm[0]) / integral[j])
    C = max(ratios) if ratios else 0.0
    C = max(C, 0.0)
    points = []
    ok = True
    for j in range(n_fit, len(t)):
        envelope = logm[0] + C * integral[j]
        points.append(BoundPoint(param=float(t[j]), lhs=float(logm[j]), rhs_shape=float(envelope) if envelope != 0 else 1.0))
        if logm[j] > envelope + 1e-9 + 1e-9 * abs(envelope):
            ok = False
    chk = BoundCheck("moment_envelope", "time", points, bound_factor=math.inf)
    chk.extras["fitted_C"] = C
    chk.extras["below_envelope"] = ok
    return chk

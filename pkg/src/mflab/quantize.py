"""Discrete Weyl quantization, Wigner transform, and quantum phase-space gradients.

Conventions (d = 1 only for operators):
  * kernel sampling  M[i, j] = dx * rho(x_i, x_j), so trace(M) matches the
    continuum trace and singular values of M match continuum singular values;
  * quantization     rho(x_i, x_j) = dxi * sum_k f((x_i+x_j)/2, xi_k)
                                      * exp(i (x_i-x_j) xi_k / hbar);
  * minimum image    kernel entries with |x_i - x_j| >= L/2 are dropped.
    The xi-grid sum makes the kernel periodic in the difference variable with
    period h/dxi >= L; the window removes the periodization image that would
    otherwise alias into the far corners of the matrix.

A field grid is quantization-ready when dxi * L_x <= h. The resonant choice
L_xi = n*h/L_x makes the Wigner transform of an n x n operator land exactly
back on the field grid.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from scipy.signal import czt

from .errors import AliasingError, DimensionError, NonHermitianError
from .phasespace import Grid1D, PhaseSpaceField, PhaseSpaceGrid
from .spectral import refine_axis, tail_fraction, wavenumbers

DOP_MAGIC = b"DOP1"


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian matrix approximating an integral kernel, with the dx trace scaling."""

    grid_x: Grid1D
    hbar: float
    matrix: np.ndarray

    def __post_init__(self):
        n = self.grid_x.n_points
        if self.matrix.shape != (n, n):
            raise ValueError(f"matrix shape {self.matrix.shape} != ({n}, {n})")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")

    @property
    def h(self) -> float:
        return 2.0 * np.pi * self.hbar

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def hermiticity_defect(self) -> float:
        scale = np.max(np.abs(self.matrix))
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)) / scale)

    def natural_xi_grid(self) -> Grid1D:
        """Momentum axis the Wigner transform of this operator lives on: L_xi = h/dx."""
        return Grid1D(self.grid_x.n_points, self.h / self.grid_x.spacing)

    def with_matrix(self, matrix: np.ndarray) -> "DensityOperator":
        return DensityOperator(self.grid_x, self.hbar, matrix)


@dataclass(frozen=True)
class OperatorPair:
    """Two operator matrices on a common grid/hbar (inputs to inequality oracles)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if self.a.shape != self.b.shape or self.a.shape[0] != self.a.shape[1]:
            raise ValueError("operator pair must be square matrices of equal shape")


def require_hermitian(matrix: np.ndarray, tol: float = 1e-8) -> None:
    scale = np.max(np.abs(matrix))
    if scale == 0.0:
        return
    defect = np.max(np.abs(matrix - matrix.conj().T)) / scale
    if defect > tol:
        raise NonHermitianError(f"hermiticity defect {defect:.2e} exceeds {tol:.0e}")


def _check_quantizable(grid: PhaseSpaceGrid, hbar: float) -> None:
    if grid.dim != 1:
        raise DimensionError("operators are d=1 only")
    h = 2.0 * np.pi * hbar
    if grid.xi.spacing * grid.x.length > h * (1.0 + 1e-9):
        raise AliasingError(
            "xi spacing too coarse for this hbar: need dxi * L_x <= h "
            f"(got {grid.xi.spacing * grid.x.length:.3e} > {h:.3e})"
        )


def resonant_grid(length: float, hbar: float, n_min: int = 16, n_max: int = 1 << 14) -> PhaseSpaceGrid:
    """Smallest power-of-two grid with n >= L^2/h, clamped to [n_min, n_max].

    The xi axis gets L_xi = n*h/L so that dx * L_xi = h exactly; Weyl and
    Wigner transforms are then grid-closed.
    """
    h = 2.0 * np.pi * hbar
    n = int(2 ** np.ceil(np.log2(max(length * length / h, 1.0))))
    n = max(min(n, n_max), n_min)
    if n < length * length / h:
        raise AliasingError(f"n_max={n_max} too small for L={length}, hbar={hbar}")
    x = Grid1D(n, length)
    xi = Grid1D(n, n * h / length)
    return PhaseSpaceGrid(x, xi, dim=1)


def weyl_quantize(f: PhaseSpaceField, hbar: float, midpoint_source=None) -> DensityOperator:
    """Quantize a phase-space field into a density-operator matrix.

    `midpoint_source` supplies symbol values at the half-grid midpoints
    (x_i + x_j)/2: either a callable g(u, xi) -> array broadcasting over a
    (2n-1, n_xi) mesh, or None to Fourier-interpolate the sampled field.
    """
    grid = f.grid
    _check_quantizable(grid, hbar)
    n = grid.x.n_points
    dx, dxi = grid.x.spacing, grid.xi.spacing
    xi0 = float(grid.xi.points[0])

    if midpoint_source is not None:
        u = (-grid.x.length / 2 + dx / 2 * np.arange(2 * n - 1))[:, None]
        fmid = np.asarray(midpoint_source(u, grid.xi.points[None, :]), dtype=float)
    else:
        fine = refine_axis(f.values, axis=0)          # samples at -L/2 + c*dx/2
        fmid = fine[: 2 * n - 1]

    # P[s, r] = dxi * sum_k fmid[s, k] e^{i r dx xi_k / hbar}, r = 0..n/2-1
    m = n // 2
    w = np.exp(1j * dx * dxi / hbar)
    P = czt(fmid.astype(complex), m=m, w=w, a=1.0 + 0.0j, axis=1)
    P *= dxi * np.exp(1j * np.arange(m) * dx * xi0 / hbar)[None, :]

    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    r = ii - jj
    M = np.zeros((n, n), dtype=complex)
    upper = (r >= 0) & (r < m)
    lower = (r < 0) & (r > -m)
    M[upper] = P[(ii + jj)[upper], r[upper]]
    M[lower] = np.conj(P[(ii + jj)[lower], -r[lower]])
    return DensityOperator(grid.x, hbar, M * dx)


def wigner_transform(rho: DensityOperator) -> PhaseSpaceField:
    """Phase-space symbol of an operator: Fourier transform in the difference variable.

    The result lives on (x: the operator grid) x (xi: the natural conjugate
    grid with L_xi = h/dx). The kernel is Fourier-interpolated onto the
    half-grid so midpoints are spectrally exact; the difference variable is
    restricted to the minimum-image window |y| < L/2.
    """
    n = rho.grid_x.n_points
    L = rho.grid_x.length
    dx = rho.grid_x.spacing
    kernel = rho.matrix / dx

    spec = np.fft.fftshift(np.fft.fft2(kernel))
    pad = np.zeros((2 * n, 2 * n), dtype=complex)
    pad[n // 2 : n // 2 + n, n // 2 : n // 2 + n] = spec
    fine = np.fft.ifft2(np.fft.ifftshift(pad)) * 4.0

    i = np.arange(n)
    mm = np.arange(-n, n)
    A, B = np.meshgrid(2 * i, mm, indexing="ij")
    rho_t = fine[(A + B) % (2 * n), (A - B) % (2 * n)]   # rho(x_i + y/2, x_i - y/2), y = m*dx
    rho_t[:, np.abs(mm) >= n // 2] = 0.0

    Wf = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(rho_t, axes=1), axis=1), axes=1)
    W = Wf[:, ::2] * dx / rho.h   # subsample: fine xi spacing is h/(2 n dx)

    xi_grid = rho.natural_xi_grid()
    grid = PhaseSpaceGrid(rho.grid_x, xi_grid, dim=1)
    return PhaseSpaceField(grid, np.ascontiguousarray(W.real))


def apply_p_function(M: np.ndarray, grid_x: Grid1D, hbar: float, func, side: str = "left") -> np.ndarray:
    """Compose an operator matrix with g(p_hat), p_hat = -i hbar d/dx, on either side."""
    k = wavenumbers(grid_x.n_points, grid_x.length)
    g = np.asarray(func(hbar * k), dtype=complex)
    if side == "left":
        return np.fft.ifft(g[:, None] * np.fft.fft(M, axis=0), axis=0)
    if side == "right":
        return np.fft.fft(g[None, :] * np.fft.ifft(M, axis=1), axis=1)
    raise ValueError("side must be 'left' or 'right'")


def apply_x_function(M: np.ndarray, grid_x: Grid1D, func, side: str = "left") -> np.ndarray:
    """Compose an operator matrix with the multiplication operator g(x_hat)."""
    g = np.asarray(func(grid_x.points))
    if side == "left":
        return g[:, None] * M
    if side == "right":
        return M * g[None, :]
    raise ValueError("side must be 'left' or 'right'")


def _kernel_tail_guard(M: np.ndarray, what: str) -> None:
    if tail_fraction(M) > 0.01:
        raise AliasingError(f"{what}: kernel spectral tail above 2/3 Nyquist exceeds 1%")


def quantum_grad_x(rho: DensityOperator) -> np.ndarray:
    """Commutator [d/dx, rho]: kernel (d_x + d_y) rho(x, y), spectral on both indices."""
    _kernel_tail_guard(rho.matrix, "quantum_grad_x")
    from .spectral import derivative_multiplier

    L = rho.grid_x.length
    n = rho.grid_x.n_points
    mult = derivative_multiplier(n, L, 1)
    out = np.fft.ifft(mult[:, None] * np.fft.fft(rho.matrix, axis=0), axis=0)
    out += np.fft.ifft(mult[None, :] * np.fft.fft(rho.matrix, axis=1), axis=1)
    return out


def quantum_grad_xi(rho: DensityOperator) -> np.ndarray:
    """Commutator [x/(i hbar), rho]: kernel (x - y) rho(x, y) / (i hbar).

    The difference uses the minimum image on the torus; for kernels confined
    to |x - y| < L/2 this is the plain difference.
    """
    x = rho.grid_x.points
    L = rho.grid_x.length
    diff = x[:, None] - x[None, :]
    diff = (diff + L / 2) % L - L / 2
    return diff * rho.matrix / (1j * rho.hbar)


def diag_abs(A: np.ndarray, dx: float, tol: float = 1e-8) -> np.ndarray:
    """Kernel diagonal of |A| for Hermitian A: sum_j |lambda_j| |psi_j(x)|^2.

    Density scaling: the result sums against dx to the Schatten-1 norm of A.
    """
    scale = np.max(np.abs(A))
    if scale == 0.0:
        return np.zeros(A.shape[0])
    if np.max(np.abs(A - A.conj().T)) / scale > tol:
        raise NonHermitianError("diag_abs requires a Hermitian matrix")
    lam, vec = np.linalg.eigh(A)
    return (np.abs(lam)[None, :] * np.abs(vec) ** 2).sum(axis=1) / dx


def psd_repair(rho: DensityOperator) -> tuple[DensityOperator, float]:
    """Clip negative eigenvalues to zero and renormalize the trace to 1.

    Returns the repaired operator and the clipped mass (sum of |negative
    eigenvalues|).
    """
    require_hermitian(rho.matrix, tol=1e-10)
    lam, vec = np.linalg.eigh(rho.matrix)
    clipped = float(np.abs(lam[lam < 0]).sum())
    lam = np.clip(lam, 0.0, None)
    total = lam.sum()
    if total <= 0:
        raise ValueError("operator has no positive part to renormalize")
    lam /= total
    M = (vec * lam[None, :]) @ vec.conj().T
    return rho.with_matrix(M), clipped


# ---------------------------------------------------------------------------
# Weyl product identities
# ---------------------------------------------------------------------------

def multiply_identity_coefficients(n: int, d: int = 1) -> tuple[dict, dict]:
    """Expansion coefficients for composing op(g) with |p|^n and |x|^n (d=1, n in {0, 2}).

    Returns (a, b): maps (alpha, beta) -> coefficient for
      op(g) |p|^n = sum a[(alpha, beta)] (i hbar / 2)^beta op(xi^alpha d_x^beta g)
      op(g) |x|^n = sum b[(alpha, beta)] (-i hbar)^beta  op(x^alpha d_xi^beta g)
    Coefficient sums are (4d)^{n/2} and (9d/4)^{n/2}.
    """
    if d != 1 or n not in (0, 2):
        raise ValueError("identity coefficients implemented for d=1, n in {0, 2}")
    if n == 0:
        return {(0, 0): 1.0}, {(0, 0): 1.0}
    # |p|^2: Laplacian of a product, Delta(fg) = f''g + 2 f'g' + f g''
    a = {(2, 0): 1.0, (1, 1): 2.0, (0, 2): 1.0}
    # |x|^2: (u + v/2)^2 = u^2 + u v + v^2/4
    b = {(2, 0): 1.0, (1, 1): 1.0, (0, 2): 0.25}
    return a, b


@dataclass(frozen=True)
class IdentityReport:
    """Residuals of the operator-vs-symbol multiplication identities."""

    n: int
    n1: int
    residual_p: float
    residual_x: float
    residual_xp: float
    coefficient_sum_p: float
    coefficient_sum_x: float

    @property
    def max_residual(self) -> float:
        return max(self.residual_p, self.residual_x, self.residual_xp)


def _identity_symbol_p(f: PhaseSpaceField, hbar: float, n: int) -> np.ndarray:
    """Symbol of op(f)|p|^n via the expansion coefficients."""
    a, _ = multiply_identity_coefficients(n)
    Lx, Lxi = f.grid.x.length, f.grid.xi.length
    xi = f.grid.axis_points(1)
    from .spectral import derivative as sder

    out = np.zeros(f.grid.shape, dtype=complex)
    for (al, be), coeff in a.items():
        term = f.values
        if be:
            term = sder(term, 0, Lx, order=be)
        out += coeff * (0.5j * hbar) ** be * xi ** al * term
    return out


def _identity_symbol_x(values: np.ndarray, grid: PhaseSpaceGrid, hbar: float, n: int) -> np.ndarray:
    _, b = multiply_identity_coefficients(n)
    x = grid.axis_points(0)
    from .spectral import derivative as sder

    out = np.zeros(grid.shape, dtype=complex)
    for (al, be), coeff in b.items():
        term = values
        if be:
            term = sder(term, 1, grid.xi.length, order=be)
        out += coeff * (-1j * hbar) ** be * x ** al * term
    return out


def _quantize_complex(values: np.ndarray, grid: PhaseSpaceGrid, hbar: float) -> np.ndarray:
    re = weyl_quantize(PhaseSpaceField(grid, np.ascontiguousarray(values.real)), hbar).matrix
    if np.max(np.abs(values.imag)) == 0.0:
        return re
    im = weyl_quantize(PhaseSpaceField(grid, np.ascontiguousarray(values.imag)), hbar).matrix
    return re + 1j * im


def weyl_multiply_identities_check(f: PhaseSpaceField, hbar: float, n: int, n1: int) -> IdentityReport:
    """Build both sides of the multiplication identities and report L2 residuals.

    Left route: quantize f, then right-multiply by |p|^n / |x|^n / both applied
    spectrally. Right route: quantize the expanded symbol. Residuals are
    relative Frobenius distances (0 when the identity side vanishes).
    """
    if n not in (0, 2) or n1 not in (0, 2):
        raise ValueError("desk-scale identities support n, n1 in {0, 2}")
    grid = f.grid
    rho = weyl_quantize(f, hbar)

    def rel(Mlhs, Mrhs):
        denom = np.linalg.norm(Mlhs)
        if denom == 0.0:
            return float(np.linalg.norm(Mrhs))
        return float(np.linalg.norm(Mlhs - Mrhs) / denom)

    lhs_p = apply_p_function(rho.matrix, grid.x, hbar, lambda p: np.abs(p) ** n, side="right")
    rhs_p = _quantize_complex(_identity_symbol_p(f, hbar, n), grid, hbar)
    res_p = rel(lhs_p, rhs_p)

    lhs_x = apply_x_function(rho.matrix, grid.x, lambda x: np.abs(x) ** n, side="right")
    rhs_x = _quantize_complex(_identity_symbol_x(f.values.astype(complex), grid, hbar, n), grid, hbar)
    res_x = rel(lhs_x, rhs_x)

    lhs_xp = apply_x_function(
        apply_p_function(rho.matrix, grid.x, hbar, lambda p: np.abs(p) ** n1, side="right"),
        grid.x,
        lambda x: np.abs(x) ** n,
        side="right",
    )
    sym = _identity_symbol_p(f, hbar, n1)
    rhs_xp = _quantize_complex(_identity_symbol_x(sym, grid, hbar, n), grid, hbar)
    res_xp = rel(lhs_xp, rhs_xp)

    a, b = multiply_identity_coefficients(n)
    return IdentityReport(
        n=n,
        n1=n1,
        residual_p=res_p,
        residual_x=res_x,
        residual_xp=res_xp,
        coefficient_sum_p=sum(a.values()),
        coefficient_sum_x=sum(b.values()),
    )


def operator_norm_vs_symbol(f: PhaseSpaceField, hbar: float) -> tuple[float, float]:
    """Operator norm of op(f) next to the symbol's W^{1,infty} norm (d=1).

    Returns raw ||op(f)||_op; the h^{-d}-prefactored value is op_norm/h when a
    semiclassically flat comparison is wanted.
    """
    from .phasespace import WeightSpec, weighted_sobolev_norm

    if np.max(np.abs(f.values)) == 0.0:
        return 0.0, 0.0
    rho = weyl_quantize(f, hbar)
    op_norm = float(np.linalg.norm(rho.matrix, ord=2))
    sym_norm = weighted_sobolev_norm(f, WeightSpec(sobolev_order=1, weight_power=0.0, lebesgue_p=np.inf))
    return op_norm, sym_norm


def save_operator(rho: DensityOperator, path) -> None:
    """Write an operator in the flat DOP1 binary layout (interleaved re/im)."""
    header = struct.pack("<4sqdd", DOP_MAGIC, rho.grid_x.n_points, rho.grid_x.length, rho.hbar)
    inter = np.empty(rho.matrix.shape + (2,), dtype="<f8")
    inter[..., 0] = rho.matrix.real
    inter[..., 1] = rho.matrix.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(inter.tobytes())


def load_operator(path) -> DensityOperator:
    with open(path, "rb") as fh:
        header = fh.read(struct.calcsize("<4sqdd"))
        magic, n, length, hbar = struct.unpack("<4sqdd", header)
        if magic != DOP_MAGIC:
            raise ValueError(f"not a DOP1 file: magic {magic!r}")
        raw = np.frombuffer(fh.read(16 * n * n), dtype="<f8").reshape(n, n, 2)
    return DensityOperator(Grid1D(int(n), length), hbar, (raw[..., 0] + 1j * raw[..., 1]).copy())

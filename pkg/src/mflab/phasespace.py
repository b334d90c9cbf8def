"""Grids, sampled phase-space fields, spatial densities, and classical norms.

The domain is the centered periodic box: an n-point axis of length L samples
x_i = -L/2 + i*L/n. All norms use flat quadrature weights (cell volumes),
derivatives are spectral.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace
from itertools import combinations_with_replacement

import numpy as np

from .errors import DimensionError, ResolutionError
from .spectral import derivative, tail_fraction

PSF_MAGIC = b"PSF1"


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic axis on [-length/2, length/2)."""

    n_points: int
    length: float
    periodic: bool = True

    def __post_init__(self):
        if not _is_power_of_two(self.n_points):
            raise ValueError(f"n_points must be a power of two, got {self.n_points}")
        if not self.length > 0:
            raise ValueError("length must be positive")
        if not self.periodic:
            raise ValueError("only periodic axes are supported")

    @property
    def spacing(self) -> float:
        return self.length / self.n_points

    @property
    def points(self) -> np.ndarray:
        return -self.length / 2 + self.spacing * np.arange(self.n_points)


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Tensor grid (x, xi); all spatial axes share `x`, all momentum axes share `xi`."""

    x: Grid1D
    xi: Grid1D
    dim: int = 1

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise DimensionError(f"phase-space fields support d in {{1, 2}}, got {self.dim}")

    @property
    def shape(self) -> tuple:
        return (self.x.n_points,) * self.dim + (self.xi.n_points,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.x.spacing ** self.dim * self.xi.spacing ** self.dim

    def axis_length(self, axis: int) -> float:
        return self.x.length if axis < self.dim else self.xi.length

    def axis_points(self, axis: int) -> np.ndarray:
        g = self.x if axis < self.dim else self.xi
        shape = [1] * 2 * self.dim
        shape[axis] = g.n_points
        return g.points.reshape(shape)

    def weight(self, power: float) -> np.ndarray:
        """Polynomial weight (1 + |x|^2 + |xi|^2)^(power/2) broadcast on the grid."""
        z2 = np.zeros(self.shape)
        for ax in range(2 * self.dim):
            z2 = z2 + self.axis_points(ax) ** 2
        return (1.0 + z2) ** (power / 2.0)


@dataclass(frozen=True)
class PhaseSpaceField:
    """Real sampled function f(x, xi) on a PhaseSpaceGrid."""

    grid: PhaseSpaceGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    @property
    def mass(self) -> float:
        return float(self.values.sum() * self.grid.cell_volume)

    def with_values(self, values: np.ndarray, time: float | None = None) -> "PhaseSpaceField":
        return replace(self, values=values, time=self.time if time is None else time)


@dataclass(frozen=True)
class WeightSpec:
    """Parameters of a weighted Sobolev norm: order sigma, weight power k, Lebesgue p."""

    sobolev_order: int = 0
    weight_power: float = 0.0
    lebesgue_p: float = 2.0

    def __post_init__(self):
        if self.sobolev_order < 0 or self.weight_power < 0:
            raise ValueError("sobolev_order and weight_power must be nonnegative")
        if not (self.lebesgue_p >= 1):
            raise ValueError("lebesgue_p must be >= 1 (use math.inf for sup norm)")


def spatial_density(f: PhaseSpaceField) -> np.ndarray:
    """Momentum marginal: rho(x) = dxi^d * sum_xi f(x, xi)."""
    d = f.grid.dim
    axes = tuple(range(d, 2 * d))
    return f.values.sum(axis=axes) * f.grid.xi.spacing ** d


def _lp_norm(values: np.ndarray, p: float, cell: float) -> float:
    if math.isinf(p):
        return float(np.max(np.abs(values)))
    return float((np.sum(np.abs(values) ** p) * cell) ** (1.0 / p))


def phase_norms(f: PhaseSpaceField, p_list) -> dict:
    """Lebesgue norms of the field over phase space, one entry per requested p."""
    return {p: _lp_norm(f.values, p, f.grid.cell_volume) for p in p_list}


def _gradient_magnitude(f: PhaseSpaceField, order: int) -> np.ndarray:
    """Euclidean magnitude of the order-th derivative tensor, computed spectrally."""
    naxes = 2 * f.grid.dim
    acc = np.zeros(f.grid.shape)
    for combo in combinations_with_replacement(range(naxes), order):
        alpha = [combo.count(ax) for ax in range(naxes)]
        mult = math.factorial(order)
        for a in alpha:
            mult //= math.factorial(a)
        term = f.values
        for ax, a in enumerate(alpha):
            if a:
                term = derivative(term, ax, f.grid.axis_length(ax), order=a)
        acc += mult * term ** 2
    return np.sqrt(acc)


def weighted_sobolev_norm(f: PhaseSpaceField, w: WeightSpec) -> float:
    """||<z>^k f||_p + ||<z>^k grad^sigma f||_p with spectral derivatives.

    Raises ResolutionError when sigma >= 1 and more than 1% of the field's L2
    mass sits above 2/3 Nyquist (derivatives would amplify the aliased tail).
    """
    if w.sobolev_order > 8:
        raise ValueError("sobolev_order > 8 is not supported at desk scale")
    if w.sobolev_order >= 1 and tail_fraction(f.values) > 0.01:
        raise ResolutionError("spectral tail above 2/3 Nyquist carries more than 1% of L2 mass")
    wt = f.grid.weight(w.weight_power) if w.weight_power else 1.0
    cell = f.grid.cell_volume
    total = _lp_norm(wt * f.values, w.lebesgue_p, cell)
    if w.sobolev_order >= 1:
        total += _lp_norm(wt * _gradient_magnitude(f, w.sobolev_order), w.lebesgue_p, cell)
    return total


def lorentz_norm(g: np.ndarray, p: float, q: float, cell_measure: float) -> float:
    """Lorentz norm of a sampled function via its decreasing rearrangement.

    The rearrangement of |g| is a step function over cells of the given
    measure; the norm integral is evaluated exactly on it, normalized so that
    ||.||_{p,p} coincides with the discrete L^p norm and indicators give
    measure^{1/p} for every q.
    """
    if p < 1 or q < 1:
        raise ValueError("lorentz exponents must be >= 1")
    flat = np.sort(np.abs(np.asarray(g, dtype=float)).ravel())[::-1]
    flat = flat[flat > 0]
    if flat.size == 0:
        return 0.0
    edges = cell_measure * np.arange(flat.size + 1, dtype=float)
    if math.isinf(q):
        return float(np.max(flat * edges[1:] ** (1.0 / p)))
    acc = np.sum(flat ** q * (edges[1:] ** (q / p) - edges[:-1] ** (q / p)))
    return float(acc ** (1.0 / q))


def save_field(f: PhaseSpaceField, path) -> None:
    """Write a field in the flat PSF1 binary layout."""
    header = struct.pack(
        "<4sqqqddd",
        PSF_MAGIC,
        f.grid.dim,
        f.grid.x.n_points,
        f.grid.xi.n_points,
        f.grid.x.length,
        f.grid.xi.length,
        f.time,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def load_field(path) -> PhaseSpaceField:
    with open(path, "rb") as fh:
        header = fh.read(struct.calcsize("<4sqqqddd"))
        magic, dim, nx, nxi, lx, lxi, time = struct.unpack("<4sqqqddd", header)
        if magic != PSF_MAGIC:
            raise ValueError(f"not a PSF1 file: magic {magic!r}")
        grid = PhaseSpaceGrid(Grid1D(int(nx), lx), Grid1D(int(nxi), lxi), dim=int(dim))
        count = nx ** dim * nxi ** dim
        values = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(grid.shape)
    return PhaseSpaceField(grid, values.copy(), time=time)

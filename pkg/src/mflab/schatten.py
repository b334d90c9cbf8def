"""Schatten norms with semiclassical prefactors, traces, and operator-inequality oracles.

The semiclassical norm of order p multiplies the raw Schatten norm by
h^{-d/p'} with p' = p/(p-1). At p = infinity the formula gives h^{-d} times
the operator norm; both raw and prefactored values are always reported and no
single p = infinity convention is asserted anywhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ExponentError, GridMismatchError, NotPSDError
from .quantize import DensityOperator


def singular_values(A: np.ndarray) -> np.ndarray:
    """Nonincreasing singular values; Hermitian matrices go through eigvalsh."""
    scale = np.max(np.abs(A))
    if scale == 0.0:
        return np.zeros(A.shape[0])
    if np.max(np.abs(A - A.conj().T)) <= 1e-12 * scale:
        return np.sort(np.abs(np.linalg.eigvalsh(A)))[::-1]
    return np.linalg.svd(A, compute_uv=False)


def schatten_norm(A: np.ndarray, p: float) -> float:
    return _norm_from_sv(singular_values(A), p)


def _norm_from_sv(sv: np.ndarray, p: float) -> float:
    if math.isinf(p):
        return float(sv[0]) if sv.size else 0.0
    return float((sv ** p).sum() ** (1.0 / p))


def semiclassical_factor(hbar: float, p: float, dim: int = 1) -> float:
    """h^{-d/p'} with p' the conjugate exponent; equals 1 at p=1 and h^{-d} at p=inf."""
    h = 2.0 * math.pi * hbar
    if math.isinf(p):
        return h ** (-dim)
    if p == 1:
        return 1.0
    return h ** (-dim * (1.0 - 1.0 / p))


@dataclass(frozen=True)
class SchattenReport:
    """Norm bundle for one operator: raw and semiclassical values per requested p."""

    p_values: tuple
    norms: dict                 # p -> semiclassical value
    raw_norms: dict             # p -> plain Schatten value
    trace: float
    op_norm: float
    singular_values: np.ndarray

    def to_json(self) -> dict:
        return {
            "p": list(self.p_values),
            "schatten": [self.raw_norms[p] for p in self.p_values],
            "semiclassical": [self.norms[p] for p in self.p_values],
            "trace": self.trace,
            "opnorm": self.op_norm,
        }


def schatten(A: np.ndarray, hbar: float, p_values, dim: int = 1) -> SchattenReport:
    """Singular-value report for a (dx-scaled) operator matrix."""
    sv = singular_values(A)
    raw = {p: _norm_from_sv(sv, p) for p in p_values}
    semi = {p: raw[p] * semiclassical_factor(hbar, p, dim) for p in p_values}
    return SchattenReport(
        p_values=tuple(p_values),
        norms=semi,
        raw_norms=raw,
        trace=float(np.trace(A).real),
        op_norm=float(sv[0]) if sv.size else 0.0,
        singular_values=sv,
    )


def trace_distance(a: DensityOperator, b: DensityOperator) -> float:
    """Schatten-1 norm of the difference of two operators on a common grid."""
    if a.grid_x != b.grid_x or a.hbar != b.hbar:
        raise GridMismatchError("operands live on different grids or hbar")
    return schatten_norm(a.matrix - b.matrix, 1.0)


def _require_psd(A: np.ndarray, name: str) -> np.ndarray:
    scale = np.max(np.abs(A))
    if scale == 0.0:
        return np.zeros(A.shape[0]), np.eye(A.shape[0], dtype=complex)
    if np.max(np.abs(A - A.conj().T)) > 1e-10 * scale:
        raise NotPSDError(f"{name} is not Hermitian")
    lam, vec = np.linalg.eigh(A)
    if lam.min() < -1e-10 * max(lam.max(), scale):
        raise NotPSDError(f"{name} has negative eigenvalue {lam.min():.3e}")
    return np.clip(lam, 0.0, None), vec


def _psd_power(lam: np.ndarray, vec: np.ndarray, power: float) -> np.ndarray:
    return (vec * lam[None, :] ** power) @ vec.conj().T


def holder_oracle(A: np.ndarray, B: np.ndarray, p: float, q: float, r: float) -> tuple[float, float]:
    """Both sides of ||AB||_p <= ||A||_q ||B||_r for 1/p = 1/q + 1/r."""
    if abs(1.0 / p - 1.0 / q - 1.0 / r) > 1e-12:
        raise ExponentError(f"1/p = 1/q + 1/r violated: p={p}, q={q}, r={r}")
    lhs = schatten_norm(A @ B, p)
    rhs = schatten_norm(A, q) * schatten_norm(B, r)
    return lhs, rhs


def araki_lieb_thirring_oracle(A: np.ndarray, B: np.ndarray, q: float, r: float) -> tuple[float, float]:
    """Both sides of ||AB||_{qr}^q <= ||A^q B^q||_r for PSD A, B and q >= 1."""
    if q < 1:
        raise ExponentError("q must be >= 1")
    lamA, vecA = _require_psd(A, "A")
    lamB, vecB = _require_psd(B, "B")
    lhs = schatten_norm(A @ B, q * r) ** q
    Aq = _psd_power(lamA, vecA, q)
    Bq = _psd_power(lamB, vecB, q)
    rhs = schatten_norm(Aq @ Bq, r)
    return lhs, rhs


def mixing_oracle(A: np.ndarray, B: np.ndarray, p: float, r: float) -> tuple[float, float]:
    """Both sides of ||B^r A B||_p <= ||A B^{r+1}||_p for PSD A, B, p >= 1, r >= 0."""
    if p < 1 or r < 0:
        raise ExponentError("need p >= 1 and r >= 0")
    _require_psd(A, "A")
    lamB, vecB = _require_psd(B, "B")
    Br = _psd_power(lamB, vecB, r)
    Br1 = _psd_power(lamB, vecB, r + 1.0)
    lhs = schatten_norm(Br @ A @ B, p)
    rhs = schatten_norm(A @ Br1, p)
    return lhs, rhs

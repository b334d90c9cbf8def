"""Shared FFT machinery: derivatives, interpolation, tail diagnostics, free-space convolution.

All routines assume uniformly sampled periodic axes. Wavenumbers are angular
(multiplier for d/dx is i*k with k = 2*pi*fftfreq).
"""
from __future__ import annotations

import numpy as np


def wavenumbers(n: int, length: float) -> np.ndarray:
    """Angular wavenumbers of an n-point periodic axis of the given length."""
    return 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)


def derivative_multiplier(n: int, length: float, order: int) -> np.ndarray:
    """(ik)^order with the Nyquist mode zeroed for odd orders.

    Keeping the Nyquist bin in an odd derivative makes the operator complex
    and breaks its exact antisymmetry; dropping it keeps real fields real and
    Hermitian kernels Hermitian at machine precision.
    """
    k = wavenumbers(n, length)
    mult = (1j * k) ** order
    if order % 2 == 1 and n % 2 == 0:
        mult[n // 2] = 0.0
    return mult


def derivative(values: np.ndarray, axis: int, length: float, order: int = 1) -> np.ndarray:
    """Spectral derivative of given order along one axis; real input gives real output."""
    n = values.shape[axis]
    shape = [1] * values.ndim
    shape[axis] = n
    mult = derivative_multiplier(n, length, order)
    out = np.fft.ifft(mult.reshape(shape) * np.fft.fft(values, axis=axis), axis=axis)
    if np.isrealobj(values):
        return out.real
    return out


def refine_axis(values: np.ndarray, axis: int) -> np.ndarray:
    """Fourier-interpolate one periodic axis to twice the sample count.

    Exact for band-limited data. The new samples sit at the half-grid points
    (old spacing / 2, same origin).
    """
    n = values.shape[axis]
    spec = np.fft.fft(values, axis=axis)
    spec = np.fft.fftshift(spec, axes=axis)
    pad = [(0, 0)] * values.ndim
    pad[axis] = (n // 2, n - n // 2)
    spec = np.pad(spec, pad)
    spec = np.fft.ifftshift(spec, axes=axis)
    out = np.fft.ifft(spec, axis=axis) * 2.0
    if np.isrealobj(values):
        return out.real
    return out


def tail_fraction(values: np.ndarray, axes=None, cutoff: float = 2.0 / 3.0) -> float:
    """Fraction of L2 mass carried by modes above `cutoff` * Nyquist on any given axis."""
    if axes is None:
        axes = range(values.ndim)
    spec = np.fft.fftn(values, axes=tuple(axes))
    power = np.abs(spec) ** 2
    total = power.sum()
    if total == 0.0:
        return 0.0
    mask = np.zeros(values.shape, dtype=bool)
    for ax in axes:
        n = values.shape[ax]
        modes = np.abs(np.fft.fftfreq(n) * n)
        sel = modes > cutoff * (n / 2)
        shape = [1] * values.ndim
        shape[ax] = n
        mask |= sel.reshape(shape)
    return float(power[mask].sum() / total)


def free_convolve(density: np.ndarray, kernel_doubled: np.ndarray, cell: float) -> np.ndarray:
    """Free-space (linear) convolution on a periodic grid by zero padding.

    `density` has shape (n,)*d. `kernel_doubled` holds kernel samples on the
    centered difference lattice, shape (2n,)*d with index m along each axis
    meaning displacement (m - n) * dx. Returns (kernel * density)(x_i) * cell.
    """
    d = density.ndim
    n = density.shape[0]
    pad = [(0, n)] * d
    rho_p = np.pad(density, pad)
    # kernel array indexed by displacement mod 2n
    k_arr = np.fft.ifftshift(kernel_doubled)
    out = np.fft.ifftn(np.fft.fftn(rho_p) * np.fft.fftn(k_arr))
    sl = tuple(slice(0, n) for _ in range(d))
    return out[sl].real * cell

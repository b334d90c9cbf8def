"""Prototype: discrete Weyl quantization / Wigner transform roundtrip.

Scheme under test:
  grid: x_i = -L/2 + i*dx, i=0..n-1; xi_k = -Lxi/2 + k*dxi
  resonance: n*dx*dxi = h  (Lxi = n*h/L)
  quantize: M[i,j] = dx*dxi * sum_k f((x_i+x_j)/2, xi_k) exp(i(x_i-x_j)xi_k/hbar)
            midpoints via analytic provider here
  wigner:   zero-pad kernel spectrum 2x -> fine grid; extract rho(x+y/2, x-y/2);
            FFT over difference variable; subsample xi by 2.
"""
import numpy as np
from scipy.signal import czt

def grids(n, L, hbar):
    h = 2*np.pi*hbar
    dx = L/n
    Lxi = n*h/L
    dxi = Lxi/n
    x = -L/2 + dx*np.arange(n)
    xi = -Lxi/2 + dxi*np.arange(n)
    return x, xi, dx, dxi, Lxi

def weyl_quantize_direct(fgrid_func, n, L, hbar):
    # O(n^3) reference: literal triple sum
    x, xi, dx, dxi, _ = grids(n, L, hbar)
    X, Y = np.meshgrid(x, x, indexing="ij")
    mid = (X + Y)/2
    diff = X - Y
    M = np.zeros((n, n), dtype=complex)
    for k in range(n):
        M += fgrid_func(mid, xi[k]) * np.exp(1j*diff*xi[k]/hbar)
    M[np.abs(np.arange(n)[:, None] - np.arange(n)[None, :]) >= n//2] = 0.0
    return M * dx * dxi

def weyl_quantize_czt(fgrid_func, n, L, hbar):
    # midpoints u_s = -L/2 + s*dx/2, s=0..2n-2 ; P[s, r] = dxi*sum_k F[s,k] e^{i r dx xi_k/hbar}
    x, xi, dx, dxi, _ = grids(n, L, hbar)
    s = np.arange(2*n - 1)
    u = -L/2 + s*dx/2
    F = fgrid_func(u[:, None], xi[None, :])
    w = np.exp(1j*dx*dxi/hbar)
    P = czt(F, m=n, w=np.conj(w) , a=1.0, axis=1)  # czt computes sum_k F[k] (a*w^{-r})^{-k}= sum F a^{-k} w^{rk}; scipy convention check below
    # scipy.signal.czt: X[m] = sum_k x[k] * (a * w**-m)**(-k) = sum_k x[k] a^{-k} w^{m k}
    # we want sum_k F[s,k] e^{+i r dx xi_k / hbar} = e^{i r dx xi0/hbar} sum_k F[s,k] (e^{i dx dxi/hbar})^{rk}
    # so w_param must satisfy w_param^{mk}=e^{i dx dxi/hbar * mk} -> w_param = e^{i dx dxi/hbar}. But scipy defines with w**-m...
    # safer: test both; here brute-force the phase convention with a tiny case in main.
    P = P * dxi * np.exp(1j*np.arange(n)*dx*xi[0]/hbar)[None, :]
    M = np.zeros((n, n), dtype=complex)
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    r = ii - jj
    ssum = ii + jj
    pos = r >= 0
    M[pos] = P[ssum[pos], r[pos]]
    M[~pos] = np.conj(P[ssum[~pos], -r[~pos]])
    M[np.abs(r) >= n//2] = 0.0   # min-image window: drop |x-y| >= L/2 (kills periodization ghost)
    return M * dx

def wigner(M, n, L, hbar):
    # M includes dx scaling: kernel rho = M/dx
    h = 2*np.pi*hbar
    dx = L/n
    rho = M/dx
    # Fourier interpolate kernel to 2n x 2n (zero-pad centered spectrum)
    R = np.fft.fft2(rho)
    R = np.fft.fftshift(R)
    Rpad = np.zeros((2*n, 2*n), dtype=complex)
    Rpad[n//2:n//2+n, n//2:n//2+n] = R
    # Nyquist row split for exactness on real-spectrum edges: ignore (band-limited data keeps it tiny)
    Rpad = np.fft.ifftshift(Rpad)
    rho_fine = np.fft.ifft2(Rpad)*4  # (2n/n)^2 scaling
    # fine grid: x^f_c = -L/2 + c*dx/2, c=0..2n-1
    # rho_tilde[i, m] = rho(x_i + m*dx/2... we want y_m = m*dx range m=-n..n-1 -> indices
    i = np.arange(n)
    m = np.arange(-n, n)
    A, B = np.meshgrid(2*i, m, indexing="ij")
    rho_t = rho_fine[(A + B) % (2*n), (A - B) % (2*n)]  # rho(x_i + y/2, x_i - y/2), y=m*dx
    rho_t[:, np.abs(m) >= n//2] = 0.0  # min-image window in the difference variable
    # W(x_i, xi) = (1/h) * dx * sum_m rho_t e^{-i y_m xi / hbar}; y_m = m*dx
    # DFT over 2n points: xi_j on grid spacing pi*hbar*2/(2n dx)= h/(2 n dx)... freq_j = 2pi j /(2n dx) (rad), xi = hbar * freq
    rho_t_shift = np.fft.ifftshift(rho_t, axes=1)  # put m=0 first
    Wf = np.fft.fft(rho_t_shift, axis=1)           # sum_m rho e^{-2pi i j m /(2n)}
    Wf = np.fft.fftshift(Wf, axes=1)
    # frequencies: j=-n..n-1 -> xi_j = hbar * 2пи j/(2n dx) = j*h/(2 n dx)
    xi_fine = (2*np.pi*hbar/(2*n*dx))*np.arange(-n, n)
    W = Wf*dx/h
    # subsample xi by 2 to land on the operator's natural n-point grid (spacing h/(n dx))
    Wsub = W[:, ::2]
    xi_sub = xi_fine[::2]
    return np.real(Wsub), xi_sub, np.imag(Wsub)

def main():
    hbar = 0.1
    L = 12.0
    h = 2*np.pi*hbar
    n_exact = L*L/h
    n = int(2**np.ceil(np.log2(n_exact)))
    print(f"n_exact={n_exact:.1f} n={n}")
    x, xi, dx, dxi, Lxi = grids(n, L, hbar)
    print(f"dx={dx:.4f} dxi={dxi:.4f} Lxi={Lxi:.3f} resonance n*dx*dxi/h={n*dx*dxi/h:.6f}")

    sx, sxi = 1.0, 1.0
    f = lambda X, XI: np.exp(-X**2/(2*sx**2) - XI**2/(2*sxi**2))/(2*np.pi*sx*sxi)

    Mref = weyl_quantize_direct(f, n, L, hbar) if n <= 512 else None
    M = weyl_quantize_czt(f, n, L, hbar)
    if Mref is not None:
        print("czt vs direct:", np.max(np.abs(M - Mref))/np.max(np.abs(Mref)))

    # trace
    print("trace:", np.trace(M).real, " (want 1)")
    # hermiticity
    print("herm:", np.max(np.abs(M - M.conj().T)))
    # isometry: ||M||_F * h^{-1/2} vs ||f||_L2
    l2f = np.sqrt(np.sum(f(x[:, None], xi[None, :])**2)*dx*dxi)
    l2op = np.linalg.norm(M)* h**-0.5
    print(f"isometry: op={l2op:.8f} f={l2f:.8f} rel={abs(l2op-l2f)/l2f:.2e}")

    # roundtrip
    W, xi_sub, Wim = wigner(M, n, L, hbar)
    fv = f(x[:, None], xi_sub[None, :])
    print("xi grids equal:", np.max(np.abs(xi_sub - xi)))
    err = np.max(np.abs(W - fv))/np.max(np.abs(fv))
    print(f"roundtrip inf err: {err:.2e}; imag part {np.max(np.abs(Wim)):.2e}")

    # coherent state check: rank-1?
    fcoh = lambda X, XI: np.exp(-(X**2 + XI**2)/hbar)/(np.pi*hbar)
    Mc = weyl_quantize_czt(fcoh, n, L, hbar)
    ev = np.linalg.eigvalsh(Mc)
    print("coherent eigs top:", ev[-3:], " trace:", np.trace(Mc).real)
    psi = (np.pi*hbar)**-0.25*np.exp(-x**2/(2*hbar))
    Mexp = np.outer(psi, psi.conj())*dx
    print("coherent vs analytic projector:", np.max(np.abs(Mc - Mexp)))

if __name__ == "__main__":
    main()

"""Independent reference computations shared by the unit and acceptance tests."""

import numpy as np
from scipy import integrate


def phase_breakpoints(A, B, t, step=np.pi):
    """Times in (0, t) where A t'^2 + B t' crosses a multiple of ``step``, plus extrema."""
    span = abs(A) * t * t + abs(B) * t
    ts = np.linspace(0.0, t, max(20001, int(40 * span / step) + 1))
    phase = A * ts * ts + B * ts
    k = np.floor(phase / step)
    cross = ts[1:][np.diff(k) != 0]
    pts = list(cross)
    if A != 0:
        t_ext = -B / (2 * A)
        if 0 < t_ext < t:
            pts.append(t_ext)
    return sorted(set(pts))


def quadratic_phase_quad(A, B, t):
    """Adaptive quadrature of exp(i (A t'^2 + B t')) over [0, t], split per half period."""
    pts = [0.0, *phase_breakpoints(A, B, t), t]
    re = im = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b - a <= 0:
            continue
        re += integrate.quad(lambda s: np.cos(A * s * s + B * s), a, b, epsabs=0, epsrel=1e-12, limit=200)[0]
        im += integrate.quad(lambda s: np.sin(A * s * s + B * s), a, b, epsabs=0, epsrel=1e-12, limit=200)[0]
    return complex(re, im)


def fresnel_quad(x):
    """(int_0^x cos u^2 du, int_0^x sin u^2 du) by quadrature."""
    z = quadratic_phase_quad(1.0, 0.0, x)
    return z.real, z.imag


def toy_brute_force(spec):
    """Sorted eigenvalues and eigenvectors of the toy 4x4 matrix by numpy."""
    return np.linalg.eigh(spec.matrix())


def open_tfim_ground_energy(N, J, g):
    """Ground energy of the open chain g sum X + J sum ZZ from its free-fermion (BdG) form."""
    A = np.diag(np.full(N, 2.0 * g))
    Bm = np.zeros((N, N))
    for i in range(N - 1):
        A[i, i + 1] = A[i + 1, i] = J
        Bm[i, i + 1] = J
        Bm[i + 1, i] = -J
    eps = np.linalg.eigvalsh(np.block([[A, Bm], [-Bm, -A]]))
    return -0.5 * eps[eps > 0].sum()

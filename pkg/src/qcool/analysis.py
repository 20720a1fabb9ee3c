"""Exact spectra, transition tables and first-order transition amplitudes.

Also the two-level-system toy model used to argue for annealing the
system--bath coupling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg
from scipy import special

from .errors import CapabilityError, DomainError
from .hamiltonian import HamiltonianTerms, densify, system_position
from .qstate import PauliString

DENSE_MAX_QUBITS = 12
ITERATIVE_MAX_QUBITS = 14
TABLE_MAX_QUBITS = 10
_SQRT_HALF_PI = np.sqrt(np.pi / 2)


def problem_matrix(terms: HamiltonianTerms, sparse: bool = False):
    """H_P on the system qubits only (bath positions dropped)."""
    pos = terms.system_positions
    if not sparse:
        return densify(terms.problem_terms, len(pos), pos)
    remap = {p: k for k, p in enumerate(pos)}
    dim = 1 << len(pos)
    idx = np.arange(dim, dtype=np.int64)
    mat = scipy.sparse.csr_matrix((dim, dim), dtype=np.complex128)
    for t in terms.problem_terms:
        xmask, zmask, phase = PauliString({remap[q]: p for q, p in t.factors.items()}).masks()
        sign = 1.0 - 2.0 * (np.bitwise_count(idx & zmask) & 1)
        mat = mat + scipy.sparse.csr_matrix(
            (t.coefficient * phase * sign, (idx ^ xmask, idx)), shape=(dim, dim)
        )
    return mat


def exact_spectrum(terms: HamiltonianTerms, which="problem", g_A: float = 0.0, J_AP: float = 0.0):
    """Ascending eigenvalues and orthonormal eigenvectors (columns).

    ``which="problem"`` diagonalizes H_P on the system register;
    ``which="full"`` the static total Hamiltonian at fixed ``g_A`` and ``J_AP``.
    """
    if which == "problem":
        n = terms.n_sites
        if n > DENSE_MAX_QUBITS:
            raise CapabilityError(
                f"dense spectrum limited to {DENSE_MAX_QUBITS} system qubits, got {n}"
            )
        mat = problem_matrix(terms)
    elif which == "full":
        n = terms.n_qubits
        if n > DENSE_MAX_QUBITS:
            raise CapabilityError(f"full spectrum limited to {DENSE_MAX_QUBITS} qubits, got {n}")
        mat = densify(terms.at(g_A, J_AP), n)
    else:
        raise ValueError(f"which must be 'problem' or 'full', got {which!r}")
    if not mat.imag.any():
        mat = mat.real
    return np.linalg.eigh(mat)


def ground_energy(terms: HamiltonianTerms) -> float:
    """Lowest eigenvalue of H_P; dense up to 12 system qubits, Lanczos up to 14."""
    n = terms.n_sites
    if n > ITERATIVE_MAX_QUBITS:
        raise CapabilityError(f"ground energy limited to {ITERATIVE_MAX_QUBITS} system qubits, got {n}")
    if n <= DENSE_MAX_QUBITS:
        mat = problem_matrix(terms)
        mat = mat.real if not mat.imag.any() else mat
        return float(np.linalg.eigvalsh(mat)[0])
    mat = problem_matrix(terms, sparse=True)
    vals = scipy.sparse.linalg.eigsh(mat, k=1, which="SA", tol=1e-12, return_eigenvectors=False)
    return float(vals[0])


@dataclass
class TransitionTable:
    """Eigenvalues of H_P with coupling-operator matrix elements between eigenstates.

    ``elements[i, j]`` aggregates ``|<E_i| X_n |E_j>|`` over the coupled
    system sites ``n`` (sum of magnitudes by default).
    """

    eigenvalues: np.ndarray
    elements: np.ndarray
    threshold: float = 1e-10
    per_site: np.ndarray | None = None

    def allowed(self) -> np.ndarray:
        return self.elements > self.threshold

    def rows(self):
        """``(i, j, E_i, E_j, element)`` for every ordered pair."""
        n = len(self.eigenvalues)
        for i in range(n):
            for j in range(n):
                yield i, j, self.eigenvalues[i], self.eigenvalues[j], self.elements[i, j]


def _coupled_sites(terms: HamiltonianTerms) -> list[int]:
    sys_pos = set(terms.system_positions)
    sites = set()
    for t in terms.coupling_terms:
        sites.update(q // 2 for q in t.factors if q in sys_pos)
    return sorted(sites) if sites else list(range(terms.n_sites))


def transition_table(
    terms: HamiltonianTerms, threshold: float = 1e-10, aggregate: str = "sum_abs"
) -> TransitionTable:
    """Transition strengths of the system side of the coupling between eigenstates.

    ``aggregate`` is ``"sum_abs"`` (sum over sites of ``|<i|X_n|j>|``) or
    ``"abs_sum"`` (``|<i| sum_n X_n |j>|``). Per-site tables are kept either way.
    """
    n = terms.n_sites
    if n > TABLE_MAX_QUBITS:
        raise CapabilityError(f"transition table limited to {TABLE_MAX_QUBITS} system qubits, got {n}")
    vals, vecs = exact_spectrum(terms)
    sites = _coupled_sites(terms)
    per_site = []
    total = np.zeros((len(vals), len(vals)), dtype=complex)
    pos = terms.system_positions
    for s in sites:
        op = densify([PauliString({system_position(s): "X"})], n, pos)
        m = vecs.conj().T @ op @ vecs
        per_site.append(np.abs(m))
        total += m
    per_site = np.array(per_site)
    if aggregate == "sum_abs":
        elements = per_site.sum(axis=0)
    elif aggregate == "abs_sum":
        elements = np.abs(total)
    else:
        raise ValueError(f"aggregate must be 'sum_abs' or 'abs_sum', got {aggregate!r}")
    elements = 0.5 * (elements + elements.T)
    return TransitionTable(vals, elements, threshold, per_site)


@dataclass(frozen=True)
class AmplitudeQuery:
    """Inputs of the first-order amplitudes.

    ``delta_E`` feeds the static formula; ``A`` (quadratic phase coefficient)
    and ``B`` (linear phase coefficient) feed the ramped formula.
    """

    H_elem: float
    t: float
    delta_E: float = 0.0
    A: float = 0.0
    B: float = 0.0

    @classmethod
    def ramped(cls, H_elem, t, slope, bath_gap, dE_system):
        """Build ``A = slope * bath_gap / 2`` and ``B = dE_system`` from physical inputs."""
        return cls(H_elem=H_elem, t=t, A=0.5 * slope * bath_gap, B=dE_system)


def static_amplitude(q: AmplitudeQuery) -> complex:
    """``-i H int_0^t exp(i dE t') dt'``; equals ``-i H t`` on resonance."""
    dE, t = q.delta_E, q.t
    x = dE * t
    if abs(x) < 1e-8:
        # series of (exp(ix) - 1) / (i dE) around x = 0
        integral = t * (1 + 0.5j * x - x * x / 6)
    else:
        integral = -1j * np.expm1(1j * x) / dE
    return complex(-1j * q.H_elem * integral)


def fresnel_C(x):
    """``int_0^x cos(u^2) du``."""
    s, c = special.fresnel(np.asarray(x, dtype=float) / _SQRT_HALF_PI)
    return _SQRT_HALF_PI * c


def fresnel_S(x):
    """``int_0^x sin(u^2) du``."""
    s, c = special.fresnel(np.asarray(x, dtype=float) / _SQRT_HALF_PI)
    return _SQRT_HALF_PI * s


def quadratic_phase_integral(A: float, B: float, t: float) -> complex:
    """``int_0^t exp(i (A t'^2 + B t')) dt'`` in closed form, ``A != 0``."""
    if A == 0:
        raise DomainError("A = 0 has no Fresnel form; use the static amplitude")
    if A < 0:
        return quadratic_phase_integral(-A, -B, t).conjugate()
    ra = np.sqrt(A)
    u0 = B / (2 * ra)
    u1 = ra * t + u0
    dC = fresnel_C(u1) - fresnel_C(u0)
    dS = fresnel_S(u1) - fresnel_S(u0)
    phi = B * B / (4 * A)
    c, s = np.cos(phi), np.sin(phi)
    re = (c * dC + s * dS) / ra
    im = (c * dS - s * dC) / ra
    return complex(re, im)


def ramped_amplitude(q: AmplitudeQuery) -> complex:
    """First-order amplitude under a linearly ramped bath field."""
    if q.A == 0:
        raise DomainError("ramped amplitude needs A != 0; use static_amplitude")
    if q.H_elem == 0:
        return 0j
    return complex(-1j * q.H_elem * quadratic_phase_integral(q.A, q.B, q.t))


@dataclass(frozen=True)
class ToyModelSpec:
    """Two coupled two-level systems: energies of |00>, |01>=|10>, |11> and coupling H."""

    E0: float
    E1: float
    E2: float
    H: float

    @property
    def sigma1(self) -> float:
        return 0.5 * float(np.hypot(self.E0 - self.E2, 2 * self.H))

    def matrix(self) -> np.ndarray:
        m = np.diag([self.E0, self.E1, self.E1, self.E2]).astype(float)
        m[0, 3] = m[3, 0] = self.H
        m[1, 2] = m[2, 1] = self.H
        return m


def toy_eigensystem(spec: ToyModelSpec, normalize: bool = True):
    """Closed-form eigenvalues and eigenvector columns, ascending.

    Column order before sorting is ``(|10>-|01>, |10>+|01>, lower, upper)``
    where lower/upper mix |00> and |11> with ``x = (lambda - E2) / H``.
    """
    E0, E1, E2, H = spec.E0, spec.E1, spec.E2, spec.H
    if H == 0:
        vals = np.array([E0, E1, E1, E2], dtype=float)
        vecs = np.eye(4)
    else:
        s1 = spec.sigma1
        mid = 0.5 * (E0 + E2)
        lam_lo, lam_hi = mid - s1, mid + s1
        d_lo, d_hi = lam_lo - E2, lam_hi - E2
        # d_lo * d_hi = -H^2; recover the smaller one without cancellation
        if abs(d_lo) >= abs(d_hi):
            d_hi = -H * H / d_lo
        else:
            d_lo = -H * H / d_hi
        vals = np.array([E1 - H, E1 + H, lam_lo, lam_hi])
        vecs = np.array(
            [
                [0.0, 0.0, d_lo / H, d_hi / H],
                [-1.0, 1.0, 0.0, 0.0],
                [1.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 1.0],
            ]
        )
    if normalize:
        vecs = vecs / np.linalg.norm(vecs, axis=0)
    order = np.argsort(vals, kind="stable")
    return vals[order], vecs[:, order]


def perturbative_leakage(spec: ToyModelSpec) -> float:
    """Weight of |11> in the eigenstate adiabatically connected to |00>."""
    E0, E2, H = spec.E0, spec.E2, spec.H
    if H == 0:
        if E0 == E2:
            raise DomainError("E0 = E2 with H = 0: the |00>/|11> eigenvector is undefined")
        return 0.0
    s1 = spec.sigma1
    mid = 0.5 * (E0 + E2)
    lam = mid - s1 if E0 <= E2 else mid + s1
    d = lam - E2
    other = (mid + s1 if E0 <= E2 else mid - s1) - E2
    if abs(d) < abs(other):
        d = -H * H / other
    x = d / H
    return float(1.0 / (1.0 + x * x))

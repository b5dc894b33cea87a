"""Analytic many-body states: condensates, Gaussian packets and product states.

Site labels are 0-based linear indices throughout; lattice coordinates are
1-based as in :mod:`hardcore_ep.lattice`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DomainError
from .fockspace import FockBasis, StateVector, hopping_operator
from .lattice import LatticeSpec, site_coords, site_index, site_phases


@dataclass(frozen=True)
class CondensateSpec:
    """``(sum_r e^{sign i q.r} a_r^dagger)^n |0>``.

    ``phase_sign = -1`` gives the condensate eigenstate of ``H``;
    ``+1`` gives its biorthogonal partner (an eigenstate of ``H^dagger``).
    """

    q: tuple[float, ...]
    n: int
    phase_sign: int = -1

    def __post_init__(self):
        if self.phase_sign not in (-1, 1):
            raise DomainError("phase_sign must be -1 or +1")
        if self.n < 0:
            raise DomainError("particle number must be non-negative")
        if not all(math.isfinite(x) for x in self.q):
            raise DomainError("condensate momentum must be finite")


@dataclass(frozen=True)
class WavepacketSpec:
    """n bosons sharing the envelope ``g_j = exp(-alpha^2 (j-N0)^2 / 2) e^{i q j}``."""

    alpha: float
    N0: float
    q: float
    n: int

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if self.n < 1:
            raise DomainError("a wavepacket needs at least one boson")


def _falling_norm(n: int, norm: float) -> float:
    # n! * norm, saturating to inf instead of raising
    try:
        return float(math.factorial(n)) * norm
    except OverflowError:
        return math.inf


def _product_amplitudes(basis: FockBasis, g: np.ndarray) -> np.ndarray:
    """``prod_{j in S} g_j`` for every configuration ``S`` of ``basis``.

    Zero envelope entries are handled without logarithms so that
    amplitudes vanish exactly when they should.
    """
    occ = basis.occupations.astype(bool)
    if basis.n == 0:
        return np.ones(basis.dim, dtype=complex)
    picked = np.where(occ, g[None, :], 1.0 + 0j)
    return np.prod(picked, axis=1)


def product_coefficients(basis: FockBasis, g: Sequence[complex]) -> StateVector:
    """Unit-norm ``(sum_j g_j a_j^dagger)^n |0>`` with the analytic norm kept
    in ``prefactor``."""
    g = np.asarray(g, dtype=complex)
    if g.shape != (basis.N,):
        raise DomainError(f"need {basis.N} single-particle coefficients, got {g.shape}")
    amp = _product_amplitudes(basis, g)
    raw = StateVector(basis, amp)
    nrm = raw.norm()
    if nrm == 0:
        raise DomainError("single-particle envelope yields the zero state")
    return StateVector(basis, amp / nrm, _falling_norm(basis.n, nrm))


def condensate_state(
    basis: FockBasis,
    spec: CondensateSpec,
    phases: Sequence[float],
) -> StateVector:
    """Unit-norm condensate with amplitude ``prod_j e^{sign i theta_j}`` on each
    occupied set, where ``theta = phases`` holds ``q.r`` per site."""
    if basis.n != spec.n:
        raise DomainError(f"basis holds {basis.n} particles, condensate needs {spec.n}")
    theta = np.asarray(phases, dtype=float)
    if theta.shape != (basis.N,):
        raise DomainError(f"need {basis.N} site phases, got {theta.shape}")
    total = basis.occupations.astype(float) @ theta
    amp = np.exp(1j * spec.phase_sign * total) / math.sqrt(basis.dim)
    label = "psi" if spec.phase_sign < 0 else "phi"
    return StateVector(basis, amp, _falling_norm(spec.n, math.sqrt(basis.dim)), label)


def condensate(lattice: LatticeSpec, n: int, phase_sign: int = -1,
               basis: Optional[FockBasis] = None) -> StateVector:
    """Condensate of ``n`` bosons with the lattice's own momentum."""
    basis = basis or FockBasis(lattice.n_sites, n)
    return condensate_state(basis, CondensateSpec(lattice.q, n, phase_sign), site_phases(lattice))


def biorthogonal_overlap(left: StateVector, right: StateVector) -> complex:
    """Conjugate-linear inner product ``<left|right>``."""
    if left.basis != right.basis:
        raise DomainError(f"overlap between {left.basis!r} and {right.basis!r}")
    return left.vdot(right)


def displaced_site(lattice: LatticeSpec, r: Sequence[int], R: Sequence[int]) -> int:
    """Linear index of ``r + R``; periodic axes wrap, open axes must not overflow."""
    r = tuple(r) + (1,) * (3 - len(r))
    R = tuple(R) + (0,) * (3 - len(R))
    site_index(r, lattice)
    out = []
    for a in range(3):
        m = r[a] + R[a]
        n = lattice.dims[a]
        if lattice.is_open(a):
            if not 1 <= m <= n:
                raise DomainError(f"displacement {R} leaves the open lattice along axis {a + 1}")
        else:
            m = (m - 1) % n + 1
        out.append(m)
    return site_index(out, lattice)


def correlation(psi: StateVector, lattice: LatticeSpec, r: Sequence[int], R: Sequence[int]) -> complex:
    """``<psi| a_r^dagger a_{r+R} |psi>`` for 1-based coordinates ``r``."""
    if psi.basis.N != lattice.n_sites:
        raise DomainError("state and lattice disagree on the number of sites")
    i = site_index(tuple(r), lattice)
    j = displaced_site(lattice, r, R)
    op = hopping_operator(psi.basis, i, j)
    return complex(np.vdot(psi.amplitudes, op.matrix @ psi.amplitudes))


def odlro_value(N: int, n: int) -> float:
    """Closed-form condensate correlator magnitude ``n (N-n) / (N (N-1))``."""
    if N < 2:
        raise DomainError("need at least two sites")
    return n * (N - n) / (N * (N - 1))


def wavepacket_envelope(N: int, spec: WavepacketSpec) -> np.ndarray:
    j = np.arange(1, N + 1)
    return np.exp(-0.5 * spec.alpha**2 * (j - spec.N0) ** 2) * np.exp(1j * spec.q * j)


def gaussian_wavepacket(basis: FockBasis, spec: WavepacketSpec,
                        lattice: Optional[LatticeSpec] = None) -> StateVector:
    """Unit-norm ``(sum_j g_j a_j^dagger)^n |0>`` on a chain."""
    if lattice is not None:
        if lattice.ndim > 1:
            raise DomainError("Gaussian wavepackets are defined on one-dimensional lattices")
        if lattice.n_sites != basis.N:
            raise DomainError("lattice and basis disagree on the number of sites")
    if basis.n != spec.n:
        raise DomainError(f"basis holds {basis.n} particles, packet needs {spec.n}")
    if not 1 <= spec.N0 <= basis.N:
        raise DomainError(f"packet centre {spec.N0} outside [1, {basis.N}]")
    state = product_coefficients(basis, wavepacket_envelope(basis.N, spec))
    state.label = "wavepacket"
    return state


def product_state(basis: FockBasis, sites: Iterable[int]) -> StateVector:
    """``prod_{j in sites} a_j^dagger |0>`` for distinct 0-based sites."""
    sites = list(sites)
    if len(set(sites)) != len(sites):
        raise DomainError(f"duplicate sites in {sites}")
    if len(sites) != basis.n:
        raise DomainError(f"{len(sites)} sites given for an n={basis.n} sector")
    if any(not 0 <= s < basis.N for s in sites):
        raise DomainError(f"sites {sites} outside [0, {basis.N})")
    amp = np.zeros(basis.dim, dtype=complex)
    amp[basis.lookup(sum(1 << s for s in sites))] = 1.0
    return StateVector(basis, amp, 1.0, "product")


def random_state(basis: FockBasis, seed: int = 0) -> StateVector:
    """Unit-norm Gaussian random vector; used as a negative control."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(basis.dim) + 1j * rng.standard_normal(basis.dim)
    return StateVector(basis, v / np.linalg.norm(v), 1.0, "random")


def lattice_coordinates(lattice: LatticeSpec) -> list[tuple[int, int, int]]:
    return [site_coords(i, lattice) for i in range(lattice.n_sites)]

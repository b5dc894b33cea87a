"""Rectangular lattice geometry and the resonant parameter map.

Sites carry 1-based coordinates ``(m1, m2, m3)`` with ``1 <= m_a <= N_a`` and
are embedded row-major with axis 1 fastest::

    index = (m1 - 1) + N1 * ((m2 - 1) + N2 * (m3 - 1))

Axes with ``N_a == 1`` are inactive: they carry no bonds, no boundary
potential and do not contribute to the condensate energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import DomainError

OPEN = "open"
PERIODIC = "periodic"

#: Periodic momenta closer than this to the 2*pi*m/N grid are snapped onto it.
Q_GRID_TOL = 1e-12

#: Largest lattice accepted; keeps occupation masks and bases tractable.
MAX_SITES = 4096


def _triple(values, name, cast):
    values = tuple(values)
    if not 1 <= len(values) <= 3:
        raise DomainError(f"{name} needs 1 to 3 entries, got {len(values)}")
    return tuple(cast(v) for v in values)


@dataclass(frozen=True)
class LatticeSpec:
    """Geometry, boundary conditions and per-axis couplings of a lattice.

    ``hop_scale`` selects the hopping convention. With the default ``0.5`` the
    Hamiltonian has hopping ``J/2``, interaction ``J cos q`` and boundary
    potential ``J e^{iq}/2``; with ``1.0`` every term is doubled (hopping
    ``J``, interaction ``2 J cos q``, boundary ``J e^{iq}``).
    """

    dims: tuple[int, int, int] = (1, 1, 1)
    bc: tuple[str, str, str] = (OPEN, OPEN, OPEN)
    J: tuple[float, float, float] = (1.0, 1.0, 1.0)
    q: tuple[float, float, float] = (0.0, 0.0, 0.0)
    hop_scale: float = 0.5

    def __post_init__(self):
        dims = _triple(self.dims, "dims", int)
        dims = dims + (1,) * (3 - len(dims))
        bc = _triple(self.bc, "bc", str)
        bc = bc + (OPEN,) * (3 - len(bc))
        J = _triple(self.J, "J", float)
        J = J + (1.0,) * (3 - len(J))
        q = _triple(self.q, "q", float)
        q = q + (0.0,) * (3 - len(q))

        if any(n < 1 for n in dims):
            raise DomainError(f"every dimension must be >= 1, got {dims}")
        n_sites = dims[0] * dims[1] * dims[2]
        if n_sites > MAX_SITES:
            raise DomainError(f"{n_sites} sites exceeds the limit of {MAX_SITES}")
        for tag in bc:
            if tag not in (OPEN, PERIODIC):
                raise DomainError(f"boundary condition must be 'open' or 'periodic', got {tag!r}")
        if not all(math.isfinite(x) for x in J + q):
            raise DomainError("couplings and momenta must be finite")
        if self.hop_scale <= 0 or not math.isfinite(self.hop_scale):
            raise DomainError(f"hop_scale must be positive, got {self.hop_scale}")

        snapped = []
        for n, tag, qa in zip(dims, bc, q):
            if tag == PERIODIC and n > 1:
                m = round(qa * n / (2 * math.pi))
                grid = 2 * math.pi * m / n
                if abs(qa - grid) > Q_GRID_TOL:
                    raise DomainError(
                        f"periodic axis of length {n} needs q = 2*pi*m/{n}; got {qa!r}"
                    )
                qa = grid
            snapped.append(qa)

        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "bc", bc)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "q", tuple(snapped))
        object.__setattr__(self, "hop_scale", float(self.hop_scale))

    @property
    def n_sites(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]

    @property
    def active_axes(self) -> tuple[int, ...]:
        """0-based indices of axes with more than one layer."""
        return tuple(a for a in range(3) if self.dims[a] > 1)

    @property
    def ndim(self) -> int:
        return len(self.active_axes)

    def is_open(self, axis: int) -> bool:
        return self.bc[axis] == OPEN

    def with_q(self, q: Sequence[float]) -> "LatticeSpec":
        return LatticeSpec(self.dims, self.bc, self.J, tuple(q), self.hop_scale)

    def as_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "bc": list(self.bc),
            "J": list(self.J),
            "q": list(self.q),
            "hop_scale": self.hop_scale,
        }


def chain(n_sites: int, q: float = 0.0, bc: str = OPEN, J: float = 1.0, hop_scale: float = 0.5) -> LatticeSpec:
    """Shorthand for a one-dimensional lattice."""
    return LatticeSpec((n_sites, 1, 1), (bc, OPEN, OPEN), (J, 1.0, 1.0), (q, 0.0, 0.0), hop_scale)


@dataclass(frozen=True)
class ResonantParams:
    """Couplings satisfying the resonant matching condition.

    ``mu_first[a]`` acts on layer ``m_a = 1`` and ``mu_last[a]`` (its complex
    conjugate) on layer ``m_a = N_a``. Both vanish on periodic and inactive
    axes.
    """

    hop: tuple[float, float, float]
    V: tuple[float, float, float]
    mu_first: tuple[complex, complex, complex]
    mu_last: tuple[complex, complex, complex] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "mu_last", tuple(m.conjugate() for m in self.mu_first))

    @property
    def mu(self) -> tuple[complex, complex, complex]:
        return self.mu_first


def resonant_parameters(spec: LatticeSpec) -> ResonantParams:
    """Derive hopping, NN interaction and boundary potential from ``spec``.

    With ``hop_scale = 1/2`` this is ``V = J cos q`` and ``mu = J e^{iq}/2``;
    other scales multiply all three terms by ``2 * hop_scale``.
    """
    hop, V, mu = [], [], []
    for a in range(3):
        if spec.dims[a] == 1:
            hop.append(0.0)
            V.append(0.0)
            mu.append(0j)
            continue
        J = 2.0 * spec.hop_scale * spec.J[a]
        qa = spec.q[a]
        hop.append(J / 2.0)
        V.append(J * math.cos(qa))
        mu.append(J * complex(math.cos(qa), math.sin(qa)) / 2.0 if spec.is_open(a) else 0j)
    return ResonantParams(tuple(hop), tuple(V), tuple(mu))


def condensate_energy(spec: LatticeSpec, n: int) -> float:
    """Eigenvalue ``n * sum_a V_a`` of the n-particle condensate."""
    return n * sum(resonant_parameters(spec).V)


def _pad(r: Sequence[int]) -> tuple[int, int, int]:
    r = tuple(int(x) for x in r)
    if not 1 <= len(r) <= 3:
        raise DomainError(f"coordinate needs 1 to 3 entries, got {r}")
    return r + (1,) * (3 - len(r))


def site_index(r: Sequence[int], spec: LatticeSpec) -> int:
    """Linear index of the site with 1-based coordinates ``r``."""
    m1, m2, m3 = _pad(r)
    N1, N2, N3 = spec.dims
    for m, n in zip((m1, m2, m3), spec.dims):
        if not 1 <= m <= n:
            raise DomainError(f"coordinate {r} outside lattice {spec.dims}")
    return (m1 - 1) + N1 * ((m2 - 1) + N2 * (m3 - 1))


def site_coords(index: int, spec: LatticeSpec) -> tuple[int, int, int]:
    """Inverse of :func:`site_index`."""
    N1, N2, _ = spec.dims
    if not 0 <= index < spec.n_sites:
        raise DomainError(f"site index {index} outside [0, {spec.n_sites})")
    m1 = index % N1
    rest = index // N1
    return (m1 + 1, rest % N2 + 1, rest // N2 + 1)


@dataclass(frozen=True)
class Bond:
    """Nearest-neighbour pair ``from -> to`` along ``axis`` (1-based).

    ``weight`` multiplies the hopping and interaction on the bond. It is 2
    for the single bond of a periodic axis of length 2, where both ring
    neighbours of a site are the same site.
    """

    source: int
    target: int
    axis: int
    wrap: bool = False
    weight: int = 1

    def __post_init__(self):
        if self.source == self.target:
            raise DomainError("a bond must join two distinct sites")


def bonds(spec: LatticeSpec) -> list[Bond]:
    """All nearest-neighbour bonds, axis by axis in site order.

    A periodic axis of length 2 contributes a single bond per line, of
    weight 2.
    """
    out = []
    for a in range(3):
        n = spec.dims[a]
        if n < 2:
            continue
        periodic = not spec.is_open(a)
        weight = 2 if periodic and n == 2 else 1
        for i in range(spec.n_sites):
            r = list(site_coords(i, spec))
            if r[a] < n:
                r[a] += 1
                out.append(Bond(i, site_index(r, spec), a + 1, False, weight))
            elif periodic and n > 2:
                r[a] = 1
                out.append(Bond(i, site_index(r, spec), a + 1, True))
    return out


def boundary_potential(spec: LatticeSpec) -> list[complex]:
    """Per-site boundary potential; contributions from several open axes add."""
    params = resonant_parameters(spec)
    pot = [0j] * spec.n_sites
    for i in range(spec.n_sites):
        r = site_coords(i, spec)
        for a in spec.active_axes:
            if not spec.is_open(a):
                continue
            if r[a] == 1:
                pot[i] += params.mu_first[a]
            if r[a] == spec.dims[a]:
                pot[i] += params.mu_last[a]
    return pot


def stacked_boundary_sites(spec: LatticeSpec) -> list[int]:
    """Sites where boundary terms from more than one open axis accumulate."""
    out = []
    for i in range(spec.n_sites):
        r = site_coords(i, spec)
        hits = sum(
            1
            for a in spec.active_axes
            if spec.is_open(a) and r[a] in (1, spec.dims[a])
        )
        if hits > 1:
            out.append(i)
    return out


def site_phases(spec: LatticeSpec) -> list[float]:
    """``q . r`` for every site, with ``r`` in 1-based coordinates."""
    out = []
    for i in range(spec.n_sites):
        r = site_coords(i, spec)
        out.append(sum(spec.q[a] * r[a] for a in spec.active_axes))
    return out


def critical_momenta(N: int) -> list[float]:
    """Momenta ``pi m / N`` (``m = 1 .. 2N-1``, ``m != N``) at which an open
    chain of length ``N`` sits at an exceptional point."""
    if N < 2:
        raise DomainError(f"critical momenta need N >= 2, got {N}")
    return [math.pi * m / N for m in range(1, 2 * N) if m != N]


def inversion_permutation(spec: LatticeSpec) -> list[int]:
    """Site map ``m_a -> N_a + 1 - m_a`` on every axis."""
    out = []
    for i in range(spec.n_sites):
        r = site_coords(i, spec)
        out.append(site_index(tuple(n + 1 - m for m, n in zip(r, spec.dims)), spec))
    return out

"""Fixed-particle-number hardcore-boson sectors and their operators.

A configuration is an integer bit mask: bit ``i`` set means site ``i`` is
occupied. Hardcore bosons carry no exchange sign, so every hopping matrix
element is the bare (positive) hopping amplitude.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, ResourceLimitError
from .lattice import LatticeSpec, ResonantParams, bonds, resonant_parameters, site_coords

#: Default upper bound on the sector dimension C(N, n).
DEFAULT_BASIS_CAP = 2_000_000

# masks up to this many sites fit in int64
_INT64_SITES = 62


class FockBasis:
    """All ``n``-particle hardcore configurations on ``N`` sites.

    Masks are stored in strictly increasing order, so ``configs[i]`` and
    :meth:`lookup` are exact inverses.
    """

    def __init__(self, N: int, n: int, cap: int = DEFAULT_BASIS_CAP):
        if N < 1:
            raise DomainError(f"need at least one site, got N={N}")
        if not 0 <= n <= N:
            raise DomainError(f"particle number n={n} outside [0, {N}]")
        size = math.comb(N, n)
        if size > cap:
            raise ResourceLimitError(
                f"sector C({N},{n}) = {size} exceeds the basis cap {cap}"
            )
        self.N = N
        self.n = n
        dtype = np.int64 if N <= _INT64_SITES else object
        masks = sorted(sum(1 << i for i in c) for c in itertools.combinations(range(N), n))
        self.configs = np.array(masks, dtype=dtype)

    def __len__(self) -> int:
        return len(self.configs)

    @property
    def dim(self) -> int:
        return len(self.configs)

    def __eq__(self, other) -> bool:
        return isinstance(other, FockBasis) and (self.N, self.n) == (other.N, other.n)

    def __hash__(self) -> int:
        return hash((self.N, self.n))

    def __repr__(self) -> str:
        return f"FockBasis(N={self.N}, n={self.n}, dim={self.dim})"

    def lookup(self, mask: int) -> int:
        """Index of ``mask``; raises if it is not a configuration of this sector."""
        idx = self.indices(np.array([mask], dtype=self.configs.dtype))[0]
        if idx < 0:
            raise DomainError(f"mask {mask:#b} is not in {self!r}")
        return int(idx)

    def indices(self, masks: np.ndarray) -> np.ndarray:
        """Vectorised lookup; entries missing from the sector map to -1."""
        pos = np.searchsorted(self.configs, masks)
        pos = np.minimum(pos, self.dim - 1) if self.dim else pos
        found = self.configs[pos] == masks if self.dim else np.zeros(len(masks), bool)
        return np.where(found, pos, -1).astype(np.int64)

    @cached_property
    def occupations(self) -> np.ndarray:
        """``(dim, N)`` array of 0/1 site occupations."""
        if self.configs.dtype == object:
            occ = np.array([[(int(m) >> k) & 1 for k in range(self.N)] for m in self.configs],
                           dtype=np.uint8).reshape(self.dim, self.N)
        else:
            occ = ((self.configs[:, None] >> np.arange(self.N)) & 1).astype(np.uint8)
        occ.setflags(write=False)
        return occ

    def sites_of(self, i: int) -> tuple[int, ...]:
        m = int(self.configs[i])
        return tuple(k for k in range(self.N) if (m >> k) & 1)


def enumerate_basis(N: int, n: int, cap: int = DEFAULT_BASIS_CAP) -> FockBasis:
    return FockBasis(N, n, cap)


def hop_element(mask: int, i: int, j: int) -> Optional[int]:
    """Move the particle on site ``i`` to site ``j``.

    Returns ``None`` when ``i`` is empty or ``j`` is already occupied.
    """
    if i == j:
        raise DomainError("hop needs two distinct sites")
    if (mask >> i) & 1 and not (mask >> j) & 1:
        return mask ^ (1 << i) ^ (1 << j)
    return None


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Complex sparse matrix acting on (or between) Fock sectors."""

    matrix: sp.csr_matrix
    basis: Optional[FockBasis] = None
    target: Optional[FockBasis] = None
    label: str = ""

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix, dtype=complex)
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        object.__setattr__(self, "matrix", m)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            return StateVector(self.target or other.basis, self.matrix @ other.amplitudes)
        return self.matrix @ other

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def triplets(self) -> list[tuple[int, int, complex]]:
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [(int(coo.row[k]), int(coo.col[k]), complex(coo.data[k])) for k in order]

    def max_abs(self) -> float:
        return float(np.abs(self.matrix.data).max()) if self.nnz else 0.0

    def row_sum_bound(self) -> float:
        """Max absolute row sum; an upper bound on the spectral radius."""
        return float(np.abs(self.matrix).sum(axis=1).max()) if self.nnz else 0.0

    def hermiticity_defect(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        return float(np.abs(diff.data).max()) if diff.nnz else 0.0

    def to_text(self) -> str:
        """Triplet text format: ``dim nnz`` header, then ``row col re im``."""
        lines = [f"{self.dim} {self.nnz}"]
        for r, c, v in self.triplets():
            lines.append(f"{r} {c} {v.real:.17g} {v.imag:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, basis: Optional[FockBasis] = None) -> "SparseOperator":
        rows = text.strip().splitlines()
        dim, nnz = (int(x) for x in rows[0].split())
        r, c, v = [], [], []
        for line in rows[1:1 + nnz]:
            a, b, re, im = line.split()
            r.append(int(a))
            c.append(int(b))
            v.append(complex(float(re), float(im)))
        return cls(sp.csr_matrix((v, (r, c)), shape=(dim, dim)), basis)


@dataclass(eq=False)
class StateVector:
    """Amplitudes over a Fock basis.

    ``prefactor`` records the analytic scale that was divided out when the
    state was normalised; the physical unnormalised state is
    ``prefactor * amplitudes``.
    """

    basis: FockBasis
    amplitudes: np.ndarray
    prefactor: complex = 1.0
    label: str = field(default="")

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.basis.dim,):
            raise DomainError(
                f"amplitude vector of shape {self.amplitudes.shape} does not match {self.basis!r}"
            )
        if not np.all(np.isfinite(self.amplitudes)):
            raise DomainError("state amplitudes must be finite")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0:
            raise DomainError("cannot normalise the zero vector")
        return StateVector(self.basis, self.amplitudes / nrm, self.prefactor * nrm, self.label)

    def vdot(self, other: "StateVector") -> complex:
        if self.basis != other.basis:
            raise DomainError("states live on different bases")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_text(self) -> str:
        """One line per basis configuration: ``mask re im``."""
        lines = [f"# N={self.basis.N} n={self.basis.n} dim={self.basis.dim}"]
        for m, a in zip(self.basis.configs, self.amplitudes):
            lines.append(f"{int(m)} {a.real:.17g} {a.imag:.17g}")
        return "\n".join(lines) + "\n"


def _check_basis(spec: LatticeSpec, basis: FockBasis):
    if basis.N != spec.n_sites:
        raise DomainError(f"basis has {basis.N} sites but the lattice has {spec.n_sites}")


def _hop_triplets(basis: FockBasis, i: int, j: int, amp: float):
    """Rows, cols and values for moving a particle from ``i`` to ``j``."""
    occ = basis.occupations
    src = np.nonzero((occ[:, i] == 1) & (occ[:, j] == 0))[0]
    if basis.configs.dtype == object:
        flip = (1 << i) | (1 << j)
        targets = np.array([int(m) ^ flip for m in basis.configs[src]], dtype=object)
    else:
        targets = basis.configs[src] ^ np.int64((1 << i) | (1 << j))
    rows = basis.indices(targets)
    if np.any(rows < 0):
        raise AssertionError("hop produced a configuration outside the sector")
    return rows, src, np.full(len(src), amp, dtype=complex)


def build_hamiltonian(
    spec: LatticeSpec,
    params: Optional[ResonantParams],
    basis: FockBasis,
) -> SparseOperator:
    """Assemble hopping, nearest-neighbour interaction and boundary potential
    in the sector ``basis``. ``params`` defaults to the resonant parameters of
    ``spec``."""
    _check_basis(spec, basis)
    params = params or resonant_parameters(spec)
    occ = basis.occupations.astype(float)
    pot = _boundary_from_params(spec, params)
    diag = occ @ pot
    rows, cols, vals = [np.arange(basis.dim)], [np.arange(basis.dim)], []
    for b in bonds(spec):
        a = b.axis - 1
        diag = diag + b.weight * params.V[a] * occ[:, b.source] * occ[:, b.target]
        for i, j in ((b.source, b.target), (b.target, b.source)):
            r, c, v = _hop_triplets(basis, i, j, b.weight * params.hop[a])
            rows.append(r)
            cols.append(c)
            vals.append(v)
    vals.insert(0, diag.astype(complex))
    m = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(basis.dim, basis.dim),
    )
    return SparseOperator(m, basis, label="H")


def _boundary_from_params(spec: LatticeSpec, params: ResonantParams) -> np.ndarray:
    pot = np.zeros(spec.n_sites, dtype=complex)
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


def number_operator(basis: FockBasis, site: int) -> SparseOperator:
    if not 0 <= site < basis.N:
        raise DomainError(f"site {site} outside [0, {basis.N})")
    return SparseOperator(sp.diags(basis.occupations[:, site].astype(complex)).tocsr(), basis,
                          label=f"n_{site}")


def total_number_operator(basis: FockBasis) -> SparseOperator:
    return SparseOperator(sp.diags(basis.occupations.sum(axis=1).astype(complex)).tocsr(), basis)


def annihilation_operator(basis: FockBasis, site: int) -> SparseOperator:
    """``a_site`` mapping the n-particle sector to the (n-1)-particle one."""
    if not 0 <= site < basis.N:
        raise DomainError(f"site {site} outside [0, {basis.N})")
    if basis.n == 0:
        raise DomainError("cannot annihilate in the vacuum sector")
    lower = FockBasis(basis.N, basis.n - 1)
    src = np.nonzero(basis.occupations[:, site])[0]
    if basis.configs.dtype == object:
        targets = np.array([int(m) ^ (1 << site) for m in basis.configs[src]], dtype=object)
    else:
        targets = basis.configs[src] ^ np.int64(1 << site)
    rows = lower.indices(targets)
    m = sp.csr_matrix((np.ones(len(src), complex), (rows, src)), shape=(lower.dim, basis.dim))
    return SparseOperator(m, basis, lower, label=f"a_{site}")


def hopping_operator(basis: FockBasis, to_site: int, from_site: int) -> SparseOperator:
    """``a_to^dagger a_from`` within the sector (density when the sites coincide)."""
    for s in (to_site, from_site):
        if not 0 <= s < basis.N:
            raise DomainError(f"site {s} outside [0, {basis.N})")
    if to_site == from_site:
        return number_operator(basis, to_site)
    r, c, v = _hop_triplets(basis, from_site, to_site, 1.0)
    m = sp.csr_matrix((v, (r, c)), shape=(basis.dim, basis.dim))
    return SparseOperator(m, basis)


def site_permutation(basis: FockBasis, perm: Sequence[int]) -> SparseOperator:
    """Lift the site map ``i -> perm[i]`` to a permutation matrix on the sector."""
    perm = list(perm)
    if sorted(perm) != list(range(basis.N)):
        raise DomainError("perm must be a permutation of the sites")
    images = []
    for m in basis.configs:
        m = int(m)
        out = 0
        for k in range(basis.N):
            if (m >> k) & 1:
                out |= 1 << perm[k]
        images.append(out)
    rows = basis.indices(np.array(images, dtype=basis.configs.dtype))
    m = sp.csr_matrix((np.ones(basis.dim, complex), (rows, np.arange(basis.dim))),
                      shape=(basis.dim, basis.dim))
    return SparseOperator(m, basis)


def pt_defect(H: SparseOperator, parity: SparseOperator) -> float:
    """``max |(P H P)^* - H|``; zero when ``H`` is PT symmetric under ``P``."""
    P = parity.matrix
    diff = (P @ H.matrix @ P.T).conj() - H.matrix
    return float(np.abs(diff.data).max()) if diff.nnz else 0.0

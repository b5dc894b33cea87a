"""Dense eigendecomposition and Jordan-structure classification.

The classifier works on a complex Schur form ``H = Z T Z^dagger``. Eigenvalues
are grouped by single-linkage clustering; for each group the Schur form is
reordered so that the group occupies the leading ``a x a`` block, and the
Jordan structure is read off from the numerical ranks of powers of
``T[:a, :a] - mean * I``. Working on that small block avoids SVDs of the full
``dim x dim`` shifted matrix.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.linalg.lapack import ztrsen
from scipy.sparse.csgraph import minimum_spanning_tree

from .errors import NumericalError, ResourceLimitError
from .fockspace import SparseOperator, StateVector

DENSE_CAP_ENV = "HARDCORE_EP_DENSE_CAP"
DEFAULT_DENSE_CAP = 4096

#: Placeholder printed in the summary when no coalescing states exist.
NO_COALESCENCE = "–"


def dense_cap() -> int:
    raw = os.environ.get(DENSE_CAP_ENV)
    if raw is None:
        return DEFAULT_DENSE_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ResourceLimitError(f"{DENSE_CAP_ENV}={raw!r} is not an integer") from exc
    if cap < 1:
        raise ResourceLimitError(f"{DENSE_CAP_ENV} must be positive")
    return cap


@dataclass(frozen=True)
class Tolerances:
    """Relative tolerances; each is multiplied by ``max|H_ij| * dim``.

    ``rank`` is the singular-value cutoff below which a block is treated as
    exactly singular. ``gap_ratio`` splits a linkage cluster at a jump in
    merge heights larger than this factor. ``jordan_slack`` widens the rank
    cutoff in proportion to the spread of a cluster, since an order-k block
    perturbed by ``eps`` splits its eigenvalues by ``eps^(1/k)``.
    """

    imag: float = 1e-8
    cluster: float = 1e-7
    rank: float = 1e-12
    gap_ratio: float = 20.0
    jordan_slack: float = 50.0

    def __post_init__(self):
        for name in ("imag", "cluster", "rank", "gap_ratio", "jordan_slack"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"tolerance {name} must be positive and finite, got {v}")

    def scaled(self, scale: float) -> dict:
        return {"imag": self.imag * scale, "cluster": self.cluster * scale, "rank": self.rank * scale}


@dataclass(frozen=True)
class Cluster:
    """A group of (numerically) coincident eigenvalues.

    ``blocks`` counts Jordan blocks of size two or more; ``witness`` holds
    ``(||M^(k-1)||, ||M^k||)`` for the restricted nilpotent part ``M``.
    """

    value: complex
    algebraic: int
    geometric: int
    jordan_order: int
    blocks: int
    spread: float
    witness: tuple[float, float] = (0.0, 0.0)
    ranks: tuple[int, ...] = ()

    @property
    def defective(self) -> bool:
        return self.geometric < self.algebraic

    def as_dict(self) -> dict:
        d = asdict(self)
        d["value"] = [self.value.real, self.value.imag]
        d["witness"] = list(self.witness)
        d["ranks"] = list(self.ranks)
        return d


@dataclass
class SpectralReport:
    """Eigenvalues and their Jordan-structure classification.

    ``n_CM`` counts eigenvalues with ``Im E > tol_imag``, i.e. complex
    conjugate pairs; ``n_complex`` counts both members of each pair.
    ``n_CS`` is the number of Jordan blocks of size two or more and
    ``n_OR`` their order (a sorted list when orders differ).
    """

    eigenvalues: np.ndarray
    clusters: list[Cluster]
    tolerances: Tolerances
    scale: float
    n_CM: int
    n_complex: int
    flags: list[str] = field(default_factory=list)

    @property
    def coalescing(self) -> list[Cluster]:
        return [c for c in self.clusters if c.defective]

    @property
    def n_CS(self) -> int:
        return sum(c.blocks for c in self.coalescing)

    @property
    def orders(self) -> list[int]:
        return sorted({c.jordan_order for c in self.coalescing})

    @property
    def n_OR(self):
        o = self.orders
        if not o:
            return None
        return o[0] if len(o) == 1 else o

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def summary(self) -> str:
        """``"n_CM,n_ORxn_CS"``, or ``"n_CM,–"`` without coalescing states."""
        if not self.coalescing:
            return f"{self.n_CM},{NO_COALESCENCE}"
        order = "/".join(str(k) for k in self.orders)
        return f"{self.n_CM},{order}x{self.n_CS}"

    def as_dict(self) -> dict:
        return {
            "dim": self.dim,
            "summary": self.summary(),
            "n_CM": self.n_CM,
            "n_complex": self.n_complex,
            "n_CS": self.n_CS,
            "n_OR": self.n_OR,
            "scale": self.scale,
            "tolerances": asdict(self.tolerances),
            "absolute_tolerances": self.tolerances.scaled(self.scale),
            "flags": list(self.flags),
            "clusters": [c.as_dict() for c in self.clusters if c.algebraic > 1],
            "eigenvalues": [[float(e.real), float(e.imag)] for e in self.eigenvalues],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.as_dict(), **kw)


def _dense(H) -> np.ndarray:
    m = H.to_dense() if isinstance(H, SparseOperator) else np.asarray(H)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"need a square matrix, got shape {m.shape}")
    cap = dense_cap()
    if m.shape[0] > cap:
        raise ResourceLimitError(
            f"dense solver needs dim {m.shape[0]} <= {cap}; raise {DENSE_CAP_ENV} to override"
        )
    if not np.all(np.isfinite(m)):
        raise NumericalError("matrix has non-finite entries")
    return m.astype(complex)


def sort_spectrum(w: np.ndarray) -> np.ndarray:
    return np.lexsort((w.imag, w.real))


def eigendecompose(H) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and right eigenvectors (columns), sorted by ``(Re, Im)``."""
    m = _dense(H)
    try:
        w, v = sla.eig(m)
    except sla.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed to converge: {exc}",
                             diagnostics={"dim": m.shape[0]}) from exc
    order = sort_spectrum(w)
    return w[order], v[:, order]


def matrix_scale(m: np.ndarray) -> float:
    """``max|H_ij| * dim``, the unit all tolerances are measured in."""
    s = float(np.abs(m).max()) * m.shape[0] if m.size else 0.0
    return s if s > 0 else 1.0


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)


def linkage_groups(values: np.ndarray, radius: float) -> list[list[int]]:
    """Single-linkage groups of points closer than ``radius`` (in index order)."""
    n = len(values)
    ds = _DisjointSet(n)
    order = np.argsort(values.real, kind="stable")
    re = values.real[order]
    for a in range(n):
        b = a + 1
        while b < n and re[b] - re[a] <= radius:
            i, j = order[a], order[b]
            if abs(values[i] - values[j]) <= radius:
                ds.union(int(i), int(j))
            b += 1
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(ds.find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def split_at_gap(values: np.ndarray, ratio: float) -> list[list[int]]:
    """Recursively split a cluster where consecutive single-linkage merge
    heights jump by more than ``ratio``.

    Separates genuinely distinct nearby levels from the ``eps^(1/k)`` halo
    of a perturbed Jordan block.
    """
    a = len(values)
    if a < 3:
        if a == 2:
            return [[0, 1]]
        return [list(range(a))]
    d = np.abs(values[:, None] - values[None, :])
    # exact duplicates would vanish from the sparse graph
    d = np.maximum(d, np.finfo(float).tiny)
    np.fill_diagonal(d, 0.0)
    heights = np.sort(minimum_spanning_tree(d).data)
    best, cut = ratio, None
    for k in range(len(heights) - 1):
        r = heights[k + 1] / max(heights[k], np.finfo(float).tiny)
        if r > best:
            best, cut = r, heights[k]
    if cut is None:
        return [list(range(a))]
    out = []
    for g in linkage_groups(values, cut):
        for sub in split_at_gap(values[g], ratio):
            out.append([g[k] for k in sub])
    return out


def _numerical_rank(m: np.ndarray, cutoff: float) -> int:
    if m.size == 0:
        return 0
    return int((np.linalg.svd(m, compute_uv=False) > cutoff).sum())


def _leading_block(T: np.ndarray, Z: np.ndarray, members: list[int]) -> np.ndarray:
    """Upper-triangular block of ``T`` holding the selected eigenvalues after
    a unitary reordering of the Schur form."""
    sel = np.zeros(T.shape[0], dtype=np.int32)
    sel[members] = 1
    out = ztrsen(sel, T, Z, job="N", wantq=0)
    info = out[-1]
    if info != 0:
        raise NumericalError(f"Schur reordering failed (info={info})")
    a = len(members)
    return out[0][:a, :a]


def _analyse_cluster(block: np.ndarray, eig: np.ndarray, tol: Tolerances, scale: float) -> list[Cluster]:
    a = len(eig)
    lam = complex(eig.mean())
    spread = float(np.abs(eig - lam).max())
    M = block - lam * np.eye(a)
    sv = np.linalg.svd(M, compute_uv=False)
    rank_floor = tol.rank * scale
    if sv.min() > rank_floor:
        # no exact singular direction: distinct simple eigenvalues
        return [Cluster(complex(e), 1, 1, 1, 0, 0.0) for e in eig]

    base = max(rank_floor, tol.jordan_slack * spread)
    norm_m = max(1.0, float(sv.max()))
    geometric = int((sv <= base).sum())
    ranks = [a, a - geometric]
    power = M.copy()
    norms = [1.0, float(sv.max())]
    while ranks[-1] > 0 and len(ranks) <= a:
        power = power @ M
        j = len(ranks)
        ranks.append(_numerical_rank(power, base * norm_m ** (j - 1)))
        norms.append(float(np.linalg.norm(power, 2)))
    order = len(ranks) - 1 if ranks[-1] == 0 else a
    blocks = ranks[1] - ranks[2] if len(ranks) > 2 else ranks[1]
    witness = (norms[order - 1], norms[order] if order < len(norms) else float("nan"))
    return [Cluster(lam, a, geometric, order, blocks, spread, witness, tuple(ranks))]


def classify(H, tol: Optional[Tolerances] = None, pt_symmetric: Optional[bool] = None) -> SpectralReport:
    """Count complex levels and coalescing (Jordan) states of ``H``.

    Pass ``pt_symmetric=True`` when ``H`` is known to be PT symmetric; the
    report is then flagged if complex eigenvalues fail to pair up.
    """
    tol = tol or Tolerances()
    m = _dense(H)
    scale = matrix_scale(m)
    abs_tol = tol.scaled(scale)
    try:
        T, Z = sla.schur(m, output="complex")
    except sla.LinAlgError as exc:
        raise NumericalError(f"Schur decomposition failed: {exc}") from exc
    w = np.diag(T).copy()
    flags: list[str] = []

    n_cm = int((w.imag > abs_tol["imag"]).sum())
    n_complex = int((np.abs(w.imag) > abs_tol["imag"]).sum())
    if pt_symmetric and (n_complex % 2 or n_complex != 2 * n_cm):
        flags.append("complex levels do not pair into conjugates")

    groups = linkage_groups(w, abs_tol["cluster"])
    centres = np.array([w[g].mean() for g in groups])
    if len(groups) > 1:
        near = linkage_groups(centres, 10 * abs_tol["cluster"])
        if any(len(g) > 1 for g in near):
            flags.append("clusters within 10x tol_cluster of merging")

    clusters: list[Cluster] = []
    for g in groups:
        if len(g) == 1:
            clusters.append(Cluster(complex(w[g[0]]), 1, 1, 1, 0, 0.0))
            continue
        subs = split_at_gap(w[g], tol.gap_ratio)
        if len(subs) > 1:
            flags.append(f"cluster near {complex(w[g].mean()):.6g} split at a merge-height gap")
        for sub in subs:
            idx = [g[k] for k in sub]
            if len(idx) == 1:
                clusters.append(Cluster(complex(w[idx[0]]), 1, 1, 1, 0, 0.0))
                continue
            block = _leading_block(T, Z, idx)
            clusters.extend(_analyse_cluster(block, w[idx], tol, scale))

    clusters.sort(key=lambda c: (c.value.real, c.value.imag))
    total = sum(c.algebraic for c in clusters)
    if total != len(w):
        raise NumericalError(f"cluster multiplicities sum to {total}, not {len(w)}")
    order = sort_spectrum(w)
    return SpectralReport(w[order], clusters, tol, scale, n_cm, n_complex, flags)


def verify_eigenstate(H, psi: StateVector, E: complex) -> float:
    """``||H psi - E psi||`` with ``psi`` scaled to unit norm."""
    v = psi.amplitudes
    nrm = np.linalg.norm(v)
    if nrm == 0:
        return 0.0
    v = v / nrm
    hv = H.matrix @ v if isinstance(H, SparseOperator) else np.asarray(H) @ v
    return float(np.linalg.norm(hv - E * v))


_INT64_MAX = 2**63 - 1


def ep_order_free_boson(n_d: int, n: int) -> int:
    """``(n_d + n - 1)! / (n! (n_d - 1)!)``, evaluated exactly."""
    if n_d < 1 or n < 0:
        raise ValueError(f"need n_d >= 1 and n >= 0, got n_d={n_d}, n={n}")
    m = math.comb(n_d + n - 1, n)
    if m > _INT64_MAX:
        raise NumericalError(f"EP order C({n_d + n - 1},{n}) overflows a 64-bit integer")
    return m

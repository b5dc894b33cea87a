"""Non-unitary time evolution ``i d/dt psi = H psi`` and its observables.

Integration is classical fixed-step RK4. The norm is never renormalised:
growth and decay of ``||psi(t)||`` carry the physics of a non-Hermitian
``H``. Small sectors propagate with the dense one-step RK4 matrix raised to
the sampling stride, which is the same scheme evaluated more cheaply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla
from scipy import stats

from .errors import DomainError, NumericalError
from .fockspace import FockBasis, SparseOperator, StateVector

#: Largest dimension for which the dense step-matrix backend is chosen automatically.
DENSE_STEP_CAP = 1024

#: Safety factor for the default step: ``dt = DEFAULT_STEP_FACTOR / rho``.
DEFAULT_STEP_FACTOR = 0.01
#: Largest accepted step relative to ``1 / rho``.
MAX_STEP_FACTOR = 0.1


@dataclass
class Trajectory:
    """Sampled states of one run. ``norm_sq`` is ``||psi(t)||^2 / ||psi(0)||^2``."""

    times: np.ndarray
    states: np.ndarray
    basis: FockBasis
    dt: float
    method: str

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("one snapshot per sample time is required")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")

    @property
    def norm0_sq(self) -> float:
        return float(np.vdot(self.states[0], self.states[0]).real)

    @property
    def norm_sq(self) -> np.ndarray:
        n2 = np.einsum("ij,ij->i", self.states.conj(), self.states).real
        return n2 / self.norm0_sq

    def state(self, k: int) -> StateVector:
        return StateVector(self.basis, self.states[k])


@dataclass
class ObservableSeries:
    """Site profile ``p[t, j]``, total probability and optional fidelity."""

    times: np.ndarray
    p: np.ndarray
    P: np.ndarray
    norm_sq: np.ndarray
    F: Optional[np.ndarray] = None


def spectral_radius_bound(H: SparseOperator) -> float:
    """Max absolute row sum, a cheap upper bound on the spectral radius."""
    return H.row_sum_bound()


def default_step(H: SparseOperator) -> float:
    rho = spectral_radius_bound(H)
    return DEFAULT_STEP_FACTOR / rho if rho > 0 else 1.0


def rk4_step_matrix(H: np.ndarray, dt: float) -> np.ndarray:
    """Dense matrix of one RK4 step: the degree-4 Taylor polynomial of ``e^{-iH dt}``."""
    z = -1j * dt * np.asarray(H, dtype=complex)
    eye = np.eye(z.shape[0], dtype=complex)
    # Horner form of 1 + z + z^2/2 + z^3/6 + z^4/24
    return eye + z @ (eye + z @ (eye + z @ (eye + z / 4) / 3) / 2)


def _rk4_sparse(m, v: np.ndarray, dt: float, steps: int) -> np.ndarray:
    h = -1j * dt
    for _ in range(steps):
        k1 = h * (m @ v)
        k2 = h * (m @ (v + 0.5 * k1))
        k3 = h * (m @ (v + 0.5 * k2))
        k4 = h * (m @ (v + k3))
        v = v + (k1 + 2 * k2 + 2 * k3 + k4) / 6
    return v


def evolve(
    H: SparseOperator,
    psi0: StateVector,
    t_max: float,
    dt: Optional[float] = None,
    sample_every: int = 1,
    method: str = "auto",
) -> Trajectory:
    """Integrate from ``t = 0`` to ``t_max`` with fixed RK4 steps.

    ``dt`` defaults to ``0.01 / rho`` and must not exceed ``0.1 / rho``,
    where ``rho`` is the max absolute row sum of ``H``. The step is shrunk
    slightly if needed so that ``t_max`` is hit exactly. States are stored
    every ``sample_every`` steps and at ``t_max``.
    """
    if H.shape != (psi0.basis.dim, psi0.basis.dim):
        raise DomainError(f"operator of shape {H.shape} does not act on {psi0.basis!r}")
    if not (t_max > 0 and math.isfinite(t_max)):
        raise DomainError(f"t_max must be positive and finite, got {t_max}")
    if sample_every < 1:
        raise DomainError("sample_every must be >= 1")
    rho = spectral_radius_bound(H)
    if dt is None:
        dt = default_step(H)
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    if rho > 0 and dt > MAX_STEP_FACTOR / rho * (1 + 1e-12):
        raise DomainError(f"dt={dt} exceeds the stability bound {MAX_STEP_FACTOR / rho:.6g}")
    steps = max(1, math.ceil(t_max / dt - 1e-9))
    dt = t_max / steps

    if method == "auto":
        method = "dense" if H.dim <= DENSE_STEP_CAP else "sparse"
    if method not in ("dense", "sparse"):
        raise DomainError(f"unknown integration method {method!r}")

    strides = [sample_every] * (steps // sample_every)
    if steps % sample_every:
        strides.append(steps % sample_every)

    v = psi0.amplitudes.copy()
    out = [v.copy()]
    times = [0.0]
    done = 0
    if method == "dense":
        step = rk4_step_matrix(H.to_dense(), dt)
        powers: dict[int, np.ndarray] = {}
    with np.errstate(over="ignore", invalid="ignore"):
        for k in strides:
            if method == "dense":
                if k not in powers:
                    powers[k] = np.linalg.matrix_power(step, k)
                v = powers[k] @ v
            else:
                v = _rk4_sparse(H.matrix, v, dt, k)
            if not np.all(np.isfinite(v)):
                raise NumericalError(
                    f"state became non-finite after t={times[-1]:.6g}",
                    last_good_time=times[-1],
                    diagnostics={"dt": dt, "method": method},
                )
            done += k
            out.append(v.copy())
            times.append(done * dt)
    times[-1] = t_max
    return Trajectory(np.array(times), np.array(out), psi0.basis, dt, method)


def spectral_evolve(H: SparseOperator, psi0: StateVector, times: Sequence[float],
                    max_condition: float = 1e8) -> np.ndarray:
    """``e^{-iHt} psi0`` through the eigendecomposition of ``H``.

    Only valid when ``H`` is safely diagonalisable; an ill-conditioned
    eigenbasis (as at an exceptional point) raises :class:`NumericalError`.
    """
    w, V = sla.eig(H.to_dense())
    cond = np.linalg.cond(V)
    if not cond < max_condition:
        raise NumericalError(f"eigenbasis condition number {cond:.3g} too large for spectral propagation")
    c = np.linalg.solve(V, psi0.amplitudes)
    t = np.asarray(times, dtype=float)
    return (np.exp(-1j * np.outer(t, w)) * c[None, :]) @ V.T


def site_profile(traj: Trajectory) -> np.ndarray:
    """``p[t, j] = <psi(t)| n_j |psi(t)> / <psi(0)|psi(0)>``."""
    dens = np.abs(traj.states) ** 2 @ traj.basis.occupations.astype(float)
    return dens / traj.norm0_sq


def total_probability(traj: Trajectory) -> np.ndarray:
    """``P(t) = (1/n) sum_j p_j(t)``, evaluated as the norm ratio."""
    return traj.norm_sq


def fidelity(traj: Trajectory, target: StateVector) -> np.ndarray:
    """``|<target|psi(t)>|^2 / ||psi(t)||^2`` for a unit-norm target."""
    if target.basis != traj.basis:
        raise DomainError("target lives on a different basis")
    if abs(target.norm() - 1.0) > 1e-10:
        raise DomainError(f"target must be unit norm, has norm {target.norm():.12g}")
    n2 = np.einsum("ij,ij->i", traj.states.conj(), traj.states).real
    if np.any(n2 == 0):
        raise NumericalError("fidelity of a zero-norm state")
    ov = traj.states @ target.amplitudes.conj()
    return np.abs(ov) ** 2 / n2


def observables(traj: Trajectory, target: Optional[StateVector] = None) -> ObservableSeries:
    p = site_profile(traj)
    F = fidelity(traj, target) if target is not None else None
    return ObservableSeries(traj.times, p, total_probability(traj), traj.norm_sq, F)


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    stderr: float
    intercept: float
    points: int


def fit_power_law(times: Sequence[float], values: Sequence[float], window: tuple[float, float]) -> PowerLawFit:
    """Least-squares slope of ``ln values`` against ``ln t`` on ``window``."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    t1, t2 = window
    if not 0 < t1 < t2:
        raise DomainError(f"window must satisfy 0 < t1 < t2, got {window}")
    if t1 < t.min() or t2 > t.max() * (1 + 1e-12):
        raise DomainError(f"window {window} outside the sampled range [{t.min()}, {t.max()}]")
    sel = (t >= t1) & (t <= t2 * (1 + 1e-12))
    if sel.sum() < 2:
        raise DomainError("window holds fewer than two samples")
    if np.any(y[sel] <= 0):
        raise DomainError("power-law fit needs positive samples")
    res = stats.linregress(np.log(t[sel]), np.log(y[sel]))
    stderr = float(res.stderr) if sel.sum() > 2 else 0.0
    return PowerLawFit(float(res.slope), stderr, float(res.intercept), int(sel.sum()))


@dataclass(frozen=True)
class FringeStatistic:
    contrast: float
    time: float
    time_index: int


def fringe_contrast(times: Sequence[float], p: np.ndarray, sites: Sequence[int]) -> FringeStatistic:
    """Coefficient of variation of ``p_j`` over ``sites`` at the sample where
    the density summed over ``sites`` peaks."""
    p = np.asarray(p)
    win = p[:, list(sites)]
    k = int(np.argmax(win.sum(axis=1)))
    row = win[k]
    mean = row.mean()
    if mean <= 0:
        raise NumericalError("no density in the fringe window")
    return FringeStatistic(float(row.std() / mean), float(times[k]), k)


def independent_particle_probability(P1: Sequence[float], n: int) -> np.ndarray:
    """Total probability of ``n`` non-interacting bosons sharing one orbital
    whose single-particle probability is ``P1``."""
    return np.asarray(P1, dtype=float) ** n

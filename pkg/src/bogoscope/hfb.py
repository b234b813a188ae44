"""BCS reduction of the spin-1/2 Hartree-Fock-Bogoliubov energy.

Each mode k carries one real angle ``2 theta_k``.  With kinetic samples
``tau(k) = |k|^2 - mu`` and symmetric kernels ``alpha``, ``beta`` the energy is

    B = sum_k tau (1 - cos) + (1/4L^d) sin.alpha.sin + (1/4L^d) (1-cos).beta.(1-cos)

where ``sin``, ``cos`` are evaluated at ``2 theta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConvergenceError, DomainError
from .model import DispersionTable, LatticeSpec, PotentialSpec, all_modes


@dataclass(frozen=True)
class Kernels:
    lattice: LatticeSpec
    modes: list
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        m = len(self.modes)
        for name in ("alpha", "beta"):
            K = getattr(self, name)
            if K.shape != (m, m):
                raise DomainError(f"kernel {name} has shape {K.shape}, expected {(m, m)}")
            if not np.array_equal(K, K.T):
                raise DomainError(f"kernel {name} is not symmetric")


def kernels_from_local_potential(v: PotentialSpec, lat: LatticeSpec) -> Kernels:
    """alpha = (V(k-k') + V(k+k'))/2 and beta = 2 V(0) - V(k-k')."""
    modes = all_modes(lat)
    n = np.array(modes, dtype=np.int64)
    dm = ((n[:, None, :] - n[None, :, :]) ** 2).sum(-1)
    dp = ((n[:, None, :] + n[None, :, :]) ** 2).sum(-1)
    cache: dict = {}

    def vhat(q2):
        q2 = int(q2)
        if q2 not in cache:
            cache[q2] = v.at_norm2(lat.spacing ** 2 * q2)
        return cache[q2]

    vm = np.vectorize(vhat, otypes=[float])(dm)
    vp = np.vectorize(vhat, otypes=[float])(dp)
    alpha = 0.5 * (vm + vp)
    beta = 2.0 * v.at_norm2(0.0) - vm
    return Kernels(lat, modes, alpha, beta)


def separable_kernels(lat: LatticeSpec, g: float, width: float) -> Kernels:
    """Attractive pairing toy: alpha = -g phi(k) phi(k'), beta = 0.

    ``phi(k) = exp(-|k|^2 / (2 width^2))``.
    """
    modes = all_modes(lat)
    phi = np.array([math.exp(-lat.norm2(k) / (2.0 * width ** 2)) for k in modes])
    alpha = -g * np.outer(phi, phi)
    alpha = 0.5 * (alpha + alpha.T)
    return Kernels(lat, modes, alpha, np.zeros_like(alpha))


def kinetic_samples(lat: LatticeSpec, mu: float, modes=None) -> np.ndarray:
    """tau(k) = |k|^2 - mu on the lattice modes."""
    modes = all_modes(lat) if modes is None else modes
    return np.array([lat.norm2(k) - mu for k in modes])


@dataclass(frozen=True)
class GapState:
    lattice: LatticeSpec
    modes: list
    tau: np.ndarray
    theta2: np.ndarray


@dataclass(frozen=True)
class GapFunctions:
    delta: np.ndarray
    xi: np.ndarray
    D: np.ndarray
    B: float

    def residual(self, st: GapState) -> np.ndarray:
        """Derivative of B with respect to each angle 2 theta_k."""
        return self.delta * np.cos(st.theta2) + self.xi * np.sin(st.theta2)


def gap_functions(st: GapState, kernels: Kernels) -> GapFunctions:
    Ld = st.lattice.volume
    sn = np.sin(st.theta2)
    omc = 1.0 - np.cos(st.theta2)
    delta = kernels.alpha @ sn / (2 * Ld)
    xi = st.tau + kernels.beta @ omc / (2 * Ld)
    B = (float(np.dot(st.tau, omc)) + float(sn @ kernels.alpha @ sn) / (4 * Ld)
         + float(omc @ kernels.beta @ omc) / (4 * Ld))
    return GapFunctions(delta, xi, np.hypot(delta, xi), B)


def seed_state(kernels: Kernels, tau, eps0: float = 1e-3, width: float | None = None) -> GapState:
    """Normal-state angles tilted by a small Gaussian-enveloped pairing amplitude."""
    lat = kernels.lattice
    tau = np.asarray(tau, dtype=float)
    if width is None:
        width = lat.cutoff
    env = np.array([math.exp(-lat.norm2(k) / width ** 2) for k in kernels.modes])
    theta2 = np.arctan2(-eps0 * env, np.where(tau >= 0, 1.0, -1.0))
    return GapState(lat, kernels.modes, tau, theta2)


def gap_step(st: GapState, kernels: Kernels, damping: float = 0.5) -> GapState:
    """Move each angle a fraction ``damping`` toward atan2(-delta, xi)."""
    if not 0 < damping <= 1:
        raise DomainError("damping must lie in (0, 1]")
    gf = gap_functions(st, kernels)
    bad = np.nonzero(gf.D == 0)[0]
    if bad.size:
        raise DomainError(f"degenerate mode {st.modes[int(bad[0])]}: delta = xi = 0")
    target = np.arctan2(-gf.delta, gf.xi)
    step = np.angle(np.exp(1j * (target - st.theta2)))
    return replace(st, theta2=st.theta2 + damping * step)


def superconducting_iteration(st: GapState, kernels: Kernels, damping: float = 0.5,
                              tol: float = 1e-13, max_iter: int = 100_000) -> GapState:
    """Iterate the gap equation sin 2theta = -delta/D, cos 2theta = xi/D to a fixed point."""
    for _ in range(max_iter):
        new = gap_step(st, kernels, damping)
        change = float(np.max(np.abs(new.theta2 - st.theta2)))
        st = new
        if change < tol:
            return replace(st, theta2=np.angle(np.exp(1j * st.theta2)))
    gf = gap_functions(st, kernels)
    res = float(np.max(np.abs(gf.residual(st))))
    raise ConvergenceError(f"gap iteration did not converge (stationarity residual {res:.3g})",
                           residual=res)


def normal_solution(kernels: Kernels, tau, max_iter: int = 1000) -> GapState:
    """Slater-determinant stationary point: cos 2theta_k = sgn xi(k), sin = 0."""
    tau = np.asarray(tau, dtype=float)
    lat = kernels.lattice
    cos = np.where(tau >= 0, 1.0, -1.0)
    for _ in range(max_iter):
        st = GapState(lat, kernels.modes, tau, np.where(cos > 0, 0.0, math.pi))
        xi = gap_functions(st, kernels).xi
        new = np.where(xi >= 0, 1.0, -1.0)
        if np.array_equal(new, cos):
            return st
        cos = new
    raise ConvergenceError("normal solution did not stabilize")


def pairing_identity_sides(st: GapState, kernels: Kernels) -> tuple[float, float]:
    """Both sides of sum sin^2 D = -(1/2L^d) sin.alpha.sin, valid at superconducting fixed points."""
    gf = gap_functions(st, kernels)
    sn = np.sin(st.theta2)
    lhs = float(np.dot(sn ** 2, gf.D))
    rhs = -float(sn @ kernels.alpha @ sn) / (2 * st.lattice.volume)
    return lhs, rhs


def hfb_dispersion(st: GapState, kernels: Kernels) -> DispersionTable:
    """Quasiparticle energies sqrt(xi^2 + delta^2) on every mode."""
    gf = gap_functions(st, kernels)
    return DispersionTable(st.lattice, dict(zip(st.modes, gf.D.tolist())))

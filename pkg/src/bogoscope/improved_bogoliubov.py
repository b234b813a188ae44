"""Grand-canonical Gaussian variational fixed point for the Bose gas.

The trial state is a coherent condensate ``alpha = sqrt(L^d kappa_c) e^{i tau}``
in the zero mode followed by a pair rotation of every nonzero mode.  The
rotation of mode k is stored through ``S_k = 2 s_k c_k`` and
``C_k = c_k^2 + |s_k|^2``, so that ``C_k^2 - |S_k|^2 = 1``.  The zero mode
carries the condensate and is not rotated.

Kinetic energy is ``t |k|^2`` with ``t = 1/2`` here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConvergenceError, DomainError, InstabilityError
from .model import LatticeSpec, PotentialSpec, nonzero_modes

KINETIC = 0.5


class _Grid:
    """Potential samples shared by every state on one lattice."""

    def __init__(self, lat: LatticeSpec, v: PotentialSpec):
        self.modes = nonzero_modes(lat)
        if not self.modes:
            raise DomainError(f"empty nonzero lattice: cutoff {lat.cutoff} < 2*pi/L")
        n = np.array(self.modes, dtype=np.int64)
        self.Ld = lat.volume
        self.k2 = np.array([lat.norm2(m) for m in self.modes])
        self.v0 = v.at_norm2(0.0)
        self.vk = np.array([v.at_norm2(q) for q in self.k2])
        diff = n[:, None, :] - n[None, :, :]
        d2 = (diff ** 2).sum(axis=-1)
        cache = {int(q): v.at_norm2(lat.spacing ** 2 * int(q)) for q in np.unique(d2)}
        self.vdiff = np.vectorize(cache.__getitem__, otypes=[float])(d2)


_GRIDS: dict = {}


def _grid(lat, v) -> _Grid:
    key = (lat, v)
    g = _GRIDS.get(key)
    if g is None:
        if len(_GRIDS) > 32:
            _GRIDS.clear()
        g = _GRIDS[key] = _Grid(lat, v)
    return g


@dataclass(frozen=True)
class VariationalState:
    lattice: LatticeSpec
    potential: PotentialSpec
    alpha_mod: float
    tau: float
    S: np.ndarray  # complex, one entry per nonzero mode
    C: np.ndarray  # real

    @property
    def modes(self):
        return _grid(self.lattice, self.potential).modes

    @property
    def alpha(self) -> complex:
        return self.alpha_mod * complex(math.cos(self.tau), math.sin(self.tau))

    def c_s(self):
        """(c_k, s_k) recovered from (S_k, C_k)."""
        c = np.sqrt((self.C + 1.0) / 2.0)
        return c, self.S / (2.0 * c)

    def constraint_residual(self) -> float:
        return float(np.max(np.abs(self.C ** 2 - np.abs(self.S) ** 2 - 1.0)))


def initial_state(lat: LatticeSpec, v: PotentialSpec, kappa_c: float,
                  tau: float = 0.0) -> VariationalState:
    """Pure condensate: ``S = 0``, ``C = 1``, ``|alpha|^2 = L^d kappa_c``."""
    if kappa_c < 0:
        raise DomainError("condensate density must be nonnegative")
    g = _grid(lat, v)
    m = len(g.modes)
    return VariationalState(lat, v, math.sqrt(lat.volume * kappa_c), tau,
                            np.zeros(m, dtype=complex), np.ones(m))


def state_from_pairs(lat, v, alpha_mod, tau, c, s) -> VariationalState:
    """State from raw rotation coefficients with ``c^2 - |s|^2 = 1``."""
    c = np.asarray(c, dtype=float)
    s = np.asarray(s, dtype=complex)
    return VariationalState(lat, v, alpha_mod, tau, 2.0 * s * c, c ** 2 + np.abs(s) ** 2)


@dataclass(frozen=True)
class VariationalCoefficients:
    f: np.ndarray
    g: np.ndarray
    D: np.ndarray
    O: np.ndarray
    C_lin: complex
    B: float
    mu: float


def chemical_potential(st: VariationalState) -> float:
    """mu fixed by stationarity of B in the condensate amplitude."""
    if st.alpha_mod <= 0:
        raise DomainError("condensate-free state: chemical potential condition divides by |alpha|^2")
    G = _grid(st.lattice, st.potential)
    c, s = st.c_s()
    s2 = np.abs(s) ** 2
    phase = complex(math.cos(2 * st.tau), math.sin(2 * st.tau))
    mu = (G.v0 * st.alpha_mod ** 2 / G.Ld + np.sum((G.v0 + G.vk) * s2) / G.Ld
          - phase * np.sum(G.vk * np.conj(s) * c) / G.Ld)
    return float(mu.real)


def _f_eliminated(st, G):
    a2 = st.alpha_mod ** 2
    phase = complex(math.cos(2 * st.tau), math.sin(2 * st.tau))
    Cm1 = st.C - 1.0
    f = (KINETIC * G.k2 + a2 * G.vk / G.Ld
         + (G.vdiff @ Cm1 - np.dot(G.vk, Cm1)) / (2 * G.Ld)
         + phase * np.dot(G.vk, np.conj(st.S)) / (2 * G.Ld))
    return f


def _f_explicit(st, G, mu):
    a2 = st.alpha_mod ** 2
    s2 = (st.C - 1.0) / 2.0
    return (KINETIC * G.k2 - mu + a2 * (G.v0 + G.vk) / G.Ld
            + (G.v0 * np.sum(s2) + G.vdiff @ s2) / G.Ld)


def _g(st, G):
    alpha2 = st.alpha_mod ** 2 * complex(math.cos(2 * st.tau), math.sin(2 * st.tau))
    return alpha2 * G.vk / G.Ld - (G.vdiff @ st.S) / (2 * G.Ld)


def energy(st: VariationalState, mu: float) -> float:
    """Expectation value B of the grand-canonical Hamiltonian in the state."""
    G = _grid(st.lattice, st.potential)
    c, s = st.c_s()
    s2 = np.abs(s) ** 2
    a = st.alpha
    a2 = st.alpha_mod ** 2
    cs = c * s
    B = (-mu * a2 + G.v0 * a2 ** 2 / (2 * G.Ld)
         + np.sum((KINETIC * G.k2 - mu + (G.v0 + G.vk) * a2 / G.Ld) * s2)
         - np.sum(G.vk / (2 * G.Ld) * (np.conj(a) ** 2 * cs + a ** 2 * np.conj(cs)))
         + np.conj(cs) @ (G.vdiff @ cs) / (2 * G.Ld)
         + (G.v0 * np.sum(s2) ** 2 + s2 @ (G.vdiff @ s2)) / (2 * G.Ld))
    return float(np.real(B))


def coefficients(st: VariationalState, mu: float | None = None,
                 explicit_mu: bool = False) -> VariationalCoefficients:
    """Quadratic coefficients of the Hamiltonian rewritten in the rotated modes.

    By default ``f`` uses the form with the chemical potential eliminated;
    with ``explicit_mu`` the given (or derived) ``mu`` enters directly.  The
    two agree when ``mu`` is the stationary chemical potential.  ``f`` and
    ``mu`` are real for states whose pair amplitudes carry the condensate
    phase ``e^{2 i tau}``; the real part is returned.
    """
    G = _grid(st.lattice, st.potential)
    if mu is None:
        mu = chemical_potential(st) if st.alpha_mod > 0 else 0.0
    f = _f_explicit(st, G, mu) if explicit_mu else _f_eliminated(st, G)
    f = np.real(f)
    g = _g(st, G)
    c, s = st.c_s()
    O = -2.0 * c * s * f + s ** 2 * np.conj(g) + c ** 2 * g
    D = np.real(f * (c ** 2 + np.abs(s) ** 2) - c * (s * np.conj(g) + np.conj(s) * g))
    return VariationalCoefficients(f, g, D, O, linear_coefficient(st, mu), energy(st, mu), mu)


def linear_coefficient(st: VariationalState, mu: float) -> complex:
    """Coefficient of the zero-mode creation operator (the zero mode is unrotated)."""
    G = _grid(st.lattice, st.potential)
    c, s = st.c_s()
    a = st.alpha
    s2 = np.abs(s) ** 2
    bracket = G.v0 * st.alpha_mod ** 2 / G.Ld - mu + np.sum((G.v0 + G.vk) * s2) / G.Ld
    return complex(bracket * a - np.conj(a) * np.sum(G.vk * c * s) / G.Ld)


def residuals(st: VariationalState, mu: float) -> tuple[float, float]:
    """(|C_lin|, max_k |O(k)|) with the explicit chemical potential ``mu``."""
    co = coefficients(st, mu, explicit_mu=True)
    return abs(co.C_lin), float(np.max(np.abs(co.O))) if co.O.size else 0.0


def fixed_point_map(st: VariationalState):
    """(f, g, D) with ``D = sqrt(f^2 - |g|^2)`` on the positive branch."""
    G = _grid(st.lattice, st.potential)
    f = np.real(_f_eliminated(st, G))
    g = _g(st, G)
    ag = np.abs(g)
    bad = np.nonzero(f <= ag)[0]
    if bad.size:
        i = int(bad[0])
        raise InstabilityError(
            f"dynamical instability at mode {G.modes[i]}: f = {f[i]!r} <= |g| = {ag[i]!r}")
    D = np.sqrt((f - ag) * (f + ag))
    return f, g, D


def iterate(st: VariationalState, gamma: float = 0.5) -> VariationalState:
    """One damped step ``S <- (1-gamma) S + gamma g/D``.

    ``C`` is then set to ``sqrt(1 + |S|^2)`` so the hyperbolic constraint
    holds exactly; at a fixed point this coincides with ``f/D``.
    """
    if not 0 < gamma <= 1:
        raise DomainError("damping must lie in (0, 1]")
    f, g, D = fixed_point_map(st)
    S = (1.0 - gamma) * st.S + gamma * (g / D)
    C = np.sqrt(1.0 + np.abs(S) ** 2)
    return replace(st, S=S, C=C)


@dataclass(frozen=True)
class Solution:
    state: VariationalState
    coefficients: VariationalCoefficients
    iterations: int
    step: float


def solve(st: VariationalState, gamma: float = 0.5, step_tol: float = 1e-10,
          o_tol: float = 1e-8, max_iter: int = 10_000) -> Solution:
    """Iterate to a fixed point; both the step size and max|O| must be small."""
    for it in range(1, max_iter + 1):
        new = iterate(st, gamma)
        step = max(float(np.max(np.abs(new.S - st.S))), float(np.max(np.abs(new.C - st.C))))
        st = new
        if step < step_tol:
            co = coefficients(st)
            if float(np.max(np.abs(co.O))) < o_tol:
                return Solution(st, co, it, step)
    co = coefficients(st)
    raise ConvergenceError(
        f"improved Bogoliubov iteration did not converge in {max_iter} steps "
        f"(last step {step:.3g}, max|O| {np.max(np.abs(co.O)):.3g})",
        residual=float(np.max(np.abs(co.O))))

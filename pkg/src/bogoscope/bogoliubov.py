"""Bogoliubov theory of the homogeneous Bose gas (kinetic energy |p|^2).

Functions taking a momentum ``p`` expect a physical vector (or a scalar
|p|); the ``*_table`` helpers work on integer lattice momenta.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import ConsistencyError, ConvergenceError, DomainError
from .model import (DispersionTable, LatticeSpec, PotentialSpec, nonzero_modes,
                    sphere_area)

_EPS = np.finfo(float).eps


def _norm2(p) -> float:
    p = np.atleast_1d(np.asarray(p, dtype=float))
    return float(np.dot(p, p))


def dispersion_from_norm2(p2: float, vhat: float) -> float:
    """e = |p| sqrt(|p|^2 + 2 v_hat) given |p|^2."""
    # one rounding inside the root, so v_hat = 0 gives |p|^2 exactly
    return math.sqrt(p2 * (p2 + 2.0 * vhat))


def elementary_dispersion(v: PotentialSpec, p, rho_lambda: float = 1.0) -> float:
    """Elementary excitation energy e_p = |p| sqrt(|p|^2 + 2 rho_lambda v_hat(p)).

    The value at p = 0 is 0.
    """
    p2 = _norm2(p)
    return dispersion_from_norm2(p2, rho_lambda * v.at_norm2(p2))


def dispersion_table(lat: LatticeSpec, v: PotentialSpec,
                     rho_lambda: float = 1.0) -> DispersionTable:
    """e_p on every nonzero lattice momentum."""
    def fn(n):
        p2 = lat.norm2(n)
        return dispersion_from_norm2(p2, rho_lambda * v.at_norm2(p2))
    return DispersionTable.from_function(lat, fn)


@dataclass(frozen=True)
class BogoliubovCoefficients:
    A: float
    B: float
    alpha: float
    beta: float
    c: float
    s: float


def coefficients_from_norm2(p2: float, vhat: float) -> BogoliubovCoefficients:
    if p2 <= 0:
        raise DomainError("Bogoliubov coefficients are undefined at p = 0")
    A = p2 + vhat
    B = vhat
    R = math.sqrt(p2 * (p2 + 2.0 * B))  # sqrt(A^2 - B^2)
    # alpha = (A - R) / B and 1 -+ alpha, all without cancellation
    alpha = B / (A + R)
    one_minus = (p2 + R) / (A + R)
    one_plus = (A + R + B) / (A + R)
    beta = math.atanh(alpha)
    c = 1.0 / math.sqrt(one_minus * one_plus)
    s = alpha * c
    return BogoliubovCoefficients(A, B, alpha, beta, c, s)


def bogoliubov_coefficients(v: PotentialSpec, p) -> BogoliubovCoefficients:
    """Coefficients of the rotation diagonalizing the pair (p, -p).

    ``alpha = tanh(beta)``, ``c = cosh(beta)`` and ``s = sinh(beta)``, with
    ``A = |p|^2 + v_hat(p)`` and ``B = v_hat(p)``.
    """
    p2 = _norm2(p)
    return coefficients_from_norm2(p2, v.at_norm2(p2))


def _ordered_modes(lat: LatticeSpec):
    return sorted(nonzero_modes(lat), key=lambda n: (sum(c * c for c in n), n))


def bogoliubov_energy_forms(lat: LatticeSpec, v: PotentialSpec,
                            rho_lambda: float = 1.0) -> tuple[float, float, float]:
    """Both lattice sums for E_Bog and a rounding bound for the first.

    Returns ``(direct, alternative, bound)`` where ``direct`` sums
    ``-(|p|^2 + v - e_p)/2``, ``alternative`` sums
    ``-v^2 / (2 (|p|^2 + v + |p| sqrt(|p|^2 + 2v)))`` and ``bound`` is an
    upper estimate of the cancellation error in ``direct``.
    """
    direct, alt, scale = [], [], []
    for n in _ordered_modes(lat):
        p2 = lat.norm2(n)
        w = rho_lambda * v.at_norm2(p2)
        root = math.sqrt(p2 * (p2 + 2.0 * w))
        direct.append(-0.5 * (p2 + w - root))
        alt.append(-0.5 * w * w / (p2 + w + root))
        scale.append(p2 + w)
    bound = 8.0 * _EPS * math.fsum(scale)
    return math.fsum(direct), math.fsum(alt), bound


def bogoliubov_energy(lat: LatticeSpec, v: PotentialSpec, rho_lambda: float = 1.0) -> float:
    """E_Bog = -1/2 sum over nonzero |p| <= cutoff of (|p|^2 + v_hat - e_p).

    Terms are added in ascending |p| with correctly rounded summation.  The
    result is checked against the cancellation-free form of the summand.
    """
    direct, alt, bound = bogoliubov_energy_forms(lat, v, rho_lambda)
    if abs(direct - alt) > 1e-10 * abs(alt) + bound:
        raise ConsistencyError(
            f"E_Bog forms disagree: {direct!r} vs {alt!r} (rounding bound {bound:.3g})")
    return direct


def _density_integrand(r: float, d: int, v: PotentialSpec, g: float) -> float:
    w = g * v.at_norm2(r * r)
    if w == 0.0:
        return 0.0
    f = w * w / (r * r + w + r * math.sqrt(r * r + 2.0 * w))
    return r ** (d - 1) * f


def energy_density_integral(v: PotentialSpec, d: int, rho_lambda: float,
                            density: float = 1.0) -> float:
    """Infinite-volume limit of the Bogoliubov ground-state energy per volume.

    Evaluates ``rho^2 lambda v_hat(0) / 2`` minus
    ``(2 (2 pi)^d)^{-1}`` times the integral over R^d of
    ``|p|^2 + rho lambda v_hat - |p| sqrt(|p|^2 + 2 rho lambda v_hat)``.
    ``density`` is rho; with the mean-field coupling lambda = 1/rho the first
    term is ``density * rho_lambda * v_hat(0) / 2``.

    The radial integral is done by adaptive quadrature to absolute
    tolerance 1e-9.
    """
    if rho_lambda < 0:
        raise DomainError("rho_lambda must be nonnegative")
    if rho_lambda == 0 or v.kind == "zero":
        return 0.0
    if v.kind == "gaussian":
        # v_hat underflows below 1e-300 past this radius
        upper = math.sqrt(v.b * 700.0)
    else:
        upper = v.qmax
    val, err, info = integrate.quad(_density_integrand, 0.0, upper, args=(d, v, rho_lambda),
                                    epsabs=1e-9, epsrel=1e-12, limit=500, full_output=1)[:3]
    if err > 1e-9:
        raise ConvergenceError(f"density quadrature did not converge (error estimate {err:.3g})",
                               residual=err)
    integral = sphere_area(d) * val
    return 0.5 * density * rho_lambda * v.at_norm2(0.0) - integral / (2.0 * (2.0 * math.pi) ** d)


def ground_state_prediction(N: int, lat: LatticeSpec, v: PotentialSpec) -> float:
    """Mean-field plus Bogoliubov prediction ``v_hat(0)(N-1)/2 + E_Bog``."""
    if N < 2:
        raise DomainError("ground-state prediction needs N >= 2")
    return 0.5 * v.at_norm2(0.0) * (N - 1) + bogoliubov_energy(lat, v)

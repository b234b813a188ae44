"""Exact diagonalization of the mean-field Bose gas on a truncated mode set.

The Hamiltonian on N bosons is

    H = sum_k |k|^2 a+_k a_k
        + 1/(2N) sum_{k1+k2=k3+k4} v_hat(k2-k3) a+_k1 a+_k2 a_k3 a_k4

with all four momenta restricted to the modes inside the lattice cutoff.
Total momentum is conserved, so each sector is built and solved separately.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .bogoliubov import bogoliubov_energy, dispersion_table
from .errors import ConvergenceError, DomainError
from .model import LatticeSpec, PotentialSpec, add, all_modes, v_real_zero
from .spectrum import enumerate_excitations

DENSE_LIMIT = 2000


@dataclass(frozen=True)
class SectorBasis:
    N: int
    lattice: LatticeSpec
    modes: tuple
    total_momentum: tuple
    states: tuple
    index: dict = field(compare=False, repr=False)

    @property
    def dimension(self) -> int:
        return len(self.states)


def _sector_count(modes, N, P):
    d = len(P)

    @lru_cache(maxsize=None)
    def count(i, n, mom):
        if i == len(modes):
            return 1 if n == 0 and all(c == 0 for c in mom) else 0
        k = modes[i]
        return sum(count(i + 1, n - m, tuple(c - m * kc for c, kc in zip(mom, k)))
                   for m in range(n + 1))

    return count(0, N, tuple(P)) if d else 0


def build_basis(N: int, lat: LatticeSpec, P=None, max_dim: int = 200_000) -> SectorBasis:
    """All occupation vectors of ``N`` bosons with total momentum ``P``.

    Occupations are listed per mode in lattice order, and the states are
    sorted lexicographically.
    """
    if N < 0:
        raise DomainError("particle number must be nonnegative")
    modes = tuple(all_modes(lat))
    if len(modes) < 2:
        raise DomainError(f"empty nonzero lattice: cutoff {lat.cutoff} < 2*pi/L")
    P = tuple(int(c) for c in (P if P is not None else (0,) * lat.d))
    if len(P) != lat.d:
        raise DomainError(f"momentum {P} has wrong dimension for d = {lat.d}")
    dim = _sector_count(modes, N, P)
    if dim > max_dim:
        raise DomainError(f"sector too large: dimension {dim} > {max_dim}")
    if dim == 0:
        raise DomainError(f"empty sector: no {N}-particle state has momentum {P}")
    states = []
    occ = [0] * len(modes)

    def rec(i, n, mom):
        if i == len(modes) - 1:
            k = modes[i]
            if all(c == n * kc for c, kc in zip(mom, k)):
                occ[i] = n
                states.append(tuple(occ))
            return
        k = modes[i]
        for m in range(n + 1):
            occ[i] = m
            rec(i + 1, n - m, tuple(c - m * kc for c, kc in zip(mom, k)))
        occ[i] = 0

    rec(0, N, P)
    states.sort()
    return SectorBasis(N, lat, modes, P, tuple(states), {s: i for i, s in enumerate(states)})


@dataclass(frozen=True)
class SparseHamiltonian:
    dimension: int
    matrix: sparse.csr_matrix
    basis: SectorBasis

    def entries(self):
        coo = self.matrix.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))


def build_hamiltonian(basis: SectorBasis, v: PotentialSpec) -> SparseHamiltonian:
    """Kinetic plus pair-interaction matrix in the sector basis.

    Every matrix element is accumulated from a multiset of contributions that
    is identical for (i, j) and (j, i), so the result is exactly symmetric.
    """
    if basis.dimension == 0:
        raise DomainError("empty basis")
    lat = basis.lattice
    modes = basis.modes
    m = len(modes)
    pos = {k: i for i, k in enumerate(modes)}
    kin = [lat.norm2(k) for k in modes]
    N = basis.N
    vcache: dict = {}

    def vhat(i, j):
        q = tuple(a - b for a, b in zip(modes[i], modes[j]))
        key = sum(c * c for c in q)
        if key not in vcache:
            vcache[key] = v.at_norm2(lat.spacing ** 2 * key)
        return vcache[key]

    # (k1, k2, k3, k4) index quadruples with k1 + k2 = k3 + k4
    quads = []
    for i3 in range(m):
        for i4 in range(m):
            tot = add(modes[i3], modes[i4])
            for i1 in range(m):
                k2 = tuple(a - b for a, b in zip(tot, modes[i1]))
                i2 = pos.get(k2)
                if i2 is not None:
                    quads.append((i1, i2, i3, i4, vhat(i2, i3)))
    contrib: dict = {}
    for col, st in enumerate(basis.states):
        diag = [kin[i] * st[i] for i in range(m) if st[i]]
        if diag:
            contrib.setdefault((col, col), []).extend(diag)
        if N < 2:
            continue
        for i1, i2, i3, i4, w in quads:
            if w == 0.0:
                continue
            occ = list(st)
            amp = occ[i4]
            occ[i4] -= 1
            amp *= occ[i3]
            if amp == 0:
                continue
            occ[i3] -= 1
            occ[i2] += 1
            amp *= occ[i2]
            occ[i1] += 1
            amp *= occ[i1]
            row = basis.index[tuple(occ)]
            contrib.setdefault((row, col), []).append(w * math.sqrt(amp) / (2 * N))
    rows, cols, vals = [], [], []
    for (r, c), terms in contrib.items():
        rows.append(r)
        cols.append(c)
        vals.append(math.fsum(sorted(terms)))
    M = sparse.csr_matrix((vals, (rows, cols)), shape=(basis.dimension,) * 2)
    return SparseHamiltonian(basis.dimension, M, basis)


def low_spectrum(Hm: SparseHamiltonian, m: int, tol: float = 1e-9) -> np.ndarray:
    """The ``m`` lowest eigenvalues in ascending order."""
    if not 1 <= m <= Hm.dimension:
        raise DomainError(f"requested {m} eigenvalues from a {Hm.dimension}-dimensional sector")
    if Hm.dimension <= DENSE_LIMIT:
        return np.linalg.eigvalsh(Hm.matrix.toarray())[:m]
    vals, vecs = splinalg.eigsh(Hm.matrix, k=m, which="SA", tol=1e-12)
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    res = np.linalg.norm(Hm.matrix @ vecs - vecs * vals, axis=0)
    if np.max(res) > tol:
        raise ConvergenceError(f"iterative eigensolver residual {np.max(res):.3g}",
                               residual=float(np.max(res)))
    return vals


def lemma_bounds(N: int, lat: LatticeSpec, v: PotentialSpec) -> tuple[float, float]:
    """(lower, upper) bounds on E_N - (N-1) v_hat(0)/2 for v with nonnegative real-space form."""
    v0 = v.at_norm2(0.0)
    return 0.5 * (v0 - lat.volume * v_real_zero(v, lat.d)), 0.0


@dataclass
class ComparisonReport:
    N: int
    E_N: float
    prediction: float
    deviation: float
    lower_bound: float
    upper_bound: float
    lemma_lower_ok: bool
    lemma_upper_ok: bool
    rows: list  # (P, j, K_N, K_Bog, diff)


def _bogoliubov_levels(lat, v, momenta, max_level):
    disp = dispersion_table(lat, v)
    emin = min(e for _, e in disp.items())
    kappa = 2.0 * max(e for _, e in disp.items())
    for _ in range(20):
        n_cap = int(kappa / emin) + 1
        table = enumerate_excitations(disp, kappa, max_n=n_cap)
        if all(len(table.energies(p)) >= max_level for p in momenta):
            return table
        kappa *= 1.5
    raise DomainError("could not enumerate enough Bogoliubov levels")


def compare_with_bogoliubov(N: int, lat: LatticeSpec, v: PotentialSpec, max_level: int = 3,
                            momenta=None, tol: float = 1e-9, workers: int = 1) -> ComparisonReport:
    """Exact sector spectra against the Bogoliubov excitation spectrum on the same modes.

    ``momenta`` are integer total momenta (default: every lattice mode with
    nonnegative first nonzero component).  At P = 0 the ground level is
    skipped, so level j there is the (j+1)-th eigenvalue.
    """
    if momenta is None:
        momenta = [k for k in all_modes(lat) if next((c for c in k if c), 0) >= 0]
    momenta = [tuple(p) for p in momenta]
    zero = (0,) * lat.d
    if zero not in momenta:
        momenta = [zero] + momenta

    def solve(P):
        b = build_basis(N, lat, P)
        Hm = build_hamiltonian(b, v)
        m = min(b.dimension, max_level + (1 if P == zero else 0))
        return P, low_spectrum(Hm, m, tol)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as pool:
            spectra = dict(pool.map(solve, momenta))
    else:
        spectra = dict(map(solve, momenta))
    E_N = float(spectra[zero][0])
    pred = 0.5 * v.at_norm2(0.0) * (N - 1) + bogoliubov_energy(lat, v)
    table = _bogoliubov_levels(lat, v, momenta, max_level + 1)
    rows = []
    for P in sorted(momenta):
        ev = spectra[P][1:] if P == zero else spectra[P]
        bog = table.energies(P)
        for j, e in enumerate(ev[:max_level], 1):
            kn = float(e) - E_N
            kb = bog[j - 1] if j - 1 < len(bog) else math.inf
            rows.append((P, j, kn, kb, kn - kb))
    lo, hi = lemma_bounds(N, lat, v)
    shifted = E_N - 0.5 * (N - 1) * v.at_norm2(0.0)
    return ComparisonReport(N, E_N, pred, E_N - pred, lo, hi,
                            bool(shifted >= lo - tol), bool(shifted <= hi + tol), rows)

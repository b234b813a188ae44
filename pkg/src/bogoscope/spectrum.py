"""Excitation spectra of quasiparticle systems on a momentum lattice.

Energies of multi-quasiparticle states are sums of dispersion values.  All
sums here are carried out in exact integer arithmetic (every float is a
dyadic rational) and rounded once at the end, so an enumerated energy and the
same energy reached by dynamic programming are bit-identical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ConsistencyError, DomainError
from .model import DispersionTable, LatticeSpec, add

INF = math.inf


def _common_scale(values) -> int:
    den = 1
    for v in values:
        if math.isfinite(v):
            den = max(den, v.as_integer_ratio()[1])
    return den


def _to_int(v: float, scale: int) -> int:
    num, den = v.as_integer_ratio()
    return num * (scale // den)


def _to_float(n: int, scale: int) -> float:
    return n / scale  # int / int is correctly rounded


@dataclass(frozen=True, order=True)
class ExcitationPoint:
    energy: float
    n_quasiparticles: int
    constituents: tuple = ()
    momentum: tuple = field(default=(), compare=False)
    parity: str = field(default="none", compare=False)


@dataclass
class SpectrumTable:
    """Multi-quasiparticle levels grouped by total momentum.

    ``levels[p]`` holds the ExcitationPoints of momentum ``p`` in ascending
    order; the vacuum is not listed.
    """

    lattice: LatticeSpec
    kappa: float
    max_n: int
    levels: dict

    def energies(self, p) -> list[float]:
        return [pt.energy for pt in self.levels.get(tuple(p), [])]

    def momenta(self):
        return sorted(self.levels)

    def bottom(self, p) -> float:
        lv = self.levels.get(tuple(p))
        return lv[0].energy if lv else INF

    def bottom_table(self) -> DispersionTable:
        """epsilon(p): lowest listed energy at each momentum."""
        return DispersionTable(self.lattice, {p: lv[0].energy for p, lv in self.levels.items()})

    def essential_bottom(self, p) -> float:
        """Lowest listed energy at ``p`` among states of two or more quasiparticles."""
        for pt in self.levels.get(tuple(p), []):
            if pt.n_quasiparticles >= 2:
                return pt.energy
        return INF

    def rows(self):
        """(p, energy, n) triples sorted by momentum then level."""
        for p in self.momenta():
            for pt in self.levels[p]:
                yield p, pt.energy, pt.n_quasiparticles

    def __len__(self):
        return sum(len(v) for v in self.levels.values())


def _check_enumerable(disp: DispersionTable):
    zero = (0,) * disp.lattice.d
    for k, v in disp.items():
        if k == zero:
            continue
        if not v > 0:
            raise DomainError(f"enumeration not well-founded: dispersion {v!r} <= 0 at mode {k}")


def enumerate_excitations(disp: DispersionTable, kappa: float, max_n: int = 6,
                          statistics: str = "bosonic", limit: int = 5_000_000) -> SpectrumTable:
    """All multisets of nonzero modes with total energy <= kappa and size <= max_n.

    Parameters
    ----------
    disp : DispersionTable
        Single-quasiparticle energies; must be strictly positive on nonzero modes.
    kappa : float
        Energy cap (inclusive).
    max_n : int
        Cap on the number of quasiparticles.
    statistics : {"bosonic", "fermionic"}
        Fermionic quasiparticles occupy each mode at most once and every level
        is tagged with the parity of its count.
    limit : int
        Refuse to produce more than this many levels.
    """
    if statistics not in ("bosonic", "fermionic"):
        raise DomainError(f"unknown statistics {statistics!r}")
    if not (math.isfinite(kappa) or max_n is not None):
        raise DomainError("enumeration needs a finite energy cap or count cap")
    if not math.isfinite(kappa):
        raise DomainError("enumeration needs a finite energy cap")
    if max_n is None or max_n < 1:
        raise DomainError("max_n must be a positive integer")
    _check_enumerable(disp)
    zero = (0,) * disp.lattice.d
    modes = sorted(((v, k) for k, v in disp.items() if k != zero))
    scale = _common_scale([v for v, _ in modes] + [kappa])
    ints = [_to_int(v, scale) for v, _ in modes]
    ks = [k for _, k in modes]
    cap = _to_int(kappa, scale)
    fermi = statistics == "fermionic"
    found: dict = {}
    count = 0
    stack = []

    def dfs(start, total, mom):
        nonlocal count
        for i in range(start, len(ks)):
            t = total + ints[i]
            if t > cap:
                break
            stack.append(i)
            p = add(mom, ks[i])
            n = len(stack)
            count += 1
            if count > limit:
                raise DomainError(f"enumeration exceeded {limit} levels; lower kappa or max_n")
            parity = ("odd" if n % 2 else "even") if fermi else "none"
            cons = tuple(sorted(ks[j] for j in stack))
            found.setdefault(p, []).append(
                ExcitationPoint(_to_float(t, scale), n, cons, p, parity))
            if n < max_n:
                dfs(i + 1 if fermi else i, t, p)
            stack.pop()

    dfs(0, 0, zero)
    for lv in found.values():
        lv.sort()
    return SpectrumTable(disp.lattice, kappa, max_n, found)


# --------------------------------------------------------------------------
# hulls

def _in_window(p, window):
    return window is None or all(abs(c) <= window for c in p)


def hull_table(omega: DispersionTable, max_n: int | None = 6,
               window: int | None = None) -> DispersionTable:
    """Subadditive hull of ``omega`` on every reachable momentum.

    ``result[p]`` is the minimum of ``sum omega(k_i)`` over decompositions
    ``p = k_1 + ... + k_n`` with ``1 <= n <= max_n``, computed by min-plus
    dynamic programming over (momentum, parts used).  With ``max_n=None``
    the recursion runs to its fixed point and ``window`` (largest allowed
    absolute integer component) must bound the domain.
    """
    if max_n is None and window is None:
        raise DomainError("an unbounded hull needs a momentum window")
    for k, v in omega.items():
        if v < 0:
            raise DomainError(f"hull needs omega >= 0; omega{k} = {v}")
    base = [(k, v) for k, v in omega.items() if math.isfinite(v)]
    scale = _common_scale([v for _, v in base])
    single = [(k, _to_int(v, scale)) for k, v in base if _in_window(k, window)]
    best = dict(single)
    layer = dict(single)
    n = 1
    while layer and (max_n is None or n < max_n):
        nxt = {}
        for p, e in layer.items():
            for k, w in single:
                q = add(p, k)
                if not _in_window(q, window):
                    continue
                t = e + w
                if t < nxt.get(q, t + 1) and t < best.get(q, t + 1):
                    nxt[q] = t
        for q, t in nxt.items():
            best[q] = t
        layer = nxt
        n += 1
    return DispersionTable(omega.lattice, {p: _to_float(t, scale) for p, t in best.items()})


def subadditive_hull(omega: DispersionTable, p, max_n: int = 6) -> float:
    """Largest subadditive minorant of ``omega`` at ``p`` under the count cap."""
    p = tuple(p)
    table = hull_table(omega, max_n)
    if p not in table:
        raise DomainError(f"unreachable momentum {p} with at most {max_n} parts")
    return table[p]


def essential_bottom(eps: DispersionTable) -> DispersionTable:
    """eps_ess(p) = min over p = k1 + k2 of eps(k1) + eps(k2)."""
    items = [(k, v) for k, v in eps.items() if math.isfinite(v)]
    out: dict = {}
    for k1, v1 in items:
        for k2, v2 in items:
            q = add(k1, k2)
            s = v1 + v2
            if s < out.get(q, INF):
                out[q] = s
    return DispersionTable(eps.lattice, out)


def energy_gap(omega_min: DispersionTable) -> float:
    """Infimum of the table's values."""
    if len(omega_min) == 0:
        raise DomainError("energy gap of an empty table")
    return min(v for _, v in omega_min.items())


def critical_velocity(omega_min: DispersionTable, check: bool = True) -> float:
    """inf over k != 0 of omega(k) / |k|.

    With ``check`` the value is recomputed as inf eps_ess(k)/|k| from the
    two-quasiparticle bottom and the two must agree.  The second route uses
    pair sums of ``omega`` itself; pair sums of its hull give the same
    infimum because both are bounded below by c|k| and meet it at 2 k*.
    """
    lat = omega_min.lattice
    zero = (0,) * lat.d
    ratios = [v / lat.norm(k) for k, v in omega_min.items() if k != zero]
    if not ratios:
        raise DomainError("critical velocity needs a nonzero momentum")
    c = min(ratios)
    if check:
        ess = essential_bottom(DispersionTable(lat, {k: v for k, v in omega_min.items() if k != zero}))
        c2 = min(v / lat.norm(k) for k, v in ess.items() if k != zero)
        if abs(c - c2) > 1e-12 * max(abs(c), 1e-300):
            raise ConsistencyError(f"critical velocity routes disagree: {c!r} vs {c2!r}")
    return c


def free_fermi_dispersion(mu: float, k, lattice: LatticeSpec | None = None) -> float:
    """||k|^2 - mu| for a physical momentum, or an integer one when ``lattice`` is given."""
    if lattice is not None:
        k2 = lattice.norm2(k)
    else:
        try:
            k2 = float(sum(float(c) ** 2 for c in k))
        except TypeError:
            k2 = float(k) ** 2
    return abs(k2 - mu)


def two_sector_bottoms(omega_fermionic: DispersionTable | None,
                       omega_bosonic: DispersionTable | None,
                       max_n: int | None = 6, window: int | None = None):
    """Odd and even spectrum bottoms of a mixed quasiparticle system.

    Fermionic quasiparticles flip the parity of the fermion count; bosonic
    ones keep it.  The recursion adds one quasiparticle at a time and does
    not impose exclusion, which is the continuum picture where many
    fermionic modes sit arbitrarily close to each momentum.

    Returns
    -------
    (eps_minus, eps_plus, eps_ess_minus, eps_ess_plus) : DispersionTable
        Unreachable combinations carry ``inf``.
    """
    tables = [t for t in (omega_fermionic, omega_bosonic) if t is not None and len(t)]
    if not tables:
        raise DomainError("two-sector bottoms need at least one nonempty table")
    lat = tables[0].lattice
    if max_n is None and window is None:
        raise DomainError("an unbounded two-sector recursion needs a momentum window")
    vals = [v for t in tables for _, v in t.items()]
    scale = _common_scale(vals)
    singles = []  # (momentum, energy int, flips parity)
    for t, flip in ((omega_fermionic, 1), (omega_bosonic, 0)):
        if t is None:
            continue
        for k, v in t.items():
            if math.isfinite(v) and _in_window(k, window):
                singles.append((k, _to_int(v, scale), flip))
    best: dict = {}
    layer: dict = {}
    for k, e, flip in singles:
        key = (k, flip)
        if e < best.get(key, e + 1):
            best[key] = e
            layer[key] = e
    n = 1
    while layer and (max_n is None or n < max_n):
        nxt = {}
        for (p, par), e in layer.items():
            for k, w, flip in singles:
                q = add(p, k)
                if not _in_window(q, window):
                    continue
                key = (q, par ^ flip)
                t = e + w
                if t < nxt.get(key, t + 1) and t < best.get(key, t + 1):
                    nxt[key] = t
        best.update(nxt)
        layer = nxt
        n += 1
    moms = sorted({p for p, _ in best})
    minus = {p: _to_float(best[(p, 1)], scale) if (p, 1) in best else INF for p in moms}
    plus = {p: _to_float(best[(p, 0)], scale) if (p, 0) in best else INF for p in moms}
    ess_minus: dict = {}
    ess_plus: dict = {}
    fin_m = [(k, v) for k, v in minus.items() if math.isfinite(v)]
    fin_p = [(k, v) for k, v in plus.items() if math.isfinite(v)]
    for a, va in fin_m:
        for b, vb in fin_p:
            q = add(a, b)
            ess_minus[q] = min(ess_minus.get(q, INF), va + vb)
    for xs in (fin_p, fin_m):
        for a, va in xs:
            for b, vb in xs:
                q = add(a, b)
                ess_plus[q] = min(ess_plus.get(q, INF), va + vb)
    for q in list(ess_minus) + list(ess_plus):
        ess_minus.setdefault(q, INF)
        ess_plus.setdefault(q, INF)
    return (DispersionTable(lat, minus), DispersionTable(lat, plus),
            DispersionTable(lat, ess_minus), DispersionTable(lat, ess_plus))


def exact_sum(values) -> float:
    """Correctly rounded sum, for cross-checks against the integer routes."""
    return float(sum(Fraction(v) for v in values))

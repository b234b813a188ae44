"""Momentum lattices, pair potentials and the plain-text run configuration.

Momenta are integer tuples ``n`` standing for the physical vector
``(2*pi/L) * n``.  Keeping them integral makes momentum conservation an exact
integer comparison everywhere downstream.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, ExtrapolationError

Momentum = tuple  # tuple[int, ...]


@dataclass(frozen=True)
class LatticeSpec:
    """Cubic momentum lattice ``(2*pi/L) Z^d`` cut off at ``|p| <= cutoff``."""

    d: int
    L: float
    cutoff: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.d}")
        if not self.L > 0:
            raise DomainError(f"side length must be positive, got {self.L}")
        if not self.cutoff >= 0:
            raise DomainError(f"cutoff must be nonnegative, got {self.cutoff}")

    @classmethod
    def from_spacing(cls, d: int, spacing: float, cutoff: float) -> "LatticeSpec":
        return cls(d, 2.0 * math.pi / spacing, cutoff)

    @property
    def spacing(self) -> float:
        return 2.0 * math.pi / self.L

    @property
    def volume(self) -> float:
        return self.L ** self.d

    def norm2(self, n: Sequence[int]) -> float:
        """|p|^2 of the integer momentum ``n``; exactly even under n -> -n."""
        return self.spacing ** 2 * sum(int(c) * int(c) for c in n)

    def norm(self, n: Sequence[int]) -> float:
        return self.spacing * math.sqrt(sum(int(c) * int(c) for c in n))

    def physical(self, n: Sequence[int]) -> np.ndarray:
        return self.spacing * np.asarray(n, dtype=float)


def _ball(d: int, rmax: int, r2max: float) -> list[tuple[int, ...]]:
    pts = []
    for n in itertools.product(range(-rmax, rmax + 1), repeat=d):
        if sum(c * c for c in n) <= r2max:
            pts.append(tuple(n))
    return pts


def all_modes(spec: LatticeSpec) -> list[tuple[int, ...]]:
    """Lattice points with |p| <= cutoff, origin included, lexicographic order.

    Unlike :func:`lattice_points` this accepts a cutoff below one lattice
    spacing and then returns just the origin.
    """
    # tiny relative slack so that |p| == cutoff survives rounding of 2*pi/L
    r2max = (spec.cutoff / spec.spacing) ** 2 * (1.0 + 1e-12)
    rmax = int(math.floor(math.sqrt(r2max)))
    return _ball(spec.d, rmax, r2max)


def lattice_points(spec: LatticeSpec) -> list[tuple[int, ...]]:
    """Ordered list of integer momenta in the cutoff ball.

    Raises
    ------
    DomainError
        If the cutoff is below one lattice spacing ("empty nonzero lattice").
    """
    pts = all_modes(spec)
    if len(pts) == 1:
        raise DomainError(
            f"empty nonzero lattice: cutoff {spec.cutoff} < 2*pi/L = {spec.spacing}")
    return pts


def nonzero_modes(spec: LatticeSpec) -> list[tuple[int, ...]]:
    zero = (0,) * spec.d
    return [n for n in all_modes(spec) if n != zero]


def negate(n: Sequence[int]) -> tuple[int, ...]:
    return tuple(-c for c in n)


def add(n: Sequence[int], m: Sequence[int]) -> tuple[int, ...]:
    return tuple(a + b for a, b in zip(n, m))


# --------------------------------------------------------------------------
# potentials

@dataclass(frozen=True)
class PotentialSpec:
    """Fourier transform of a positive, even pair potential.

    ``kind`` is one of ``"gaussian"`` (``a * exp(-|p|^2 / b)``),
    ``"tabulated"`` (samples of ``v_hat`` against ``|p|``) or ``"zero"``.
    """

    kind: str
    a: float = 0.0
    b: float = 1.0
    table: tuple = ()
    _interp: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind == "gaussian":
            if not (self.a >= 0 and self.b > 0):
                raise DomainError(f"gaussian potential needs a >= 0, b > 0; got a={self.a}, b={self.b}")
        elif self.kind == "tabulated":
            q = np.asarray([r[0] for r in self.table], dtype=float)
            v = np.asarray([r[1] for r in self.table], dtype=float)
            if q.size < 2:
                raise DomainError("tabulated potential needs at least two samples")
            if np.any(np.diff(q) <= 0) or q[0] < 0:
                raise DomainError("tabulated |p| samples must be nonnegative and strictly increasing")
            if np.any(v < 0):
                raise DomainError("tabulated potential must be nonnegative")
            object.__setattr__(self, "_interp", PchipInterpolator(q, v, extrapolate=False))
        elif self.kind != "zero":
            raise DomainError(f"unknown potential kind {self.kind!r}")

    @classmethod
    def gaussian(cls, a: float, b: float) -> "PotentialSpec":
        return cls("gaussian", float(a), float(b))

    @classmethod
    def zero(cls) -> "PotentialSpec":
        return cls("zero")

    @classmethod
    def tabulated(cls, samples: Iterable[tuple[float, float]]) -> "PotentialSpec":
        return cls("tabulated", table=tuple((float(q), float(v)) for q, v in samples))

    def scaled(self, factor: float) -> "PotentialSpec":
        """The potential multiplied by ``factor >= 0``."""
        if factor < 0:
            raise DomainError("scaling factor must be nonnegative")
        if self.kind == "gaussian":
            return PotentialSpec.gaussian(self.a * factor, self.b)
        if self.kind == "tabulated":
            return PotentialSpec.tabulated((q, v * factor) for q, v in self.table)
        return self

    @property
    def qmax(self) -> float:
        return self.table[-1][0] if self.kind == "tabulated" else math.inf

    def at_norm2(self, p2: float) -> float:
        """v_hat as a function of |p|^2."""
        if self.kind == "gaussian":
            return self.a * math.exp(-p2 / self.b)
        if self.kind == "zero":
            return 0.0
        q = math.sqrt(p2)
        q0, q1 = self.table[0][0], self.table[-1][0]
        if q < q0 or q > q1:
            raise ExtrapolationError(
                f"extrapolation refused: |p| = {q} outside tabulated range [{q0}, {q1}]")
        return float(self._interp(q))


# reference potentials and lattice spacing used by the figure data
V1 = PotentialSpec.gaussian(0.1, 5.0)
V2 = PotentialSpec.gaussian(7.5, 2.0)
FIGURE_SPACING = 0.15


def potential_hat(spec: PotentialSpec, p) -> float:
    """Return v_hat(p) for a physical momentum ``p`` (scalar |p| or vector)."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    return spec.at_norm2(float(np.dot(p, p)))


def potential_on_lattice(spec: PotentialSpec, lat: LatticeSpec, n: Sequence[int]) -> float:
    """v_hat at the integer momentum ``n`` of ``lat``."""
    return spec.at_norm2(lat.norm2(n))


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere in R^d (2 for d = 1)."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def v_real_zero(spec: PotentialSpec, d: int) -> float:
    """v(0) = (2 pi)^{-d} times the integral of v_hat over R^d."""
    if spec.kind == "zero":
        return 0.0
    if spec.kind == "gaussian":
        return spec.a * (math.pi * spec.b) ** (d / 2.0) / (2.0 * math.pi) ** d
    q = np.array([r[0] for r in spec.table])
    v = np.array([r[1] for r in spec.table])
    # a table that has not decayed at its last sample gives no integrability
    # certificate; we refuse rather than guess a tail
    if v[-1] > 1e-8 * max(v.max(), 1e-300):
        raise DomainError(
            "divergent inverse transform: tabulated potential has not decayed at the "
            f"last sample (v_hat({q[-1]}) = {v[-1]})")
    val, err = integrate.quad(lambda r: r ** (d - 1) * float(spec._interp(r)),
                              q[0], q[-1], limit=200, points=q[1:-1][:48])
    return sphere_area(d) * val / (2.0 * math.pi) ** d


# --------------------------------------------------------------------------
# configuration

@dataclass
class RunConfig:
    lattice: LatticeSpec
    potential: PotentialSpec
    params: dict = field(default_factory=dict)


def load_table(path: str | Path) -> list[tuple[float, float]]:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DomainError(f"potential table line needs two columns: {line!r}")
        rows.append((float(parts[0]), float(parts[1])))
    return rows


def parse_config(text: str, base_dir: str | Path = ".") -> RunConfig:
    """Parse ``key=value`` lines into a :class:`RunConfig`.

    Recognized keys are ``dim``, ``side_length`` (or ``spacing`` for 2*pi/L),
    ``cutoff``, ``potential.kind``, ``potential.a``, ``potential.b`` and
    ``potential.table_path``.  Anything else is kept in ``params`` as a string.
    """
    kv: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DomainError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        kv[key] = value

    def take(key, conv, default=None):
        if key in kv:
            try:
                return conv(kv.pop(key))
            except ValueError as exc:
                raise DomainError(f"config key {key}: {exc}") from None
        if default is None:
            raise DomainError(f"config key {key} missing")
        return default

    d = take("dim", int, 1)
    if "side_length" in kv and "spacing" in kv:
        raise DomainError("give either side_length or spacing, not both")
    if "spacing" in kv:
        L = 2.0 * math.pi / take("spacing", float)
    else:
        L = take("side_length", float)
    cutoff = take("cutoff", float)
    kind = take("potential.kind", str, "zero")
    if kind == "gaussian":
        pot = PotentialSpec.gaussian(take("potential.a", float), take("potential.b", float))
    elif kind == "tabulated":
        path = Path(take("potential.table_path", str))
        if not path.is_absolute():
            path = Path(base_dir) / path
        if not path.exists():
            raise DomainError(f"potential table {path} not found")
        pot = PotentialSpec.tabulated(load_table(path))
    elif kind == "zero":
        pot = PotentialSpec.zero()
    else:
        raise DomainError(f"unknown potential kind {kind!r}")
    return RunConfig(LatticeSpec(d, L, cutoff), pot, kv)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise DomainError(f"config file {path} not found")
    return parse_config(path.read_text(), path.parent)


# --------------------------------------------------------------------------
# dispersion tables

class DispersionTable:
    """Energies on a set of integer lattice momenta.

    Parameters
    ----------
    lattice : LatticeSpec
        Supplies the physical scale ``2*pi/L`` used for ``|k|``.
    values : mapping
        Integer momentum tuple -> energy.  Stored in lexicographic order.
    """

    def __init__(self, lattice: LatticeSpec, values):
        items = sorted((tuple(int(c) for c in k), float(v)) for k, v in dict(values).items())
        for k, v in items:
            if len(k) != lattice.d:
                raise DomainError(f"momentum {k} has wrong dimension for d={lattice.d}")
            if not math.isfinite(v) and v != math.inf:
                raise DomainError(f"non-finite energy {v} at {k}")
        self.lattice = lattice
        self._values = dict(items)

    @classmethod
    def from_function(cls, lattice: LatticeSpec, fn, include_zero: bool = False):
        """Tabulate ``fn(n)`` over the lattice; ``fn`` receives integer tuples."""
        modes = all_modes(lattice) if include_zero else nonzero_modes(lattice)
        return cls(lattice, {n: fn(n) for n in modes})

    def __getitem__(self, k):
        return self._values[tuple(k)]

    def __contains__(self, k):
        return tuple(k) in self._values

    def __len__(self):
        return len(self._values)

    def __iter__(self):
        return iter(self._values)

    def get(self, k, default=None):
        return self._values.get(tuple(k), default)

    def items(self):
        return self._values.items()

    def momenta(self):
        return list(self._values)

    def norm(self, k) -> float:
        return self.lattice.norm(k)

    def scaled(self, c: float) -> "DispersionTable":
        return DispersionTable(self.lattice, {k: c * v for k, v in self._values.items()})

    def as_dict(self) -> dict:
        return dict(self._values)

    def __eq__(self, other):
        return (isinstance(other, DispersionTable) and self.lattice == other.lattice
                and self._values == other._values)

    def __repr__(self):
        return f"DispersionTable({len(self)} momenta, d={self.lattice.d})"

"""Pure Gaussian states and Wick reordering for few-mode polynomial Hamiltonians.

A Hamiltonian is stored as coefficient tensors ``h[(p, q)]`` of normal-ordered
monomials ``a+_{i1} .. a+_{ip} a_{j1} .. a_{jq}``.  A Gaussian state is
``W Omega`` with ``W = phi(u) exp(i phi(y)) exp(i X_theta)`` where

    X_theta = sum_ij theta_ij a+_i a+_j + conj(theta_ij) a_j a_i,
    phi(y)  = sum_i y_i a+_i + conj(y_i) a_i   (bosons only),
    phi(u)  = sum_i u_i a+_i + conj(u_i) a_i, |u| = 1 (odd fermionic states).

Internally a state is described by its *frame*: the affine map
``(b, b+) = T (a, a+) + c`` to the operators annihilating it.  Moves are
applied on the right of ``W``, so the optimizer never leaves the group even
when the chart ``theta`` degenerates.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from .errors import ConvergenceError, DomainError

BOSONIC = "bosonic"
FERMIONIC = "fermionic"
FAMILIES = ("even_bosonic", "full_bosonic", "even_fermionic", "odd_fermionic")


def _perm_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def _project_group(T: np.ndarray, start: int, size: int, fermionic: bool) -> np.ndarray:
    """Symmetrize (bosons) or antisymmetrize (fermions) axes start..start+size-1."""
    if size < 2:
        return T
    acc = np.zeros_like(T)
    axes = list(range(T.ndim))
    for perm in itertools.permutations(range(size)):
        order = axes[:start] + [start + p for p in perm] + axes[start + size:]
        sgn = _perm_sign(perm) if fermionic else 1
        acc = acc + sgn * np.transpose(T, order)
    return acc / math.factorial(size)


def canonical(T: np.ndarray, p: int, q: int, fermionic: bool) -> np.ndarray:
    return _project_group(_project_group(T, 0, p, fermionic), p, q, fermionic)


# --------------------------------------------------------------------------
# Hamiltonians

@dataclass
class PolynomialHamiltonian:
    """Sum of normal-ordered monomials of degree at most four.

    ``terms[(p, q)]`` has shape ``(n,) * (p + q)``; the first ``p`` axes index
    creation operators, the rest annihilation operators.
    """

    statistics: str
    n_modes: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.statistics not in (BOSONIC, FERMIONIC):
            raise DomainError(f"unknown statistics {self.statistics!r}")
        fermi = self.statistics == FERMIONIC
        clean = {}
        for (p, q), T in self.terms.items():
            if p + q > 4:
                raise DomainError(f"unsupported degree {p + q} (at most 4)")
            T = np.asarray(T, dtype=complex)
            if T.shape != (self.n_modes,) * (p + q):
                raise DomainError(f"term {(p, q)} has shape {T.shape}")
            T = canonical(T, p, q, fermi)
            if np.any(T != 0):
                clean[(p, q)] = T
        self.terms = clean

    @property
    def fermionic(self) -> bool:
        return self.statistics == FERMIONIC

    @property
    def is_even(self) -> bool:
        return all((p + q) % 2 == 0 for p, q in self.terms)

    @property
    def degree(self) -> int:
        return max((p + q for p, q in self.terms), default=0)

    def adjoint(self) -> "PolynomialHamiltonian":
        return PolynomialHamiltonian(self.statistics, self.n_modes,
                                     {(q, p): np.conj(np.transpose(T)) for (p, q), T in self.terms.items()})

    def hermiticity_error(self) -> float:
        adj = self.adjoint().terms
        keys = set(self.terms) | set(adj)
        z = np.zeros(())
        return max((float(np.max(np.abs(self.terms.get(k, z) - adj.get(k, z)))) for k in keys),
                   default=0.0)

    def hermitian_part(self) -> "PolynomialHamiltonian":
        adj = self.adjoint().terms
        keys = set(self.terms) | set(adj)
        shape = lambda k: (self.n_modes,) * sum(k)
        return PolynomialHamiltonian(self.statistics, self.n_modes, {
            k: 0.5 * (self.terms.get(k, np.zeros(shape(k))) + adj.get(k, np.zeros(shape(k))))
            for k in keys})

    @classmethod
    def from_monomials(cls, statistics, n_modes, monomials, hermitize=False):
        """Build from ``(creation indices, annihilation indices, coefficient)`` triples."""
        terms: dict = {}
        for cre, ann, coef in monomials:
            cre, ann = tuple(cre), tuple(ann)
            for i in cre + ann:
                if not 0 <= i < n_modes:
                    raise DomainError(f"mode index {i} out of range for {n_modes} modes")
            key = (len(cre), len(ann))
            if sum(key) > 4:
                raise DomainError(f"unsupported degree {sum(key)} (at most 4)")
            T = terms.setdefault(key, np.zeros((n_modes,) * sum(key), dtype=complex))
            T[cre + ann] += coef
        H = cls(statistics, n_modes, terms)
        if hermitize:
            H = H.hermitian_part()
        elif H.hermiticity_error() > 1e-12 * max(1.0, _scale(H)):
            raise DomainError(f"Hamiltonian is not hermitian (error {H.hermiticity_error():.3g})")
        return H


def _scale(H) -> float:
    return max((float(np.max(np.abs(T))) for T in H.terms.values()), default=0.0)


def parse_hamiltonian(text: str) -> PolynomialHamiltonian:
    """Read the coefficient-file format.

    Header lines ``statistics=bosonic|fermionic`` and ``modes=<n>``, then one
    monomial per line: ``<creation indices> <annihilation indices> <re> <im>``,
    index lists comma separated, ``-`` for an empty list.  Indices are
    zero-based mode numbers, e.g. ``0,1 1,0 0.5 0`` is ``0.5 a+_0 a+_1 a_1 a_0``.
    The monomials must already form a hermitian operator.
    """
    stats, n, monos = None, None, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, val = (s.strip() for s in line.split("=", 1))
            if key == "statistics":
                stats = val
            elif key == "modes":
                n = int(val)
            else:
                raise DomainError(f"line {lineno}: unknown header key {key!r}")
            continue
        parts = line.split()
        if len(parts) != 4:
            raise DomainError(f"line {lineno}: expected 4 fields, got {len(parts)}")
        idx = [tuple(int(x) for x in f.split(",")) if f != "-" else () for f in parts[:2]]
        monos.append((idx[0], idx[1], complex(float(parts[2]), float(parts[3]))))
    if stats is None or n is None:
        raise DomainError("coefficient file needs statistics= and modes= header lines")
    return PolynomialHamiltonian.from_monomials(stats, n, monos)


def format_hamiltonian(H: PolynomialHamiltonian) -> str:
    lines = [f"statistics={H.statistics}", f"modes={H.n_modes}"]
    for (p, q), T in sorted(H.terms.items()):
        for idx in itertools.product(range(H.n_modes), repeat=p + q):
            c = T[idx]
            if c != 0:
                cre = ",".join(map(str, idx[:p])) or "-"
                ann = ",".join(map(str, idx[p:])) or "-"
                lines.append(f"{cre} {ann} {float(c.real)!r} {float(c.imag)!r}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# normal ordering

def _normal_order(G: np.ndarray, n: int, has_const: bool, fermionic: bool,
                  constant_only: bool = False) -> dict:
    """Normal-order a word tensor over the slots (b_1..b_n, b+_1..b+_n[, 1]).

    Axis k of ``G`` is the k-th operator from the left.  Returns
    ``{(p, q): C}`` with ``C`` indexed (creators..., annihilators...).
    """
    r = G.ndim
    terms = {(0, 0): G}
    ann = np.arange(n)
    cre = np.arange(n, 2 * n)
    for pending in range(r, 0, -1):
        ax = pending - 1
        new: dict = {}

        def put(key, T):
            if key in new:
                new[key] = new[key] + T
            else:
                new[key] = T

        for (p, q), T in terms.items():
            if has_const:
                put((p, q), np.take(T, 2 * n, axis=ax))
            if not constant_only or p + 1 <= ax:
                put((p + 1, q), np.take(T, cre, axis=ax))
            Ta = np.take(T, ann, axis=ax)
            if not constant_only:
                sgn = -1 if (fermionic and p % 2) else 1
                put((p, q + 1), sgn * np.moveaxis(Ta, ax, ax + p))
            for j in range(1, p + 1):
                sgn = -1 if (fermionic and (j - 1) % 2) else 1
                put((p - 1, q), sgn * np.trace(Ta, axis1=ax, axis2=ax + j))
        terms = new
    return terms


@dataclass(frozen=True)
class Frame:
    """Affine map ``v_b = T v_a + c`` with ``v = (a_1..a_n, a+_1..a+_n)``."""

    T: np.ndarray
    c: np.ndarray
    fermionic: bool

    @property
    def n(self) -> int:
        return self.T.shape[0] // 2

    def inverse_T(self) -> np.ndarray:
        n = self.n
        if self.fermionic:
            return self.T.conj().T
        eta = np.diag(np.r_[np.ones(n), -np.ones(n)])
        return eta @ self.T.conj().T @ eta

    def matrices(self):
        """(P, Q, xi) with ``a = P b + Q b+ + xi``."""
        n = self.n
        Ti = self.inverse_T()
        xi = -(Ti @ self.c)[:n]
        return Ti[:n, :n], Ti[:n, n:], xi

    def compose(self, other: "Frame") -> "Frame":
        """Frame of ``W_self W_other`` (``other`` applied in the rotated operators)."""
        return Frame(other.T @ self.T, other.T @ self.c + other.c, self.fermionic)


def _identity_frame(n, fermionic):
    return Frame(np.eye(2 * n, dtype=complex), np.zeros(2 * n, dtype=complex), fermionic)


def _local_frame(theta: np.ndarray, y, fermionic: bool) -> Frame:
    """Frame of ``exp(i phi(y)) exp(i X_theta)``."""
    n = theta.shape[0]
    M = np.block([[np.zeros((n, n)), -2.0 * theta], [2.0 * np.conj(theta), np.zeros((n, n))]])
    E = linalg.expm(1j * M)
    cy = np.zeros(2 * n, dtype=complex)
    if y is not None:
        y = np.asarray(y, dtype=complex)
        cy = np.r_[-1j * y, 1j * np.conj(y)]
    return Frame(E, E @ cy, fermionic)


def _pin_frame(u: np.ndarray) -> Frame:
    u = np.asarray(u, dtype=complex)
    n = u.size
    I = np.eye(n)
    T = np.block([[np.outer(u, u.conj()) - I, np.outer(u, u)],
                  [np.outer(u.conj(), u.conj()), np.outer(u.conj(), u) - I]])
    return Frame(T, np.zeros(2 * n, dtype=complex), True)


# --------------------------------------------------------------------------
# parameters

@dataclass(frozen=True)
class GaussianParams:
    """Chart coordinates of ``phi(u) exp(i phi(y)) exp(i X_theta) Omega``."""

    theta: np.ndarray
    y: np.ndarray | None = None
    u: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.theta.shape[0]

    def validate(self, statistics: str):
        th = np.asarray(self.theta)
        if th.ndim != 2 or th.shape[0] != th.shape[1]:
            raise DomainError("theta must be a square matrix")
        if statistics == BOSONIC:
            if not np.allclose(th, th.T, atol=1e-14):
                raise DomainError("bosonic theta must be symmetric")
            if self.u is not None:
                raise DomainError("bosonic states carry no odd generator")
        else:
            if not np.allclose(th, -th.T, atol=1e-14):
                raise DomainError("fermionic theta must be antisymmetric")
            if self.y is not None and np.any(np.asarray(self.y) != 0):
                raise DomainError("fermionic states carry no displacement")
            if np.linalg.norm(th, 2) >= math.pi / 4:
                raise DomainError(
                    f"degenerate chart: ||theta|| = {np.linalg.norm(th, 2):.6g} >= pi/4")
            if self.u is not None and abs(np.linalg.norm(self.u) - 1) > 1e-12:
                raise DomainError("odd generator u must be a unit vector")


def frame_of(params: GaussianParams, statistics: str) -> Frame:
    params.validate(statistics)
    fermi = statistics == FERMIONIC
    th = np.asarray(params.theta, dtype=complex)
    f = _local_frame(th, None if fermi else params.y, fermi)
    if params.u is not None:
        f = _pin_frame(params.u).compose(f)
    return f


def _theta_from_frame(E: np.ndarray, fermionic: bool) -> np.ndarray:
    n = E.shape[0] // 2
    F, G = E[:n, :n], E[:n, n:]
    cond = np.linalg.cond(F)
    if not np.isfinite(cond) or cond > 1e12:
        raise DomainError("degenerate chart: state has no exp(X_theta) representation "
                          "(orthogonal to the vacuum of its parity)")
    c = -np.linalg.solve(F, G)
    c = 0.5 * (c + (-c.T if fermionic else c.T))
    H = c @ c.conj().T
    H = 0.5 * (H + H.conj().T)
    lam, U = np.linalg.eigh(H)
    lam = np.clip(lam, 0.0, None)
    t = np.sqrt(lam)
    if fermionic:
        g = np.where(t > 1e-8, np.arctan(t) / np.where(t > 0, 2 * t, 1), 0.5 - t * t / 6)
    else:
        if np.any(t >= 1):
            raise DomainError("bosonic frame is not normalizable")
        g = np.where(t > 1e-8, np.arctanh(np.minimum(t, 1 - 1e-16)) / np.where(t > 0, 2 * t, 1),
                     0.5 + t * t / 6)
    theta = -1j * (U * g) @ U.conj().T @ c
    return 0.5 * (theta + (-theta.T if fermionic else theta.T))


def params_from_frame(frame: Frame, u=None) -> GaussianParams:
    """Chart coordinates of the state annihilated by the frame's operators."""
    fermi = frame.fermionic
    f = frame
    if u is not None:
        f = Frame(frame.T @ _pin_frame(u).T, frame.c, fermi)
    theta = _theta_from_frame(f.T, fermi)
    y = None
    if not fermi:
        n = frame.n
        y = 1j * np.linalg.solve(f.T, f.c)[:n]
    return GaussianParams(theta, y, None if u is None else np.asarray(u, dtype=complex))


def bogoliubov_matrices(params: GaussianParams, statistics: str):
    """(P, Q, xi) with ``a = P b + Q b+ + xi`` and ``b`` annihilating the state."""
    return frame_of(params, statistics).matrices()


# --------------------------------------------------------------------------
# Wick reordering

@dataclass(frozen=True)
class WickForm:
    """Normal-ordered coefficients in the operators annihilating the state.

    ``H = B + sum K_i b+_i + conj(K_i) b_i + sum O_ij b+_j b+_i + h.c.
    + sum D_ij b+_i b_j + higher``.
    """

    B: float
    K: np.ndarray
    O: np.ndarray
    D: np.ndarray
    higher: dict
    terms: dict


def _substituted(H: PolynomialHamiltonian, frame: Frame, constant_only: bool) -> dict:
    n = H.n_modes
    fermi = H.fermionic
    P, Q, xi = frame.matrices()
    has_const = not fermi
    S = np.hstack([P, Q] + ([xi[:, None]] if has_const else []))
    R = np.hstack([np.conj(Q), np.conj(P)] + ([np.conj(xi)[:, None]] if has_const else []))
    total: dict = {}
    for (p, q), h in H.terms.items():
        G = h
        for k in range(p + q):
            G = np.tensordot(G, R if k < p else S, axes=([0], [0]))
        for key, C in _normal_order(G, n, has_const, fermi, constant_only).items():
            if constant_only and key != (0, 0):
                continue
            total[key] = total[key] + C if key in total else C
    return total


def expectation(H: PolynomialHamiltonian, frame: Frame) -> float:
    out = _substituted(H, frame, True)
    return float(np.real(out.get((0, 0), 0.0)))


def wick_form_of_frame(H: PolynomialHamiltonian, frame: Frame) -> WickForm:
    fermi = H.fermionic
    n = H.n_modes
    raw = _substituted(H, frame, False)
    terms = {k: canonical(np.asarray(T), k[0], k[1], fermi) for k, T in raw.items()}
    z1 = np.zeros(n, dtype=complex)
    z2 = np.zeros((n, n), dtype=complex)
    B = complex(terms.get((0, 0), 0.0))
    K = terms.get((1, 0), z1)
    O = np.transpose(terms.get((2, 0), z2))
    D = terms.get((1, 1), z2)
    higher = {k: T for k, T in terms.items() if sum(k) >= 3}
    return WickForm(B.real, K, O, D, higher, terms)


def wick_reorder(H: PolynomialHamiltonian, params: GaussianParams) -> WickForm:
    """Rewrite ``H`` in normal order with respect to the state's annihilators."""
    if H.degree > 4:
        raise DomainError(f"unsupported degree {H.degree}")
    return wick_form_of_frame(H, frame_of(params, H.statistics))


# --------------------------------------------------------------------------
# local charts and gradients

def _pair_index(n, fermionic):
    if fermionic:
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    return [(i, j) for i in range(n) for j in range(i, n)]


class _Chart:
    """Real coordinates (Re z, Im z per independent theta entry, then Re y, Im y)."""

    def __init__(self, n, fermionic, with_y):
        self.n = n
        self.fermionic = fermionic
        self.pairs = _pair_index(n, fermionic)
        self.with_y = with_y
        self.dim = 2 * len(self.pairs) + (2 * n if with_y else 0)

    def unpack(self, x):
        n = self.n
        th = np.zeros((n, n), dtype=complex)
        m = len(self.pairs)
        z = x[:m] + 1j * x[m:2 * m]
        for (i, j), zz in zip(self.pairs, z):
            th[i, j] = zz
            th[j, i] = -zz if self.fermionic else zz
        y = None
        if self.with_y:
            y = x[2 * m:2 * m + n] + 1j * x[2 * m + n:]
        return th, y

    def frame(self, x):
        th, y = self.unpack(x)
        return _local_frame(th, y, self.fermionic)

    def gradient(self, wf: WickForm) -> np.ndarray:
        """dB/dx at x = 0 from the linear and pair coefficients."""
        W = wf.terms.get((2, 0), np.zeros((self.n, self.n), dtype=complex))
        gr, gi = [], []
        for i, j in self.pairs:
            w = 4.0 if i == j else 8.0
            gr.append(w * W[i, j].imag)
            gi.append(-w * W[i, j].real)
        g = gr + gi
        if self.with_y:
            K = wf.K
            g += list(2.0 * K.imag) + list(-2.0 * K.real)
        return np.array(g, dtype=float)


def chart_gradient(H: PolynomialHamiltonian, params: GaussianParams, with_y=None) -> np.ndarray:
    """Gradient of B in the local chart around ``params`` (analytic, from K and O)."""
    fermi = H.fermionic
    if with_y is None:
        with_y = not fermi
    ch = _Chart(H.n_modes, fermi, with_y)
    return ch.gradient(wick_reorder(H, params))


def chart_energy(H: PolynomialHamiltonian, params: GaussianParams, x, with_y=None) -> float:
    """B at the state moved by local coordinates ``x`` (for finite differences)."""
    fermi = H.fermionic
    if with_y is None:
        with_y = not fermi
    ch = _Chart(H.n_modes, fermi, with_y)
    return expectation(H, frame_of(params, H.statistics).compose(ch.frame(np.asarray(x, float))))


def _hessian(fun, m, h=1e-4):
    f0 = fun(np.zeros(m))
    Hs = np.zeros((m, m))
    fp = np.zeros(m)
    fm = np.zeros(m)
    for i in range(m):
        e = np.zeros(m)
        e[i] = h
        fp[i] = fun(e)
        fm[i] = fun(-e)
        Hs[i, i] = (fp[i] - 2 * f0 + fm[i]) / h ** 2
    for i in range(m):
        for j in range(i + 1, m):
            e = np.zeros(m)
            e[i] = h
            e[j] = h
            fpp = fun(e)
            fmm = fun(-e)
            # d_ij from f(+e_i+e_j) and f(-e_i-e_j)
            Hs[i, j] = Hs[j, i] = (fpp + fmm - fp[i] - fm[i] - fp[j] - fm[j] + 2 * f0) / (2 * h * h)
    return Hs


@dataclass
class MinimizeResult:
    params: GaussianParams
    B: float
    gradient_norm: float
    iterations: int
    restart: int
    frame: Frame


def _descend(H, frame, chart, gtol, max_iter):
    B = expectation(H, frame)
    for it in range(max_iter):
        wf = wick_form_of_frame(H, frame)
        B = wf.B
        g = chart.gradient(wf)
        gn = float(np.linalg.norm(g))
        if gn <= gtol:
            return frame, B, gn, it
        fun = lambda x: expectation(H, frame.compose(chart.frame(x)))
        Hs = _hessian(fun, chart.dim)
        lam, V = np.linalg.eigh(0.5 * (Hs + Hs.T))
        floor = 1e-8 * max(1.0, float(np.max(np.abs(lam))))
        step = -V @ ((V.T @ g) / np.maximum(np.abs(lam), floor))
        sn = float(np.linalg.norm(step))
        if sn > 0.5:
            step *= 0.5 / sn
        t = 1.0
        accepted = False
        while t > 1e-10:
            cand = frame.compose(chart.frame(t * step))
            Bc = expectation(H, cand)
            if Bc <= B + 1e-4 * t * float(g @ step) or abs(Bc - B) <= 1e-13 * (1 + abs(B)):
                frame = cand
                accepted = True
                break
            t *= 0.5
        if not accepted:
            # plain gradient step as a fallback
            cand = frame.compose(chart.frame(-1e-3 * g / max(gn, 1e-300)))
            frame = cand
    wf = wick_form_of_frame(H, frame)
    gn = float(np.linalg.norm(chart.gradient(wf)))
    if gn <= gtol:
        return frame, wf.B, gn, max_iter
    raise ConvergenceError(f"no stationary point found (last gradient norm {gn:.3g})", residual=gn)


def minimize(H: PolynomialHamiltonian, family: str, seed: int = 0, restarts: int = 8,
             gtol: float = 1e-9, max_iter: int = 200, workers: int = 1,
             return_result: bool = False):
    """Minimize the Gaussian-state energy over one family of pure Gaussian states.

    Parameters
    ----------
    H : PolynomialHamiltonian
    family : {"even_bosonic", "full_bosonic", "even_fermionic", "odd_fermionic"}
    seed : int
        Seeds the random restarts.
    restarts : int
        Number of independent starting points; the lowest converged energy wins.
    gtol : float
        Gradient-norm target in the local chart.
    workers : int
        Restarts evaluated concurrently by this many threads.

    Returns
    -------
    GaussianParams, or MinimizeResult when ``return_result`` is true.
    """
    if family not in FAMILIES:
        raise DomainError(f"unknown family {family!r}")
    fermi = family.endswith("fermionic")
    if fermi != H.fermionic:
        raise DomainError(f"family {family} does not match {H.statistics} Hamiltonian")
    if family != "full_bosonic" and not H.is_even:
        raise DomainError(f"family {family} needs an even Hamiltonian")
    n = H.n_modes
    with_y = family == "full_bosonic"
    chart = _Chart(n, fermi, with_y)
    rng = np.random.default_rng(seed)
    starts = []
    for _ in range(restarts):
        x0 = rng.normal(scale=0.2, size=chart.dim)
        u = None
        if family == "odd_fermionic":
            u = rng.normal(size=n) + 1j * rng.normal(size=n)
            u /= np.linalg.norm(u)
        starts.append((x0, u))

    def run(k):
        x0, u = starts[k]
        base = _pin_frame(u) if u is not None else _identity_frame(n, fermi)
        try:
            frame, B, gn, it = _descend(H, base.compose(chart.frame(x0)), chart, gtol, max_iter)
        except ConvergenceError as exc:
            return exc
        return (B, k, frame, gn, it, u)

    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(workers) as pool:
            outcomes = list(pool.map(run, range(restarts)))
    else:
        outcomes = [run(k) for k in range(restarts)]
    good = [o for o in outcomes if not isinstance(o, Exception)]
    if not good:
        last = outcomes[-1]
        raise ConvergenceError(f"{last} in all {restarts} restarts", residual=last.residual)
    B, k, frame, gn, it, u = min(good, key=lambda o: (o[0], o[1]))
    params = params_from_frame(frame, u)
    if not with_y and not fermi:
        params = GaussianParams(params.theta, None, None)
    res = MinimizeResult(params, B, gn, it, k, frame)
    return res if return_result else params


def beliaev_certificate(H: PolynomialHamiltonian, params, family: str | None = None):
    """(||K||_inf, ||O||_inf, D, psd_flag) of the Wick form at ``params``.

    ``params`` may be GaussianParams or a Frame.  ``psd_flag`` reports whether
    the smallest eigenvalue of the hermitian matrix D is at least -1e-9.
    """
    if isinstance(params, Frame):
        wf = wick_form_of_frame(H, params)
    else:
        wf = wick_reorder(H, params)
    nk = float(np.max(np.abs(wf.K))) if wf.K.size else 0.0
    no = float(np.max(np.abs(wf.O))) if wf.O.size else 0.0
    D = 0.5 * (wf.D + wf.D.conj().T)
    psd = bool(np.min(np.linalg.eigvalsh(D)) >= -1e-9) if D.size else True
    return nk, no, wf.D, psd


# --------------------------------------------------------------------------
# brute-force Fock space oracle

def _ladder_ops(statistics, n, cutoff):
    if statistics == BOSONIC:
        dim1 = cutoff + 1
        a1 = sparse.diags(np.sqrt(np.arange(1, dim1)), 1, format="csr")
        I1 = sparse.identity(dim1, format="csr")
        ops = []
        for i in range(n):
            op = None
            for k in range(n):
                f = a1 if k == i else I1
                op = f if op is None else sparse.kron(op, f, format="csr")
            ops.append(op)
        return ops
    a1 = sparse.csr_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
    Z = sparse.csr_matrix(np.diag([1.0, -1.0]))
    I1 = sparse.identity(2, format="csr")
    ops = []
    for i in range(n):
        op = None
        for k in range(n):
            f = Z if k < i else (a1 if k == i else I1)
            op = f if op is None else sparse.kron(op, f, format="csr")
        ops.append(op)
    return ops


def fock_matrix(H: PolynomialHamiltonian, cutoff: int = 20, max_dim: int = 20000):
    """Sparse matrix of H in the occupation basis (per-mode cap ``cutoff`` for bosons)."""
    n = H.n_modes
    dim = 2 ** n if H.fermionic else (cutoff + 1) ** n
    if not H.fermionic and cutoff < 1:
        raise DomainError("bosonic oracle needs cutoff >= 1")
    if dim > max_dim:
        raise DomainError(f"oracle too large: dimension {dim} > {max_dim}")
    a = _ladder_ops(H.statistics, n, cutoff)
    ad = [op.conj().T.tocsr() for op in a]
    M = sparse.csr_matrix((dim, dim), dtype=complex)
    Id = sparse.identity(dim, format="csr", dtype=complex)
    for (p, q), T in H.terms.items():
        for idx in itertools.product(range(n), repeat=p + q):
            c = T[idx]
            if c == 0:
                continue
            op = Id
            for i in idx[:p]:
                op = op @ ad[i]
            for j in idx[p:]:
                op = op @ a[j]
            M = M + c * op
    return M.tocsr(), a


@dataclass
class OracleResult:
    E0: float
    scan: list


def gaussian_vector(params: GaussianParams, statistics: str, ops) -> np.ndarray:
    """``W Omega`` built by matrix exponentials in the (truncated) Fock space."""
    params.validate(statistics)
    a = ops
    ad = [op.conj().T for op in a]
    dim = a[0].shape[0]
    n = len(a)
    X = sparse.csr_matrix((dim, dim), dtype=complex)
    th = params.theta
    for i in range(n):
        for j in range(n):
            if th[i, j] != 0:
                X = X + th[i, j] * (ad[i] @ ad[j]) + np.conj(th[i, j]) * (a[j] @ a[i])
    psi = np.zeros(dim, dtype=complex)
    psi[0] = 1.0
    psi = splinalg.expm_multiply(1j * X.tocsc(), psi)
    if params.y is not None and statistics == BOSONIC:
        Y = sum(params.y[i] * ad[i] + np.conj(params.y[i]) * a[i] for i in range(n))
        psi = splinalg.expm_multiply(1j * sparse.csc_matrix(Y), psi)
    if params.u is not None:
        U = sum(params.u[i] * ad[i] + np.conj(params.u[i]) * a[i] for i in range(n))
        psi = U @ psi
    return psi


def fock_oracle(H: PolynomialHamiltonian, cutoff: int = 20, scan=(), max_dim: int = 20000) -> OracleResult:
    """Lowest eigenvalue of H in the occupation basis, plus ``<psi|H|psi>`` for each scanned state."""
    M, a = fock_matrix(H, cutoff, max_dim)
    dim = M.shape[0]
    if dim <= 600:
        E0 = float(np.linalg.eigvalsh(M.toarray())[0])
    else:
        E0 = float(splinalg.eigsh(M, k=1, which="SA", tol=1e-12)[0][0])
    energies = []
    for prm in scan:
        psi = gaussian_vector(prm, H.statistics, a)
        energies.append(float(np.real(np.vdot(psi, M @ psi)) / np.real(np.vdot(psi, psi))))
    return OracleResult(E0, energies)


# --------------------------------------------------------------------------
# random test Hamiltonians

def random_even_hamiltonian(statistics: str, n: int, rng, quartic: float = 1.0,
                            condensing: bool = False) -> PolynomialHamiltonian:
    """Random hermitian even Hamiltonian with bounded-below quartic part.

    The quartic part is ``sum_m c_m A_m+ A_m`` with random pair operators
    ``A_m = sum w_ij a_i a_j`` and ``c_m > 0``.  With ``condensing`` the
    one-body part has a negative direction so that bosonic minima displace.
    """
    fermi = statistics == FERMIONIC
    cplx = lambda *s: rng.normal(size=s) + 1j * rng.normal(size=s)
    h = cplx(n, n)
    h = 0.5 * (h + h.conj().T)
    h += (n + 1.0) * np.eye(n) if not condensing else -0.5 * np.eye(n)
    g = cplx(n, n) * 0.3
    g = 0.5 * (g - g.T) if fermi else 0.5 * (g + g.T)
    V = np.zeros((n,) * 4, dtype=complex)
    for _ in range(n + 1):
        w = cplx(n, n)
        w = 0.5 * (w - w.T) if fermi else 0.5 * (w + w.T)
        c = quartic * rng.uniform(0.2, 1.0)
        V += c * np.einsum("kl,ij->lkij", np.conj(w), w)
    terms = {(1, 1): h, (2, 0): g, (0, 2): np.conj(np.transpose(g)), (2, 2): V}
    H = PolynomialHamiltonian(statistics, n, terms)
    return H.hermitian_part()

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bogoscope import gaussian_variational as gv
from bogoscope.errors import DomainError

BOS, FER = "bosonic", "fermionic"


def rand_theta(rng, n, fermionic, scale):
    t = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) * scale
    return 0.5 * (t - t.T) if fermionic else 0.5 * (t + t.T)


def oscillator(omega, lam=0.0, pair=0.0):
    """omega a+a + lam (a+ + a) + (pair/2)(a+a+ + aa) on one bosonic mode."""
    mono = [((0,), (0,), omega)]
    if lam:
        mono += [((0,), (), lam), ((), (0,), lam)]
    if pair:
        mono += [((0, 0), (), pair / 2), ((), (0, 0), pair / 2)]
    return gv.PolynomialHamiltonian.from_monomials(BOS, 1, mono)


def pairing_toy(eps=1.0, g=2.0, delta=0.8):
    """Two fermionic modes with attraction and a pair field."""
    return gv.PolynomialHamiltonian.from_monomials(FER, 2, [
        ((0,), (0,), eps), ((1,), (1,), eps),
        ((0, 1), (), -delta), ((), (1, 0), -delta),
        ((0, 1), (1, 0), -g)])


# --------------------------------------------------------------------------
# Bogoliubov matrices


def test_trivial_params_identity():
    P, Q, xi = gv.bogoliubov_matrices(gv.GaussianParams(np.zeros((3, 3)), np.zeros(3)), BOS)
    assert np.allclose(P, np.eye(3), atol=0) and np.all(Q == 0) and np.all(xi == 0)


@pytest.mark.parametrize("beta", [0.1, 0.5, 1.2])
def test_single_mode_squeeze(beta):
    P, Q, _ = gv.bogoliubov_matrices(gv.GaussianParams(np.array([[beta]])), BOS)
    assert abs(P[0, 0]) == pytest.approx(math.cosh(2 * beta), rel=1e-13)
    assert abs(Q[0, 0]) == pytest.approx(math.sinh(2 * beta), rel=1e-13)


@pytest.mark.parametrize("stats", [BOS, FER])
@pytest.mark.parametrize("seed", range(5))
def test_canonical_relations(stats, seed):
    rng = np.random.default_rng(seed)
    fer = stats == FER
    th = rand_theta(rng, 4, fer, 0.3)
    if fer:
        th *= 0.7 / np.linalg.norm(th, 2)
    y = None if fer else rng.normal(size=4) + 1j * rng.normal(size=4)
    P, Q, _ = gv.bogoliubov_matrices(gv.GaussianParams(th, y), stats)
    sign = 1 if fer else -1
    assert np.max(np.abs(P @ P.conj().T + sign * Q @ Q.conj().T - np.eye(4))) <= 1e-12
    S = P @ Q.T
    assert np.max(np.abs(S - (-S.T if fer else S.T))) <= 1e-12


def test_fermionic_chart_boundary():
    th = np.array([[0, 1.0], [-1.0, 0]]) * (math.pi / 4)
    with pytest.raises(DomainError, match="degenerate chart"):
        gv.bogoliubov_matrices(gv.GaussianParams(th), FER)


@pytest.mark.parametrize("bad", [
    (BOS, gv.GaussianParams(np.array([[0, 1.0], [0, 0]]))),
    (FER, gv.GaussianParams(np.array([[0, 0.1], [0.1, 0]]))),
    (FER, gv.GaussianParams(np.zeros((2, 2)), np.ones(2))),
])
def test_symmetry_class_enforced(bad):
    stats, prm = bad
    with pytest.raises(DomainError):
        gv.bogoliubov_matrices(prm, stats)


@pytest.mark.parametrize("stats", [BOS, FER])
def test_group_composition(stats):
    rng = np.random.default_rng(7)
    fer = stats == FER
    f1 = gv.frame_of(gv.GaussianParams(rand_theta(rng, 3, fer, 0.2)), stats)
    f2 = gv.frame_of(gv.GaussianParams(rand_theta(rng, 3, fer, 0.2)), stats)
    f12 = f1.compose(f2)
    assert np.allclose(f12.T, f2.T @ f1.T, atol=1e-14)
    P, Q, _ = f12.matrices()
    sign = 1 if fer else -1
    assert np.max(np.abs(P @ P.conj().T + sign * Q @ Q.conj().T - np.eye(3))) <= 1e-12
    # the chart point of the composed frame describes the same state: frames
    # agree up to a unitary mixing of the b's, so compare Thouless matrices
    back = gv.frame_of(gv.params_from_frame(f12), stats)

    def thouless(f):
        return -np.linalg.solve(f.T[:3, :3], f.T[:3, 3:])

    assert np.allclose(thouless(back), thouless(f12), atol=1e-12)


# --------------------------------------------------------------------------
# Wick reordering


def test_number_operator_at_vacuum():
    wf = gv.wick_reorder(oscillator(1.7), gv.GaussianParams(np.zeros((1, 1)), np.zeros(1)))
    assert wf.B == 0 and np.all(wf.K == 0) and np.all(wf.O == 0)
    assert wf.D[0, 0] == 1.7


def test_shifted_oscillator():
    omega, lam = 1.3, 0.7
    # a = b + xi with xi = -lam/omega, and xi = i y
    y = np.array([1j * lam / omega])
    wf = gv.wick_reorder(oscillator(omega, lam), gv.GaussianParams(np.zeros((1, 1)), y))
    assert wf.B == pytest.approx(-lam ** 2 / omega, abs=1e-15)
    assert abs(wf.K[0]) <= 1e-15
    assert wf.D[0, 0] == pytest.approx(omega, abs=1e-15)


def test_scalar_pairing_optimum():
    A, B2 = 2.0, 1.2
    H = oscillator(A, pair=B2)
    prm = gv.minimize(H, "even_bosonic", seed=1)
    wf = gv.wick_reorder(H, prm)
    root = math.sqrt(A * A - B2 * B2)
    assert wf.B == pytest.approx((root - A) / 2, abs=1e-12)
    assert np.max(np.abs(wf.O)) <= 1e-9
    assert wf.D[0, 0].real == pytest.approx(root, abs=1e-9)
    # analytic angle: tanh(4 |theta|) = B2 / A
    assert abs(prm.theta[0, 0]) == pytest.approx(math.atanh(B2 / A) / 4, abs=1e-9)


@pytest.mark.parametrize("stats, n, cutoff", [(FER, 3, 0), (FER, 4, 0), (BOS, 2, 50)])
@pytest.mark.parametrize("seed", range(3))
def test_expectation_matches_fock_space(stats, n, cutoff, seed):
    rng = np.random.default_rng(seed)
    H = gv.random_even_hamiltonian(stats, n, rng)
    fer = stats == FER
    # small bosonic squeezing keeps the truncated oracle converged at cutoff 50
    th = rand_theta(rng, n, fer, 0.15 if fer else 0.06)
    y = None if fer else 0.3 * (rng.normal(size=n) + 1j * rng.normal(size=n))
    u = None
    if fer and seed == 2:
        u = rng.normal(size=n) + 1j * rng.normal(size=n)
        u /= np.linalg.norm(u)
    prm = gv.GaussianParams(th, y, u)
    oracle = gv.fock_oracle(H, cutoff, [prm])
    assert gv.wick_reorder(H, prm).B == pytest.approx(oracle.scan[0], abs=1e-9)
    assert gv.wick_reorder(H, prm).B >= oracle.E0 - 1e-9


def test_odd_hamiltonian_terms():
    # cubic term a+ a+ a and its adjoint, checked against the Fock matrix
    H = gv.PolynomialHamiltonian.from_monomials(BOS, 2, [
        ((0, 1), (1,), 0.3 + 0.2j), ((1,), (1, 0), 0.3 - 0.2j), ((0,), (0,), 1.0),
        ((1,), (1,), 1.5), ((0,), (), 0.4), ((), (0,), 0.4)])
    prm = gv.GaussianParams(np.array([[0.1, 0.05], [0.05, -0.1j]]), np.array([0.2, 0.1j]))
    assert gv.wick_reorder(H, prm).B == pytest.approx(gv.fock_oracle(H, 45, [prm]).scan[0], abs=1e-9)


def test_unsupported_degree():
    with pytest.raises(DomainError, match="unsupported degree"):
        gv.PolynomialHamiltonian.from_monomials(BOS, 1, [((0, 0, 0), (0, 0), 1.0)])


def test_non_hermitian_rejected():
    with pytest.raises(DomainError, match="not hermitian"):
        gv.PolynomialHamiltonian.from_monomials(BOS, 1, [((0,), (), 1.0)])


@pytest.mark.parametrize("stats, fam", [(BOS, "full_bosonic"), (FER, "even_fermionic")])
@pytest.mark.parametrize("seed", range(3))
def test_gradient_matches_finite_differences(stats, fam, seed):
    rng = np.random.default_rng(100 + seed)
    n = 2 if stats == BOS else 3
    H = gv.random_even_hamiltonian(stats, n, rng)
    fer = stats == FER
    prm = gv.GaussianParams(rand_theta(rng, n, fer, 0.2),
                            None if fer else 0.3 * rng.normal(size=n) + 0j)
    g = gv.chart_gradient(H, prm)
    h = 1e-6
    fd = np.array([(gv.chart_energy(H, prm, h * e) - gv.chart_energy(H, prm, -h * e)) / (2 * h)
                   for e in np.eye(g.size)])
    assert np.max(np.abs(g - fd)) <= 1e-6 * max(1.0, np.max(np.abs(g)))


def test_perturbed_stationary_point_has_linear_O():
    H = oscillator(2.0, pair=1.2)
    prm = gv.minimize(H, "even_bosonic", seed=0)
    slopes = []
    for eps in (1e-3, 1e-4):
        moved = gv.GaussianParams(prm.theta + eps)
        _, no, _, _ = gv.beliaev_certificate(H, moved)
        assert no > 0
        slopes.append(no / eps)
    assert slopes[0] == pytest.approx(slopes[1], rel=1e-2)


# --------------------------------------------------------------------------
# minimization and certificates


def test_quartic_repulsion_vacuum_stationary():
    H = gv.PolynomialHamiltonian.from_monomials(BOS, 1, [((0,), (0,), 1.0), ((0, 0), (0, 0), 0.5)])
    zero = gv.GaussianParams(np.zeros((1, 1)))
    assert np.all(gv.chart_gradient(H, zero, with_y=False) == 0)
    res = gv.minimize(H, "even_bosonic", seed=3, return_result=True)
    assert res.B == pytest.approx(0.0, abs=1e-12)
    assert res.params.y is None


def test_fermionic_pairing_toy_against_scan():
    H = pairing_toy()
    res = gv.minimize(H, "even_fermionic", seed=0, return_result=True)
    assert res.B < 0
    assert np.linalg.norm(res.params.theta) > 0.05
    # real theta_01 leaves this toy at B = 0; the pair field needs imaginary theta
    grid = np.linspace(-0.78, 0.78, 157)
    scan = [gv.GaussianParams(1j * np.array([[0, t], [-t, 0]])) for t in grid]
    orc = gv.fock_oracle(H, scan=scan)
    assert min(orc.scan) >= res.B - 1e-9
    assert min(orc.scan) - res.B <= 1e-3
    assert res.B >= orc.E0 - 1e-12


@pytest.mark.parametrize("stats, fams", [(BOS, ["even_bosonic", "full_bosonic"]),
                                         (FER, ["even_fermionic", "odd_fermionic"])])
def test_minimize_certifies(stats, fams):
    rng = np.random.default_rng(11)
    n = 2 if stats == BOS else 3
    H = gv.random_even_hamiltonian(stats, n, rng, condensing=stats == BOS)
    E0 = gv.fock_oracle(H, 40).E0
    for fam in fams:
        res = gv.minimize(H, fam, seed=5, return_result=True)
        nk, no, D, psd = gv.beliaev_certificate(H, res.frame)
        assert res.gradient_norm <= 1e-9
        assert nk <= 1e-6 and no <= 1e-6
        assert res.B >= E0 - 1e-9
        if fam == "full_bosonic":
            assert psd


def test_minimize_is_deterministic():
    H = gv.random_even_hamiltonian(FER, 3, np.random.default_rng(2))
    a = gv.minimize(H, "even_fermionic", seed=4, return_result=True)
    b = gv.minimize(H, "even_fermionic", seed=4, return_result=True, workers=3)
    assert a.B == b.B and np.array_equal(a.params.theta, b.params.theta)


@pytest.mark.parametrize("H, fam, msg", [
    (oscillator(1.0), "even_fermionic", "does not match"),
    (oscillator(1.0, lam=0.5), "even_bosonic", "even Hamiltonian"),
    (oscillator(1.0), "squeezed", "unknown family"),
])
def test_minimize_rejects(H, fam, msg):
    with pytest.raises(DomainError, match=msg):
        gv.minimize(H, fam)


def test_no_stationary_point_reported():
    H = gv.random_even_hamiltonian(FER, 3, np.random.default_rng(0))
    with pytest.raises(gv.ConvergenceError, match="no stationary point") as exc:
        gv.minimize(H, "even_fermionic", restarts=2, max_iter=1)
    assert exc.value.residual > 0


# --------------------------------------------------------------------------
# oracle and file format


def test_oracle_number_operator():
    assert gv.fock_oracle(oscillator(2.0), 10).E0 == pytest.approx(0.0, abs=1e-12)


def test_oracle_shifted_oscillator():
    assert gv.fock_oracle(oscillator(1.3, 0.7), 60).E0 == pytest.approx(-0.7 ** 2 / 1.3, abs=1e-8)


def test_oracle_too_large():
    H = gv.random_even_hamiltonian(BOS, 3, np.random.default_rng(0))
    with pytest.raises(DomainError, match="oracle too large"):
        gv.fock_oracle(H, 40)


def test_coefficient_file_roundtrip():
    H = gv.random_even_hamiltonian(FER, 3, np.random.default_rng(1))
    H2 = gv.parse_hamiltonian(gv.format_hamiltonian(H))
    assert H2.statistics == FER and H2.n_modes == 3
    for k, T in H.terms.items():
        np.testing.assert_allclose(H2.terms[k], T, atol=1e-15)


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1), st.floats(-2, 2)), max_size=4))
def test_hermitized_monomials_are_hermitian(items):
    mono = [((i,), (j,), c) for i, j, c in items]
    H = gv.PolynomialHamiltonian.from_monomials(BOS, 2, mono, hermitize=True)
    assert H.hermiticity_error() == 0

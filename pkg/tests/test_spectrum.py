import itertools
import math

import pytest
from hypothesis import given, strategies as st

from bogoscope import spectrum as sp
from bogoscope.bogoliubov import dispersion_table
from bogoscope.errors import DomainError
from bogoscope.model import V1, V2, DispersionTable, LatticeSpec


def _brute_levels(table, kappa, max_n, fermionic=False):
    """Every multiset (set for fermions) of modes by itertools."""
    modes = table.momenta()
    out = {}
    pick = itertools.combinations if fermionic else itertools.combinations_with_replacement
    for n in range(1, max_n + 1):
        for combo in pick(modes, n):
            e = math.fsum(table[k] for k in combo)
            if e <= kappa:
                p = tuple(map(sum, zip(*combo)))
                out.setdefault(p, []).append((e, n))
    return {p: sorted(v) for p, v in out.items()}


@pytest.fixture
def small():
    lat = LatticeSpec(1, 2 * math.pi, 3.0)
    return DispersionTable(lat, {(-3,): 2.5, (-2,): 1.25, (-1,): 0.75, (1,): 0.5, (2,): 1.5,
                                 (3,): 2.0})


def test_enumeration_matches_brute_force(small):
    t = sp.enumerate_excitations(small, 4.0, 4)
    brute = _brute_levels(small, 4.0, 4)
    assert set(t.momenta()) == set(brute)
    for p, lv in brute.items():
        got = sorted((pt.energy, pt.n_quasiparticles) for pt in t.levels[p])
        assert got == lv


def test_fermionic_enumeration_excludes_double_occupation(small):
    t = sp.enumerate_excitations(small, 4.0, 4, statistics="fermionic")
    brute = _brute_levels(small, 4.0, 4, fermionic=True)
    for p, lv in brute.items():
        assert sorted((pt.energy, pt.n_quasiparticles) for pt in t.levels[p]) == lv
    for lv in t.levels.values():
        for pt in lv:
            assert len(set(pt.constituents)) == len(pt.constituents)
            assert pt.parity == ("odd" if pt.n_quasiparticles % 2 else "even")


def test_enumeration_order_and_vacuum(small):
    t = sp.enumerate_excitations(small, 3.0, 3)
    assert (0,) in t.levels  # (1) + (-1)
    assert all(pt.n_quasiparticles >= 1 for lv in t.levels.values() for pt in lv)
    for lv in t.levels.values():
        assert lv == sorted(lv)


def test_enumeration_not_well_founded():
    lat = LatticeSpec(1, 2 * math.pi, 1.0)
    with pytest.raises(DomainError, match="not well-founded"):
        sp.enumerate_excitations(DispersionTable(lat, {(1,): 0.0, (-1,): 1.0}), 1.0)


def test_enumeration_limit(small):
    with pytest.raises(DomainError, match="exceeded"):
        sp.enumerate_excitations(small, 10.0, 6, limit=50)


def test_hull_matches_brute_minimum(small):
    h = sp.hull_table(small, max_n=4)
    brute = _brute_levels(small, math.inf, 4)
    assert set(h.momenta()) == set(brute)
    for p, lv in brute.items():
        assert h[p] == min(e for e, _ in lv)


@given(st.lists(st.integers(1, 2 ** 12), min_size=8, max_size=8))
def test_hull_is_subadditive_and_below_omega(vals):
    lat = LatticeSpec(1, 2 * math.pi, 4.0)
    modes = [(-4,), (-3,), (-2,), (-1,), (1,), (2,), (3,), (4,)]
    omega = DispersionTable(lat, {k: v / 2 ** 8 for k, v in zip(modes, vals)})
    h = sp.hull_table(omega, max_n=None, window=6)
    for k, v in omega.items():
        assert h[k] <= v
    for p, a in h.items():
        for q, b in h.items():
            s = (p[0] + q[0],)
            if s in h and s != (0,) or (s == (0,) and s in h):
                assert h[s] <= a + b


def test_subadditive_hull_unreachable():
    lat = LatticeSpec(1, 2 * math.pi, 2.0)
    om = DispersionTable(lat, {(2,): 1.0})
    assert sp.subadditive_hull(om, (4,), max_n=2) == 2.0
    with pytest.raises(DomainError, match="unreachable"):
        sp.subadditive_hull(om, (1,), max_n=3)


def test_essential_bottom_brute(small):
    ess = sp.essential_bottom(small)
    for p, v in ess.items():
        assert v == min(small[a] + small[b] for a in small for b in small if a[0] + b[0] == p[0])


def test_gap_and_critical_velocity(lat1):
    table = dispersion_table(lat1, V1)
    assert sp.energy_gap(table) == min(e for _, e in table.items())
    c = sp.critical_velocity(table)
    assert c == min(e / lat1.norm(k) for k, e in table.items())
    # for this convex dispersion c is attained at the smallest momentum
    assert c == table[(1,)] / lat1.spacing


def test_free_fermi_dispersion():
    lat = LatticeSpec(1, 2 * math.pi, 3.0)
    assert sp.free_fermi_dispersion(2.0, (1,), lat) == 1.0
    assert sp.free_fermi_dispersion(2.0, [1.0, 1.0]) == 0.0
    assert sp.free_fermi_dispersion(2.0, 3.0) == 7.0


def test_two_sector_bottoms_pair_of_fermions():
    lat = LatticeSpec(1, 2 * math.pi, 1.0)
    om_f = DispersionTable(lat, {(1,): 0.75, (-1,): 1.25})
    minus, plus, ess_minus, ess_plus = sp.two_sector_bottoms(om_f, None, max_n=2)
    assert plus[(0,)] == 2.0  # one quasiparticle at each of +-k
    assert minus[(1,)] == 0.75 and plus[(1,)] == math.inf
    assert ess_plus[(0,)] == 2.0


def test_two_sector_bottoms_brute_force():
    lat = LatticeSpec(1, 2 * math.pi, 2.0)
    om_f = DispersionTable(lat, {(-2,): 1.5, (-1,): 0.625, (1,): 0.875, (2,): 1.25})
    om_b = DispersionTable(lat, {(-1,): 1.0, (1,): 0.5})
    minus, plus, _, _ = sp.two_sector_bottoms(om_f, om_b, max_n=4)
    parts = [(k, v, 1) for k, v in om_f.items()] + [(k, v, 0) for k, v in om_b.items()]
    best = {}
    for n in range(1, 5):
        for combo in itertools.combinations_with_replacement(parts, n):
            p = sum(c[0][0] for c in combo)
            par = sum(c[2] for c in combo) % 2
            e = sum(c[1] for c in combo)
            best[(p, par)] = min(best.get((p, par), math.inf), e)
    for (p, par), e in best.items():
        assert (minus if par else plus)[(p,)] == e


def test_v2_two_quasiparticle_below_one_at_large_momentum():
    # e_p / |p| for v2 turns upward near |p| = 2.5; past that a pair undercuts e_p
    lat = LatticeSpec.from_spacing(1, 0.15, 4.0)
    table = dispersion_table(lat, V2)
    t = sp.enumerate_excitations(table, max(e for _, e in table.items()), 2)
    assert any(t.bottom(k) < e for k, e in table.items())

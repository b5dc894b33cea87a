import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hardcore_ep.errors import DomainError
from hardcore_ep.lattice import (
    LatticeSpec,
    boundary_potential,
    bonds,
    chain,
    condensate_energy,
    critical_momenta,
    inversion_permutation,
    resonant_parameters,
    site_coords,
    site_index,
    site_phases,
    stacked_boundary_sites,
)

from oracles import coords


def test_site_index_first_site():
    assert site_index((1, 1, 1), LatticeSpec((4, 3, 2))) == 0


def test_site_index_chain_offset():
    assert site_index((3, 1, 1), chain(10)) == 2


def test_site_index_round_trip_5x3():
    spec = LatticeSpec((5, 3, 1))
    seen = set()
    for r in coords(spec.dims):
        i = site_index(r, spec)
        assert site_coords(i, spec) == r
        seen.add(i)
    assert seen == set(range(15))
    # axis 1 runs fastest
    assert site_index((2, 3, 1), spec) == 1 + 5 * 2


def test_site_index_accepts_short_coordinates():
    assert site_index((4,), chain(10)) == 3


@pytest.mark.parametrize("r", [(0, 1, 1), (11, 1, 1), (1, 2, 1)])
def test_site_index_out_of_range(r):
    with pytest.raises(DomainError):
        site_index(r, chain(10))


@settings(max_examples=60, deadline=None)
@given(st.tuples(st.integers(1, 5), st.integers(1, 5), st.integers(1, 4)))
def test_site_index_is_bijective(dims):
    spec = LatticeSpec(dims)
    idx = [site_index(r, spec) for r in coords(dims)]
    assert sorted(idx) == list(range(spec.n_sites))
    assert idx == list(range(spec.n_sites))


def test_bond_counts_chain_and_ring():
    assert len(bonds(chain(10))) == 9
    assert len(bonds(chain(10, q=2 * math.pi / 10, bc="periodic"))) == 10


def test_bond_count_mixed_lattice_by_degree():
    spec = LatticeSpec((5, 3, 1), ("open", "periodic", "open"), q=(0.3, 2 * math.pi / 3, 0))
    bl = bonds(spec)
    assert len(bl) == 4 * 3 + 5 * 3
    by_axis = Counter(b.axis for b in bl)
    assert by_axis == {1: 12, 2: 15}
    degree = Counter()
    for b in bl:
        degree[b.source] += 1
        degree[b.target] += 1
    assert sum(degree.values()) == 2 * len(bl)
    # periodic axis of length 3: every site has two axis-2 bonds
    deg2 = Counter()
    for b in bl:
        if b.axis == 2:
            deg2[b.source] += 1
            deg2[b.target] += 1
    assert set(deg2.values()) == {2}
    assert sum(b.wrap for b in bl) == 5


def test_two_site_ring_has_single_double_weight_bond():
    spec = chain(2, q=math.pi, bc="periodic")
    bl = bonds(spec)
    assert len(bl) == 1
    assert bl[0].weight == 2 and not bl[0].wrap


def test_bonds_skip_inactive_axes():
    assert all(b.axis == 1 for b in bonds(LatticeSpec((6, 1, 1), ("open", "periodic", "periodic"))))


@settings(max_examples=40, deadline=None)
@given(st.tuples(st.integers(1, 5), st.integers(1, 4), st.integers(1, 3)))
def test_open_lattice_interior_degree(dims):
    spec = LatticeSpec(dims)
    bl = bonds(spec)
    assert len(bl) == sum(
        (dims[a] - 1) * spec.n_sites // dims[a] for a in range(3)
    )
    for a in range(3):
        deg = Counter()
        for b in bl:
            if b.axis == a + 1:
                deg[b.source] += 1
                deg[b.target] += 1
        for i in range(spec.n_sites):
            m = site_coords(i, spec)[a]
            if 1 < m < dims[a]:
                assert deg[i] == 2


def test_resonant_parameters_pi_over_10():
    p = resonant_parameters(chain(10, q=math.pi / 10))
    assert p.V[0] == pytest.approx(0.9510565162951535, abs=1e-15)
    assert p.mu[0] == pytest.approx(complex(math.cos(math.pi / 10), math.sin(math.pi / 10)) / 2, abs=1e-15)
    assert p.mu_last[0] == p.mu[0].conjugate()
    assert p.hop[0] == 0.5


def test_resonant_parameters_hermitian_limit():
    p = resonant_parameters(chain(4, q=0.0))
    assert p.V[0] == 1.0 and p.mu[0] == 0.5


def test_resonant_parameters_quarter_turn():
    p = resonant_parameters(LatticeSpec((4, 1, 1), J=(2.0, 1, 1), q=(math.pi / 2, 0, 0)))
    assert p.V[0] == pytest.approx(0.0, abs=1e-15)
    assert p.mu[0] == pytest.approx(1j, abs=1e-15)


def test_periodic_axes_have_no_boundary_term():
    spec = LatticeSpec((5, 3, 1), ("open", "periodic", "open"), q=(0.4, 2 * math.pi / 3, 0))
    p = resonant_parameters(spec)
    assert p.mu[1] == 0 and p.mu[0] != 0
    assert p.mu[2] == 0 and p.V[2] == 0


def test_hop_scale_doubles_every_term():
    a = resonant_parameters(chain(6, q=0.7))
    b = resonant_parameters(chain(6, q=0.7, hop_scale=1.0))
    assert b.hop[0] == 2 * a.hop[0]
    assert b.V[0] == pytest.approx(2 * a.V[0])
    assert b.mu[0] == pytest.approx(2 * a.mu[0])


@settings(max_examples=50, deadline=None)
@given(st.floats(-7, 7), st.floats(0.1, 3))
def test_gain_loss_pairing(q, J):
    p = resonant_parameters(LatticeSpec((3, 1, 1), J=(J, 1, 1), q=(q, 0, 0)))
    assert p.mu_first[0].imag == -p.mu_last[0].imag


def test_periodic_q_snapped_to_grid():
    q = 2 * math.pi / 10 + 5e-13
    spec = chain(10, q=q, bc="periodic")
    assert spec.q[0] == 2 * math.pi * 1 / 10


def test_periodic_q_off_grid_rejected():
    with pytest.raises(DomainError):
        chain(10, q=math.pi / 10, bc="periodic")


@pytest.mark.parametrize(
    "kwargs",
    [
        {"dims": (0, 1, 1)},
        {"dims": (2, 2, 2, 2)},
        {"dims": (3, 1, 1), "bc": ("closed", "open", "open")},
        {"dims": (3, 1, 1), "q": (float("nan"), 0, 0)},
        {"dims": (3, 1, 1), "hop_scale": 0.0},
        {"dims": (100, 100, 1)},
    ],
)
def test_invalid_specs_rejected(kwargs):
    with pytest.raises(DomainError):
        LatticeSpec(**kwargs)


def test_critical_momenta_small_cases():
    assert critical_momenta(2) == pytest.approx([math.pi / 2, 3 * math.pi / 2])
    assert critical_momenta(3) == pytest.approx([math.pi * m / 3 for m in (1, 2, 4, 5)])
    qs = critical_momenta(10)
    assert len(qs) == 18
    assert math.pi not in qs
    assert qs[0] == pytest.approx(math.pi / 10)


def test_critical_momenta_rejects_short_chain():
    with pytest.raises(DomainError):
        critical_momenta(1)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40))
def test_critical_momenta_cancel_geometric_sum(N):
    for q in critical_momenta(N):
        s = sum(complex(math.cos(2 * q * m), -math.sin(2 * q * m)) for m in range(1, N + 1))
        assert abs(s) < 1e-12


def test_condensate_energy_sums_axes():
    spec = LatticeSpec((4, 3, 1), ("periodic", "periodic", "open"), q=(math.pi / 2, 2 * math.pi / 3, 0))
    assert condensate_energy(spec, 2) == pytest.approx(2 * (math.cos(math.pi / 2) + math.cos(2 * math.pi / 3)))


def test_inactive_axes_carry_no_energy():
    assert condensate_energy(LatticeSpec((5, 1, 1), q=(0.3, 1.0, 1.0)), 1) == pytest.approx(math.cos(0.3))


def test_corner_sites_stack_boundary_terms():
    spec = LatticeSpec((3, 3, 1), q=(0.4, 0.9, 0))
    p = resonant_parameters(spec)
    pot = boundary_potential(spec)
    assert pot[0] == pytest.approx(p.mu_first[0] + p.mu_first[1])
    assert pot[4] == 0
    assert stacked_boundary_sites(spec) == [0, 2, 6, 8]


def test_site_phases_one_based():
    spec = chain(4, q=0.25)
    assert site_phases(spec) == pytest.approx([0.25, 0.5, 0.75, 1.0])


def test_inversion_is_involution():
    spec = LatticeSpec((4, 3, 2))
    perm = inversion_permutation(spec)
    assert [perm[p] for p in perm] == list(range(spec.n_sites))
    assert perm[0] == spec.n_sites - 1

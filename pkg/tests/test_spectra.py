import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hardcore_ep.errors import NumericalError, ResourceLimitError
from hardcore_ep.fockspace import FockBasis, build_hamiltonian
from hardcore_ep.lattice import LatticeSpec, chain, condensate_energy
from hardcore_ep.spectra import (
    DENSE_CAP_ENV,
    Tolerances,
    classify,
    eigendecompose,
    ep_order_free_boson,
    linkage_groups,
    split_at_gap,
    verify_eigenstate,
)
from hardcore_ep.states import condensate, random_state

import oracles


def hamiltonian(spec, n):
    return build_hamiltonian(spec, None, FockBasis(spec.n_sites, n))


def test_two_site_chain_at_critical_momentum_is_jordan_block():
    H = hamiltonian(chain(2, q=math.pi / 2), 1)
    # closed form: trace 2 Re(mu) = 0, det |mu|^2 - 1/4 = 0
    assert np.allclose(H.to_dense(), [[0.5j, 0.5], [0.5, -0.5j]])
    w, _ = eigendecompose(H)
    assert np.allclose(w, 0, atol=1e-7)
    rep = classify(H)
    assert len(rep.coalescing) == 1
    c = rep.coalescing[0]
    assert (c.algebraic, c.geometric, c.jordan_order, c.blocks) == (2, 1, 2, 1)
    assert rep.summary() == "0,2x1"


def test_hermitian_ring_has_real_spectrum_and_no_coalescence():
    H = hamiltonian(chain(10, q=2 * math.pi / 10, bc="periodic"), 3)
    rep = classify(H)
    assert rep.n_CM == 0 and rep.n_complex == 0
    assert np.abs(rep.eigenvalues.imag).max() <= rep.tolerances.imag * rep.scale
    assert rep.summary() == "0,–"


def test_condensate_energy_is_in_spectrum():
    spec = chain(10, q=math.pi / 10)
    w, _ = eigendecompose(hamiltonian(spec, 3))
    assert np.min(np.abs(w - condensate_energy(spec, 3))) < 1e-6


def test_eigendecompose_sorted_and_consistent():
    H = hamiltonian(chain(6, q=0.9), 2)
    w, v = eigendecompose(H)
    assert np.all(np.diff(w.real) >= -1e-15)
    assert np.allclose(H.to_dense() @ v, v * w[None, :], atol=1e-12)


def test_dense_cap_from_environment(monkeypatch):
    monkeypatch.setenv(DENSE_CAP_ENV, "10")
    with pytest.raises(ResourceLimitError):
        eigendecompose(hamiltonian(chain(6), 2))
    monkeypatch.setenv(DENSE_CAP_ENV, "lots")
    with pytest.raises(ResourceLimitError):
        classify(hamiltonian(chain(6), 2))


def test_non_finite_matrix_rejected():
    with pytest.raises(NumericalError):
        eigendecompose(np.array([[np.nan, 0], [0, 1]]))


# Order-k blocks split by ~eps^(1/k); beyond order 2 the default cluster
# radius is too tight, so those cases widen it.
WIDE = Tolerances(cluster=1e-4)

JORDAN_CASES = [
    ([(1.0, 2), (3.0, 1)], {(2, 1, 2, 1)}),
    ([(1.0, 3), (1.0, 1)], {(4, 2, 3, 1)}),
    ([(0.5, 2), (0.5, 2), (0.5, 1), (2.0, 2)], {(5, 3, 2, 2), (2, 1, 2, 1)}),
    ([(1j, 4), (-1j, 4)], {(4, 1, 4, 1)}),
    ([(0.0, 1), (1.0, 1), (2.0, 1)], set()),
]


@pytest.mark.parametrize("blocks,expected", JORDAN_CASES)
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_classify_recovers_known_jordan_structure(blocks, expected, seed):
    rng = np.random.default_rng(seed)
    wide = max(size for _, size in blocks) > 2
    rep = classify(oracles.jordan_matrix(blocks, rng), WIDE if wide else None)
    got = {(c.algebraic, c.geometric, c.jordan_order, c.blocks) for c in rep.coalescing}
    assert got == expected
    assert sum(c.algebraic for c in rep.clusters) == rep.dim


def test_similarity_invariance_on_table_sector():
    spec = chain(10, q=2 * math.pi / 10)
    H = hamiltonian(spec, 4).to_dense()
    rng = np.random.default_rng(7)
    Q, _ = np.linalg.qr(rng.standard_normal(H.shape) + 1j * rng.standard_normal(H.shape))
    a = classify(H)
    b = classify(Q @ H @ Q.conj().T)
    assert a.summary() == b.summary() == "0,2x36"


@settings(max_examples=15, deadline=None)
@given(
    st.dictionaries(st.integers(-3, 3), st.tuples(st.integers(1, 3), st.integers(1, 2)), min_size=1, max_size=3),
    st.integers(0, 1000),
)
def test_cluster_invariants(spec, seed):
    # one block size per eigenvalue (see test_mixed_block_sizes_are_a_known_gap)
    blocks = [(float(lam), size) for lam, (size, count) in spec.items() for _ in range(count)]
    rep = classify(oracles.jordan_matrix(blocks, np.random.default_rng(seed)), WIDE)
    for c in rep.clusters:
        assert c.geometric <= c.algebraic
        assert (c.jordan_order >= 2) == (c.geometric < c.algebraic)
        if c.ranks:
            assert list(c.ranks) == sorted(c.ranks, reverse=True)
            assert c.ranks[-1] == 0 and len(c.ranks) - 1 <= c.algebraic
            # a - g counts the chain links beyond each block's eigenvector
            assert c.algebraic - c.geometric == c.ranks[1]
            assert c.blocks == c.ranks[1] - (c.ranks[2] if len(c.ranks) > 2 else 0)
    expected_order = {}
    for lam, size in blocks:
        expected_order[lam] = max(expected_order.get(lam, 1), size)
    for c in rep.coalescing:
        lam = round(c.value.real)
        assert c.jordan_order == expected_order[lam]


def test_default_radius_misses_order_three_block():
    rep = classify(oracles.jordan_matrix([(1.0, 3)], np.random.default_rng(0)))
    assert rep.coalescing == []


def test_mixed_block_sizes_are_a_known_gap():
    # blocks of order 2 and 3 on one eigenvalue: the two perturbation halos
    # differ in scale, the gap split separates them and the order-3 part is lost
    rep = classify(oracles.jordan_matrix([(0.0, 2), (0.0, 3)], np.random.default_rng(0)), WIDE)
    assert [c.jordan_order for c in rep.coalescing] == [2]


def test_nilpotency_witness():
    rep = classify(oracles.jordan_matrix([(0.3, 3)], np.random.default_rng(4)), WIDE)
    (c,) = rep.coalescing
    before, after = c.witness
    assert before > 1e-6 and after < 1e-10


def test_complex_levels_pair_under_pt():
    spec = LatticeSpec((5, 3, 1), ("open", "periodic", "open"), q=(math.pi / 5, 2 * math.pi / 3, 0))
    rep = classify(hamiltonian(spec, 2), pt_symmetric=True)
    assert rep.n_complex == 2 * rep.n_CM
    assert not any("pair" in f for f in rep.flags)
    assert rep.summary() == "7,2x11"


@pytest.mark.parametrize(
    "m,n,expected", [(1, 2, "0,2x1"), (1, 5, "0,2x1"), (2, 4, "0,2x36"), (3, 3, "0,2x1"), (4, 5, "0,2x43")]
)
def test_chain_level_structure(m, n, expected):
    assert classify(hamiltonian(chain(10, q=m * math.pi / 10), n)).summary() == expected


def test_report_json_round_trip():
    rep = classify(hamiltonian(chain(6, q=math.pi / 6), 2))
    d = json.loads(rep.to_json())
    assert d["summary"] == rep.summary()
    assert d["tolerances"]["rank"] == rep.tolerances.rank
    assert len(d["eigenvalues"]) == rep.dim


def test_tolerances_validation():
    with pytest.raises(ValueError):
        Tolerances(imag=0.0)
    with pytest.raises(ValueError):
        Tolerances(cluster=float("inf"))


def test_linkage_groups_chain_through_neighbours():
    vals = np.array([0.0, 0.9, 1.8, 5.0])
    assert linkage_groups(vals, 1.0) == [[0, 1, 2], [3]]


def test_gap_split_separates_halo_from_distinct_level():
    vals = np.array([1.0 + 1e-6, 1.0 - 1e-6, 1.0 + 3e-3])
    parts = sorted(sorted(p) for p in split_at_gap(vals, 20.0))
    assert parts == [[0, 1], [2]]


def test_verify_eigenstate_ring():
    spec = chain(10, q=2 * math.pi / 10, bc="periodic")
    H = hamiltonian(spec, 3)
    assert verify_eigenstate(H, condensate(spec, 3), 3 * math.cos(2 * math.pi / 10)) <= 1e-10


def test_verify_eigenstate_2d_periodic():
    spec = LatticeSpec((4, 3, 1), ("periodic", "periodic", "open"), q=(2 * math.pi / 4, 2 * math.pi / 3, 0))
    H = hamiltonian(spec, 2)
    E = 2 * (math.cos(math.pi / 2) + math.cos(2 * math.pi / 3))
    assert verify_eigenstate(H, condensate(spec, 2), E) <= 1e-10


def test_verify_eigenstate_negative_control():
    spec = chain(10, q=math.pi / 10)
    H = hamiltonian(spec, 2)
    assert verify_eigenstate(H, random_state(H.basis, 1), condensate_energy(spec, 2)) > 0.1


@pytest.mark.parametrize("n_d,n,m", [(1, 2, 1), (2, 2, 3), (3, 0, 1), (3, 3, 10)])
def test_ep_order_formula(n_d, n, m):
    assert ep_order_free_boson(n_d, n) == m == math.factorial(n_d + n - 1) // (math.factorial(n) * math.factorial(n_d - 1))


def test_ep_order_guards():
    with pytest.raises(ValueError):
        ep_order_free_boson(0, 1)
    with pytest.raises(NumericalError):
        ep_order_free_boson(3, 10**10)

import numpy as np
import pytest

from nnashor import Circuit, DyadicPhase
from nnashor.classical import build_classical_modmul
from nnashor.gates import build_controlled_swap_cascade, build_pseudo_toffoli
from nnashor.qarith import MultiplierParams, build_controlled_modmul
from nnashor.simulator import (SimulationError, StateVector, decode, encode, fidelity,
                               fidelity_to_basis, simulate, simulate_reversible, simulate_sparse,
                               sparse_marginal, unitary_of)


def test_hadamard():
    s, _ = simulate(Circuit(1).add("h", 0))
    assert np.allclose(s.amplitudes(), [2 ** -0.5, 2 ** -0.5])


def test_rz_half_turn():
    s, _ = simulate(Circuit(1).add("rz", 0, phase=DyadicPhase(1, 1)), 1)
    assert abs(s.amplitudes()[1] + 1) < 1e-12


def test_fidelity():
    a, _ = simulate(Circuit(2).add("h", 0), 0)
    b, _ = simulate(Circuit(2), 2)
    assert abs(fidelity(a, a) - 1) < 1e-12
    assert fidelity(StateVector.basis(2, 0), b) == 0


def test_swap_unitary_is_permutation():
    U = unitary_of(Circuit(2).add("swap", 0, 1))
    assert np.allclose(U, np.eye(4)[[0, 2, 1, 3]])


def test_unitary_of_rejects_measurement():
    with pytest.raises(SimulationError):
        unitary_of(Circuit(1).add("measure", 0, bit="m"))


def test_cnot_reversible():
    assert simulate_reversible(Circuit(2).add("cnot", 0, 1), 0b01) == 0b11


def test_cascade_reversible():
    c = build_controlled_swap_cascade(4)
    out = decode(simulate_reversible(c, encode(c.layout_in, {"c": 1, "X": 0b0110})), c.layout_out)
    assert (out["X"], out["Y"]) == (0, 0b0110)


def test_reversible_agrees_with_statevector():
    for circ in (build_pseudo_toffoli(), build_controlled_swap_cascade(2)):
        U = unitary_of(circ)
        for k in range(1 << circ.width):
            out = simulate_reversible(circ, k)
            assert abs(abs(U[out, k]) - 1) < 1e-12


def test_sparse_agrees_with_dense():
    c = build_controlled_modmul(MultiplierParams(3, 3, 7, exact_mode=True))
    for b in (1, 5):
        idx = encode(c.layout_in, {"B": b, "c": 1})
        dense, _ = simulate(c, idx)
        sparse, _ = simulate_sparse(c, idx)
        for k, p in sparse.probabilities().items():
            assert abs(fidelity_to_basis(dense, k) - p) < 1e-9


def test_measurement_is_seeded():
    c = Circuit(1).add("h", 0).add("measure", 0, bit="m")
    runs = [simulate(c, seed=s)[1].bits["m"] for s in range(20)]
    assert runs == [simulate(c, seed=s)[1].bits["m"] for s in range(20)]
    assert set(runs) == {0, 1}


def test_classical_multiplier_random_n8():
    rng = np.random.default_rng(3)
    a, m = 77, 251
    circ = build_classical_modmul(MultiplierParams(8, a, m, exact_mode=True, variant="classical"))
    for b, c in zip(rng.integers(0, m, 1000), rng.integers(0, 2, 1000)):
        b, c = int(b), int(c)
        out = decode(simulate_reversible(circ, encode(circ.layout_in, {"B": b, "c": c})),
                     circ.layout_out)
        assert out["B"] == (a * b % m if c else b)


def test_sparse_marginal_of_multiplier():
    c = build_controlled_modmul(MultiplierParams(3, 3, 7, exact_mode=True))
    s, _ = simulate_sparse(c, encode(c.layout_in, {"B": 5, "c": 1}))
    dist = sparse_marginal(s, {"B": c.layout_out["B"]})
    assert abs(dist[(1,)] - 1) < 1e-6


@pytest.mark.parametrize("n", [2, 3])
def test_basis_batch(n):
    s, _ = simulate(Circuit(n), list(range(1 << n)))
    assert np.allclose(s.vector(), np.eye(1 << n))

import math

import numpy as np
import pytest

from nnashor import CircuitError, GENERAL, compute_depth, validate_nearest_neighbor
from nnashor.qarith import (ExponentiationParams, MultiplierParams, XTable, build_controlled_modmul,
                            build_exponentiation, build_general_modmul,
                            build_modular_repeated_adder, build_nested_controlled_adder,
                            build_quotient_estimator, build_quotient_loop, precompute_constants)
from nnashor.simulator import encode, simulate_sparse, sparse_marginal


def _run(circ, values, seed=0):
    state, _ = simulate_sparse(circ, encode(circ.layout_in, values), seed=seed)
    return sparse_marginal(state, dict(circ.layout_out))


def _only(dist, tol=1e-6):
    (key, p), = [(k, v) for k, v in dist.items() if v > tol]
    assert p > 1 - tol
    return key


@pytest.mark.parametrize("n", [2, 3, 4, 8, 16, 33, 64])
def test_nested_adder_depths(n):
    xs = [1] * n
    assert compute_depth(build_nested_controlled_adder(xs, n)) == 6 * n - 4
    assert compute_depth(build_nested_controlled_adder(xs, n, z_constant_mode=True)) == 4 * n - 1


def test_nested_adder_example():
    xs = XTable.build(3, 7, 3)
    assert xs.xs == (3, 6, 5)
    c = build_nested_controlled_adder(xs, 3)
    out = dict(zip(c.layout_out, _only(_run(c, {"Y": 0b101, "Z": 0}))))
    assert out["Z"] == (3 + 5) % 8 and out["Y"] == 0b101


def test_nested_adder_all_inputs_n3():
    xs = (3, 6, 5)
    c = build_nested_controlled_adder(xs, 3)
    for y in range(8):
        for z in range(8):
            out = dict(zip(c.layout_out, _only(_run(c, {"Y": y, "Z": z}))))
            want = (z + sum(x for i, x in enumerate(xs) if y >> i & 1)) % 8
            assert out["Z"] == want


def test_quotient_estimator_exact():
    p = MultiplierParams(3, 3, 7, exact_mode=True)
    c = build_quotient_estimator(p)
    out = dict(zip(c.layout_out, _only(_run(c, {"Y": 0b101}))))
    assert out["qhat"] == 1


def test_quotient_loop_depth_n4():
    # formula 2l^2 - 2l0^2 = 24 at (l0, l) = (2, 4)
    d = compute_depth(build_quotient_loop(2, 2))
    assert d > 0 and validate_nearest_neighbor(build_quotient_loop(2, 2)) == []


def test_repeated_adder_exact():
    p = MultiplierParams(3, 3, 7, exact_mode=True)
    c = build_modular_repeated_adder(p)
    out = dict(zip(c.layout_out, _only(_run(c, {"Y": 5}))))
    assert out["Z"] == 1 and out["Q"] == 0


def test_repeated_adder_with_z():
    p = MultiplierParams(4, 5, 13, z=3, t=1, exact_mode=True)
    c = build_modular_repeated_adder(p)
    out = dict(zip(c.layout_out, _only(_run(c, {"Y": 9}))))
    assert out["Z"] == 45 % 13


def test_z_too_large_rejected():
    with pytest.raises(CircuitError):
        MultiplierParams(4, 5, 13, z=3)


@pytest.mark.parametrize("c_bit", [0, 1])
def test_multiplier_example(c_bit):
    c = build_controlled_modmul(MultiplierParams(3, 3, 7, exact_mode=True))
    out = dict(zip(c.layout_out, _only(_run(c, {"B": 5, "c": c_bit}))))
    assert out["B"] == (1 if c_bit else 5)
    assert all(v == 0 for k, v in out.items() if k not in ("B", "c"))


@pytest.mark.parametrize("n,l0,l", [(4, None, None), (8, 6, 9), (16, None, None)])
def test_multiplier_width(n, l0, l):
    m = (1 << n) - 3
    p = MultiplierParams(n, 2, m, l0=l0, l=l)
    c = build_controlled_modmul(p)
    assert c.width == 3 * n + 2 * p.l + 1
    if l == 9:
        assert c.width == 43


def test_repeated_adder_width_n8():
    p = MultiplierParams(8, 3, 251, l0=3, l=6)
    assert build_modular_repeated_adder(p).width <= 25


def test_exponentiation_example():
    p = ExponentiationParams(3, 7, 3, exponent=4, exact_mode=True)
    c = build_exponentiation(p).circuit
    state, _ = simulate_sparse(c, 0)
    assert sparse_marginal(state, {"B": c.layout_out["B"]})[(4,)] > 0.99


def test_exponentiation_widths():
    for n in (4, 8):
        m = (1 << n) - 1 if n != 4 else 13
        p = ExponentiationParams(2, m, n, exponent=3)
        e = build_exponentiation(p)
        assert e.circuit.width == 3 * n + 2 * p.multiplier(2).l + 2
        assert validate_nearest_neighbor(e.circuit) == []


def test_exponentiation_manifest():
    e = build_exponentiation(ExponentiationParams(3, 7, 3, exponent=5, exact_mode=True))
    man = e.manifest()
    assert len(man["rounds"]) == 6
    assert [r["a"] for r in man["rounds"]][:4] == [3, 2, 4, 2]


def test_precompute_constants():
    assert [c["a"] for c in precompute_constants(3, 7, 3)][:4] == [3, 2, 4, 2]
    with pytest.raises(CircuitError):
        ExponentiationParams(2, 4, 3)
    rng = np.random.default_rng(0)
    m = int(rng.integers(1 << 14, 1 << 16)) | 1
    g = 3 if math.gcd(3, m) == 1 else 5
    for c in precompute_constants(g, m, 16):
        assert c["a"] * c["a_inv"] % m == 1


def test_general_variant_matches_nn():
    for a in (3, 5):
        nn = build_controlled_modmul(MultiplierParams(3, a, 7, exact_mode=True))
        gen = build_general_modmul(MultiplierParams(3, a, 7, exact_mode=True, variant="general"))
        for b in range(7):
            r1 = dict(zip(nn.layout_out, _only(_run(nn, {"B": b, "c": 1}))))
            r2 = dict(zip(gen.layout_out, _only(_run(gen, {"B": b, "c": 1}))))
            assert r1["B"] == r2["B"] == a * b % 7
    assert compute_depth(gen, GENERAL) < compute_depth(nn)


def test_invalid_multiplier_params():
    for args in [(1, 1, 1), (3, 7, 7), (3, 2, 6), (3, 3, 7, 0, 5)]:
        with pytest.raises(CircuitError):
            MultiplierParams(*args)

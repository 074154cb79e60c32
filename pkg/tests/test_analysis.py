import math

import pytest

from nnashor.analysis import (classical_quotient_model, estimate_qhat, fit_depth, measure,
                              mc_block_carry, mc_window_error, mc_z_overflow, sweep_resources)
from nnashor.qarith import MultiplierParams, XTable, build_quotient_estimator
from nnashor.simulator import encode, simulate_sparse, sparse_marginal


def test_quotient_exact_window():
    tr = classical_quotient_model((3, 6, 5), (1, 0, 1), 0, 7, 3)
    assert (tr.qhat, tr.q, tr.window_failure) == (1, 1, False)


def test_quotient_narrow_window_fails():
    tr = classical_quotient_model((3, 6, 5), (1, 0, 1), 0, 7, 1)
    assert tr.qhat == 0 and tr.window_failure


def test_z_overflow_flag():
    tr = classical_quotient_model((3, 6, 5), (0, 0, 1), 3, 7, 3)
    assert tr.r == 5 and tr.z_overflow and tr.qhat == tr.target == 1


def test_model_matches_circuit_qhat():
    # the integer model reproduces the estimator circuit for every y at n=4
    p = MultiplierParams(4, 5, 13, l0=2)
    xs = XTable.build(5, 13, 4, 2)
    c = build_quotient_estimator(p)
    for y in range(16):
        st, _ = simulate_sparse(c, encode(c.layout_in, {"Y": y}))
        (qh,), = [k for k, v in sparse_marginal(st, {"qhat": c.layout_out["qhat"]}).items()
                  if v > 0.5]
        ys = [y >> i & 1 for i in range(4)]
        assert qh == classical_quotient_model(xs.xs, ys, 0, 13, 2, n=4, L=p.qbits).qhat


def test_estimate_qhat_exact_cases():
    # three quotient bits hold q < 8, so s < 7 * 8
    for s in range(0, 56):
        assert estimate_qhat(s, 7, 3, 3, 3) == s // 7


def test_window_rate_bound_and_seed():
    a = mc_window_error(32, 16, 100_000, seed=7)
    b = mc_window_error(32, 16, 100_000, seed=7)
    assert a.rate == b.rate and a.passed
    assert a.rate <= 2 * 32 * 2 ** -16


def test_window_exact_is_zero():
    assert mc_window_error(16, 16, 20_000).rate == 0


def test_window_rate_halves_per_bit():
    r12, r13 = (mc_window_error(32, l0, 100_000, seed=2).rate for l0 in (12, 13))
    assert 0.5 * 2 <= r12 / r13 <= 1.5 * 2


def test_z_overflow():
    assert mc_z_overflow(32, t=30, trials=20_000).rate == 0
    r8 = mc_z_overflow(32, t=8, trials=100_000, seed=3)
    assert r8.rate <= 2 * 2 ** -8
    r1, r2 = (mc_z_overflow(32, t=t, trials=100_000, seed=1).rate for t in (1, 2))
    assert 1.0 <= r1 / r2 <= 3.0


def test_block_carry():
    assert mc_block_carry(32, 32, trials=5_000).rate == 0
    r6 = mc_block_carry(32, 6, trials=100_000, seed=4)
    r8 = mc_block_carry(32, 8, trials=100_000, seed=4)
    assert r8.rate <= 2 * 2 ** -8 and r6.passed


def test_block_carry_ratio():
    # about 4x per two bits of t, with +-50% tolerance; 10^6 block-adds keep the noise small
    r6 = mc_block_carry(32, 6, trials=1_000_000)
    r8 = mc_block_carry(32, 8, trials=1_000_000)
    assert 2.0 <= r6.rate / r8.rate <= 6.0


def test_mc_width_limit():
    with pytest.raises(ValueError):
        mc_window_error(64, 16, 10)


def test_report_dict():
    d = mc_window_error(8, 4, 1000).to_dict()
    assert {"kind", "rate", "bound", "passed", "trials"} <= set(d)


def test_qft_sweep_exact():
    sw = sweep_resources("qft", list(range(2, 65)))
    assert all(r["depth"] == 2 * r["n"] - 3 for r in sw.rows)
    assert sw.fit["alpha"] == pytest.approx(2.0)
    assert sw.to_csv().splitlines()[0].startswith("builder")


def test_fit_depth_recovers_coefficients():
    rows = [{"n": n, "l": 2 * n, "depth": 11 * n + 6 * (4 * n - math.log2(n)) * math.log2(n) + 3}
            for n in (8, 16, 32, 64)]
    f = fit_depth(rows)
    assert f["alpha"] == pytest.approx(11) and f["beta"] == pytest.approx(6)


def test_measure_unknown():
    with pytest.raises(ValueError):
        measure("nope", 4)

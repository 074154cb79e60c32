"""One test per acceptance criterion, each printing a single PASS/FAIL line."""
import itertools
import math
import time

import numpy as np

from conftest import ACCEPTANCE_LINES
from nnashor import compute_depth, concat, invert, mirror, validate_nearest_neighbor
from nnashor.analysis import measure, mc_block_carry, mc_window_error, mc_z_overflow
from nnashor.classical import (build_block_nested_adder, build_classical_modmul,
                               build_ripple_add_const)
from nnashor.gates import (QftSpec, build_controlled_swap_cascade, build_mesh, build_pseudo_toffoli,
                           build_qft, build_unmesh)
from nnashor.qarith import (ExponentiationParams, MultiplierParams, build_controlled_modmul,
                            build_exponentiation, build_modular_repeated_adder,
                            build_nested_controlled_adder, build_quotient_loop)
from nnashor.simulator import (decode, encode, simulate, simulate_reversible, simulate_sparse,
                               sparse_marginal, unitary_of)


def _report(num: int, title: str, checks: list) -> None:
    """checks: (ok, detail) pairs; prints one line and fails on any miss."""
    ok = all(c for c, _ in checks)
    bad = [d for c, d in checks if not c]
    detail = "; ".join(bad) if bad else "; ".join(d for _, d in checks[:4])
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num} {title}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def _within(v: float, lo: float, hi: float) -> bool:
    return lo <= v <= hi


def test_criterion_1_depth_constants():
    checks = []
    slowest = 0.0

    def depth(build, *args, **kw):
        nonlocal slowest
        start = time.perf_counter()
        d = compute_depth(build(*args, **kw))
        slowest = max(slowest, time.perf_counter() - start)
        return d

    for n in range(2, 65):
        d = depth(build_qft, QftSpec(n))
        checks.append((d == 2 * n - 3, f"qft n={n} depth {d}, want {2 * n - 3}"))
        xs = [(5 << i) % ((1 << n) - 1 or 1) for i in range(n)]
        d = depth(build_nested_controlled_adder, xs, n)
        checks.append((d == 6 * n - 4, f"nested n={n} depth {d}, want {6 * n - 4}"))
        d = depth(build_nested_controlled_adder, xs, n, z_constant_mode=True)
        checks.append((d == 4 * n - 1, f"nested const n={n} depth {d}, want {4 * n - 1}"))
        d = depth(build_controlled_swap_cascade, n)
        checks.append((d == 2 * n + 2, f"cascade n={n} depth {d}, want {2 * n + 2}"))
    d4 = compute_depth(build_controlled_swap_cascade(4))
    checks.insert(0, (d4 == 10, f"cascade n=4 depth {d4}"))
    checks.insert(0, (True, "qft 2n-3, nested 6n-4 and 4n-1, cascade 2n+2 for n in [2,64]"))
    checks.insert(2, (slowest < 1.0, f"slowest construction {slowest:.2f}s"))
    _report(1, "exact depth constants", checks)


def test_criterion_2_widths():
    checks = []
    for n in (4, 8, 16):
        m = 13 if n == 4 else (1 << n) - 5
        p = MultiplierParams(n, 3, m)
        w = build_controlled_modmul(p).width
        checks.append((w == 3 * n + 2 * p.l + 1, f"multiplier n={n} width {w} (3n+2l+1={3 * n + 2 * p.l + 1})"))
        e = build_exponentiation(ExponentiationParams(3, m, n, exponent=1, rounds=2)).circuit
        checks.append((e.width == 3 * n + 2 * p.l + 2,
                       f"exponentiator n={n} width {e.width} (3n+2l+2={3 * n + 2 * p.l + 2})"))
    _report(2, "exact widths", checks)


def _timed(builder, n, **kw):
    start = time.perf_counter()
    r = measure(builder, n, **kw)
    return r, time.perf_counter() - start


def _log_term(n: int, l: int) -> float:
    lg = math.log2(n)
    return 6 * (2 * l - lg) * lg


def test_criterion_3_leading_coefficients():
    checks = []
    n = 256
    r, dt = _timed("multiplier", n)
    coef = (r["depth"] - _log_term(n, r["l"])) / n
    checks.append((_within(coef, 10.5, 11.5), f"nn multiplier depth coefficient {coef:.2f} vs [10.5, 11.5]"))
    size = r["size"] / n ** 2
    checks.append((_within(size, 4.5, 5.5), f"nn multiplier size/n^2 {size:.2f} vs [4.5, 5.5]"))
    checks.append((dt < 30, f"nn multiplier build {dt:.1f}s"))
    r, dt = _timed("round", n)
    per = r["depth"] / n
    checks.append((_within(per, 8.5, 9.8), f"round depth/n {per:.2f} vs [8.5, 9.8]"))
    checks.append((dt < 30, f"round build {dt:.1f}s"))
    r, dt = _timed("general_multiplier", n)
    coef = (r["depth"] - _log_term(n, r["l"])) / n
    checks.append((_within(coef, 5.5, 6.5), f"general depth coefficient {coef:.2f} vs [5.5, 6.5]"))
    size = r["size"] / n ** 2
    checks.append((_within(size, 1.7, 2.5), f"general size/n^2 {size:.2f} vs [1.7, 2.5]"))
    for nn, l0 in ((4, 2), (8, 3), (16, 4)):
        l = l0 + math.ceil(math.log2(nn))
        d = compute_depth(build_quotient_loop(l0, l - l0))
        want = 2 * l * l - 2 * l0 * l0
        checks.append((abs(d - want) <= 8, f"quotient loop (n={nn}, l0={l0}) depth {d} vs {want} +-8"))
    _report(3, "leading coefficients at n=256", checks)


def _multiplier_fidelities(n: int, m: int, a: int):
    c = build_controlled_modmul(MultiplierParams(n, a, m, exact_mode=True))
    worst = 1.0
    for b, ctl in itertools.product(range(m), (0, 1)):
        state, _ = simulate_sparse(c, encode(c.layout_in, {"B": b, "c": ctl}))
        want = {"B": a * b % m if ctl else b, "c": ctl}
        worst = min(worst, state.probabilities().get(encode(c.layout_out, want), 0.0))
    return worst


def test_criterion_4_arithmetic_soundness():
    checks = []
    start = time.perf_counter()
    for n, m, a in [(3, 7, 2), (3, 7, 3), (3, 7, 5), (4, 13, 5), (4, 13, 7)]:
        f = _multiplier_fidelities(n, m, a)
        checks.append((f >= 1 - 1e-6, f"multiplier n={n} a={a} min fidelity {f:.9f}"))
    outs = {}
    for mode in ("measured-recycled", "preallocated"):
        worst, got = 1.0, []
        for e in range(64):
            p = ExponentiationParams(3, 7, 3, mode, exponent=e, exact_mode=True)
            c = build_exponentiation(p).circuit
            state, _ = simulate_sparse(c, 0)
            dist = sparse_marginal(state, {"B": c.layout_out["B"]})
            f = dist.get((pow(3, e, 7),), 0.0)
            worst = min(worst, f)
            got.append(max(dist, key=dist.get)[0])
        outs[mode] = got
        checks.append((worst >= 0.99, f"exponentiation {mode} 64/64 min fidelity {worst:.6f}"))
    same = outs["measured-recycled"] == outs["preallocated"]
    checks.append((same, "control modes agree" if same else "control modes disagree"))
    elapsed = time.perf_counter() - start
    checks.append((elapsed < 600, f"{elapsed:.0f}s"))
    _report(4, "arithmetic soundness", checks)


def test_criterion_5_pseudo_toffoli():
    U = unitary_of(build_pseudo_toffoli())
    want = np.zeros((8, 8))
    for k in range(8):
        u, v, w = k & 1, k >> 1 & 1, k >> 2 & 1
        want[u | (v ^ (u & w)) << 1 | w << 2, k] = -1 if (u, v, w) == (0, 1, 1) else 1
    err = float(np.max(np.abs(U - want)))
    checks = [(err <= 1e-12, f"max entry error {err:.1e}")]
    circ = build_controlled_swap_cascade(4)
    worst = 1.0
    for ctl, x in itertools.product((0, 1), range(16)):
        state, _ = simulate(circ, encode(circ.layout_in, {"c": ctl, "X": x, "Y": 0}))
        out = encode(circ.layout_out, {"c": ctl, "X": 0 if ctl else x, "Y": x if ctl else 0})
        amp = state.amplitudes()[out]
        # a phase error would show up as amp = -1 even though |amp|^2 = 1
        worst = min(worst, float(abs(amp) ** 2) if abs(amp - 1) < 1e-9 else 0.0)
    checks.append((worst >= 1 - 1e-10, f"cascade through zeros min fidelity (phase +1) {worst:.12f}"))
    _report(5, "pseudo-Toffoli unitary", checks)


def test_criterion_6_error_bounds():
    checks = []
    runs = [
        ("window l0=12", lambda: mc_window_error(32, 12, 100_000, seed=7), 2 * 32 * 2 ** -12),
        ("window l0=16", lambda: mc_window_error(32, 16, 100_000, seed=7), 2 * 32 * 2 ** -16),
        ("z t=4", lambda: mc_z_overflow(32, t=4, trials=100_000, seed=7), 2 * 2 ** -4),
        ("z t=8", lambda: mc_z_overflow(32, t=8, trials=100_000, seed=7), 2 * 2 ** -8),
        ("block t=6", lambda: mc_block_carry(32, 6, 100_000, seed=7), 2 * 2 ** -6),
        ("block t=8", lambda: mc_block_carry(32, 8, 100_000, seed=7), 2 * 2 ** -8),
    ]
    for name, run, limit in runs:
        start = time.perf_counter()
        rep = run()
        dt = time.perf_counter() - start
        again = run()
        checks.append((rep.rate <= limit, f"{name} rate {rep.rate:.2e} <= {limit:.2e}"))
        checks.append((rep.rate == again.rate, f"{name} reproducible"))
        checks.append((dt < 120, f"{name} {dt:.1f}s"))
    _report(6, "error-bound Monte Carlo", checks)


def test_criterion_7_classical_variant():
    checks = []
    wrong = 0
    for xs in [(5, 10, 7, 1), (15, 15, 15, 15), (1, 2, 4, 8), (9, 3, 12, 6)]:
        c = build_block_nested_adder(list(xs), 4, 4)
        for y, z in itertools.product(range(16), range(16)):
            out = decode(simulate_reversible(c, encode(c.layout_in, {"Y": y, "Z": z})),
                         c.layout_out)
            want = (z + sum(x for i, x in enumerate(xs) if y >> i & 1)) % 16
            wrong += out["Z"] != want or out["Za"] != 0
    checks.append((wrong == 0, f"n=4 single block: {wrong} mismatches over 1024 cases"))
    mism = total = 0
    for m in (5, 7):
        for a in range(1, m):
            qc = build_controlled_modmul(MultiplierParams(3, a, m, exact_mode=True))
            cc = build_classical_modmul(MultiplierParams(3, a, m, exact_mode=True, variant="classical"))
            for b, ctl in itertools.product(range(8), (0, 1)):
                st, _ = simulate_sparse(qc, encode(qc.layout_in, {"B": b, "c": ctl}))
                dist = sparse_marginal(st, {"B": qc.layout_out["B"]})
                q_out = max(dist, key=dist.get)[0]
                c_out = decode(simulate_reversible(cc, encode(cc.layout_in, {"B": b, "c": ctl})),
                               cc.layout_out)["B"]
                total += 1
                mism += q_out != c_out
    checks.append((mism == 0, f"classical vs quantum n=3: {mism}/{total} differ"))
    d32 = measure("classical_multiplier", 32, t=5)["depth"]
    d64 = measure("classical_multiplier", 64, t=6)["depth"]
    ratio = d64 / d32
    predicted = (64 ** 2 * 6) / (32 ** 2 * 5)
    checks.append((abs(ratio / predicted - 1) <= 0.25,
                   f"depth(64)/depth(32) = {d64}/{d32} = {ratio:.2f} vs n^2 log n prediction "
                   f"{predicted:.2f} +-25%; depth/(n^2 log2 n) = "
                   f"{d32 / (32 ** 2 * 5):.2f}, {d64 / (64 ** 2 * 6):.2f}"))
    _report(7, "classical variant", checks)


def _nn_matrix():
    yield "qft", build_qft(QftSpec(9))
    yield "qft approx", build_qft(QftSpec(12, approx_cutoff=4))
    yield "cascade", build_controlled_swap_cascade(7)
    yield "mesh", build_mesh(6)
    yield "unmesh", build_unmesh(6)
    yield "nested", build_nested_controlled_adder(list(range(1, 9)), 8)
    yield "nested const", build_nested_controlled_adder(list(range(1, 9)), 8, z_constant_mode=True)
    yield "quotient loop", build_quotient_loop(4, 3)
    for n, a, m in [(3, 3, 7), (4, 5, 13), (8, 77, 251), (12, 1001, 4093)]:
        for exact in (True, False):
            p = MultiplierParams(n, a, m, exact_mode=exact)
            yield f"adder n={n}", build_modular_repeated_adder(p)
            c = build_controlled_modmul(p)
            yield f"multiplier n={n}", c
            yield f"mirrored multiplier n={n}", mirror(c)
        for mode in ("measured-recycled", "preallocated"):
            for e in (None, 5):
                p = ExponentiationParams(a, m, n, mode, exponent=e, rounds=min(4, 2 * n))
                yield f"exponentiation n={n} {mode}", build_exponentiation(p).circuit
    yield "ripple", build_ripple_add_const(8, 201, controlled=True, carry_in=True,
                                           record_carry_out=True)
    yield "block adder", build_block_nested_adder(list(range(3, 30, 3)), 9, 3)


def test_criterion_8_structural():
    checks = []
    count = 0
    for name, c in _nn_matrix():
        bad = validate_nearest_neighbor(c)
        count += 1
        checks.append((not bad, f"{name}: {len(bad)} non-adjacent gates"))
    checks.insert(0, (True, f"{count} NN circuits validated"))
    adder = build_nested_controlled_adder([3, 6, 5], 3)
    full = concat(adder, invert(adder))
    state, _ = simulate(full, list(range(1 << full.width)))
    ok = np.allclose(state.vector(), np.eye(1 << full.width), atol=1e-9)
    checks.append((ok, "adder invert∘build = identity on all 64 inputs"))
    mult = build_controlled_modmul(MultiplierParams(3, 3, 7, exact_mode=True))
    full = concat(mult, invert(mult))
    worst = 1.0
    for b, ctl in itertools.product(range(8), (0, 1)):
        idx = encode(mult.layout_in, {"B": b, "c": ctl})
        st, _ = simulate_sparse(full, idx)
        worst = min(worst, st.probabilities().get(idx, 0.0))
    checks.append((worst > 1 - 1e-9, f"multiplier invert∘build fidelity {worst:.12f}"))
    _report(8, "structural", checks)

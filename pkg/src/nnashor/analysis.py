"""Integer models of the approximate arithmetic, Monte Carlo bound checks and resource sweeps."""
from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .circuit import GENERAL, NN, compute_depth
from .classical import BlockParams, nested_block_model
from .qarith import (MultiplierParams, clog2, default_l0, default_t, divisor)


# ------------------------------------------------------------ quotient model

def estimate_qhat(S: int, m: int, n: int, l0: int, L: int) -> int:
    """Quotient bits peeled from the window register holding ``S``.

    Mirrors the circuit register for register: l0 + L bits, a restoring
    division that subtracts ceil(m / 2^(n-l0)) << (k-1) from the low
    l0 + k bits and keeps the sign bit.
    """
    D1 = divisor(m, n - l0)
    v = S % (1 << (l0 + L))
    q = 0
    for k in range(L, 0, -1):
        A, D = l0 + k, D1 << (k - 1)
        t = (v - D) % (1 << A)
        sign = t >> (A - 1)
        v = t % (1 << (A - 1))
        if sign:
            v = (v + D) % (1 << (A - 1))
        q |= (1 - sign) << (k - 1)
    return q


@dataclass
class QuotientTrace:
    xs: tuple
    ys: tuple
    z: int
    m: int
    l0: int
    n: int
    L: int
    s: int
    q: int
    r: int
    qhat: int
    window_failure: bool
    z_overflow: bool

    @property
    def target(self) -> int:
        """The quotient the estimate aims at once the z offset is included."""
        return (self.z + self.s) // self.m


def classical_quotient_model(xs: Sequence[int], ys: Sequence[int], z: int, m: int, l0: int,
                             n: Optional[int] = None, L: Optional[int] = None) -> QuotientTrace:
    """Exact integer evaluation of s, q, r and the circuit's q-hat.

    ``n`` defaults to the bit length of m and ``L`` to ceil(log2 n).  A window
    failure means q-hat differs from floor((z + s) / m); a z overflow means
    the offset alone moved that quotient past q.
    """
    n = m.bit_length() if n is None else n
    L = clog2(n) if L is None else L
    w = n - l0
    s = sum(x * y for x, y in zip(xs, ys))
    q, r = divmod(s, m)
    S = (z >> w) + sum(y * (x >> w) for x, y in zip(xs, ys))
    qhat = estimate_qhat(S, m, n, l0, L)
    return QuotientTrace(tuple(xs), tuple(ys), z, m, l0, n, L, s, q, r, qhat,
                         qhat != (z + s) // m, r + z >= m and z > 0)


# ------------------------------------------------------------ Monte Carlo

@dataclass
class BoundReport:
    kind: str
    params: dict
    trials: int
    failures: int
    rate: float
    bound: float
    slack: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _report(kind: str, params: dict, trials: int, failures: int, bound: float,
            slack: float = 2.0, **extra) -> BoundReport:
    rate = failures / trials if trials else 0.0
    return BoundReport(kind, params, trials, failures, rate, bound, slack,
                       rate <= slack * bound, extra)


def _random_moduli(rng: np.random.Generator, n: int, size: int) -> np.ndarray:
    # odd n-bit moduli
    return rng.integers(1 << (n - 1), 1 << n, size=size, dtype=np.int64) | 1


def _random_units(rng: np.random.Generator, m: np.ndarray) -> np.ndarray:
    a = rng.integers(1, m, dtype=np.int64)
    bad = np.gcd(a, m) != 1
    while bad.any():
        a[bad] = rng.integers(1, m[bad], dtype=np.int64)
        bad = np.gcd(a, m) != 1
    return a


def _tables(a: np.ndarray, m: np.ndarray, n: int) -> np.ndarray:
    xs = np.empty((len(m), n), dtype=np.int64)
    x = a % m
    for i in range(n):
        xs[:, i] = x
        x = (2 * x) % m
    return xs


def _qhat_vec(S: np.ndarray, m: np.ndarray, n: int, l0: int, L: int) -> np.ndarray:
    D1 = -((-m) >> (n - l0))
    v = S % (1 << (l0 + L))
    q = np.zeros_like(S)
    for k in range(L, 0, -1):
        A, D = l0 + k, D1 << (k - 1)
        t = (v - D) % (1 << A)
        sign = t >> (A - 1)
        v = t % (1 << (A - 1))
        v = np.where(sign == 1, (v + D) % (1 << (A - 1)), v)
        q |= (1 - sign) << (k - 1)
    return q


def _check_width(n: int) -> None:
    if not 2 <= n <= 40:
        raise ValueError("Monte Carlo models use 64-bit integers; need 2 <= n <= 40")


def mc_window_error(n: int, l0: int, trials: int = 100_000, seed: int = 0,
                    worst_case: bool = False, t: Optional[int] = None) -> BoundReport:
    """Per-multiplication rate of q-hat missing floor((z + s) / m).

    Tables come from random odd n-bit moduli and random units a; y and z are
    uniform (z below m / 2^t).  ``worst_case`` replaces the tables with
    all-ones patterns just under the window, which defeats the averaging.
    """
    _check_width(n)
    rng = np.random.default_rng(seed)
    t = default_t(n) if t is None else t
    L = clog2(n)
    m = _random_moduli(rng, n, trials)
    if worst_case:
        w = n - l0
        xs = np.tile(np.array([min((1 << n) - 1, ((1 << w) - 1) | (1 << (n - 1)))] * n,
                              dtype=np.int64), (trials, 1)) % m[:, None]
    else:
        xs = _tables(_random_units(rng, m), m, n)
    ys = rng.integers(0, 2, size=(trials, n), dtype=np.int64)
    z = rng.integers(0, np.maximum(1, (m - 1) >> t) + 1, dtype=np.int64)
    w = n - l0
    s = (xs * ys).sum(axis=1)
    S = (z >> w) + ((xs >> w) * ys).sum(axis=1)
    qhat = _qhat_vec(S, m, n, l0, L)
    fails = int(np.count_nonzero(qhat != (z + s) // m))
    return _report("window", {"n": n, "l0": l0, "seed": seed, "worst_case": worst_case},
                   trials, fails, n * 2.0 ** (-l0))


def mc_z_overflow(n: int, m: Optional[int] = None, t: int = 8, trials: int = 100_000,
                  seed: int = 0) -> BoundReport:
    """Rate of (s mod m) + z reaching m with z uniform below m / 2^t."""
    _check_width(n)
    if t < 1:
        raise ValueError("t must be >= 1")
    rng = np.random.default_rng(seed)
    ms = np.full(trials, m, dtype=np.int64) if m is not None else _random_moduli(rng, n, trials)
    xs = _tables(_random_units(rng, ms), ms, n)
    ys = rng.integers(0, 2, size=(trials, n), dtype=np.int64)
    z = rng.integers(0, ((ms - 1) >> t) + 1, dtype=np.int64)
    r = (xs * ys).sum(axis=1) % ms
    fails = int(np.count_nonzero((z > 0) & (r + z >= ms)))
    return _report("z_overflow", {"n": n, "m": m, "t": t, "seed": seed}, trials, fails,
                   2.0 ** (-t))


def mc_block_carry(n: int, t: int, trials: int = 100_000, seed: int = 0,
                   erase: str = "addend") -> BoundReport:
    """Per block-addition rate of a carry running through a whole block.

    Random nested additions (random tables, controls and start value) are
    replayed on the integer model until ``trials`` block additions have been
    seen.  Erase failures and the addend/addend+carry discrepancy are
    reported alongside.
    """
    if t < 2:
        raise ValueError("t must be >= 2")
    rng = np.random.default_rng(seed)
    adds = wrong = residue = disc = runs = 0
    while adds < trials:
        xs = tuple(int(x) for x in rng.integers(0, 1 << n, size=n, dtype=np.uint64))
        ys = [int(y) for y in rng.integers(0, 2, size=n)]
        z = int(rng.integers(0, 1 << n, dtype=np.uint64))
        tr = nested_block_model(z, ys, BlockParams(n, t, xs), erase)
        adds += tr.adds
        wrong += tr.predicted_wrong
        residue += tr.residue
        disc += tr.discrepancy
        runs += 1
    return _report("block_carry", {"n": n, "t": t, "seed": seed, "erase": erase}, adds, wrong,
                   2.0 ** (-t), runs=runs, erase_failures=residue, erase_discrepancy=disc)


# ------------------------------------------------------------ resource sweeps

def _log_term(n: int, l: int) -> float:
    lg = math.log2(n)
    return 6 * (2 * l - lg) * lg


def _mult_params(n: int, variant: str = "nn") -> MultiplierParams:
    # zero bits in a constant drop rotations, so counts use typical (seeded random) constants
    rng = random.Random(n)
    m = rng.getrandbits(n) | (1 << (n - 1)) | 1 if n > 2 else 3
    a = rng.randrange(2, m)
    while math.gcd(a, m) != 1:
        a = rng.randrange(2, m)
    return MultiplierParams(n, a, m, variant=variant)


def measure(builder: str, n: int, **kw) -> Dict[str, float]:
    """Depth, width and size for one builder at size n (construction only)."""
    from . import gates, qarith, classical
    model = NN
    info: Dict[str, float] = {}
    if builder == "qft":
        c = gates.build_qft(gates.QftSpec(n))
        predicted = 2 * n - 3
    elif builder == "nested":
        c = qarith.build_nested_controlled_adder([1] * n, n)
        predicted = 6 * n - 4
    elif builder == "nested_const":
        c = qarith.build_nested_controlled_adder([1] * n, n, z_constant_mode=True)
        predicted = 4 * n - 1
    elif builder == "cascade":
        c = gates.build_controlled_swap_cascade(n)
        predicted = 2 * n + 2
    elif builder == "quotient_loop":
        l0 = kw.get("l0", default_l0(n))
        L = clog2(n)
        c = qarith.build_quotient_loop(l0, L)
        l = l0 + L
        predicted = 2 * l * l - 2 * l0 * l0
    elif builder in ("multiplier", "general_multiplier"):
        p = _mult_params(n, "general" if builder == "general_multiplier" else "nn")
        c = qarith.build_controlled_modmul(p)
        if builder == "general_multiplier":
            model = GENERAL
        coef = 11 if builder == "multiplier" else 6
        predicted = coef * n + _log_term(n, p.l)
        info["l"] = p.l
    elif builder == "round":
        p = _mult_params(n)
        base = dict(g=2, m=p.m, n=n, exponent=(1 << (2 * n)) - 1)
        one = qarith.build_exponentiation(qarith.ExponentiationParams(**base, rounds=1)).circuit
        two = qarith.build_exponentiation(qarith.ExponentiationParams(**base, rounds=2)).circuit
        d = compute_depth(two) - compute_depth(one)
        return {"builder": builder, "n": n, "depth": d, "width": two.width,
                "size": len(two.gates) - len(one.gates), "l": p.l,
                "predicted": 9 * n + _log_term(n, p.l)}
    elif builder == "classical_multiplier":
        p = _mult_params(n, "classical")
        c = classical.build_classical_modmul(p, kw.get("t"))
        model = GENERAL
        predicted = float("nan")
        info["l"] = p.l
    else:
        raise ValueError(f"unknown builder {builder!r}")
    out = {"builder": builder, "n": n, "depth": compute_depth(c, model), "width": c.width,
           "size": len(c.gates), "predicted": predicted}
    out.update(info)
    return out


@dataclass
class SweepResult:
    builder: str
    rows: List[dict]
    fit: Dict[str, float]

    def to_dict(self) -> dict:
        return {"builder": self.builder, "rows": self.rows, "coefficient_fits": self.fit}

    def to_csv(self) -> str:
        keys = list(self.rows[0]) if self.rows else []
        lines = [",".join(keys)]
        lines += [",".join(str(r.get(k, "")) for k in keys) for r in self.rows]
        return "\n".join(lines) + "\n"


def fit_depth(rows: Sequence[dict]) -> Dict[str, float]:
    """Least squares of depth = alpha*n + beta*(2l - log2 n)*log2 n + gamma (or alpha*n + gamma)."""
    n = np.array([r["n"] for r in rows], dtype=float)
    d = np.array([r["depth"] for r in rows], dtype=float)
    if all("l" in r for r in rows) and len(rows) >= 3:
        extra = np.array([(2 * r["l"] - math.log2(r["n"])) * math.log2(r["n"]) for r in rows])
        M = np.column_stack([n, extra, np.ones_like(n)])
        (alpha, beta, gamma), *_ = np.linalg.lstsq(M, d, rcond=None)
        return {"alpha": float(alpha), "beta": float(beta), "gamma": float(gamma)}
    if len(rows) >= 2:
        M = np.column_stack([n, np.ones_like(n)])
        (alpha, gamma), *_ = np.linalg.lstsq(M, d, rcond=None)
        return {"alpha": float(alpha), "gamma": float(gamma)}
    return {}


def sweep_resources(builder: str, ns: Sequence[int], **kw) -> SweepResult:
    rows = [measure(builder, n, **kw) for n in ns]
    for r in rows:
        if "l" in r:
            r["coefficient"] = (r["depth"] - _log_term(r["n"], r["l"])) / r["n"]
    return SweepResult(builder, rows, fit_depth(rows))

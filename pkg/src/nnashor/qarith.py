"""Quantum arithmetic builders: nested adds, approximate quotient, modular multiplier.

All circuits are emitted onto a :class:`~nnashor.line.Line`.  A multiplier
"half" adds ``sum_i y_i x_i mod m`` into a zeroed target register T using the
bits of a control register C and a quotient register Q:

* T and Q are loaded in the Fourier basis (Hadamard plus one rotation layer);
* every control crosses Q (adding the truncated ``x_i``) and then T;
* a restoring division on Q peels off the quotient estimate one bit at a time,
  each bit following the controls through T to subtract its multiple of m;
* T is transformed back, Q walks through T, the division is run backwards and
  the controls cross Q once more, which returns Q to zero exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

from .circuit import Circuit, CircuitError
from .gates import cswap_cascade_on, default_cutoff, iqft_on, mesh_on, qft_on, sort_on
from .line import Line, Name
from .phase import DyadicPhase


def clog2(n: int) -> int:
    return max(0, math.ceil(math.log2(n))) if n > 1 else 0


def default_l0(n: int) -> int:
    return min(n, math.ceil(3 * math.log2(max(n, 2))) + 2)


def default_t(n: int) -> int:
    return math.ceil(math.log2(max(n, 2))) + 2


@dataclass(frozen=True)
class XTable:
    n: int
    l0: int
    xs: tuple

    @classmethod
    def build(cls, a: int, m: int, n: int, l0: Optional[int] = None) -> "XTable":
        l0 = n if l0 is None else l0
        return cls(n, l0, tuple((a << i) % m for i in range(n)))

    @property
    def shift(self) -> int:
        return self.n - self.l0

    @property
    def hats(self) -> tuple:
        """Truncations keeping only the top ``l0`` bits, at full scale."""
        w = self.shift
        return tuple((x >> w) << w for x in self.xs)

    @property
    def window(self) -> tuple:
        """Truncations in units of 2**shift, as added into Q."""
        return tuple(x >> self.shift for x in self.xs)


@dataclass
class MultiplierParams:
    n: int
    a: int
    m: int
    z: int = 0
    l0: Optional[int] = None
    l: Optional[int] = None
    t: Optional[int] = None
    variant: str = "nn"
    exact_mode: bool = False

    def __post_init__(self) -> None:
        n, a, m = self.n, self.a, self.m
        if n < 2:
            raise CircuitError("n must be at least 2")
        if not 0 < a < m < (1 << n):
            raise CircuitError(f"need 0 < a < m < 2^n (a={a}, m={m}, n={n})")
        if math.gcd(a, m) != 1:
            raise CircuitError(f"gcd(a, m) = {math.gcd(a, m)} != 1")
        if self.exact_mode:
            self.l0 = n
        elif self.l0 is None:
            self.l0 = default_l0(n)
        if not 1 <= self.l0 <= n:
            raise CircuitError(f"l0 must lie in [1, n], got {self.l0}")
        if self.l is None:
            self.l = self.l0 + clog2(n)
        if self.l < self.l0 + clog2(n):
            raise CircuitError(f"l = {self.l} < l0 + ceil(log2 n) = {self.l0 + clog2(n)}")
        if self.t is None:
            self.t = default_t(n)
        if self.z < 0 or (self.z and self.z * (1 << self.t) >= m):
            raise CircuitError(f"z = {self.z} violates z < m / 2^t (t={self.t})")
        if self.variant not in ("nn", "general", "classical"):
            raise CircuitError(f"unknown variant {self.variant!r}")

    @property
    def a_inv(self) -> int:
        return pow(self.a, -1, self.m)

    @property
    def qbits(self) -> int:
        """Number of quotient bits peeled by the restoring division."""
        return self.l - self.l0


def precompute_constants(g: int, m: int, n: int, l0: Optional[int] = None) -> List[dict]:
    """Per-round multipliers a_i = g^(2^i) mod m and inverses, i in [0, 2n)."""
    if math.gcd(g, m) != 1:
        raise CircuitError(f"gcd(g, m) = {math.gcd(g, m)} != 1")
    if not 1 < m < (1 << n):
        raise CircuitError("need 1 < m < 2^n")
    out = []
    a = g % m
    for i in range(2 * n):
        inv = pow(a, -1, m)
        out.append({"i": i, "a": a, "a_inv": inv,
                    "x": XTable.build(a, m, n, l0), "x_inv": XTable.build(inv, m, n, l0)})
        a = a * a % m
    return out


def turns(num: int, j: int) -> DyadicPhase:
    """Rotation for Fourier qubit phi_j when adding ``num``: num / 2^(j+1)."""
    return DyadicPhase.turns(num, j + 1)


# ------------------------------------------------------------ nested adder

def nested_adder_on(line: Line, Y: Sequence[Name], Z: Sequence[Name], xs: Sequence[int],
                    z_const: Optional[int] = None, swaps: bool = True,
                    cutoff: Optional[int] = None) -> None:
    """Z += sum_i Y[i] * xs[i] (mod 2^n); Y crosses Z and comes back.

    ``z_const`` set means Z is known to hold |0> and is loaded with that
    constant by one layer of single-qubit gates instead of a transform.
    In the general form Z[j] holds bit j with bit n-1 next to Y; in the
    constant form Z[j] holds phi_j with phi_0 next to Y.
    """
    if z_const is None:
        qft_on(line, Z, swaps, cutoff)
    else:
        for j, q in enumerate(Z):
            line.h(q)
            line.rz(q, turns(z_const, j))
    zi = {q: j for j, q in enumerate(Z)}
    d = 1 if line.pos[Z[0]] > line.pos[Y[0]] else -1
    for y in sorted(Y, key=lambda q: -d * line.pos[q]):
        x = xs[Y.index(y)]
        ahead = sorted(Z, key=lambda q: d * line.pos[q])
        if swaps:
            line.move_past(y, ahead, lambda q: turns(x, zi[q]))
        else:
            for q in ahead:
                line.cphase(y, q, turns(x, zi[q]))
    iqft_on(line, Z, swaps, cutoff)
    if swaps:
        for y in sorted(Y, key=lambda q: d * line.pos[q]):
            line.move_past(y, sorted(Z, key=lambda q: -d * line.pos[q]))


def build_nested_controlled_adder(xs: XTable | Sequence[int], n: int,
                                  z_constant_mode: bool = False, z: int = 0) -> Circuit:
    """Y (controls, Y[i] on wire i) above Z.

    General mode: Z input bit j on wire 2n-1-j.  Constant mode: Z starts at
    |0> and is loaded with ``z``.  Output ``layout_out['Z'][j]`` holds bit j.
    """
    if n < 2:
        raise CircuitError("nested adder needs n >= 2")
    vals = list(xs.xs if isinstance(xs, XTable) else xs)
    Y = [("Y", i) for i in range(n)]
    Z = [("Z", j) for j in range(n)]
    order = Z if z_constant_mode else Z[::-1]
    line = Line(Y + order)
    line.mark_input(["Y", "Z"])
    nested_adder_on(line, Y, Z, vals, z if z_constant_mode else None)
    return line.circuit(["Y", "Z"])


# ------------------------------------------------------------ quotient machinery

def _along(line: Line, names: Sequence[Name], d: int) -> List[Name]:
    return sorted(names, key=lambda q: d * line.pos[q])


def quotient_step_on(line: Line, Q: Sequence[Name], A: int, D: int, d: int) -> Name:
    """One restoring-division step on the Fourier qubits Q[:A] (phi_0 at the front).

    Subtracts D, transforms back, peels the sign bit, transforms the rest and
    walks the sign bit out through them, re-adding D when it is set.  The
    returned sign bit is 1 exactly when the quotient bit is 0.
    """
    act = list(Q[:A])
    for j, q in enumerate(act):
        line.rz(q, turns(-D, j))
    iqft_on(line, act)
    f = act[-1]
    rest = act[:-1]
    qft_on(line, rest)
    idx = {q: j for j, q in enumerate(rest)}
    line.move_past(f, _along(line, rest, d), lambda q: turns(D, idx[q]))
    return f


def unquotient_step_on(line: Line, Q: Sequence[Name], A: int, D: int, d: int) -> None:
    """Adjoint of :func:`quotient_step_on`, with the sign bit arriving from behind."""
    act = list(Q[:A])
    f = act[-1]
    rest = act[:-1]
    idx = {q: j for j, q in enumerate(rest)}
    line.move_past(f, _along(line, rest, -d), lambda q: turns(-D, idx[q]))
    iqft_on(line, rest)
    qft_on(line, act)
    for j, q in enumerate(act):
        line.rz(q, turns(D, j))


def divisor(m: int, shift: int) -> int:
    """Smallest integer threshold not below m / 2^shift."""
    return -((-m) >> shift)


@dataclass
class HalfSpec:
    xs: XTable
    m: int
    z: int
    L: int          # quotient bits
    swaps: bool = True
    cutoff: Optional[int] = None
    marks: Optional[list] = None

    def mark(self, line: Line, name: str) -> None:
        if self.marks is not None:
            self.marks.append((name, len(line.gates)))


def half_on(line: Line, C: Sequence[Name], Q: Sequence[Name], T: Sequence[Name],
            spec: HalfSpec) -> None:
    """T += sum_i C[i] x_i - qhat*m (mod 2^n), leaving Q at zero.

    Layout on entry, in the direction of travel: C, then Q, then T, with
    Q[0] and T[0] on the side facing C.  T and Q hold zeros.  On exit the
    order is T, C, Q and T[j] holds bit j with bit n-1 facing C's old side.
    """
    xs, m, L = spec.xs, spec.m, spec.L
    n, l0, w = xs.n, xs.l0, xs.shift
    if len(Q) != l0 + L or len(T) != n or len(C) != n:
        raise CircuitError("register sizes do not match the HalfSpec tables")
    d = 1 if line.pos[Q[0]] > line.pos[C[0]] else -1
    D1 = divisor(m, w)
    zhi = spec.z >> w
    win = xs.window
    qi = {q: j for j, q in enumerate(Q)}
    ti = {q: j for j, q in enumerate(T)}
    # Z is loaded with z, later unloaded; only the net constant -(2^L - 1) m remains
    for j, q in enumerate(T):
        line.h(q)
        line.rz(q, turns(-((1 << L) - 1) * m, j))
    for j, q in enumerate(Q):
        line.h(q)
        line.rz(q, turns(zhi, j))
    for c in sorted(C, key=lambda q: -d * line.pos[q]):
        i = C.index(c)
        line.move_past(c, _along(line, Q, d), lambda q: turns(win[i], qi[q]))
        line.move_past(c, _along(line, T, d), lambda q: turns(xs.xs[i], ti[q]))
    spec.mark(line, "cross")
    for k in range(L, 0, -1):
        f = quotient_step_on(line, Q, l0 + k, D1 << (k - 1), d)
        line.move_past(f, _along(line, T, d), lambda q: turns(m << (k - 1), ti[q]))
    spec.mark(line, "qloop")
    iqft_on(line, T)
    spec.mark(line, "iqft_T")
    for q in sorted(Q[:l0], key=lambda q: -d * line.pos[q]):
        line.move_past(q, _along(line, T, d))
    spec.mark(line, "q_through_T")
    for k in range(1, L + 1):
        unquotient_step_on(line, Q, l0 + k, D1 << (k - 1), d)
    spec.mark(line, "unloop")
    for c in sorted(C, key=lambda q: d * line.pos[q]):
        i = C.index(c)
        line.move_past(c, _along(line, Q, -d), lambda q: turns(-win[i], qi[q]))
    spec.mark(line, "cross_back")
    for j, q in enumerate(Q):
        line.rz(q, turns(-zhi, j))
        line.h(q)
    spec.mark(line, "unload")


def emit_inverse(line: Line, start: Sequence[Name], build: Callable[[Line], None]) -> None:
    """Append the adjoint of ``build`` run from arrangement ``start``.

    ``build`` must leave the probe in the line's current arrangement; the
    line then ends in ``start``.
    """
    probe = Line(list(start), nn=line.nn)
    build(probe)
    if probe.at != line.at:
        raise CircuitError("inverse block does not end in the current arrangement")
    line.gates.extend(g.adjoint() for g in reversed(probe.gates))
    line.at = list(start)
    line.pos = {q: i for i, q in enumerate(start)}


def half_start(line: Line, C: Sequence[Name], Q: Sequence[Name], T: Sequence[Name],
               d: int) -> List[Name]:
    """Arrangement from which :func:`half_on` (direction d) ends where the line is now.

    C keeps its order and T comes out reversed, so T starts in the reverse of
    its current order.
    """
    block = list(C) + list(Q) + list(T)
    span = sorted(line.pos[q] for q in block)
    if span[-1] - span[0] + 1 != len(block):
        raise CircuitError("half registers are not contiguous")
    seq = _along(line, C, d) + list(Q) + _along(line, T, d)[::-1]
    slots = span if d == 1 else span[::-1]
    start = list(line.at)
    for p, q in zip(slots, seq):
        start[p] = q
    return start


def build_quotient_estimator(p: MultiplierParams) -> Circuit:
    """Controls Y above Q; outputs qhat bits (``layout_out['qhat'][k-1]`` is bit k-1).

    Q is loaded with the high bits of z, the controls cross it, and the
    restoring division runs.  The remainder stays in Q (Fourier basis).
    """
    xs = XTable.build(p.a, p.m, p.n, p.l0)
    L = p.qbits
    Y = [("Y", i) for i in range(p.n)]
    Q = [("Q", j) for j in range(p.l)]
    line = Line(Y + Q)
    line.mark_input(["Y"])
    D1 = divisor(p.m, xs.shift)
    zhi = p.z >> xs.shift
    qi = {q: j for j, q in enumerate(Q)}
    for j, q in enumerate(Q):
        line.h(q)
        line.rz(q, turns(zhi, j))
    for y in sorted(Y, key=lambda q: -line.pos[q]):
        i = Y.index(y)
        line.move_past(y, _along(line, Q, 1), lambda q: turns(xs.window[i], qi[q]))
    for k in range(L, 0, -1):
        f = quotient_step_on(line, Q, p.l0 + k, D1 << (k - 1), 1)
        line.x(f)
        line.rename(f, ("qhat", k - 1))
    return line.circuit(["Y", "qhat"])


def build_quotient_loop(l0: int, L: int, D1: int = 1) -> Circuit:
    """The division loop alone on an (l0+L)-qubit Fourier register, for depth checks."""
    Q = [("Q", j) for j in range(l0 + L)]
    line = Line(Q)
    for k in range(L, 0, -1):
        quotient_step_on(line, Q, l0 + k, D1 << (k - 1), 1)
    return line.circuit()


def build_modular_repeated_adder(p: MultiplierParams) -> Circuit:
    """Y (controls) above Q above a zeroed Z; Z ends holding sum_i y_i x_i - qhat*m mod 2^n.

    In exact mode that is ``a*y mod m``.  Final order: Z, Y, Q.
    """
    xs = XTable.build(p.a, p.m, p.n, p.l0)
    Y = [("Y", i) for i in range(p.n)]
    Q = [("Q", j) for j in range(p.l)]
    Z = [("Z", j) for j in range(p.n)]
    line = Line(Y + Q + Z)
    line.mark_input(["Y", "Q", "Z"])
    half_on(line, Y, Q, Z, HalfSpec(xs, p.m, p.z, p.qbits))
    return line.circuit()


# ------------------------------------------------------------ controlled multiplier

@dataclass
class MulRegs:
    """Registers of one in-place multiplication, by role.

    ``pairs[i]`` is (B_i, Y_i); B holds the data and Y is zero.  QY, QZ and Z
    are zero registers whose internal bit order is assigned from the layout.
    """
    c: Name
    pairs: List[tuple]
    QY: List[Name]
    QZ: List[Name]
    Z: List[Name]

    def next_round(self, c_next: Name, final_pairs: List[tuple]) -> "MulRegs":
        """Roles for the following (mirrored) multiplication."""
        Y = [y for _, y in self.pairs]
        return MulRegs(c_next, final_pairs, list(self.QZ), list(self.QY), Y)


def _beyond(line: Line, q: Name, stop: Name, skip: set) -> List[Name]:
    return [o for o in line.run_between(q, stop) if o not in skip]


def modmul_on(line: Line, regs: MulRegs, p: MultiplierParams, a: Optional[int] = None,
              z: Optional[int] = None, marks: Optional[list] = None,
              on_free: Optional[Callable[[Line, List[Name]], List[Name]]] = None) -> List[tuple]:
    """B *= a (mod m) when c = 1, in place.  Returns the final (B_i, Z_i) pairs.

    Along the direction u in which c first moves, the layout on entry is
    Z, QZ, c, the B/Y pairs (B on the u side of each pair), any riders, QY.
    On exit it is QZ, c, the B/Z pairs (B on the -u side), riders, QY, Y.
    ``marks`` collects (phase name, gate count) after each phase.  Riders
    are carried along; ``on_free(line, riders)`` runs once QY has left them
    and returns the riders to carry from then on.
    """
    def mark(name: str) -> None:
        if marks is not None:
            marks.append((name, len(line.gates)))

    a = p.a if a is None else a
    z = p.z if z is None else z
    n, m, L = p.n, p.m, p.qbits
    xs = XTable.build(a, m, n, p.l0)
    xinv = XTable.build(pow(a, -1, m), m, n, p.l0)
    c = regs.c
    B = [b for b, _ in regs.pairs]
    Y = [y for _, y in regs.pairs]
    u = 1 if line.pos[B[0]] > line.pos[c] else -1
    qy_near = _along(line, regs.QY, u)[0]
    pair_far = _along(line, B + Y, u)[-1]
    riders = line.run_between(pair_far, qy_near)

    # controlled swap of B into the zero register Y
    order = sorted(regs.pairs, key=lambda pr: abs(line.pos[pr[0]] - line.pos[c]))
    cswap_cascade_on(line, c, order)

    mark("cascade")
    # unmesh: Y block then B block along u
    yb, bb = _along(line, Y, u), _along(line, B, u)
    region = sorted((line.pos[q] for q in Y + B), key=lambda x: u * x)
    start = list(line.at)
    for slot, q in zip(region, yb + bb):
        start[slot] = q
    emit_inverse(line, start, lambda pr: mesh_on(pr, yb, bb))

    mark("unmesh")
    # blue: Z += a*Y, erasing nothing
    bseq = [B.index(b) for b in _along(line, B, u)]
    zs = _along(line, regs.Z, u)
    Zr: List[Name] = [None] * n
    for j, q in enumerate(zs):
        Zr[bseq[n - 1 - j]] = q
    QZr = _along(line, regs.QZ, -u)
    half_on(line, Y, QZr, Zr, HalfSpec(xs, m, z, L))

    mark("blue")
    # QY walks down next to Z
    zfar = _along(line, Zr, u)[-1]
    qy = set(regs.QY)
    for q in _along(line, regs.QY, u):
        line.move_past(q, _beyond(line, q, zfar, qy))

    if on_free is not None:
        riders = on_free(line, riders)
    mark("qy_walk")
    # red: undo (Y -> Y + a^-1 Z) to clear Y
    QYr = _along(line, regs.QY, u)
    spec_inv = HalfSpec(xinv, m, z, L)
    start = half_start(line, Zr, QYr, Y, u)
    emit_inverse(line, start, lambda pr: half_on(pr, Zr, QYr, Y, spec_inv))

    mark("red")
    # Y then QY return past B, c and riders
    passers = set(riders) | set(B) | {c}
    for reg in (Y, regs.QY):
        for q in _along(line, reg, -u):
            line.move_past(q, _run(line, q, u, passers))
    mark("return_walk")
    final = _finish(line, regs, B, Zr, u)
    mark("finish")
    return final


def _run(line: Line, q: Name, step: int, members: set) -> List[Name]:
    """Consecutive members of ``members`` next to q in direction ``step``."""
    out = []
    p = line.pos[q] + step
    while 0 <= p < line.width and line.at[p] in members:
        out.append(line.at[p])
        p += step
    return out


def _finish(line: Line, regs: MulRegs, B: List[Name], Zr: List[Name], u: int) -> List[tuple]:
    """Interleave B with Z (B on the -u side) and swap back into B when c = 1."""
    c = regs.c
    target = []
    for b in _along(line, B, u):
        target += [b, Zr[B.index(b)]]
    if u == -1:
        target = target[::-1]
    sort_on(line, target)
    final = [(B[i], Zr[i]) for i in range(len(B))]
    # F^-1: the inverse of the cascade that would carry c in from the -u side
    far = min(line.pos[q] for q in target) if u == 1 else max(line.pos[q] for q in target)
    start = list(line.at)
    start.remove(c)
    start.insert(far, c)

    def fwd(pr: Line) -> None:
        order = sorted(final, key=lambda t: abs(pr.pos[t[0]] - pr.pos[c]))
        cswap_cascade_on(pr, c, order)

    emit_inverse(line, start, fwd)
    return final


def multiplier_layout(n: int, l: int) -> Tuple[List[Name], MulRegs]:
    """Initial wire order Q_Y, interleaved B/Y, c, Q_Z, Z (c moves up first)."""
    QY = [("QY", j) for j in range(l)]
    QZ = [("QZ", j) for j in range(l)]
    Z = [("Z", j) for j in range(n)]
    pairs = [(("B", i), ("Y", i)) for i in range(n)]
    inter = [q for pr in pairs for q in pr]
    return QY + inter + ["c"] + QZ + Z, MulRegs("c", pairs, QY, QZ, Z)


def build_controlled_modmul(p: MultiplierParams) -> Circuit:
    """In-place B <- a*B mod m controlled by c; width 3n + 2l + 1.

    ``layout_out`` gives B, c and the ancilla registers (all zero on exit).
    """
    if p.variant == "general":
        return build_general_modmul(p)
    if p.variant == "classical":
        from .classical import build_classical_modmul
        return build_classical_modmul(p)
    names, regs = multiplier_layout(p.n, p.l)
    line = Line(names)
    line.mark_input(["B", "c", "Y", "QY", "QZ", "Z"])
    modmul_on(line, regs, p)
    return line.circuit()


# ------------------------------------------------------------ general architecture

def _latin_cross(line: Line, C: Sequence[Name], targets: Sequence[Name],
                 phase_of: Callable[[int, int], DyadicPhase]) -> None:
    """Every control rotates every target; round r pairs C[i] with targets[(i + r) % T]."""
    T = len(targets)
    for r in range(max(T, len(C))):
        for i, c in enumerate(C):
            j = (i + r) % T
            if r < T:
                line.cphase(c, targets[j], phase_of(i, j))


def _fan_swap(line: Line, c: Name, copies: Sequence[Name], pairs: Sequence[tuple],
              inverse: bool = False) -> None:
    """Controlled swap of X into a zeroed partner using fanned-out copies of c.

    ``pairs[i]`` is (X_i, Y_i); ``copies`` must be zero and are restored.
    With ``inverse`` the swap runs backwards (X ^= Y, then Y ^= c X).
    """
    from .gates import fanin_on, fanout_on
    fanout_on(line, c, copies)
    for (x, y), k in zip(pairs, copies):
        if inverse:
            line.xptha(x, y)
            line.cnot(k, y)
            line.pthb(x, y)
        else:
            line.ptha(x, y)
            line.cnot(k, y)
            line.pthbx(x, y)
    fanin_on(line, c, copies)


def half_general_on(line: Line, C: Sequence[Name], Q: Sequence[Name], T: Sequence[Name],
                    spec: HalfSpec) -> None:
    """:func:`half_on` for the all-to-all model: no movement, plain controlled phases."""
    xs, m, L = spec.xs, spec.m, spec.L
    l0, w = xs.l0, xs.shift
    D1 = divisor(m, w)
    zhi = spec.z >> w
    win = xs.window
    for j, q in enumerate(T):
        line.h(q)
        line.rz(q, turns(-((1 << L) - 1) * m, j))
    for j, q in enumerate(Q):
        line.h(q)
        line.rz(q, turns(zhi, j))
    targets = list(Q) + list(T)
    lq = len(Q)

    def add(i: int, j: int) -> DyadicPhase:
        return turns(win[i], j) if j < lq else turns(xs.xs[i], j - lq)

    _latin_cross(line, C, targets, add)
    spec.mark(line, "cross")
    for k in range(L, 0, -1):
        A = l0 + k
        D = D1 << (k - 1)
        act = list(Q[:A])
        for j, q in enumerate(act):
            line.rz(q, turns(-D, j))
        iqft_on(line, act, False, spec.cutoff)
        f, rest = act[-1], act[:-1]
        qft_on(line, rest, False, spec.cutoff)
        for j, q in enumerate(rest):
            line.cphase(f, q, turns(D, j))
        for j, q in enumerate(T):
            line.cphase(f, q, turns(m << (k - 1), j))
    spec.mark(line, "qloop")
    iqft_on(line, T, False, spec.cutoff)
    spec.mark(line, "iqft_T")
    for k in range(1, L + 1):
        A = l0 + k
        D = D1 << (k - 1)
        act = list(Q[:A])
        f, rest = act[-1], act[:-1]
        for j, q in enumerate(rest):
            line.cphase(f, q, turns(-D, j))
        iqft_on(line, rest, False, spec.cutoff)
        qft_on(line, act, False, spec.cutoff)
        for j, q in enumerate(act):
            line.rz(q, turns(D, j))
    spec.mark(line, "unloop")
    _latin_cross(line, C, list(Q), lambda i, j: turns(-win[i], j))
    for j, q in enumerate(Q):
        line.rz(q, turns(-zhi, j))
        line.h(q)
    spec.mark(line, "unload")


def general_modmul_on(line: Line, regs: MulRegs, p: MultiplierParams,
                      a: Optional[int] = None, z: Optional[int] = None) -> List[tuple]:
    """All-to-all controlled multiplier: fanout swaps, no mesh, approximate transforms.

    Quotient-register transforms stay exact so Q is cleared exactly; the
    target transform uses the approximation cutoff.
    """
    a = p.a if a is None else a
    z = p.z if z is None else z
    n, m, L = p.n, p.m, p.qbits
    cut = None if p.exact_mode else default_cutoff(n)
    xs = XTable.build(a, m, n, p.l0)
    xinv = XTable.build(pow(a, -1, m), m, n, p.l0)
    B = [b for b, _ in regs.pairs]
    Y = [y for _, y in regs.pairs]
    Zr = list(regs.Z)
    _fan_swap(line, regs.c, Zr, regs.pairs)
    half_general_on(line, Y, list(regs.QZ), Zr, HalfSpec(xs, m, z, L, False, cut))
    start = list(line.at)
    emit_inverse(line, start, lambda pr: half_general_on(
        pr, Zr, list(regs.QY), Y, HalfSpec(xinv, m, z, L, False, cut)))
    final = [(B[i], Zr[i]) for i in range(n)]
    _fan_swap(line, regs.c, Y, final, inverse=True)
    return final


def build_general_modmul(p: MultiplierParams) -> Circuit:
    names, regs = multiplier_layout(p.n, p.l)
    line = Line(names, nn=False)
    line.mark_input(["B", "c", "Y", "QY", "QZ", "Z"])
    general_modmul_on(line, regs, p)
    return line.circuit()


# ------------------------------------------------------------ exponentiation

CONTROL_MODES = ("measured-recycled", "preallocated")


@dataclass
class ExponentiationParams:
    """Controlled-multiplication sequence computing g^e mod m into B.

    ``exponent`` set prepares every control as a basis state (bit i of e
    controls the multiplication by g^(2^i)); left as None, controls start in
    |+> and are read out with semiclassical Fourier corrections, highest
    power first.
    """
    g: int
    m: int
    n: int
    control_mode: str = "measured-recycled"
    exponent: Optional[int] = None
    exact_mode: bool = False
    l0: Optional[int] = None
    z: int = 0
    variant: str = "nn"
    rounds: Optional[int] = None

    def __post_init__(self) -> None:
        if self.control_mode not in CONTROL_MODES:
            raise CircuitError(f"unknown control mode {self.control_mode!r}")
        if math.gcd(self.g, self.m) != 1:
            raise CircuitError(f"gcd(g, m) = {math.gcd(self.g, self.m)} != 1")
        if self.rounds is None:
            self.rounds = 2 * self.n
        if not 1 <= self.rounds <= 2 * self.n:
            raise CircuitError("rounds must lie in [1, 2n]")
        if self.exponent is not None and not 0 <= self.exponent < (1 << (2 * self.n)):
            raise CircuitError("exponent must fit in 2n bits")

    def multiplier(self, a: int) -> MultiplierParams:
        return MultiplierParams(self.n, a, self.m, self.z, self.l0, variant=self.variant,
                                exact_mode=self.exact_mode)

    @property
    def semiclassical(self) -> bool:
        return self.exponent is None

    def power_index(self, r: int) -> int:
        """Which a_i round r multiplies by."""
        return 2 * self.n - 1 - r if self.semiclassical else r


@dataclass
class RoundInfo:
    index: int
    power: int
    a: int
    a_inv: int
    orientation: int
    control: Name
    measured_bit: Optional[str]
    gates: Tuple[int, int]
    predicted_depth: float


@dataclass
class Exponentiation:
    params: ExponentiationParams
    circuit: Circuit
    rounds: List[RoundInfo]

    def manifest(self) -> dict:
        p = self.params
        return {
            "g": p.g, "m": p.m, "n": p.n, "control_mode": p.control_mode,
            "variant": p.variant, "width": self.circuit.width,
            "rounds": [{"index": r.index, "power": r.power, "a": r.a, "a_inv": r.a_inv,
                        "orientation": r.orientation, "control": str(r.control),
                        "measured_bit": r.measured_bit, "gates": list(r.gates),
                        "predicted_depth": r.predicted_depth} for r in self.rounds],
        }

    def manifest_json(self) -> str:
        import json
        return json.dumps(self.manifest(), indent=2, sort_keys=True)


def predicted_round_depth(n: int, l: int) -> float:
    lg = math.log2(n)
    return 9 * n + 6 * (2 * l - lg) * lg


def _control_name(p: ExponentiationParams, r: int) -> Name:
    if p.control_mode == "preallocated":
        return ("e", r)
    return ("ctl", r % 2)


def _prepare_control(line: Line, p: ExponentiationParams, q: Name, r: int) -> None:
    if p.semiclassical:
        line.h(q)
    elif (p.exponent >> p.power_index(r)) & 1:
        line.x(q)


def _read_control(line: Line, p: ExponentiationParams, q: Name, r: int, recycle: bool) -> str:
    """Semiclassical correction, readout and (optionally) reset of round r's control."""
    bit = f"e{p.power_index(r)}"
    if p.semiclassical:
        for prev in range(r):
            dist = r - prev
            line.crz(q, DyadicPhase.turns(-1, dist + 1), f"e{p.power_index(prev)}")
        line.h(q)
    line.measure(q, bit)
    if recycle:
        line.h(q)
        line.crz(q, DyadicPhase.turns(1, 1), bit)
        line.h(q)
    return bit


def build_exponentiation(p: ExponentiationParams) -> Exponentiation:
    """2n controlled multiplications of B (starting at 1), alternately mirrored.

    Recycled mode has width 3n + 2l + 2: the control of round r+1 waits next to
    the B/Z pairs while round r finishes, and the control of round r is
    measured and reset for round r+2.  Preallocated mode keeps every control
    on its own wire, stored in two stacks at the ends of the line.
    """
    general = p.variant == "general"
    n = p.n
    if p.m < 3 or p.m >= (1 << n):
        raise CircuitError("need 2 < m < 2^n")
    l0 = n if p.exact_mode else (default_l0(n) if p.l0 is None else p.l0)
    l = l0 + clog2(n)
    names, regs = multiplier_layout(n, l)
    pre = p.control_mode == "preallocated"
    R = p.rounds
    first = _control_name(p, 0)
    names = [first if q == "c" else q for q in names]
    riders = [_control_name(p, 1)] if R > 1 else []
    if pre:
        top = [("e", r) for r in range(3, R, 2)][::-1]
        bottom = [("e", r) for r in range(2, R, 2)]
        names = top + names[:l] + riders + names[l:] + bottom
    else:
        names = names[:l] + [("ctl", 1)] + names[l:]
    regs.c = first
    line = Line(names, nn=not general)
    line.mark_input(["B"])
    line.x(("B", 0))
    _prepare_control(line, p, regs.c, 0)
    if R > 1:
        _prepare_control(line, p, _control_name(p, 1), 1)
    if pre:
        for r in range(2, R):
            _prepare_control(line, p, ("e", r), r)
    stack = set(("e", r) for r in range(2, R)) if pre else set()
    info: List[RoundInfo] = []
    for r in range(R):
        k = p.power_index(r)
        a = pow(p.g, 1 << k, p.m)
        mp = p.multiplier(a)
        c = regs.c
        orient = 0 if general else (1 if line.pos[regs.pairs[0][0]] > line.pos[c] else -1)
        g0 = len(line.gates)

        def swap_in(ln: Line, riders: List[Name], r=r) -> List[Name]:
            if not pre or r == 0 or not riders:
                return riders
            used = riders[0]
            for st in (1, -1):
                nb = ln.neighbor(used, st)
                if nb in stack:
                    stack.discard(nb)
                    ln.swap(used, nb)
                    ln.move_past(used, _run(ln, used, st, stack))
                    return [nb]
            return riders

        if general:
            final = general_modmul_on(line, regs, mp)
        else:
            final = modmul_on(line, regs, mp, on_free=swap_in)
        bit = _read_control(line, p, c, r, recycle=not pre and r + 2 < R)
        if not pre and r + 2 < R:
            _prepare_control(line, p, c, r + 2)
        info.append(RoundInfo(r, k, a, pow(a, -1, p.m), orient, c, bit,
                              (g0, len(line.gates)), predicted_round_depth(n, l)))
        if r + 1 < R:
            regs = regs.next_round(_control_name(p, r + 1), final)
    regs_out = ["B", "Y", "Z", "QY", "QZ"]
    return Exponentiation(p, line.circuit(regs_out), info)


def build_general_exponentiation(p: ExponentiationParams) -> Exponentiation:
    if p.variant != "general":
        p = ExponentiationParams(p.g, p.m, p.n, p.control_mode, p.exponent, p.exact_mode,
                                 p.l0, p.z, "general", p.rounds)
    return build_exponentiation(p)

"""Reversible classical variant: block-split nested addition with carry prediction.

Every t-bit block of the accumulator is laid out as a ripple unit

    s, b_0, a_0, b_1, a_1, ..., b_{t-1}, a_{t-1}[, h]

where ``b`` holds the block value, ``a`` is a zeroed addend register that a
passing control loads with ``y * X``, ``s`` is the carry-in scratch and ``h``
records the predicted high bit for the next block.  The ripple stores each
carry in the addend wire of the bit that produced it and puts it back on the
way down.  Its Toffolis are pseudo-Toffolis whose stray phases cancel
because the backward pass retraces the forward one.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .circuit import Circuit, CircuitError, GENERAL, compute_depth
from .line import Line, Name


# ------------------------------------------------------------ ripple

def _step(line: Line, x: Name, b: Name, a: Name) -> None:
    # in: x = c, b = a^b, a; out: x = a^c, b = a^b, a = maj(a, b, c)
    line.swap(b, a)
    line.cnot(a, x)
    line.ptha(x, a)
    line.cnot(b, a)
    line.pthb(x, a)
    line.swap(a, b)


def _unstep(line: Line, x: Name, b: Name, a: Name) -> None:
    line.swap(b, a)
    line.ptha(x, a)
    line.cnot(b, a)
    line.pthb(x, a)
    line.cnot(a, x)
    line.swap(a, b)


def _carries(s: Name, A: Sequence[Name]) -> List[Name]:
    return [s] + list(A[:-1])


def ripple_forward(line: Line, s: Name, B: Sequence[Name], A: Sequence[Name]) -> None:
    """Leave the carry out of bit i in ``A[i]``; the last one is the block carry."""
    for x, b, a in zip(_carries(s, A), B, A):
        line.cnot(a, b)
        _step(line, x, b, a)


def ripple_unwind(line: Line, s: Name, B: Sequence[Name], A: Sequence[Name],
                  add: bool) -> None:
    """Undo :func:`ripple_forward`; with ``add`` each b ends as its sum bit."""
    for x, b, a in reversed(list(zip(_carries(s, A), B, A))):
        _unstep(line, x, b, a)
        line.cnot(x if add else a, b)


def _copy(line: Line, src: Name, dst: Name, negate: bool = False) -> None:
    # dst ^= src (or its complement); a resting control may sit between them
    between = line.run_between(src, dst)
    if len(between) > 1:
        raise CircuitError(f"{src!r} and {dst!r} are too far apart")
    if between:
        line.swap(between[0], dst)
    line.cnot(src, dst)
    if negate:
        line.x(dst)
    if between:
        line.swap(dst, between[0])


def ripple_add_on(line: Line, s: Name, B: Sequence[Name], A: Sequence[Name],
                  cout: Optional[Name] = None) -> None:
    """B += A + s (mod 2^len(B)), optionally XOR-ing the carry out into ``cout``."""
    ripple_forward(line, s, B, A)
    if cout is not None:
        _copy(line, A[-1], cout)
    ripple_unwind(line, s, B, A, add=True)


def carry_on(line: Line, s: Name, B: Sequence[Name], A: Sequence[Name], target: Name,
             negate: bool = False) -> None:
    """target ^= carry(B + A + s), with B left unchanged."""
    ripple_forward(line, s, B, A)
    _copy(line, A[-1], target, negate)
    ripple_unwind(line, s, B, A, add=False)


def _cross(line: Line, y: Name, path: Sequence[Name], loads: Dict[Name, int]) -> None:
    # walk y over path, XOR-ing itself into the addend wires it passes
    for q in path:
        if loads.get(q):
            line.fcxs(y, q)
        else:
            line.swap(y, q)


def _bits(v: int, names: Sequence[Name]) -> Dict[Name, int]:
    return {q: (v >> i) & 1 for i, q in enumerate(names)}


def build_ripple_add_const(t: int, constant: int, controlled: bool = False,
                           carry_in: bool = False, record_carry_out: bool = False) -> Circuit:
    """Z += constant (+ cin) on a t-bit block, all interactions nearest-neighbour.

    Wires, bottom up: [ctl], cin, Z_0, A_0, ..., Z_{t-1}, A_{t-1}, [cout].  The
    addend register A returns to zero; ``cin`` is restored.  When controlled,
    ``ctl`` crosses the block loading A and crosses back unloading it.
    """
    if t < 1:
        raise CircuitError("block size must be >= 1")
    constant %= 1 << t
    Z = [("Z", i) for i in range(t)]
    A = [("A", i) for i in range(t)]
    body: List[Name] = ["cin"]
    for z, a in zip(Z, A):
        body += [z, a]
    names = (["ctl"] if controlled else []) + body + (["cout"] if record_carry_out else [])
    line = Line(names)
    regs = ["Z", "cin"] + (["ctl"] if controlled else []) + (["cout"] if record_carry_out else [])
    line.mark_input(regs)
    loads = _bits(constant, A)
    if controlled:
        _cross(line, "ctl", body, loads)
    else:
        for a in A:
            if loads[a]:
                line.x(a)
    ripple_add_on(line, "cin", Z, A, "cout" if record_carry_out else None)
    if controlled:
        _cross(line, "ctl", body[::-1], loads)
    else:
        for a in A:
            if loads[a]:
                line.x(a)
    c = line.circuit(regs, classical=True)
    c.layout_in.pop("A", None)
    return c


def ripple_constant(t: int) -> float:
    """Measured depth per bit of one uncontrolled ripple addition (the constant C)."""
    return compute_depth(build_ripple_add_const(t, (1 << t) - 1)) / t


# ------------------------------------------------------------ blocks and rounds

@dataclass(frozen=True)
class BlockParams:
    n: int
    t: int
    xs: tuple = ()

    def __post_init__(self) -> None:
        if self.t < 1 or self.n < 1:
            raise CircuitError("need n >= 1 and t >= 1")
        object.__setattr__(self, "xs", tuple(int(x) % (1 << self.n) for x in self.xs))

    @property
    def k(self) -> int:
        return -(-self.n // self.t)

    def size(self, j: int) -> int:
        return min(self.t, self.n - j * self.t)

    def offset(self, j: int) -> int:
        return j * self.t

    def slice(self, x: int, j: int) -> int:
        return (x >> self.offset(j)) & ((1 << self.size(j)) - 1)

    def slices(self, i: int) -> List[int]:
        return [self.slice(self.xs[i], j) for j in range(self.k)]

    def recompose(self, parts: Sequence[int]) -> int:
        return sum(p << self.offset(j) for j, p in enumerate(parts))


@dataclass(frozen=True)
class RoundPlan:
    r: int
    terms: Tuple[Tuple[int, int], ...]   # (block j, control index i = r - j)

    def addend(self, bp: BlockParams, ys: Sequence[int]) -> int:
        return sum(ys[i] * bp.slice(bp.xs[i], j) << bp.offset(j) for j, i in self.terms)


def round_plans(bp: BlockParams) -> List[RoundPlan]:
    """Rounds r = 0 .. N+k-2; in round r control i = r-j meets block j."""
    N, k = len(bp.xs), bp.k
    return [RoundPlan(r, tuple((j, r - j) for j in range(k) if 0 <= r - j < N))
            for r in range(N + k - 1)]


def round_sum(bp: BlockParams, ys: Sequence[int]) -> int:
    return sum(p.addend(bp, ys) for p in round_plans(bp))


@dataclass
class BlockTrace:
    value: int
    predicted_wrong: int = 0     # block adds whose high bit guess missed a carry
    residue: int = 0             # erase comparisons that left a high bit set
    adds: int = 0
    leftover: int = 0            # high bits still set at the end
    discrepancy: int = 0         # erase outcomes that differ between the two comparisons


def nested_block_model(z: int, ys: Sequence[int], bp: BlockParams,
                       erase: str = "addend") -> BlockTrace:
    """Integer model of the block nested adder, gate-faithful including failures.

    ``erase="addend"`` clears h_j with [Z_j < addend_j] like the circuit;
    ``"addend_carry"`` compares against addend_j + carry_in_j instead.
    """
    if erase not in ("addend", "addend_carry"):
        raise ValueError(f"unknown erase mode {erase!r}")
    k = bp.k
    Z = [bp.slice(z, j) for j in range(k)]
    h = [0] * k
    tr = BlockTrace(0)
    for plan in round_plans(bp):
        act = {j: ys[i] * bp.slice(bp.xs[i], j) for j, i in plan.terms}
        for j, A in act.items():
            if j < k - 1:
                h[j] ^= int(Z[j] + A >= 1 << bp.size(j))
        # a block just above the leading edge still has to absorb the carry
        adding = dict(act)
        for j in act:
            if j + 1 < k:
                adding.setdefault(j + 1, 0)
        cin = {j: (h[j - 1] if j > 0 else 0) for j in adding}
        for j, A in sorted(adding.items()):
            tot = Z[j] + A + cin[j]
            tr.adds += 1
            if j < k - 1 and (tot >> bp.size(j)) != int(Z[j] + A >= 1 << bp.size(j)):
                tr.predicted_wrong += 1
            Z[j] = tot & ((1 << bp.size(j)) - 1)
        for j, A in act.items():
            if j == k - 1:
                continue
            plain = int(Z[j] < A)
            full = int(Z[j] < A + cin[j])
            tr.discrepancy += plain != full
            h[j] ^= plain if erase == "addend" else full
            tr.residue += h[j]
    tr.leftover = sum(h)
    tr.value = bp.recompose(Z)
    return tr

    
def _failed(tr: BlockTrace) -> bool:
    return bool(tr.predicted_wrong or tr.residue)


# ------------------------------------------------------------ nested block adder

@dataclass
class Block:
    s: Name
    b: List[Name]
    a: List[Name]
    h: Optional[Name]

    def body(self) -> List[Name]:
        out = [self.s]
        for b, a in zip(self.b, self.a):
            out += [b, a]
        return out

    def wires(self) -> List[Name]:
        return self.body() + ([self.h] if self.h is not None else [])


def make_blocks(reg: str, n: int, t: int) -> List[Block]:
    bp = BlockParams(n, t)
    out = []
    for j in range(bp.k):
        idx = range(bp.offset(j), bp.offset(j) + bp.size(j))
        out.append(Block((reg + "s", j), [(reg, i) for i in idx], [(reg + "a", i) for i in idx],
                         (reg + "h", j) if j < bp.k - 1 else None))
    return out


def block_nested_on(line: Line, controls: Sequence[Name], blocks: Sequence[Block],
                    consts: Sequence[int], t: int) -> None:
    """Z += sum_i controls[i] * consts[i] (mod 2^n) with carry prediction.

    ``controls`` sit in a stack right below ``blocks[0]`` with ``controls[0]``
    nearest; they finish stacked above the last block in the same order.
    Each round every active control crosses its block three times: up while
    loading the addend, down while unloading it, and up again to move on.
    """
    n = sum(len(b.b) for b in blocks)
    bp = BlockParams(n, t, tuple(consts))
    k = len(blocks)
    if bp.k != k:
        raise CircuitError("block list does not match n and t")
    for plan in round_plans(bp):
        act = [(j, controls[i], _bits(bp.slice(bp.xs[i], j), blocks[j].a)) for j, i in plan.terms]
        for j, y, loads in act:
            _cross(line, y, blocks[j].body(), loads)
        for j, y, _ in act:
            B = blocks[j]
            if B.h is not None:
                carry_on(line, B.s, B.b, B.a, B.h)
        adding = sorted({j for j, _, _ in act} | {j + 1 for j, _, _ in act if j + 1 < k})
        for j in adding:
            B = blocks[j]
            prev = blocks[j - 1].h if j > 0 else None
            if prev is not None:
                line.cnot(prev, B.s)
            ripple_add_on(line, B.s, B.b, B.a)
            if prev is not None:
                line.cnot(prev, B.s)
        for j, y, _ in act:
            B = blocks[j]
            if B.h is None:
                continue
            # h ^= [Z < A]: the carry of Z + ~A + 1 is [Z >= A]
            for q in B.a + [B.s]:
                line.x(q)
            carry_on(line, B.s, B.b, B.a, B.h, negate=True)
            for q in B.a + [B.s]:
                line.x(q)
        for j, y, loads in act:
            _cross(line, y, blocks[j].body()[::-1], loads)
        for j, y, _ in sorted(act, key=lambda e: -e[0]):
            _cross(line, y, blocks[j].wires(), {})


def build_block_nested_adder(xs: Sequence[int], n: int, t: int) -> Circuit:
    """Controls Y (Y_0 nearest) below the blocks of Z; Y ends above Z.

    ``layout_in/out['Z'][i]`` is bit i of the accumulator.  Scratch wires (addend
    registers, carry-in and high bits) start and, barring a prediction
    failure, end at zero.
    """
    if n < 1 or t < 1:
        raise CircuitError("need n >= 1 and t >= 1")
    xs = [int(x) % (1 << n) for x in xs]
    Y = [("Y", i) for i in range(len(xs))]
    blocks = make_blocks("Z", n, t)
    names = Y[::-1] + [q for B in blocks for q in B.wires()]
    line = Line(names)
    line.mark_input(["Y", "Z"])
    block_nested_on(line, Y, blocks, xs, t)
    c = line.circuit(["Y", "Z", "Za", "Zs", "Zh"], classical=True)
    return c


# ------------------------------------------------------------ multiplier

def _arrange(line: Line, names: Sequence[Name], slots: Sequence[int]) -> None:
    for q, p in zip(names, slots):
        if line.pos[q] != p:
            line.swap(q, line.at[p])


def _restore(line: Line, snapshot: Sequence[Name]) -> None:
    for p, q in enumerate(snapshot):
        if line.at[p] != q:
            line.swap(q, line.at[p])


@dataclass
class ClassicalRegs:
    c: Name
    B: List[Name]
    Qs: Name
    Q: List[Name]
    Qa: List[Name]
    Y: List[Block]
    Z: List[Block]

    def names(self) -> List[Name]:
        out: List[Name] = [self.c] + list(self.B) + [self.Qs]
        for q, a in zip(self.Q, self.Qa):
            out += [q, a]
        for B in self.Y + self.Z:
            out += B.wires()
        return out


def classical_layout(n: int, l: int, t: int, c: Name = "c") -> ClassicalRegs:
    return ClassicalRegs(c, [("B", i) for i in range(n)], "Qs", [("Q", j) for j in range(l)],
                         [("Qa", j) for j in range(l)], make_blocks("Y", n, t),
                         make_blocks("Z", n, t))


def _load(line: Line, src: Optional[Name], v: int, A: Sequence[Name]) -> None:
    for i, a in enumerate(A):
        if (v >> i) & 1:
            if src is None:
                line.x(a)
            else:
                line.cnot(src, a)


def _quotient_on(line: Line, regs: ClassicalRegs, C: Sequence[Name], xs, p) -> List[Name]:
    """Window sum into Q, then the restoring division; returns the sign bits (k = L..1)."""
    from .qarith import divisor
    Q, Qa, s = regs.Q, regs.Qa, regs.Qs
    l, l0, L = len(Q), xs.l0, p.qbits
    _load(line, None, (p.z >> xs.shift) % (1 << l), Q)
    for c, w in zip(C, xs.window):
        _load(line, c, w % (1 << l), Qa)
        ripple_add_on(line, s, Q, Qa)
        _load(line, c, w % (1 << l), Qa)
    D1 = divisor(p.m, xs.shift)
    signs = []
    for k in range(L, 0, -1):
        A, D = l0 + k, D1 << (k - 1)
        neg = (-D) % (1 << A)
        _load(line, None, neg, Qa[:A])
        ripple_add_on(line, s, Q[:A], Qa[:A])
        _load(line, None, neg, Qa[:A])
        f = Q[A - 1]
        back = D % (1 << (A - 1))
        _load(line, f, back, Qa[:A - 1])
        ripple_add_on(line, s, Q[:A - 1], Qa[:A - 1])
        _load(line, f, back, Qa[:A - 1])
        signs.append(f)
    return signs


def classical_half_on(line: Line, regs: ClassicalRegs, C: Sequence[Name], T: List[Block],
                      xs, p, t: int) -> None:
    """T += sum_i C[i] x_i - qhat*m (mod 2^n) into a zeroed block register T.

    The quotient register is filled, used as extra controls for T and then
    emptied by running its gates backwards.
    """
    n, m, L = p.n, p.m, p.qbits
    start = len(line.gates)
    signs = _quotient_on(line, regs, C, xs, p)
    q_gates = line.gates[start:]
    base = (-((1 << L) - 1) * m) % (1 << n)
    for B in T:
        for q in B.b:
            bit = int(q[1])
            if (base >> bit) & 1:
                line.x(q)
    controls = list(C) + signs
    consts = list(xs.xs) + [(m << (k - 1)) % (1 << n) for k in range(L, 0, -1)]
    snapshot = list(line.at)
    bottom = line.pos[T[0].s]
    if bottom < len(controls):
        raise CircuitError("not enough room below the target for the control stack")
    _arrange(line, controls, [bottom - 1 - i for i in range(len(controls))])
    block_nested_on(line, controls, T, consts, t)
    _restore(line, snapshot)
    line.gates.extend(g.adjoint() for g in reversed(q_gates))


def _cswap(line: Line, c: Name, src: Sequence[Name], dst: Sequence[Name]) -> None:
    # dst is zero whenever c is set: dst ^= c & src, then src ^= dst
    for x, y in zip(src, dst):
        line.ptha(c, y)
        line.cnot(x, y)
        line.pthb(c, y)
        line.cnot(y, x)


def classical_modmul_on(line: Line, regs: ClassicalRegs, p, t: int,
                        a: Optional[int] = None) -> None:
    """B <- a*B mod m when c is set; every other register returns to zero."""
    from .qarith import XTable
    a = p.a if a is None else a
    a_inv = pow(a, -1, p.m)
    Yb = [q for B in regs.Y for q in B.b]
    Zb = [q for B in regs.Z for q in B.b]
    _cswap(line, regs.c, regs.B, Yb)
    classical_half_on(line, regs, Yb, regs.Z, XTable.build(a, p.m, p.n, p.l0), p, t)
    probe = Line(list(line.at), nn=False)
    classical_half_on(probe, regs, Zb, regs.Y, XTable.build(a_inv, p.m, p.n, p.l0), p, t)
    line.gates.extend(g.adjoint() for g in reversed(probe.gates))
    # the adjoint exchange: B is the zero side when c is set, Z is zero otherwise
    probe = Line(list(line.at), nn=False)
    _cswap(probe, regs.c, regs.B, Zb)
    line.gates.extend(g.adjoint() for g in reversed(probe.gates))


def block_size(p, t: Optional[int] = None) -> int:
    return t if t is not None else p.t


def build_classical_modmul(p, t: Optional[int] = None) -> Circuit:
    """Controlled in-place modular multiplication from classical reversible gates.

    ``t`` is the block size of the accumulators (default ``p.t``).  Glue
    between registers uses long-range gates, so depth is measured under the
    general cost model.
    """
    t = block_size(p, t)
    regs = classical_layout(p.n, p.l, t)
    line = Line(regs.names(), nn=False)
    line.mark_input(["B", "c"])
    classical_modmul_on(line, regs, p, t)
    return line.circuit(["B", "c", "Q", "Qa", "Qs", "Y", "Ya", "Ys", "Yh", "Z", "Za", "Zs", "Zh"],
                        classical=True)


def build_classical_exponentiation(p, t: Optional[int] = None) -> Circuit:
    """B <- g^e mod m for a 2n-bit exponent register e (input), B starting at 1.

    With ``p.exponent`` set the exponent is loaded by X gates instead and
    ``e`` starts at zero.
    """
    from .qarith import precompute_constants
    mp = p.multiplier(p.g % p.m)
    t = block_size(mp, t)
    E = [("e", r) for r in range(2 * p.n)]
    regs = classical_layout(p.n, mp.l, t, c=E[0])
    names = E[::-1] + regs.names()[1:]
    line = Line(names, nn=False)
    line.mark_input(["e"])
    if p.exponent is not None:
        _load(line, None, p.exponent, E)
    line.x(regs.B[0])
    consts = precompute_constants(p.g, p.m, p.n, mp.l0)
    for r in range(p.rounds):
        regs.c = E[r]
        classical_modmul_on(line, regs, mp, t, consts[r]["a"])
    return line.circuit(["e", "B", "Q", "Qa", "Qs", "Y", "Ya", "Ys", "Yh", "Z", "Za", "Zs", "Zh"],
                        classical=True)


def classical_depth(c: Circuit) -> int:
    return compute_depth(c, GENERAL)

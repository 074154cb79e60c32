"""Reusable sub-circuits: QFT, pseudo-Toffoli, controlled-swap cascade, mesh, fanout.

The ``*_on`` helpers emit onto a :class:`~nnashor.line.Line` by qubit name so
the arithmetic builders can splice them in anywhere; the ``build_*``
functions wrap them into standalone circuits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

from .circuit import Circuit, CircuitError, CostModel, NN
from .line import Line, Name
from .phase import DyadicPhase


@dataclass(frozen=True)
class QftSpec:
    n: int
    inverse: bool = False
    approx_cutoff: Optional[int] = None
    include_swaps: bool = True

    def __post_init__(self) -> None:
        if self.n < 1:
            raise CircuitError("QFT needs n >= 1")
        if self.approx_cutoff is not None and self.approx_cutoff < 1:
            raise CircuitError("approx_cutoff must be >= 1")


def default_cutoff(n: int) -> int:
    return max(1, math.ceil(math.log2(max(n, 2)))) + 2


def _angle(d: int, cutoff: Optional[int]) -> DyadicPhase:
    # rotation between bits d apart is 1/2^(d+1) of a turn
    if cutoff is not None and d + 1 > cutoff:
        return DyadicPhase(0, 0)
    return DyadicPhase(1, d + 1)


def qft_on(line: Line, reg: Sequence[Name], swaps: bool = True,
           cutoff: Optional[int] = None) -> None:
    """Fourier transform of the qubits ``reg`` (``reg[j]`` holds bit j).

    Afterwards ``reg[j]`` holds phi_j, the qubit with phase u/2^(j+1).  With
    swaps the register must be contiguous with its MSB at one end; the order
    comes out reversed.
    """
    L = len(reg)
    for k in range(L):
        q = reg[L - 1 - k]
        line.h(q)
        for j in range(k + 1, L):
            other = reg[L - 1 - j]
            ph = _angle(j - k, cutoff)
            if swaps:
                line.fcps(q, other, ph)
            else:
                line.cphase(q, other, ph)


def iqft_on(line: Line, reg: Sequence[Name], swaps: bool = True,
            cutoff: Optional[int] = None) -> None:
    """Exact adjoint of :func:`qft_on` (``reg[j]`` holds phi_j on entry)."""
    L = len(reg)
    for k in reversed(range(L)):
        q = reg[L - 1 - k]
        for j in reversed(range(k + 1, L)):
            other = reg[L - 1 - j]
            ph = -_angle(j - k, cutoff)
            if swaps:
                line.fcps(q, other, ph)
            else:
                line.cphase(q, other, ph)
        line.h(q)


def build_qft(spec: QftSpec) -> Circuit:
    """QFT on n wires; input bit j on wire j, output ``layout_out['u'][j]`` holds phi_j."""
    reg = [("u", j) for j in range(spec.n)]
    line = Line(reg, nn=spec.include_swaps)
    line.mark_input(["u"])
    if spec.inverse:
        # take phi_j where the forward transform leaves it
        if spec.include_swaps:
            line = Line(list(reversed(reg)), nn=True)
        line.mark_input(["u"])
        iqft_on(line, reg, spec.include_swaps, spec.approx_cutoff)
    else:
        qft_on(line, reg, spec.include_swaps, spec.approx_cutoff)
    return line.circuit(["u"])


def build_inverse_qft(spec: QftSpec) -> Circuit:
    return build_qft(QftSpec(spec.n, True, spec.approx_cutoff, spec.include_swaps))


# ------------------------------------------------------------ pseudo-Toffoli

def pseudo_toffoli_on(line: Line, u: Name, v: Name, w: Name) -> None:
    """v ^= u & w, up to a -1 phase on |u v w> = |0 1 1>.

    Anti-controlled Hadamards on v (control u) conjugate a CNOT from w: when
    u = 1 the CNOT acts plainly, when u = 0 it becomes a CZ.
    """
    line.ptha(u, v)
    line.cnot(w, v)
    line.pthb(u, v)


def build_pseudo_toffoli(u: int = 0, v: int = 1, w: int = 2, width: Optional[int] = None) -> Circuit:
    if abs(u - v) != 1 or abs(v - w) != 1 or u == w:
        raise CircuitError("pseudo-Toffoli wires must be adjacent in the order u, v, w")
    width = width if width is not None else max(u, v, w) + 1
    names = [None] * width
    for i in range(width):
        names[i] = ("q", i)
    line = Line(names)
    pseudo_toffoli_on(line, ("q", u), ("q", v), ("q", w))
    return line.circuit(classical=True)


# ------------------------------------------------------------ swap cascade

def cswap_cascade_on(line: Line, c: Name, pairs: Sequence[tuple]) -> None:
    """Swap X with a known-zero Y when c = 1, for pairs ordered away from c.

    Each pair (X_i, Y_i) starts as ``c .. X_i Y_i`` (or ``c .. Y_i X_i``) and finishes one place
    closer to c's start with c carried past it.  Per pair: Y ^= c X inside a
    pseudo-Toffoli sandwich while c moves through, then X ^= Y, folded into
    the closing half since it acts on the same two wires.
    """
    for x, y in pairs:
        line.ptha(x, y)
    for x, y in pairs:
        if line.neighbor(c, 1) == x or line.neighbor(c, -1) == x:
            line.swap(c, x)
            line.fcxs(c, y)
        else:
            line.fcxs(c, y)
            line.swap(c, x)
        line.pthbx(x, y)


def build_controlled_swap_cascade(n: int) -> Circuit:
    """Layout: c on wire 0, then X_0 Y_0 X_1 Y_1 ...; c ends on the last wire."""
    if n < 1:
        raise CircuitError("cascade needs n >= 1")
    names: List[Name] = ["c"]
    for i in range(n):
        names += [("X", i), ("Y", i)]
    line = Line(names)
    line.mark_input(["c", "X", "Y"])
    cswap_cascade_on(line, "c", [(("X", i), ("Y", i)) for i in range(n)])
    return line.circuit(classical=True)


# ------------------------------------------------------------ mesh / unmesh

def mesh_on(line: Line, first: Sequence[Name], second: Sequence[Name]) -> None:
    """Interleave two adjacent blocks into first_0 second_0 first_1 second_1 ...

    Odd-even transposition that only ever exchanges a ``first`` qubit with a
    ``second`` qubit that has to overtake it; depth n - 1.
    """
    n = len(first)
    rank = {q: 2 * i for i, q in enumerate(first)}
    rank.update({q: 2 * i + 1 for i, q in enumerate(second)})
    lo = min(line.pos[q] for q in rank)
    span = range(lo, lo + 2 * n)
    if {line.at[p] for p in span} != set(rank):
        raise CircuitError("mesh registers are not contiguous")
    up = 1 if line.pos[first[0]] < line.pos[second[0]] else -1
    parity = 0
    while True:
        done = all(rank[line.at[p]] * up <= rank[line.at[p + 1]] * up
                   for p in range(lo, lo + 2 * n - 1))
        if done:
            break
        for p in range(lo + parity, lo + 2 * n - 1, 2):
            a, b = line.at[p], line.at[p + 1]
            if rank[a] * up > rank[b] * up:
                line.swap(a, b)
        parity ^= 1


def sort_on(line: Line, target: Sequence[Name]) -> None:
    """Odd-even transposition of a contiguous block into ``target`` (by position)."""
    rank = {q: i for i, q in enumerate(target)}
    lo = min(line.pos[q] for q in rank)
    if {line.at[p] for p in range(lo, lo + len(target))} != set(rank):
        raise CircuitError("sort block is not contiguous")
    hi = lo + len(target) - 1
    parity = 0
    while any(rank[line.at[p]] > rank[line.at[p + 1]] for p in range(lo, hi)):
        for p in range(lo + parity, hi, 2):
            a, b = line.at[p], line.at[p + 1]
            if rank[a] > rank[b]:
                line.swap(a, b)
        parity ^= 1


def build_mesh(n: int) -> Circuit:
    names = [("B", i) for i in range(n)] + [("Y", i) for i in range(n)]
    line = Line(names)
    line.mark_input(["B", "Y"])
    mesh_on(line, names[:n], names[n:])
    return line.circuit()


def build_unmesh(n: int) -> Circuit:
    from .circuit import invert
    return invert(build_mesh(n))


# ------------------------------------------------------------ fanout

def fanout_on(line: Line, c: Name, targets: Sequence[Name]) -> None:
    """Copy c into zeroed ``targets`` with a doubling CNOT tree."""
    holders = [c]
    rest = list(targets)
    while rest:
        new = []
        for h in list(holders):
            if not rest:
                break
            t = rest.pop(0)
            line.cnot(h, t)
            new.append(t)
        holders += new


def fanin_on(line: Line, c: Name, targets: Sequence[Name]) -> None:
    """Undo :func:`fanout_on` (same tree, reversed)."""
    probe = Line(list(line.at), nn=False)
    fanout_on(probe, c, targets)
    for g in reversed(probe.gates):
        line.gates.append(g)


def build_fanout(n: int, model: CostModel = NN) -> Circuit:
    if model.nearest_neighbor or not model.fanout_allowed:
        raise CircuitError("fanout needs the general cost model")
    names: List[Name] = ["c"] + [("F", i) for i in range(n)]
    line = Line(names, nn=False)
    line.mark_input(["c", "F"])
    fanout_on(line, "c", names[1:])
    return line.circuit(classical=True)

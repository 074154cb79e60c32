"""Named-qubit bookkeeping for building circuits on a line.

Builders address logical qubits (``("Z", 3)``, ``"c"``, ...) rather than wire
numbers.  :class:`Line` tracks where each one sits, moves them on every
swapping gate, and refuses non-adjacent interactions when ``nn`` is set.
"""
from __future__ import annotations

from typing import Dict, Hashable, Iterable, List, Optional, Sequence

from .circuit import Circuit, CircuitError, Gate
from .phase import DyadicPhase

Name = Hashable


class Line:
    def __init__(self, names: Sequence[Name], nn: bool = True):
        if len(set(names)) != len(names):
            raise CircuitError("duplicate qubit names on line")
        self.at: List[Name] = list(names)
        self.pos: Dict[Name, int] = {q: i for i, q in enumerate(names)}
        self.nn = nn
        self.gates: List[Gate] = []
        self.layout_in: Dict[str, tuple] = {}

    @property
    def width(self) -> int:
        return len(self.at)

    # ----------------------------------------------------------- primitives
    def _pair(self, a: Name, b: Name) -> tuple:
        pa, pb = self.pos[a], self.pos[b]
        if self.nn and abs(pa - pb) != 1:
            raise CircuitError(f"{a!r}@{pa} and {b!r}@{pb} are not adjacent")
        return pa, pb

    def _exchange(self, pa: int, pb: int) -> None:
        a, b = self.at[pa], self.at[pb]
        self.at[pa], self.at[pb] = b, a
        self.pos[a], self.pos[b] = pb, pa

    def one(self, kind: str, q: Name, phase: Optional[DyadicPhase] = None,
            bit: Optional[str] = None) -> None:
        if kind == "rz" and phase is not None and phase.is_zero:
            return
        self.gates.append(Gate(kind, (self.pos[q],), phase, bit))

    def two(self, kind: str, a: Name, b: Name, phase: Optional[DyadicPhase] = None) -> None:
        pa, pb = self._pair(a, b)
        if kind in ("fcps", "fcrzs") and phase.is_zero:
            kind, phase = "swap", None
        elif kind == "cphase" and phase.is_zero:
            return
        self.gates.append(Gate(kind, (pa, pb), phase))
        if kind in ("swap", "fcps", "fcrzs", "fcxs"):
            self._exchange(pa, pb)

    def h(self, q: Name) -> None:
        self.one("h", q)

    def x(self, q: Name) -> None:
        self.one("x", q)

    def rz(self, q: Name, phase: DyadicPhase) -> None:
        self.one("rz", q, phase)

    def measure(self, q: Name, bit: str) -> None:
        self.one("measure", q, bit=bit)

    def crz(self, q: Name, phase: DyadicPhase, bit: str) -> None:
        self.one("crz", q, phase, bit)

    def swap(self, a: Name, b: Name) -> None:
        self.two("swap", a, b)

    def cnot(self, c: Name, t: Name) -> None:
        self.two("cnot", c, t)

    def fcxs(self, c: Name, t: Name) -> None:
        self.two("fcxs", c, t)

    def fcrzs(self, c: Name, t: Name, phase: DyadicPhase) -> None:
        self.two("fcrzs", c, t, phase)

    def fcps(self, a: Name, b: Name, phase: DyadicPhase) -> None:
        self.two("fcps", a, b, phase)

    def cphase(self, a: Name, b: Name, phase: DyadicPhase) -> None:
        self.two("cphase", a, b, phase)

    def ptha(self, u: Name, v: Name) -> None:
        self.two("ptha", u, v)

    def pthb(self, u: Name, v: Name) -> None:
        self.two("pthb", u, v)

    def pthbx(self, u: Name, v: Name) -> None:
        self.two("pthbx", u, v)

    def xptha(self, u: Name, v: Name) -> None:
        self.two("xptha", u, v)

    # ----------------------------------------------------------- movement
    def neighbor(self, q: Name, step: int) -> Optional[Name]:
        p = self.pos[q] + step
        return self.at[p] if 0 <= p < self.width else None

    def move_past(self, q: Name, others: Iterable[Name], phase_of=None) -> None:
        """Walk ``q`` across ``others`` (in encounter order), one swap each.

        With ``phase_of`` each crossing is a fused controlled rotation
        ``phase_of(other)`` with ``q`` as control.
        """
        for o in others:
            if phase_of is None:
                self.swap(q, o)
            else:
                self.fcrzs(q, o, phase_of(o))

    def run_between(self, q: Name, stop: Name) -> List[Name]:
        """Qubits strictly between ``q`` and ``stop``, nearest first."""
        pq, ps = self.pos[q], self.pos[stop]
        step = 1 if ps > pq else -1
        return [self.at[p] for p in range(pq + step, ps, step)]

    def rename(self, old: Name, new: Name) -> None:
        p = self.pos.pop(old)
        if new in self.pos:
            raise CircuitError(f"name {new!r} already on the line")
        self.pos[new] = p
        self.at[p] = new

    # ----------------------------------------------------------- layouts
    def positions(self, reg: str, size: Optional[int] = None) -> tuple:
        keys = sorted(k[1] for k in self.pos if isinstance(k, tuple) and k[0] == reg)
        if size is not None:
            keys = [j for j in keys if j < size]
        return tuple(self.pos[(reg, j)] for j in keys)

    def snapshot(self, regs: Iterable[str]) -> Dict[str, tuple]:
        out = {}
        for r in regs:
            if isinstance(r, str) and r in self.pos:
                out[r] = (self.pos[r],)
            else:
                out[r] = self.positions(r)
        return out

    def mark_input(self, regs: Iterable[str]) -> None:
        self.layout_in = self.snapshot(regs)

    def circuit(self, regs: Iterable[str] = (), classical: bool = False) -> Circuit:
        regs = list(regs) or list(self.layout_in)
        c = Circuit(self.width, list(self.gates), dict(self.layout_in),
                    self.snapshot(regs), classical)
        return c

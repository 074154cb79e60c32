"""Gate-level IR, nearest-neighbor validation and the unit-cost depth model.

Circuits are flat gate lists over wires laid out on a line.  Wire 0 is the
top of the line and the least significant bit of a simulator basis index.
Registers are tracked by layouts: ``layout[name][j]`` is the wire holding the
bit of significance ``j`` (or the j-th Fourier qubit for transformed
registers).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .phase import DyadicPhase

Layout = Dict[str, Tuple[int, ...]]


class CircuitError(ValueError):
    """Raised for malformed gates, circuits, or layouts."""


# kind -> (arity, has_phase, has_bit, classical)
KINDS = {
    "h": (1, False, False, False),
    "x": (1, False, False, True),
    "rz": (1, True, False, False),
    "cphase": (2, True, False, False),
    "cnot": (2, False, False, True),
    "swap": (2, False, False, True),
    "fcps": (2, True, False, False),
    "fcrzs": (2, True, False, False),
    "fcxs": (2, False, False, True),
    "ptha": (2, False, False, True),
    "pthb": (2, False, False, True),
    "pthbx": (2, False, False, True),
    "xptha": (2, False, False, True),
    "measure": (1, False, True, True),
    "crz": (1, True, True, False),
}
SWAPPING = frozenset({"swap", "fcps", "fcrzs", "fcxs"})
# single-wire kinds that may merge into a neighbouring two-wire interaction
ABSORBABLE = frozenset({"h", "x", "rz"})


@dataclass(frozen=True, slots=True)
class Gate:
    kind: str
    wires: Tuple[int, ...]
    phase: Optional[DyadicPhase] = None
    bit: Optional[str] = None

    def __post_init__(self) -> None:
        spec = KINDS.get(self.kind)
        if spec is None:
            raise CircuitError(f"unknown gate kind {self.kind!r}")
        arity, has_phase, has_bit, _ = spec
        if len(self.wires) != arity:
            raise CircuitError(f"{self.kind} takes {arity} wire(s), got {self.wires}")
        if arity == 2 and self.wires[0] == self.wires[1]:
            raise CircuitError(f"duplicate operand in {self.kind}{self.wires}")
        if has_phase != (self.phase is not None):
            raise CircuitError(f"{self.kind} phase argument mismatch")
        if has_bit != (self.bit is not None):
            raise CircuitError(f"{self.kind} classical bit argument mismatch")

    def adjoint(self) -> "Gate":
        k, w = self.kind, self.wires
        if k in ("h", "x", "swap", "cnot"):
            return self
        if k in ("rz", "cphase", "crz"):
            return Gate(k, w, -self.phase, self.bit)
        if k in ("fcps", "fcrzs"):
            return Gate(k, (w[1], w[0]), -self.phase)
        if k == "fcxs":
            return Gate("fcxs", (w[1], w[0]))
        if k == "ptha":
            return Gate("pthb", w)
        if k == "pthb":
            return Gate("ptha", w)
        if k == "pthbx":
            return Gate("xptha", w)
        if k == "xptha":
            return Gate("pthbx", w)
        raise CircuitError("measurement has no adjoint")

    def relabel(self, mapping) -> "Gate":
        return Gate(self.kind, tuple(mapping(x) for x in self.wires), self.phase, self.bit)

    def to_text(self) -> str:
        parts = [self.kind, *map(str, self.wires)]
        if self.phase is not None:
            parts.append(str(self.phase))
        if self.bit is not None:
            parts.append(self.bit)
        return " ".join(parts)

    @classmethod
    def from_text(cls, line: str) -> "Gate":
        tok = line.split()
        kind = tok[0]
        if kind not in KINDS:
            raise CircuitError(f"unknown gate kind {kind!r}")
        arity, has_phase, has_bit, _ = KINDS[kind]
        wires = tuple(int(t) for t in tok[1:1 + arity])
        rest = tok[1 + arity:]
        phase = DyadicPhase.parse(rest.pop(0)) if has_phase else None
        bit = rest.pop(0) if has_bit else None
        if rest:
            raise CircuitError(f"trailing tokens in {line!r}")
        return cls(kind, wires, phase, bit)


@dataclass
class CostModel:
    nearest_neighbor: bool = True
    fanout_allowed: bool = False
    absorb_single_qubit: bool = True


NN = CostModel()
GENERAL = CostModel(nearest_neighbor=False, fanout_allowed=True)


@dataclass
class ResourceReport:
    depth: int
    width: int
    size: int

    def as_dict(self) -> dict:
        return {"depth": self.depth, "width": self.width, "size": self.size}


@dataclass
class Circuit:
    width: int
    gates: List[Gate] = field(default_factory=list)
    layout_in: Layout = field(default_factory=dict)
    layout_out: Layout = field(default_factory=dict)
    classical: bool = False

    def append(self, gate: Gate) -> "Circuit":
        for w in gate.wires:
            if not 0 <= w < self.width:
                raise CircuitError(f"wire {w} out of range for width {self.width}")
        self.gates.append(gate)
        return self

    def add(self, kind: str, *wires: int, phase: Optional[DyadicPhase] = None,
            bit: Optional[str] = None) -> "Circuit":
        return self.append(Gate(kind, tuple(wires), phase, bit))

    def extend(self, gates: Iterable[Gate]) -> "Circuit":
        for g in gates:
            self.append(g)
        return self

    def __len__(self) -> int:
        return len(self.gates)

    def copy(self) -> "Circuit":
        return Circuit(self.width, list(self.gates), dict(self.layout_in),
                       dict(self.layout_out), self.classical)

    def has_measurement(self) -> bool:
        return any(g.kind == "measure" for g in self.gates)

    def is_classical(self) -> bool:
        return all(KINDS[g.kind][3] for g in self.gates)


def append_gate(circuit: Circuit, gate: Gate) -> Circuit:
    return circuit.append(gate)


def validate_nearest_neighbor(circuit: Circuit) -> List[Tuple[int, Gate]]:
    """Every two-wire gate whose operands are not adjacent, with its index."""
    return [(i, g) for i, g in enumerate(circuit.gates)
            if len(g.wires) == 2 and abs(g.wires[0] - g.wires[1]) != 1]


def _check(circuit: Circuit, model: CostModel) -> None:
    if model.nearest_neighbor:
        bad = validate_nearest_neighbor(circuit)
        if bad:
            i, g = bad[0]
            raise CircuitError(f"gate {i} ({g.to_text()}) violates nearest-neighbor "
                               f"constraint ({len(bad)} violations)")


def compute_depth(circuit: Circuit, model: CostModel = NN) -> int:
    """ASAP layer count under the unit-cost model.

    Two-wire gates (fused kinds included) take one layer on both wires.  A run
    of consecutive h/x/rz gates on one wire is a single one-qubit unitary and
    merges into the adjacent two-wire interaction on that wire when there is
    one; otherwise it takes a layer.  Measurements and classically controlled
    rotations always take a layer, and ``crz`` waits for its measured bit.
    """
    _check(circuit, model)
    W = circuit.width
    time = [0] * W
    after_2q = [False] * W   # last non-absorbed op on the wire was a 2-wire gate
    pending = [False] * W    # unabsorbed single-qubit run waiting for a partner
    bit_time: Dict[str, int] = {}
    absorb = model.absorb_single_qubit
    for g in circuit.gates:
        k = g.kind
        if len(g.wires) == 2:
            a, b = g.wires
            t = max(time[a], time[b]) + 1
            time[a] = time[b] = t
            after_2q[a] = after_2q[b] = True
            pending[a] = pending[b] = False
            continue
        (w,) = g.wires
        if k in ABSORBABLE and absorb:
            if not after_2q[w]:
                pending[w] = True
            continue
        if k in ABSORBABLE:
            time[w] += 1
            continue
        if pending[w]:
            time[w] += 1
            pending[w] = False
        t = time[w] + 1
        if k == "crz":
            if g.bit not in bit_time:
                raise CircuitError(f"crz references unmeasured bit {g.bit!r}")
            t = max(t, bit_time[g.bit] + 1)
        time[w] = t
        if k == "measure":
            bit_time[g.bit] = t
        after_2q[w] = False
    for w in range(W):
        if pending[w]:
            time[w] += 1
    return max(time, default=0)


def count_size(circuit: Circuit, model: CostModel = NN) -> int:
    return len(circuit.gates)


def used_wires(circuit: Circuit) -> int:
    return len({w for g in circuit.gates for w in g.wires})


def resources(circuit: Circuit, model: CostModel = NN) -> ResourceReport:
    return ResourceReport(compute_depth(circuit, model), circuit.width,
                          count_size(circuit, model))


def invert(circuit: Circuit) -> Circuit:
    if circuit.has_measurement():
        raise CircuitError("cannot invert a circuit containing measurements")
    return Circuit(circuit.width, [g.adjoint() for g in reversed(circuit.gates)],
                   dict(circuit.layout_out), dict(circuit.layout_in), circuit.classical)


def mirror(circuit: Circuit) -> Circuit:
    top = circuit.width - 1
    flip = lambda w: top - w  # noqa: E731
    return Circuit(circuit.width, [g.relabel(flip) for g in circuit.gates],
                   {k: tuple(top - p for p in v) for k, v in circuit.layout_in.items()},
                   {k: tuple(top - p for p in v) for k, v in circuit.layout_out.items()},
                   circuit.classical)


def concat(first: Circuit, second: Circuit) -> Circuit:
    if first.width != second.width:
        raise CircuitError(f"width mismatch {first.width} != {second.width}")
    for name, pos in second.layout_in.items():
        if name in first.layout_out and first.layout_out[name] != pos:
            raise CircuitError(f"layout mismatch for register {name!r}: "
                               f"{first.layout_out[name]} vs {pos}")
    layout_in = dict(first.layout_in)
    for name, pos in second.layout_in.items():
        if name not in first.layout_out and name not in layout_in:
            layout_in[name] = pos
    layout_out = {k: v for k, v in first.layout_out.items() if k not in second.layout_in}
    layout_out.update(second.layout_out)
    return Circuit(first.width, first.gates + second.gates, layout_in, layout_out,
                   first.classical and second.classical)


def orientation(positions: Sequence[int]) -> int:
    """+1 when significance grows down the line, -1 when it grows upward."""
    if len(positions) < 2:
        return 1
    return 1 if positions[1] > positions[0] else -1


# ---------------------------------------------------------------- text format

def to_text(circuit: Circuit) -> str:
    lines = []
    if circuit.classical:
        lines.append("# classical")
    lines.append(f"width {circuit.width}")
    for tag, lay in (("layout_in", circuit.layout_in), ("layout_out", circuit.layout_out)):
        for name in sorted(lay):
            lines.append(f"#@ {tag} {name} {','.join(map(str, lay[name]))}")
    lines.extend(g.to_text() for g in circuit.gates)
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Circuit:
    width = None
    gates: List[Gate] = []
    lay: Dict[str, Layout] = {"layout_in": {}, "layout_out": {}}
    classical = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#@"):
            _, tag, name, pos = line.split()
            lay[tag][name] = tuple(int(p) for p in pos.split(",")) if pos else ()
            continue
        if line.startswith("#"):
            if line[1:].strip() == "classical":
                classical = True
            continue
        if line.startswith("width"):
            width = int(line.split()[1])
            continue
        gates.append(Gate.from_text(line))
    if width is None:
        raise CircuitError("missing 'width' header")
    c = Circuit(width, [], lay["layout_in"], lay["layout_out"], classical)
    return c.extend(gates)

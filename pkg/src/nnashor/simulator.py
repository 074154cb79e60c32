"""Dense statevector and bit-level reversible simulation.

Basis index convention: wire ``w`` is bit ``w`` of the index (wire 0 is the
least significant bit).  Internally the statevector is an ndarray with one
length-2 axis per wire plus a leading batch axis; swaps only permute the
wire-to-axis map, and diagonal gates touch a slice in place.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import struct
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .circuit import KINDS, Circuit, Gate

DEFAULT_MAX_WIDTH = 26
_SQ = 1.0 / math.sqrt(2.0)


class SimulationError(RuntimeError):
    pass


def max_width() -> int:
    return int(os.environ.get("NNASHOR_MAX_WIDTH", DEFAULT_MAX_WIDTH))


@dataclass
class MeasurementRecord:
    seed: int
    bits: Dict[str, int] = field(default_factory=dict)
    draws: Dict[str, float] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"seed": self.seed, "bits": self.bits, "draws": self.draws},
                          sort_keys=True)


def _draw(seed: int, name: str) -> float:
    """Uniform draw keyed by (seed, bit name): replayable, order independent."""
    key = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    gen = np.random.Generator(np.random.Philox(key=int.from_bytes(key[:16], "little")))
    return float(gen.random())


class StateVector:
    """2**width amplitudes (per batch column) with a lazy wire permutation."""

    def __init__(self, width: int, data: np.ndarray, axis_of: Optional[List[int]] = None):
        self.width = width
        self.data = data  # shape (batch,) + (2,)*width
        self.axis_of = list(range(width)) if axis_of is None else axis_of

    @classmethod
    def basis(cls, width: int, index: int | Sequence[int]) -> "StateVector":
        idx = [index] if isinstance(index, (int, np.integer)) else list(index)
        vec = np.zeros((len(idx), 1 << width), dtype=np.complex128)
        vec[np.arange(len(idx)), idx] = 1.0
        return cls.from_vector(width, vec)

    @classmethod
    def from_vector(cls, width: int, vec: np.ndarray) -> "StateVector":
        vec = np.asarray(vec, dtype=np.complex128)
        if vec.ndim == 1:
            vec = vec[None, :]
        if vec.shape[1] != 1 << width:
            raise SimulationError("vector length does not match width")
        # C order: last axis is the least significant bit -> wire w on axis width-w
        data = np.ascontiguousarray(vec).reshape((vec.shape[0],) + (2,) * width)
        return cls(width, data, [width - w for w in range(width)])

    def vector(self) -> np.ndarray:
        """Amplitudes in canonical index order, shape (batch, 2**width)."""
        perm = [0] + [self.axis_of[self.width - 1 - k] for k in range(self.width)]
        return np.transpose(self.data, perm).reshape(self.data.shape[0], -1)

    def amplitudes(self) -> np.ndarray:
        v = self.vector()
        return v[0] if v.shape[0] == 1 else v

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.data) ** 2)))

    # -- slicing helpers
    def _sub(self, assign: Dict[int, int]) -> np.ndarray:
        sl = [slice(None)] * (self.width + 1)
        for w, v in assign.items():
            sl[self.axis_of[w]] = v
        return self.data[tuple(sl)]

    def phase(self, assign: Dict[int, int], factor: complex) -> None:
        self._sub(assign)[...] *= factor

    def hadamard(self, w: int, within: Optional[Dict[int, int]] = None) -> None:
        base = dict(within or {})
        s0 = self._sub({**base, w: 0})
        s1 = self._sub({**base, w: 1})
        np.subtract(s0, s1, out=s1)     # s1 <- a - b
        s0 *= 2.0
        np.subtract(s0, s1, out=s0)     # s0 <- a + b
        s0 *= _SQ
        s1 *= _SQ

    def flip(self, w: int, within: Optional[Dict[int, int]] = None) -> None:
        base = dict(within or {})
        s0 = self._sub({**base, w: 0})
        s1 = self._sub({**base, w: 1})
        tmp = s0.copy()
        s0[...] = s1
        s1[...] = tmp

    def swap(self, a: int, b: int) -> None:
        self.axis_of[a], self.axis_of[b] = self.axis_of[b], self.axis_of[a]

    def prob_one(self, w: int) -> float:
        return float(np.sum(np.abs(self._sub({w: 1})) ** 2))

    def to_bytes(self) -> bytes:
        """Amplitude dump: 8-byte little-endian width, then complex doubles."""
        v = self.vector()[0].astype("<c16")
        return struct.pack("<q", self.width) + v.tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "StateVector":
        (width,) = struct.unpack("<q", blob[:8])
        return cls.from_vector(width, np.frombuffer(blob[8:], dtype="<c16"))


def apply_gate(state: StateVector, g: Gate, record: Optional[MeasurementRecord] = None) -> None:
    k, w = g.kind, g.wires
    if k == "h":
        state.hadamard(w[0])
    elif k == "x":
        state.flip(w[0])
    elif k == "rz":
        if not g.phase.is_zero:
            state.phase({w[0]: 1}, g.phase.unit())
    elif k in ("cphase", "fcps", "fcrzs"):
        if not g.phase.is_zero:
            state.phase({w[0]: 1, w[1]: 1}, g.phase.unit())
        if k != "cphase":
            state.swap(*w)
    elif k == "cnot":
        state.flip(w[1], {w[0]: 1})
    elif k == "fcxs":
        state.flip(w[1], {w[0]: 1})
        state.swap(*w)
    elif k == "swap":
        state.swap(*w)
    elif k in ("ptha", "pthb"):
        # Hadamard on the second wire when the first wire is |0>
        state.hadamard(w[1], {w[0]: 0})
    elif k == "pthbx":
        # closing half fused with u ^= v on the same pair
        state.hadamard(w[1], {w[0]: 0})
        state.flip(w[0], {w[1]: 1})
    elif k == "xptha":
        state.flip(w[0], {w[1]: 1})
        state.hadamard(w[1], {w[0]: 0})
    elif k == "measure":
        if record is None:
            raise SimulationError("measurement requires a record")
        if state.data.shape[0] != 1:
            raise SimulationError("measurement is not supported on batched states")
        p1 = state.prob_one(w[0])
        u = _draw(record.seed, g.bit)
        bit = 1 if u < p1 else 0
        record.bits[g.bit] = bit
        record.draws[g.bit] = u
        keep = p1 if bit else 1.0 - p1
        state._sub({w[0]: 1 - bit})[...] = 0.0
        state.data *= 1.0 / math.sqrt(keep)
    elif k == "crz":
        if record is None or g.bit not in record.bits:
            raise SimulationError(f"crz references unmeasured bit {g.bit!r}")
        if record.bits[g.bit] and not g.phase.is_zero:
            state.phase({w[0]: 1}, g.phase.unit())
    else:  # pragma: no cover
        raise SimulationError(f"unsupported gate {k}")


def simulate(circuit: Circuit, initial: int | Sequence[int] | StateVector = 0,
             seed: int = 0, check_norm: bool = False) -> Tuple[StateVector, MeasurementRecord]:
    """Apply ``circuit`` to a basis state (or batch of them, or a given state)."""
    if circuit.width > max_width():
        raise SimulationError(f"width {circuit.width} exceeds simulator cap {max_width()}")
    if isinstance(initial, StateVector):
        state = StateVector(initial.width, initial.data.copy(), list(initial.axis_of))
    else:
        state = StateVector.basis(circuit.width, initial)
    record = MeasurementRecord(seed)
    for g in circuit.gates:
        apply_gate(state, g, record)
        if check_norm:
            n = state.norm() / math.sqrt(state.data.shape[0])
            if abs(n - 1.0) > 1e-9:
                raise SimulationError(f"norm drift {n} after {g.to_text()}")
    return state, record


def fidelity_to_basis(state: StateVector, index: int) -> float:
    return float(abs(state.amplitudes()[index]) ** 2)


def fidelity(a: StateVector, b: StateVector) -> float:
    if a.width != b.width:
        raise SimulationError("width mismatch")
    return float(abs(np.vdot(a.amplitudes(), b.amplitudes())) ** 2)


def unitary_of(circuit: Circuit) -> np.ndarray:
    if circuit.width > 10:
        raise SimulationError("unitary_of is limited to 10 wires")
    if circuit.has_measurement():
        raise SimulationError("circuit contains measurement")
    dim = 1 << circuit.width
    state, _ = simulate(circuit, list(range(dim)))
    return state.vector().T.copy()


# ------------------------------------------------------------------ reversible

def simulate_reversible(circuit: Circuit, bits: int | Sequence[int]) -> List[int] | int:
    """Bit-level simulation of classical circuits.

    A ``ptha(u, v)`` ... ``pthb(u, v)`` pair is a pseudo-Toffoli sandwich: while
    it is open, a CNOT (or fused CNOT-swap) onto ``v`` from ``w`` acts as
    ``v ^= w & u``.  Phases are ignored here; the statevector backend tracks
    them.  Input/output as an int (wire w = bit w) or a list of bits.
    """
    as_int = isinstance(bits, (int, np.integer))
    W = circuit.width
    state = [(int(bits) >> w) & 1 for w in range(W)] if as_int else list(bits)
    if len(state) != W:
        raise SimulationError("bitstring width mismatch")
    token = list(range(W))            # wire -> token id
    where = list(range(W))            # token -> wire
    open_ctrl: Dict[int, int] = {}    # target token -> control token of open sandwich
    held: Dict[int, int] = {}         # control token -> value it must keep

    def touch(w: int) -> None:
        if token[w] in open_ctrl:
            raise SimulationError(f"wire {w} used inside an open pseudo-Toffoli")

    def move(a: int, b: int) -> None:
        state[a], state[b] = state[b], state[a]
        ta, tb = token[a], token[b]
        token[a], token[b] = tb, ta
        where[ta], where[tb] = b, a

    def cx(c: int, t: int) -> None:
        touch(c)
        tt = token[t]
        if tt in open_ctrl:
            u = where[open_ctrl[tt]]
            state[t] ^= state[c] & state[u]
        else:
            state[t] ^= state[c]

    for g in circuit.gates:
        k, w = g.kind, g.wires
        if not KINDS[k][3]:
            raise SimulationError(f"non-classical gate {g.to_text()}")
        if k == "x":
            touch(w[0])
            state[w[0]] ^= 1
        elif k == "cnot":
            cx(*w)
        elif k == "fcxs":
            cx(*w)
            move(*w)
        elif k == "swap":
            move(*w)
        elif k in ("ptha", "xptha"):
            u, v = w
            if k == "xptha":
                cx(v, u)
            touch(u)
            touch(v)
            open_ctrl[token[v]] = token[u]
            held[token[u]] = state[u]
        elif k in ("pthb", "pthbx"):
            u, v = w
            if open_ctrl.get(token[v]) != token[u]:
                raise SimulationError(f"unmatched {g.to_text()}")
            if state[u] != held.pop(token[u]):
                raise SimulationError("pseudo-Toffoli control changed while open")
            del open_ctrl[token[v]]
            if k == "pthbx":
                cx(v, u)
        elif k == "measure":
            touch(w[0])
    if held:
        raise SimulationError("pseudo-Toffoli left open at end of circuit")
    if as_int:
        return sum(b << i for i, b in enumerate(state))
    return state


def bits_to_int(bits: Iterable[int]) -> int:
    return sum(int(b) << i for i, b in enumerate(bits))


def encode(layout: Dict[str, Sequence[int]], values: Dict[str, int]) -> int:
    """Basis index with register ``r`` holding ``values[r]`` (bit j on wire layout[r][j])."""
    idx = 0
    for reg, v in values.items():
        for j, w in enumerate(layout[reg]):
            idx |= ((v >> j) & 1) << w
    return idx


def decode(index: int, layout: Dict[str, Sequence[int]]) -> Dict[str, int]:
    return {reg: sum(((index >> w) & 1) << j for j, w in enumerate(ws))
            for reg, ws in layout.items()}


def dominant(state: StateVector) -> Tuple[int, float]:
    """Most likely basis index and its probability (single-column states)."""
    p = np.abs(state.amplitudes()) ** 2
    k = int(np.argmax(p))
    return k, float(p[k])


def marginal(state: StateVector, layout: Dict[str, Sequence[int]]) -> Dict[tuple, float]:
    """Joint distribution of the given registers, keyed by value tuples in layout order."""
    p = np.abs(state.amplitudes()) ** 2
    out: Dict[tuple, float] = {}
    for k in np.nonzero(p > 1e-15)[0]:
        vals = decode(int(k), layout)
        key = tuple(vals[r] for r in layout)
        out[key] = out.get(key, 0.0) + float(p[k])
    return out


# ------------------------------------------------------------ sparse backend

class SparseState:
    """Amplitudes on an explicit list of basis indices (width up to 62).

    Suited to arithmetic circuits on basis inputs, where only a few registers
    are ever in superposition at once.  Hadamards merge duplicate indices and
    drop amplitudes below ``tol``.
    """

    def __init__(self, width: int, idx: np.ndarray, amp: np.ndarray, tol: float = 1e-13):
        if width > 62:
            raise SimulationError("sparse backend supports at most 62 wires")
        self.width = width
        self.idx = np.asarray(idx, dtype=np.int64)
        self.amp = np.asarray(amp, dtype=np.complex128)
        self.tol = tol

    @classmethod
    def basis(cls, width: int, index: int) -> "SparseState":
        return cls(width, np.array([index]), np.array([1.0 + 0j]))

    def _mask(self, within: Dict[int, int]) -> np.ndarray:
        sel = np.ones(len(self.idx), dtype=bool)
        for w, v in within.items():
            sel &= ((self.idx >> w) & 1) == v
        return sel

    def phase(self, within: Dict[int, int], factor: complex) -> None:
        self.amp[self._mask(within)] *= factor

    def flip(self, w: int, within: Optional[Dict[int, int]] = None) -> None:
        sel = self._mask(within or {})
        self.idx[sel] ^= np.int64(1) << w

    def swap(self, a: int, b: int) -> None:
        differ = ((self.idx >> a) ^ (self.idx >> b)) & 1 == 1
        self.idx[differ] ^= (np.int64(1) << a) | (np.int64(1) << b)

    def hadamard(self, w: int, within: Optional[Dict[int, int]] = None) -> None:
        sel = self._mask(within or {})
        bit = np.int64(1) << w
        i, a = self.idx[sel], self.amp[sel] * _SQ
        sign = np.where((i >> w) & 1 == 1, -1.0, 1.0)
        idx = np.concatenate([self.idx[~sel], i & ~bit, i | bit])
        amp = np.concatenate([self.amp[~sel], a, a * sign])
        uniq, inv = np.unique(idx, return_inverse=True)
        re = np.bincount(inv, amp.real, len(uniq))
        im = np.bincount(inv, amp.imag, len(uniq))
        amp = re + 1j * im
        keep = np.abs(amp) > self.tol
        self.idx, self.amp = uniq[keep], amp[keep]

    def prob_one(self, w: int) -> float:
        return float(np.sum(np.abs(self.amp[self._mask({w: 1})]) ** 2))

    def project(self, w: int, bit: int) -> None:
        keep = self._mask({w: bit})
        self.idx, self.amp = self.idx[keep], self.amp[keep]
        self.amp /= math.sqrt(float(np.sum(np.abs(self.amp) ** 2)))

    def probabilities(self) -> Dict[int, float]:
        return {int(i): float(abs(a) ** 2) for i, a in zip(self.idx, self.amp)}

    def to_dense(self) -> np.ndarray:
        v = np.zeros(1 << self.width, dtype=np.complex128)
        v[self.idx] = self.amp
        return v


def apply_sparse(state: SparseState, g: Gate, record: Optional[MeasurementRecord] = None) -> None:
    k, w = g.kind, g.wires
    if k == "measure":
        if record is None:
            raise SimulationError("measurement requires a record")
        p1 = state.prob_one(w[0])
        u = _draw(record.seed, g.bit)
        bit = 1 if u < p1 else 0
        record.bits[g.bit] = bit
        record.draws[g.bit] = u
        state.project(w[0], bit)
    elif k == "crz":
        if record is None or g.bit not in record.bits:
            raise SimulationError(f"crz references unmeasured bit {g.bit!r}")
        if record.bits[g.bit] and not g.phase.is_zero:
            state.phase({w[0]: 1}, g.phase.unit())
    else:
        # StateVector's gate table only uses phase/flip/swap/hadamard
        apply_gate(state, g, record)  # type: ignore[arg-type]


def simulate_sparse(circuit: Circuit, initial: int | SparseState = 0,
                    seed: int = 0) -> Tuple[SparseState, MeasurementRecord]:
    if isinstance(initial, SparseState):
        state = SparseState(initial.width, initial.idx.copy(), initial.amp.copy(), initial.tol)
    else:
        state = SparseState.basis(circuit.width, initial)
    record = MeasurementRecord(seed)
    for g in circuit.gates:
        apply_sparse(state, g, record)
    return state, record


def sparse_marginal(state: SparseState, layout: Dict[str, Sequence[int]]) -> Dict[tuple, float]:
    out: Dict[tuple, float] = {}
    for k, p in state.probabilities().items():
        vals = decode(k, layout)
        key = tuple(vals[r] for r in layout)
        out[key] = out.get(key, 0.0) + p
    return out

"""Translate a circuit into a doubled parameterized ZX diagram.

Every quantum spider created here stands for a ket copy and a bra copy
(see :func:`zxqec.zx_core.undouble`).  The scalar ledger tracks the scalar
of the expanded single-layer diagram, so that with all outputs projected the
diagram evaluates to the exact probability of those outputs given the noise
parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuit_ir import Circuit, Instruction, PauliTarget, Rec, GATE_KINDS
from .zx_core import (
    BOUNDARY,
    CLASSICAL,
    HADAMARD,
    QUANTUM,
    SIMPLE,
    X,
    Z,
    Graph,
    Phase,
    toggle,
)

DETECTORS, MEASUREMENTS = "detectors", "measurements"

_PAULI_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_PAULI_ORDER = "IXYZ"


@dataclass
class ChannelGroup:
    """Joint distribution of the noise bits owned by one channel.

    ``table[k]`` is the probability of the bit pattern whose i-th bit is
    ``(k >> i) & 1`` for parameter ``param_indices[i]``.
    """

    param_indices: tuple[int, ...]
    table: np.ndarray

    def __post_init__(self) -> None:
        self.table = np.asarray(self.table, dtype=float)
        if len(self.table) != 1 << len(self.param_indices):
            raise ValueError("table length does not match the number of bits")
        if np.any(self.table < -1e-15) or abs(self.table.sum() - 1.0) > 1e-12:
            raise ValueError("channel table must be a probability distribution")


@dataclass
class LoweredProgram:
    diagram: Graph
    channels: list[ChannelGroup]
    e_param_count: int
    mode: str
    output_labels: list[str] = field(default_factory=list)
    num_detectors: int = 0
    num_observables: int = 0


def _pauli2_index(a: str, b: str) -> int:
    xa, za = _PAULI_BITS[a]
    xb, zb = _PAULI_BITS[b]
    return xa + 2 * za + 4 * xb + 8 * zb


def channel_table(kind: str, args) -> np.ndarray:
    """Probability table over the channel's noise bits (little-endian patterns)."""
    args = [float(a) for a in args]
    if any(a < 0 or a > 1 for a in args):
        raise ValueError(f"{kind}: probability outside [0, 1]")
    if kind in ("X_ERROR", "Y_ERROR", "Z_ERROR", "E", "M_FLIP"):
        (p,) = args
        return np.array([1 - p, p])
    if kind in ("DEPOLARIZE1", "PAULI_CHANNEL_1"):
        px, py, pz = [args[0] / 3] * 3 if kind == "DEPOLARIZE1" else args
        s = px + py + pz
        if s > 1 + 1e-12:
            raise ValueError(f"{kind}: probabilities sum to more than 1")
        # index = e_x + 2 e_z
        return np.array([max(0.0, 1 - s), px, pz, py])
    if kind in ("DEPOLARIZE2", "PAULI_CHANNEL_2"):
        probs = [args[0] / 15] * 15 if kind == "DEPOLARIZE2" else args
        if sum(probs) > 1 + 1e-12:
            raise ValueError(f"{kind}: probabilities sum to more than 1")
        t = np.zeros(16)
        for k, p in enumerate(probs):
            t[_pauli2_index(_PAULI_ORDER[(k + 1) // 4], _PAULI_ORDER[(k + 1) % 4])] = p
        t[0] = max(0.0, 1 - sum(probs))
        return t
    raise ValueError(f"no channel table for {kind}")


class _Lowerer:
    def __init__(self, c: Circuit, mode: str) -> None:
        self.c = c
        self.mode = mode
        self.g = Graph()
        self.g.doubled = True
        self.last: dict[int, int] = {}
        self.pending: dict[int, int] = {}
        self.fresh: dict[int, str] = {}
        self.records: list[int] = []
        self.channels: list[ChannelGroup] = []
        self.n_params = 0

    # -- wires -------------------------------------------------------------
    def _ensure(self, q: int) -> None:
        if q in self.last:
            return
        kind = self.fresh.get(q, "0")
        # X(0) with one leg is sqrt2 |0>, Z(0) is sqrt2 |+>; both copies pay 1/sqrt2
        v = self.g.add_vertex(X if kind == "0" else Z)
        self.g.scalar.add_power(-2)
        self.last[q] = v
        self.pending[q] = SIMPLE

    def _append(self, q: int, ty: int, phase: Phase | None = None) -> int:
        self._ensure(q)
        v = self.g.add_vertex(ty, phase)
        self.g.add_edge(self.last[q], v, self.pending[q])
        self.last[q] = v
        self.pending[q] = SIMPLE
        return v

    def _h(self, q: int) -> None:
        self._ensure(q)
        self.pending[q] = toggle(self.pending[q])

    def _end_wire(self, q: int) -> int:
        """Close the wire with a degree-1 quantum spider and return it."""
        v = self._append(q, Z)
        del self.last[q]
        del self.pending[q]
        return v

    def _discard(self, q: int, fresh: str) -> None:
        if q in self.last:
            v = self._end_wire(q)
            c = self.g.add_vertex(Z, layer=CLASSICAL)
            self.g.add_edge(v, c)
        self.fresh[q] = fresh

    def _new_param(self) -> int:
        self.n_params += 1
        return self.n_params - 1

    def _channel(self, kind: str, args, nbits: int) -> list[int]:
        ps = [self._new_param() for _ in range(nbits)]
        self.channels.append(ChannelGroup(tuple(ps), channel_table(kind, args)))
        return ps

    def _pauli(self, q: int, pauli: str, param: int) -> None:
        x, z = _PAULI_BITS[pauli]
        if z:
            self._append(q, Z, Phase(0, None, 1 << param))
        if x:
            self._append(q, X, Phase(0, None, 1 << param))

    # -- measurements --------------------------------------------------------
    def _record(self, quantum_vertex: int, flip_p: float | None) -> None:
        c0 = self.g.add_vertex(Z, layer=CLASSICAL)
        self.g.add_edge(quantum_vertex, c0)
        rec = c0
        if flip_p is not None:
            (e,) = self._channel("M_FLIP", [flip_p], 1)
            f = self.g.add_vertex(X, Phase(0, None, 1 << e), CLASSICAL)
            rec = self.g.add_vertex(Z, layer=CLASSICAL)
            self.g.add_edge(c0, f)
            self.g.add_edge(f, rec)
        self.records.append(rec)

    def _measure_z(self, q: int, flip_p: float | None, reset: bool) -> None:
        if reset:
            v = self._end_wire(q)
            self.fresh[q] = "0"
        else:
            v = self._append(q, Z)
        self._record(v, flip_p)

    def _mpp(self, product: tuple[PauliTarget, ...], flip_p: float | None) -> None:
        for p in product:
            if p.pauli == "Y":
                self._append(p.qubit, Z, Phase(6))
            if p.pauli in ("X", "Y"):
                self._h(p.qubit)
        hub = self.g.add_vertex(X)
        for p in product:
            v = self._append(p.qubit, Z)
            self.g.add_edge(v, hub)
        k = len(product)
        self.g.scalar.add_power(2 * k - 2)
        self._record(hub, flip_p)
        for p in product:
            if p.pauli in ("X", "Y"):
                self._h(p.qubit)
            if p.pauli == "Y":
                self._append(p.qubit, Z, Phase(2))

    # -- instructions --------------------------------------------------------
    def lower_instruction(self, ins: Instruction) -> None:
        name, ts, args = ins.name, ins.targets, ins.args
        kind = GATE_KINDS[name][0]
        if kind == "gate1":
            for q in ts:
                self._gate1(name, q)
        elif kind == "rotation":
            for q in ts:
                self._rotation(name, args, q)
        elif kind == "gate2":
            for a, b in zip(ts[::2], ts[1::2]):
                self._gate2(name, a, b)
        elif name in ("M", "MX", "MR"):
            flip = args[0] if args else None
            for q in ts:
                if name == "MX":
                    self._h(q)
                self._measure_z(q, flip, reset=(name == "MR"))
                if name == "MX":
                    self._h(q)
        elif name == "MPP":
            flip = args[0] if args else None
            for prod in ts:
                self._mpp(prod, flip)
        elif name in ("R", "RX"):
            for q in ts:
                self._discard(q, "0" if name == "R" else "+")
        elif kind == "noise1":
            nbits = 1 if name.endswith("_ERROR") else 2
            for q in ts:
                ps = self._channel(name, args, nbits)
                if nbits == 1:
                    self._pauli(q, name[0], ps[0])
                else:
                    self._append(q, X, Phase(0, None, 1 << ps[0]))
                    self._append(q, Z, Phase(0, None, 1 << ps[1]))
        elif kind == "noise2":
            for a, b in zip(ts[::2], ts[1::2]):
                ps = self._channel(name, args, 4)
                for q, (px, pz) in ((a, ps[:2]), (b, ps[2:])):
                    self._append(q, X, Phase(0, None, 1 << px))
                    self._append(q, Z, Phase(0, None, 1 << pz))
        elif kind == "noise_corr":
            (e,) = self._channel("E", args, 1)
            for p in ts:
                self._pauli(p.qubit, p.pauli, e)
        elif kind == "annotation":
            pass
        else:  # pragma: no cover - parse_circuit rejects everything else
            raise ValueError(f"unsupported instruction {name}")

    def _gate1(self, name: str, q: int) -> None:
        if name == "I":
            self._ensure(q)
        elif name == "H":
            self._h(q)
        elif name in ("S", "S_DAG", "Z"):
            self._append(q, Z, Phase({"S": 2, "S_DAG": 6, "Z": 4}[name]))
        elif name in ("SQRT_X", "SQRT_X_DAG", "X"):
            self._append(q, X, Phase({"SQRT_X": 2, "SQRT_X_DAG": 6, "X": 4}[name]))
        elif name == "Y":
            self._append(q, Z, Phase(4))
            self._append(q, X, Phase(4))

    def _rotation(self, name: str, args, q: int) -> None:
        if name == "T":
            self._append(q, Z, Phase(1))
        elif name == "T_DAG":
            self._append(q, Z, Phase(7))
        elif name == "R_Z":
            self._append(q, Z, Phase.from_turns(args[0]))
        elif name == "R_X":
            self._append(q, X, Phase.from_turns(args[0]))
        elif name == "R_Y":
            self._append(q, Z, Phase(6))
            self._append(q, X, Phase.from_turns(args[0]))
            self._append(q, Z, Phase(2))
        elif name == "U3":
            theta, phi, lam = args
            self._append(q, Z, Phase.from_turns(lam - 0.5))
            self._append(q, X, Phase.from_turns(theta))
            self._append(q, Z, Phase.from_turns(phi + 0.5))

    def _gate2(self, name: str, a, b) -> None:
        if isinstance(a, Rec) or isinstance(b, Rec):
            rec, q = (a, b) if isinstance(a, Rec) else (b, a)
            crec = self.records[len(self.records) - rec.lookback]
            if name == "CX":
                v = self._append(q, X)
                self.g.add_edge(v, crec)
            else:
                v = self._append(q, Z)
                self.g.add_edge(v, crec, HADAMARD)
            self.g.scalar.add_power(2)
            return
        if name == "SWAP":
            for q in (a, b):
                self._ensure(q)
            self.last[a], self.last[b] = self.last[b], self.last[a]
            self.pending[a], self.pending[b] = self.pending[b], self.pending[a]
            return
        va = self._append(a, Z)
        vb = self._append(b, X if name == "CX" else Z)
        self.g.add_edge(va, vb, SIMPLE if name == "CX" else HADAMARD)
        self.g.scalar.add_power(2)

    # -- outputs -------------------------------------------------------------
    def _xor_output(self, records: tuple[int, ...]) -> None:
        odd: dict[int, int] = {}
        for r in records:
            odd[r] = odd.get(r, 0) ^ 1
        recs = sorted(r for r, k in odd.items() if k)
        hub = self.g.add_vertex(X, layer=CLASSICAL)
        for r in recs:
            self.g.add_edge(hub, self.records[r])
        out = self.g.add_vertex(BOUNDARY, layer=CLASSICAL)
        self.g.add_edge(hub, out)
        self.g.outputs.append(out)
        # X(0) with n legs is 2^{1-n/2} times the even-parity indicator
        self.g.scalar.add_power(len(recs) + 1 - 2)

    def finish(self) -> LoweredProgram:
        for q in sorted(self.last):
            self._discard(q, "0")
        labels = []
        if self.mode == DETECTORS:
            for i, d in enumerate(self.c.detectors):
                self._xor_output(d.records)
                labels.append(f"D{i}")
            for o in self.c.observables:
                self._xor_output(o.records)
                labels.append(f"L{o.index}")
        else:
            for i, rec in enumerate(self.records):
                out = self.g.add_vertex(BOUNDARY, layer=CLASSICAL)
                self.g.add_edge(rec, out)
                self.g.outputs.append(out)
                labels.append(f"M{i}")
        self.g.num_params = self.n_params
        return LoweredProgram(
            diagram=self.g,
            channels=self.channels,
            e_param_count=self.n_params,
            mode=self.mode,
            output_labels=labels,
            num_detectors=len(self.c.detectors) if self.mode == DETECTORS else 0,
            num_observables=len(self.c.observables) if self.mode == DETECTORS else 0,
        )


def lower(c: Circuit, mode: str = DETECTORS) -> LoweredProgram:
    """Lower a parsed circuit to a doubled diagram plus its noise channels."""
    if mode not in (DETECTORS, MEASUREMENTS):
        raise ValueError(f"unknown mode {mode!r}")
    lw = _Lowerer(c, mode)
    for ins in c.instructions:
        lw.lower_instruction(ins)
    return lw.finish()

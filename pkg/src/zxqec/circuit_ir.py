"""Parsing and normalization of Stim-dialect circuit text.

The accepted language is the usual Stim instruction set restricted to the
gates listed in ``GATE_KINDS``, extended with the non-Clifford rotations
``T``, ``T_DAG``, ``R_X``, ``R_Y``, ``R_Z`` and ``U3``.  Rotation angles are
written in units of pi, so ``R_Z(0.125) 0`` rotates qubit 0 by pi/8.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Union


class CircuitError(ValueError):
    """Raised for text that does not describe a valid circuit."""


@dataclass(frozen=True)
class Rec:
    """Measurement-record lookback ``rec[-k]``; ``lookback`` stores k > 0."""

    lookback: int

    def __str__(self) -> str:
        return f"rec[-{self.lookback}]"


@dataclass(frozen=True)
class PauliTarget:
    pauli: str
    qubit: int

    def __str__(self) -> str:
        return f"{self.pauli}{self.qubit}"


Target = Union[int, Rec, PauliTarget, tuple]

_ALIASES = {
    "CNOT": "CX",
    "ZCX": "CX",
    "ZCZ": "CZ",
    "MZ": "M",
    "RZ": "R",
    "MRZ": "MR",
    "H_XZ": "H",
    "SQRT_Z": "S",
    "SQRT_Z_DAG": "S_DAG",
    "CORRELATED_ERROR": "E",
}

# name -> (kind, allowed arg counts)
GATE_KINDS: dict[str, tuple[str, tuple[int, ...]]] = {
    "I": ("gate1", (0,)),
    "H": ("gate1", (0,)),
    "S": ("gate1", (0,)),
    "S_DAG": ("gate1", (0,)),
    "X": ("gate1", (0,)),
    "Y": ("gate1", (0,)),
    "Z": ("gate1", (0,)),
    "SQRT_X": ("gate1", (0,)),
    "SQRT_X_DAG": ("gate1", (0,)),
    "CX": ("gate2", (0,)),
    "CZ": ("gate2", (0,)),
    "SWAP": ("gate2", (0,)),
    "T": ("rotation", (0,)),
    "T_DAG": ("rotation", (0,)),
    "R_X": ("rotation", (1,)),
    "R_Y": ("rotation", (1,)),
    "R_Z": ("rotation", (1,)),
    "U3": ("rotation", (3,)),
    "M": ("measurement", (0, 1)),
    "MX": ("measurement", (0, 1)),
    "MR": ("measurement", (0, 1)),
    "MPP": ("measurement", (0, 1)),
    "R": ("reset", (0,)),
    "RX": ("reset", (0,)),
    "X_ERROR": ("noise1", (1,)),
    "Y_ERROR": ("noise1", (1,)),
    "Z_ERROR": ("noise1", (1,)),
    "DEPOLARIZE1": ("noise1", (1,)),
    "PAULI_CHANNEL_1": ("noise1", (3,)),
    "DEPOLARIZE2": ("noise2", (1,)),
    "PAULI_CHANNEL_2": ("noise2", (15,)),
    "E": ("noise_corr", (1,)),
    "DETECTOR": ("annotation", tuple(range(0, 17))),
    "OBSERVABLE_INCLUDE": ("annotation", (1,)),
    "TICK": ("annotation", (0,)),
    "QUBIT_COORDS": ("annotation", tuple(range(0, 17))),
    "SHIFT_COORDS": ("annotation", tuple(range(0, 17))),
}

_NOISE_KINDS = ("noise1", "noise2", "noise_corr")


@dataclass(frozen=True)
class Instruction:
    name: str
    targets: tuple = ()
    args: tuple[float, ...] = ()

    @property
    def kind(self) -> str:
        k = GATE_KINDS[self.name][0]
        if k in ("gate1", "gate2"):
            return "gate"
        if k in _NOISE_KINDS:
            return "noise"
        return k

    def __str__(self) -> str:
        text = self.name
        if self.args or self.name == "OBSERVABLE_INCLUDE":
            text += "(" + ", ".join(_fmt_number(a) for a in self.args) + ")"
        for t in self.targets:
            if isinstance(t, tuple):
                text += " " + "*".join(str(p) for p in t)
            else:
                text += f" {t}"
        return text


@dataclass(frozen=True)
class Detector:
    records: tuple[int, ...]
    coords: tuple[float, ...] = ()


@dataclass(frozen=True)
class Observable:
    index: int
    records: tuple[int, ...]


@dataclass(frozen=True)
class Circuit:
    instructions: tuple[Instruction, ...]
    num_qubits: int
    num_measurements: int
    detectors: tuple[Detector, ...] = ()
    observables: tuple[Observable, ...] = ()

    def __str__(self) -> str:
        return "\n".join(str(ins) for ins in self.instructions)

    @property
    def num_detectors(self) -> int:
        return len(self.detectors)

    @property
    def num_observables(self) -> int:
        return len(self.observables)


@dataclass(frozen=True)
class CircuitStats:
    num_gates: int = 0
    num_magic: int = 0
    num_measurements: int = 0
    num_error_locations: int = 0
    num_detectors: int = 0
    num_observables: int = 0

    def as_lines(self) -> list[str]:
        return [f"{k}={v}" for k, v in self.__dict__.items()]


def _fmt_number(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def is_clifford_angle(turns_of_pi: float, tol: float = 1e-12) -> bool:
    """True when ``turns_of_pi * pi`` is a multiple of pi/2."""
    y = 2.0 * turns_of_pi
    return abs(y - round(y)) < tol


# ---------------------------------------------------------------------------
# parsing

_HEAD_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*(?:\(([^)]*)\))?\s*(.*)$")
_REC_RE = re.compile(r"^rec\[-(\d+)\]$")
_PAULI_RE = re.compile(r"^([XYZxyz])(\d+)$")


@dataclass
class _Line:
    number: int
    name: str
    args: tuple[float, ...]
    raw_targets: list[str]
    body: list["_Line"] = field(default_factory=list)


def _parse_args(text: str | None, lineno: int) -> tuple[float, ...]:
    if text is None:
        return ()
    text = text.strip()
    if not text:
        return ()
    out = []
    for tok in text.split(","):
        try:
            out.append(float(tok))
        except ValueError:
            raise CircuitError(f"line {lineno}: malformed argument {tok.strip()!r}") from None
        if not math.isfinite(out[-1]):
            raise CircuitError(f"line {lineno}: non-finite argument {tok.strip()!r}")
    return tuple(out)


def _tokenize(text: str) -> list[_Line]:
    root: list[_Line] = []
    stack: list[list[_Line]] = [root]
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line == "}":
            if len(stack) == 1:
                raise CircuitError(f"line {lineno}: unmatched '}}'")
            stack.pop()
            continue
        m = _HEAD_RE.match(line)
        if m is None:
            raise CircuitError(f"line {lineno}: cannot parse {line!r}")
        name, args_text, rest = m.group(1).upper(), m.group(2), m.group(3)
        if name == "REPEAT":
            parts = rest.split()
            if len(parts) != 2 or parts[1] != "{" or not parts[0].isdigit():
                raise CircuitError(f"line {lineno}: expected 'REPEAT <n> {{'")
            count = int(parts[0])
            if count < 1:
                raise CircuitError(f"line {lineno}: REPEAT count must be positive")
            block = _Line(lineno, "REPEAT", (float(count),), [])
            stack[-1].append(block)
            stack.append(block.body)
            continue
        stack[-1].append(_Line(lineno, name, _parse_args(args_text, lineno), rest.split()))
    if len(stack) != 1:
        raise CircuitError("unterminated REPEAT block")
    return root


def _parse_qubit(tok: str, lineno: int) -> int:
    if not tok.isdigit():
        raise CircuitError(f"line {lineno}: bad qubit target {tok!r}")
    return int(tok)


def _parse_pauli(tok: str, lineno: int) -> PauliTarget:
    m = _PAULI_RE.match(tok)
    if m is None:
        raise CircuitError(f"line {lineno}: bad Pauli target {tok!r}")
    return PauliTarget(m.group(1).upper(), int(m.group(2)))


def _parse_target(tok: str, lineno: int) -> Target:
    m = _REC_RE.match(tok)
    if m is not None:
        k = int(m.group(1))
        if k < 1:
            raise CircuitError(f"line {lineno}: rec lookback must be at least 1")
        return Rec(k)
    return _parse_qubit(tok, lineno)


def _check_probabilities(name: str, args: tuple[float, ...], lineno: int) -> None:
    for a in args:
        if not 0.0 <= a <= 1.0:
            raise CircuitError(f"line {lineno}: probability {a} outside [0, 1] in {name}")
    if name in ("PAULI_CHANNEL_1", "PAULI_CHANNEL_2") and sum(args) > 1.0 + 1e-12:
        raise CircuitError(f"line {lineno}: {name} probabilities sum to more than 1")


class _Builder:
    def __init__(self) -> None:
        self.instructions: list[Instruction] = []
        self.num_measurements = 0
        self.max_qubit = -1
        self.detectors: list[Detector] = []
        self.observables: dict[int, list[int]] = {}
        self.coord_shift: list[float] = []

    def _touch(self, q: int) -> None:
        self.max_qubit = max(self.max_qubit, q)

    def _resolve(self, rec: Rec, lineno: int) -> int:
        if rec.lookback > self.num_measurements:
            raise CircuitError(
                f"line {lineno}: rec[-{rec.lookback}] reaches before the first measurement"
            )
        return self.num_measurements - rec.lookback

    def add(self, line: _Line) -> None:
        lineno = line.number
        if line.name == "REPEAT":
            for _ in range(int(line.args[0])):
                for sub in line.body:
                    self.add(sub)
            return
        if line.name == "ELSE_CORRELATED_ERROR":
            raise CircuitError(f"line {lineno}: ELSE_CORRELATED_ERROR is not supported")
        name = _ALIASES.get(line.name, line.name)
        if name not in GATE_KINDS:
            raise CircuitError(f"line {lineno}: unknown instruction {line.name!r}")
        kind, arg_counts = GATE_KINDS[name]
        args = line.args
        if len(args) not in arg_counts:
            raise CircuitError(f"line {lineno}: {name} takes {arg_counts} arguments, got {len(args)}")
        toks = line.raw_targets
        targets: list[Target]

        if kind in ("gate1", "rotation", "reset", "noise1") or name in ("M", "MX", "MR"):
            targets = [_parse_qubit(t, lineno) for t in toks]
            for q in targets:
                self._touch(q)
        elif kind in ("gate2", "noise2"):
            targets = [_parse_target(t, lineno) for t in toks]
            if len(targets) % 2:
                raise CircuitError(f"line {lineno}: {name} needs an even number of targets")
            for a, b in zip(targets[::2], targets[1::2]):
                ra, rb = isinstance(a, Rec), isinstance(b, Rec)
                if ra or rb:
                    if kind != "gate2" or name == "SWAP" or (ra and rb):
                        raise CircuitError(f"line {lineno}: invalid record target for {name}")
                    if name == "CX" and rb:
                        raise CircuitError(f"line {lineno}: CX target cannot be a record")
                    self._resolve(a if ra else b, lineno)
                elif a == b:
                    raise CircuitError(f"line {lineno}: {name} pair acts twice on qubit {a}")
                for t in (a, b):
                    if isinstance(t, int):
                        self._touch(t)
        elif name == "MPP":
            targets = []
            for tok in toks:
                prod = tuple(_parse_pauli(p, lineno) for p in tok.split("*"))
                qs = [p.qubit for p in prod]
                if len(set(qs)) != len(qs):
                    raise CircuitError(f"line {lineno}: MPP product repeats a qubit")
                for q in qs:
                    self._touch(q)
                targets.append(prod)
        elif kind == "noise_corr":
            targets = [_parse_pauli(t, lineno) for t in toks]
            qs = [p.qubit for p in targets]
            if len(set(qs)) != len(qs) or not qs:
                raise CircuitError(f"line {lineno}: E needs distinct Pauli targets")
            for q in qs:
                self._touch(q)
        elif name in ("DETECTOR", "OBSERVABLE_INCLUDE"):
            targets = [_parse_target(t, lineno) for t in toks]
            if any(not isinstance(t, Rec) for t in targets):
                raise CircuitError(f"line {lineno}: {name} targets must be rec[-k]")
            if not targets:
                raise CircuitError(f"line {lineno}: {name} needs at least one record")
        elif name == "QUBIT_COORDS":
            targets = [_parse_qubit(t, lineno) for t in toks]
            for q in targets:
                self._touch(q)
        else:  # TICK, SHIFT_COORDS
            if toks:
                raise CircuitError(f"line {lineno}: {name} takes no targets")
            targets = []

        if kind in _NOISE_KINDS or (kind == "measurement" and args):
            _check_probabilities(name, args, lineno)
        if name == "OBSERVABLE_INCLUDE" and (args[0] < 0 or not float(args[0]).is_integer()):
            raise CircuitError(f"line {lineno}: observable index must be a nonnegative integer")

        ins = Instruction(name, tuple(targets), tuple(float(a) for a in args))
        self.instructions.append(ins)

        if name == "DETECTOR":
            recs = tuple(self._resolve(t, lineno) for t in targets)
            shift = self.coord_shift + [0.0] * max(0, len(args) - len(self.coord_shift))
            coords = tuple(a + s for a, s in zip(args, shift))
            self.detectors.append(Detector(recs, coords))
        elif name == "OBSERVABLE_INCLUDE":
            recs = [self._resolve(t, lineno) for t in targets]
            self.observables.setdefault(int(args[0]), []).extend(recs)
        elif name == "SHIFT_COORDS":
            n = max(len(args), len(self.coord_shift))
            old = self.coord_shift + [0.0] * (n - len(self.coord_shift))
            self.coord_shift = [o + (args[i] if i < len(args) else 0.0) for i, o in enumerate(old)]
        elif kind == "measurement":
            self.num_measurements += len(targets)

    def build(self) -> Circuit:
        obs = []
        if self.observables:
            for k in range(max(self.observables) + 1):
                obs.append(Observable(k, tuple(self.observables.get(k, ()))))
        return Circuit(
            instructions=tuple(self.instructions),
            num_qubits=self.max_qubit + 1,
            num_measurements=self.num_measurements,
            detectors=tuple(self.detectors),
            observables=tuple(obs),
        )


def parse_circuit(text: str) -> Circuit:
    """Parse circuit text into a normalized :class:`Circuit`.

    REPEAT blocks are expanded and detector/observable records are resolved
    to absolute measurement indices.  Any malformed line raises
    :class:`CircuitError`.
    """
    builder = _Builder()
    for line in _tokenize(text):
        builder.add(line)
    return builder.build()


def circuit_from_instructions(instructions: Iterable[Instruction]) -> Circuit:
    """Re-validate a list of instructions by printing and re-parsing them."""
    return parse_circuit("\n".join(str(i) for i in instructions))


# ---------------------------------------------------------------------------
# statistics


def _rotation_is_magic(ins: Instruction) -> bool:
    if ins.name in ("T", "T_DAG"):
        return True
    return any(not is_clifford_angle(a) for a in ins.args)


def circuit_stats(c: Circuit) -> CircuitStats:
    gates = magic = errors = 0
    for ins in c.instructions:
        kind = GATE_KINDS[ins.name][0]
        n = len(ins.targets)
        if kind == "gate1":
            gates += n
        elif kind == "gate2":
            gates += n // 2
        elif kind == "rotation":
            if _rotation_is_magic(ins):
                magic += n
            else:
                gates += n
        elif kind in ("noise1", "noise2"):
            errors += n if kind == "noise1" else n // 2
        elif kind == "noise_corr":
            errors += 1
        elif kind == "measurement" and ins.args:
            errors += n
    return CircuitStats(
        num_gates=gates,
        num_magic=magic,
        num_measurements=c.num_measurements,
        num_error_locations=errors,
        num_detectors=len(c.detectors),
        num_observables=len(c.observables),
    )
